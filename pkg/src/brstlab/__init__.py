"""brstlab: exact workbench for graded-unitary free-field vertex algebras
and their relative BRST cohomology."""

__version__ = "0.1.0"

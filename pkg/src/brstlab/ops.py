"""Exact sparse operators on graded Fock spaces.

Operators are finite sums of normal-ordered mode monomials (an OpSpec),
assembled into grade-block sparse matrices over Q(i).  Every assembled
operator is h-homogeneous; truncation safety is tracked per source grade so
that compositions and commutators are only ever formed where they are exact
below the weight cutoff.
"""

from __future__ import annotations

from fractions import Fraction

from .scalars import QI, ZERO, ONE
from .linalg import SMat, LinAlgError, solve
from .fock import (
    BOSON,
    FERMION,
    GeneratorSystem,
    GradedSpace,
    apply_terms,
)


class TruncationError(Exception):
    pass


class OpSpec:
    """A sum of mode monomials with a common conformal-weight shift."""

    def __init__(self, name, terms, parity=None):
        self.name = name
        self.terms = [(c, tuple(syms)) for c, syms in terms if c]
        self.parity = parity

    def check(self, sys: GeneratorSystem):
        dh2 = None
        par = None
        for _, syms in self.terms:
            d = sum(sys.weight2(g, n) for g, n in syms)
            p = sum(1 for g, _ in syms if sys.fam[g] == FERMION) % 2
            if dh2 is None:
                dh2, par = d, p
            elif d != dh2 or p != par:
                raise ValueError(f"{self.name}: inhomogeneous mode sum")
        if self.parity is None:
            self.parity = par if par is not None else 0
        self.dh2 = dh2 if dh2 is not None else 0
        return self

    def r2_components(self, sys):
        """Split terms by R2 shift (creation +1, annihilation -1 per mode)."""
        comps = {}
        for c, syms in self.terms:
            shift = sum(1 if n <= -1 else -1 for _, n in syms)
            comps.setdefault(shift, []).append((c, syms))
        return comps

    def scaled(self, z, name=None):
        return OpSpec(name or self.name, [(z * c, s) for c, s in self.terms], self.parity)

    def __add__(self, other):
        return OpSpec(f"{self.name}+{other.name}", self.terms + other.terms)


def drop_zero_mode_terms(sys, terms):
    """Remove terms containing a fermionic zero mode (acts as zero)."""
    out = []
    for c, syms in terms:
        if any(n == 0 and sys.fam[g] == FERMION for g, n in syms):
            continue
        out.append((c, syms))
    return out


def normal_order_fermionic(syms):
    """Stable normal ordering of fermionic mode symbols.

    Moves annihilation modes (n >= 0) to the right of creation modes,
    keeping relative orders; returns (sign, reordered tuple).  Contraction
    terms are dropped by definition of the normal-ordered product.
    """
    creation = [s for s in syms if s[1] <= -1]
    annih = [s for s in syms if s[1] >= 0]
    swaps = 0
    seen_annih = 0
    for s in syms:
        if s[1] >= 0:
            seen_annih += 1
        else:
            swaps += seen_annih
    sign = -1 if swaps % 2 else 1
    return sign, tuple(creation + annih)


# -- assembled operators ----------------------------------------------------


class SparseOperator:
    """Grade-block matrices of an h-homogeneous operator.

    blocks[(src, dst)] is an SMat of shape (dim dst) x (dim src); valid_src
    is the set of source grades on which the assembled matrix is exact
    (sources that could leak above the cutoff are excluded).
    """

    def __init__(self, dims, blocks, dh2, parity, valid_src, name=""):
        self.dims = dims  # dict grade -> dimension
        self.blocks = blocks
        self.dh2 = dh2
        self.parity = parity
        self.valid_src = valid_src
        self.name = name

    def block(self, src, dst):
        b = self.blocks.get((src, dst))
        if b is None:
            return SMat(self.dims.get(dst, 0), self.dims.get(src, 0))
        return b

    def out_blocks(self, src):
        return [(d, m) for (s, d), m in self.blocks.items() if s == src]

    def is_zero_on(self, grades=None):
        grades = set(grades) if grades is not None else None
        for (s, d), m in self.blocks.items():
            if grades is not None and s not in grades:
                continue
            if not m.is_zero():
                return False
        return True

    def restrict_valid(self, grades):
        return SparseOperator(
            self.dims,
            {k: v for k, v in self.blocks.items() if k[0] in grades},
            self.dh2,
            self.parity,
            self.valid_src & set(grades),
            self.name,
        )

    def scale(self, z):
        return SparseOperator(
            self.dims,
            {k: m.scale(z) for k, m in self.blocks.items()},
            self.dh2,
            self.parity,
            set(self.valid_src),
            self.name,
        )

    def add(self, other, name=""):
        if self.dh2 != other.dh2 or self.parity != other.parity:
            raise ValueError("add: incompatible operators")
        blocks = {k: m.copy() for k, m in self.blocks.items()}
        for k, m in other.blocks.items():
            blocks[k] = blocks[k] + m if k in blocks else m.copy()
        return SparseOperator(
            self.dims,
            {k: m for k, m in blocks.items() if not m.is_zero()},
            self.dh2,
            self.parity,
            self.valid_src & other.valid_src,
            name or f"{self.name}+{other.name}",
        )

    def sub(self, other, name=""):
        return self.add(other.scale(QI(-1)), name or f"{self.name}-{other.name}")

    def compose(self, other, name=""):
        """self @ other (other acts first)."""
        valid = set()
        for src in other.valid_src:
            mids = [d for (s, d), m in other.blocks.items() if s == src]
            if all(m in self.valid_src for m in mids):
                valid.add(src)
        blocks = {}
        for (src, mid), m1 in other.blocks.items():
            if src not in valid:
                continue
            for (s2, dst), m2 in self.blocks.items():
                if s2 != mid:
                    continue
                prod = m2 @ m1
                if prod.is_zero():
                    continue
                key = (src, dst)
                blocks[key] = blocks[key] + prod if key in blocks else prod
        blocks = {k: m for k, m in blocks.items() if not m.is_zero()}
        return SparseOperator(
            self.dims,
            blocks,
            self.dh2 + other.dh2,
            (self.parity + other.parity) % 2,
            valid,
            name or f"({self.name})({other.name})",
        )

    def commutator(self, other, name=""):
        """Graded commutator [self, other]."""
        ab = self.compose(other)
        ba = other.compose(self)
        sign = QI(-1) if (self.parity and other.parity) else QI(1)
        out = ab.sub(ba.scale(sign))
        out.name = name or f"[{self.name},{other.name}]"
        return out

    def r2_split(self):
        """Homogeneous R2-shift components; exact partition of the blocks."""
        comps = {}
        for (src, dst), m in self.blocks.items():
            shift = dst[1] - src[1]
            comps.setdefault(shift, {})[(src, dst)] = m
        return {
            shift: SparseOperator(
                self.dims, blocks, self.dh2, self.parity, set(self.valid_src),
                f"{self.name}[{Fraction(shift,2)}]",
            )
            for shift, blocks in sorted(comps.items())
        }

    def d_shifts(self):
        return sorted({dst[2] - src[2] for (src, dst) in self.blocks})

    def restricted(self, injections, dims, name=""):
        """Conjugate into a subspace given per-grade injection columns.

        injections[g] is an SMat whose columns are the subspace basis in the
        ambient coordinates.  Raises LinAlgError if a block does not map the
        subspace into the subspace.
        """
        blocks = {}
        valid = set()
        for src in self.valid_src:
            if src not in injections:
                continue
            valid.add(src)
        for (src, dst), m in self.blocks.items():
            if src not in valid:
                continue
            ksrc = injections[src]
            img = m @ ksrc
            if img.is_zero():
                continue
            kdst = injections.get(dst)
            if kdst is None or kdst.ncols == 0:
                raise LinAlgError(
                    f"{self.name}: image escapes the subspace at grade {src}->{dst}"
                )
            blocks[(src, dst)] = solve(kdst, img)
        return SparseOperator(dims, blocks, self.dh2, self.parity, valid, name or self.name)


def assemble(spec: OpSpec, space: GradedSpace, name=None):
    """Assemble an OpSpec into grade-block matrices on a space."""
    sys = space.sys
    spec.check(sys)
    dims = {g: space.dim(g) for g in space.grades()}
    blocks = {}
    valid = set()
    for src in space.grades():
        if src[0] + spec.dh2 > space.h2max:
            continue
        valid.add(src)
        for col, st in enumerate(space.blocks[src]):
            res = apply_terms(sys, spec.terms, st)
            for st2, c in res.items():
                dst, row = space.index[st2]
                key = (src, dst)
                m = blocks.get(key)
                if m is None:
                    m = blocks[key] = SMat(dims[dst], dims[src])
                cur = m.rows[row].get(col)
                s = c if cur is None else cur + c
                if s:
                    m.rows[row][col] = s
                elif cur is not None:
                    del m.rows[row][col]
    blocks = {k: m for k, m in blocks.items() if not m.is_zero()}
    return SparseOperator(
        dims, blocks, spec.dh2, spec.parity, valid, name or spec.name
    )


def identity_operator(dims, name="id"):
    blocks = {}
    for g, n in dims.items():
        if n:
            blocks[(g, g)] = SMat.identity(n)
    return SparseOperator(dims, blocks, 0, 0, set(dims), name)


# -- mode-sum builders -------------------------------------------------------


def _keep_term(sys, syms, h2max, dh2):
    for g, n in syms:
        w2 = sys.weight2(g, n)
        if n >= 0 and -w2 > h2max:
            return False
        if n <= -1 and w2 > h2max + max(dh2, 0):
            return False
    return True


def bilinear_pair_mode_terms(sys, coeffs, off_x, off_y, n, h2max, fermionic):
    """Modes of sum_ab coeffs[a][b] :x^a y^b:(z) at mode index n.

    x and y are generator families starting at offsets off_x, off_y; both
    plain fields (no derivatives).  Normal ordering puts annihilation modes
    rightmost; for fermionic x, y the second sum carries the Koszul sign.
    """
    dim_x = len(coeffs)
    dim_y = len(coeffs[0]) if dim_x else 0
    bound = h2max + abs(n) + 2
    terms = []
    dh2 = None
    for a in range(dim_x):
        for b in range(dim_y):
            c = coeffs[a][b]
            if not c:
                continue
            for m in range(-bound, bound + 1):
                sx = (off_x + a, m)
                sy = (off_y + b, n - m - 1)
                if dh2 is None:
                    dh2 = sys.weight2(*sx) + sys.weight2(*sy)
                if m <= -1:
                    syms = (sx, sy)
                    cc = c
                else:
                    syms = (sy, sx)
                    cc = -c if fermionic else c
                if _keep_term(sys, syms, h2max, dh2):
                    terms.append((cc, syms))
    return drop_zero_mode_terms(sys, terms)


def stress_tensor_mode_terms(sys, block, n, h2max):
    """Modes of the free-field stress tensor of one block.

    Bosons: T = (1/2) Omega_{ab} :q^b dq^a:; fermions:
    T = (1/2) Omega_{ab} :eta^b eta^a:.  `block` is (offset, dim, family,
    omega_low).  Mode index n refers to T(z) = sum_n T_n z^{-n-1}, so
    L_m = T_{m+1}.
    """
    off, dim, fam, omega_low = block
    terms = []
    half = QI(Fraction(1, 2))
    bound = h2max + abs(n) + 4
    if fam == BOSON:
        # x = q^b, y = dq^a with (dq)_j = -j q_{j-1}
        for a in range(dim):
            for b in range(dim):
                c = half * omega_low[a][b]
                if not c:
                    continue
                for m in range(-bound, bound + 1):
                    j = n - m - 1
                    if j == 0:
                        continue
                    cc = c * QI(-j)
                    sx = (off + b, m)
                    sy = (off + a, j - 1)
                    syms = (sx, sy) if m <= -1 else (sy, sx)
                    if _keep_term(sys, syms, h2max, -2 * n):
                        terms.append((cc, syms))
    else:
        for a in range(dim):
            for b in range(dim):
                c = half * omega_low[a][b]
                if not c:
                    continue
                for m in range(-bound, bound + 1):
                    sx = (off + b, m)
                    sy = (off + a, n - m - 1)
                    if m <= -1:
                        syms, cc = (sx, sy), c
                    else:
                        syms, cc = (sy, sx), -c
                    if _keep_term(sys, syms, h2max, -2 * n):
                        terms.append((cc, syms))
    return drop_zero_mode_terms(sys, terms)


def virasoro_mode_spec(model, m, name=None):
    """L_m of the total stress tensor (all blocks)."""
    terms = []
    for block in model.stress_blocks():
        terms += stress_tensor_mode_terms(model.sys, block, m + 1, model.h2max)
    return OpSpec(name or f"L_{m}", terms).check(model.sys)

"""The relative BRST cochain complex and its differentials.

The ambient space is matter (x) Sf[C^2 (x) g]; the relative subspace is the
exact kernel of the total zero-mode currents Jtot_{A,0} (the eta_0
constraint is automatic in this presentation).  All named operators are
restricted to the kernel by exact solves, and a Gram form is induced by
restriction, making the Hodge layer downstream purely finite linear
algebra over Q(i).
"""

from __future__ import annotations

from fractions import Fraction

from .scalars import QI, ZERO, ONE, i_pow
from .linalg import SMat, LinAlgError, kernel, vstack_all
from .liealg import check_twice_critical, ValidationError
from .fock import state_name, apply_terms
from .ops import SparseOperator, identity_operator
from .model import Model
from .unitarity import (
    GramData,
    DictGram,
    operator_adjoint,
    restricted_gram,
    rho_coefficients,
    rho_image,
)


class NotTwiceCriticalError(ValidationError):
    pass


class RelativeComplex:
    """ker Jtot_{A,0} inside the ambient space, with restricted operators."""

    def __init__(self, model: Model, allow_non_critical=False):
        self.model = model
        g = model.g
        if g is None:
            raise ValidationError("relative complex needs a gauge algebra")
        reps = [blk for blk in model.matter if blk.rep is not None]
        self.twice_critical, self.tc_report = _tc(model)
        if not self.twice_critical and not allow_non_critical:
            raise NotTwiceCriticalError(
                "matter is not at twice-critical level; pass allow_non_critical "
                "to build a complex whose differentials are not expected to square to zero"
            )
        self.square_zero_expected = self.twice_critical
        self.jtot = [model.op(("Jtot0", A)) for A in range(g.dim)]
        self.injections = {}
        self.dims = {}
        for grade in model.space.grades():
            n = model.space.dim(grade)
            stacks = [op.block(grade, grade) for op in self.jtot]
            ker = kernel(vstack_all(stacks)) if stacks else SMat.identity(n)
            if ker.ncols:
                self.injections[grade] = ker
                self.dims[grade] = ker.ncols
        self._ops = {}
        self._gram = None
        self._adj = {}

    # -- restricted operators ---------------------------------------------

    def op(self, key, name=None):
        """Restricted operator by model cache key, e.g. ("bigQ", +1, None)."""
        if key in self._ops:
            return self._ops[key]
        amb = self.model.op(key)
        res = amb.restricted(self.injections, self.dims, name or amb.name)
        self._ops[key] = res
        return res

    def big_q(self, pm, factor=None):
        return self.op(("bigQ", pm, factor))

    def q(self, pm, factor=None):
        return self.op(("Q", pm, factor))

    def s(self, pm, factor=None):
        return self.op(("S", pm, factor))

    def sl2_triple(self, factor=None):
        return (
            self.op(("Pi", factor)),
            self.op(("Lef", factor)),
            self.op(("Lam", factor)),
        )

    # -- induced Hermitian structure ----------------------------------------

    def gram(self):
        """Induced Gram blocks on the relative subspace."""
        if self._gram is None:
            amb = GramData(self.model.space)
            self._gram = DictGram(restricted_gram(amb, self.injections, self.dims))
        return self._gram

    def adjoint(self, op: SparseOperator, name=None):
        key = (id(op), op.name)
        if key not in self._adj:
            adj = operator_adjoint(op, self.gram(), self.dims)
            if name:
                adj.name = name
            self._adj[key] = adj
        return self._adj[key]

    def qbar(self, pm, factor=None):
        return self.adjoint(self.big_q(pm, factor), name=f"Qbar_{'+' if pm>0 else '-'}")

    def laplacian(self, factor=None):
        qp = self.big_q(+1, factor)
        return qp.commutator(self.qbar(+1, factor), name="Delta")

    # -- diagnostics ---------------------------------------------------------

    def square_zero_diagnostic(self, op: SparseOperator):
        """None if op^2 = 0 on the relative space, else the lowest bad grade."""
        sq = op.compose(op)
        bad = sorted(
            src for (src, dst), m in sq.blocks.items() if not m.is_zero()
        )
        return bad[0] if bad else None

    def grades(self):
        return sorted(self.dims)

    def dim(self, grade):
        return self.dims.get(grade, 0)

    def state_vector(self, grade, col):
        """Witness: the relative basis vector expanded in ambient states."""
        sysm = self.model
        states = sysm.space.blocks[grade]
        colvec = self.injections[grade].column(col)
        return {states[r]: v for r, v in colvec.items()}


def _tc(model: Model):
    class _Wrap:
        def __init__(self, blk):
            self.rep = blk.rep

    reps = [_Wrap(blk) for blk in model.matter]
    return check_twice_critical(model.g, reps)


# -- good-action verification --------------------------------------------------


def verify_good_action(model: Model):
    """The three goodness conditions of the gauge action, with witnesses.

    (i)  J_{A,-1}|0> sits at (h, R) = (1, 1);
    (ii) the R-raising component J^[1]_{A,n} vanishes for n >= 0;
    (iii) rho(J_A) = Khat^{AB} J_B with Khat the involutive rescaling of
          the invariant form (the exact-rational form of the compact-form
          conjugation condition).
    """
    g = model.g
    sys = model.sys
    out = {"i": True, "ii": True, "iii": True, "witnesses": []}
    current_states = []
    for A in range(g.dim):
        vec = apply_terms(sys, model.matter_current_terms(A, -1), ())
        current_states.append(vec)
        for st in vec:
            from .fock import state_grade

            h2, r2, d = state_grade(sys, st)
            if (h2, r2) != (2, 2):
                out["i"] = False
                out["witnesses"].append(f"(i) J_{A}: component at h2={h2}, R2={r2}")
    nmax = model.h2max // 2
    for A in range(g.dim):
        for n in range(0, nmax + 1):
            spec = model.matter_current_spec(A, n, component=1)
            if spec.terms:
                out["ii"] = False
                out["witnesses"].append(f"(ii) J^[1]_{A},{n} != 0")
    rows = rho_coefficients(sys)
    for A in range(g.dim):
        img = rho_image(sys, current_states[A], rows)
        expect = {}
        for B in range(g.dim):
            coef = g.khat[A][B] if g.khat else None
            if coef is None:
                out["iii"] = False
                out["witnesses"].append("(iii) no involutive Khat")
                break
            if not coef:
                continue
            for st, v in current_states[B].items():
                s = expect.get(st, ZERO) + coef * v
                if s:
                    expect[st] = s
                else:
                    expect.pop(st, None)
        if img != expect:
            out["iii"] = False
            out["witnesses"].append(f"(iii) rho(J_{A}) != Khat^AB J_B")
    out["ok"] = out["i"] and out["ii"] and out["iii"]
    return out


def split_check(rc: RelativeComplex, pm):
    """bold-Q^pm = Q^pm + S^pm with homogeneous R-shifts +-1/2 and nothing else."""
    big = rc.big_q(pm)
    comps = big.r2_split()
    residue = [shift for shift in comps if shift not in (1, -1)]
    q = rc.q(pm)
    s = rc.s(pm)
    ok_q = comps.get(1) is not None and comps[1].sub(q).is_zero_on()
    ok_s = comps.get(-1) is not None and comps[-1].sub(s).is_zero_on()
    if 1 not in comps:
        ok_q = q.is_zero_on()
    if -1 not in comps:
        ok_s = s.is_zero_on()
    return {
        "residue_shifts": residue,
        "q_matches": ok_q,
        "s_matches": ok_s,
        "ok": not residue and ok_q and ok_s,
    }

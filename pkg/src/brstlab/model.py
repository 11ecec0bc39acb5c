"""Model assembly: matter blocks, the ghost sector, and named operators.

A Model owns the combined generator system (matter followed by the
symplectic-fermion ghosts when a gauge algebra is present), the enumerated
graded space, and builders for every composite operator the workbench
needs: matter currents J_A and their R-components, the ghost and total
currents at mode zero, the stress tensor modes L_m, the differentials
Q^pm / S^pm and their sums, and the outer sl(2) triple Pi, L, Lambda.

The ghost pairing is eps^{alpha beta} Khat^{AB} with Khat the involutive
rescaling of the declared invariant form; all ghost-layer contractions
(f_ABC lowerings, the sl(2) triple, conjugation) consistently use Khat.
"""

from __future__ import annotations

from fractions import Fraction

from .scalars import QI, ZERO, ONE
from .liealg import (
    LieAlgebraData,
    SymplecticRep,
    ValidationError,
    EPS_UP,
    EPS_LOW,
    dense_mul,
    dense_scale,
    dense_zero,
)
from .fock import BOSON, FERMION, GeneratorSystem, combine_systems, enumerate_space
from .ops import (
    OpSpec,
    SparseOperator,
    assemble,
    bilinear_pair_mode_terms,
    drop_zero_mode_terms,
    normal_order_fermionic,
    virasoro_mode_spec,
)

HALF = QI(Fraction(1, 2))


class MatterBlock:
    def __init__(self, name, family, dim, omega_low, omega_up, d_grades, rep):
        self.name = name
        self.family = family
        self.dim = dim
        self.omega_low = omega_low
        self.omega_up = omega_up
        self.d_grades = d_grades
        self.rep = rep  # list of T_A or None

    @classmethod
    def from_rep(cls, name, family, srep: SymplecticRep):
        return cls(
            name, family, srep.dim, srep.omega_low, srep.omega_up, srep.d_grades, srep.rep
        )


def _matter_system(blocks):
    parts = []
    for blk in blocks:
        fams = [blk.family] * blk.dim
        names = [f"{blk.name}^{a}" for a in range(blk.dim)]
        parts.append(
            GeneratorSystem(
                fams,
                names,
                blk.d_grades,
                blk.omega_up,
                blk.omega_low,
                [(blk.name, 0, blk.dim, blk.family)],
            )
        )
    return parts


def _ghost_system(g: LieAlgebraData):
    """Sf[C^2 (x) g] with metric Khat; index (alpha, A), alpha-major."""
    if g.khat is None:
        raise ValidationError(
            "no rational involutive rescaling of K exists; the ghost/conjugation "
            "layer cannot be built exactly for this algebra"
        )
    dim = 2 * g.dim
    names = []
    fams = [FERMION] * dim
    d_grades = []
    for alpha, (aname, dval) in enumerate([("+", 1), ("-", -1)]):
        for A in range(g.dim):
            names.append(f"eta^{{{aname},{A}}}")
            d_grades.append(dval)
    up = dense_zero(dim, dim)
    low = dense_zero(dim, dim)
    for al in range(2):
        for be in range(2):
            for A in range(g.dim):
                for B in range(g.dim):
                    up[al * g.dim + A][be * g.dim + B] = EPS_UP[al][be] * g.khat[A][B]
                    low[al * g.dim + A][be * g.dim + B] = EPS_LOW[al][be] * g.khat[A][B]
    return GeneratorSystem(
        fams, names, d_grades, up, low, [("ghost", 0, dim, FERMION)]
    )


class Model:
    """Free-field model with optional gauge sector, below a weight cutoff."""

    def __init__(self, g, matter_blocks, h2max, include_ghosts=True, budget=500000):
        self.g = g
        self.matter = matter_blocks
        self.h2max = h2max
        parts = _matter_system(matter_blocks)
        self.ghost_offset = None
        if g is not None and include_ghosts:
            parts.append(_ghost_system(g))
        self.sys = combine_systems(parts) if parts else GeneratorSystem([], [], [], [], [], [])
        off = 0
        self.block_offsets = []
        for blk in matter_blocks:
            self.block_offsets.append(off)
            off += blk.dim
        if g is not None and include_ghosts:
            self.ghost_offset = off
        self.space = enumerate_space(self.sys, h2max, budget)
        self._cache = {}

    # -- geometry of the ghost index ------------------------------------

    def eta(self, alpha, A):
        """Generator index of eta^{alpha, A}; alpha is +1 or -1."""
        al = 0 if alpha > 0 else 1
        return self.ghost_offset + al * self.g.dim + A

    def stress_blocks(self):
        out = []
        for blk, off in zip(self.matter, self.block_offsets):
            out.append((off, blk.dim, blk.family, blk.omega_low))
        if self.ghost_offset is not None:
            gh = _ghost_system(self.g)
            out.append((self.ghost_offset, gh.n, FERMION, gh.omega_low))
        return out

    # -- currents ---------------------------------------------------------

    def matter_current_terms(self, A, n):
        """Moment-map current J_A mode n: sum over matter blocks of
        (1/2) (Omega_low T_A)_{ab} :x^a x^b:."""
        terms = []
        for blk, off in zip(self.matter, self.block_offsets):
            if blk.rep is None:
                continue
            M = dense_scale(dense_mul(blk.omega_low, blk.rep[A]), HALF)
            terms += bilinear_pair_mode_terms(
                self.sys, M, off, off, n, self.h2max, blk.family == FERMION
            )
        return terms

    def matter_current_spec(self, A, n, component=None):
        """J_{A,n}, or its R-homogeneous part J^{[component]}_{A,n}."""
        spec = OpSpec(f"J_{A},{n}", self.matter_current_terms(A, n))
        if component is None:
            return spec.check(self.sys)
        comps = spec.r2_components(self.sys)
        return OpSpec(f"J^[{component}]_{A},{n}", comps.get(2 * component, [])).check(self.sys)

    def ghost_current0_terms(self, A):
        """J^gh_{A,0} on the eta presentation of the ghost vacuum module:
        fhat_ACB sum_{n>0} (1/n) (eta^{-,B}_{-n} eta^{+,C}_n
                                   + eta^{+,C}_{-n} eta^{-,B}_n).

        The orientation (f contracted as fhat_ACB) is fixed by requiring
        that the total current satisfies [Jtot_0, Jtot_0] = f Jtot_0 and
        commutes with the differentials; both are enforced by tests.
        """
        if self.ghost_offset is None:
            return []
        fhat = self.g.f_lowered(self.g.khat)
        terms = []
        nmax = self.h2max // 2
        for B in range(self.g.dim):
            for C in range(self.g.dim):
                c = fhat[A][C][B]
                if not c:
                    continue
                for n in range(1, nmax + 1):
                    w = QI(Fraction(1, n)) * c
                    terms.append((w, ((self.eta(-1, B), -n), (self.eta(+1, C), n))))
                    terms.append((w, ((self.eta(+1, C), -n), (self.eta(-1, B), n))))
        return terms

    def jtot0_spec(self, A):
        terms = self.matter_current_terms(A, 0) + self.ghost_current0_terms(A)
        return OpSpec(f"Jtot_{A},0", terms).check(self.sys)

    # -- differentials ------------------------------------------------------

    def _eta_trilinear(self, coeff, s1, s2, s3):
        sign, ordered = normal_order_fermionic((s1, s2, s3))
        return (coeff if sign == 1 else -coeff, ordered)

    def bigQ_spec(self, pm, factor=None, name=None):
        """The full differential bold-Q^pm:
        sum_{n != 0} (1/n) :eta^{pm,A}_{-n} J_{A,n}:
        + sum_{m,n != 0, m != n} f_ABC/(2mn) :eta^{pm,A}_{-n} eta^{pm,B}_m eta^{mp,C}_{n-m}:.
        """
        rng = self._factor_range(factor)
        nmax = self.h2max // 2
        terms = []
        for A in rng:
            for n in range(1, nmax + 1):
                inv = QI(Fraction(1, n))
                for c, syms in self.matter_current_terms(A, n):
                    terms.append((inv * c, ((self.eta(pm, A), -n),) + syms))
                for c, syms in self.matter_current_terms(A, -n):
                    terms.append((-inv * c, syms + ((self.eta(pm, A), n),)))
        fhat = self.g.f_lowered(self.g.khat)
        for A in rng:
            for B in rng:
                for C in rng:
                    fv = fhat[A][B][C]
                    if not fv:
                        continue
                    for n in range(-nmax, nmax + 1):
                        if n == 0:
                            continue
                        for m in range(-nmax, nmax + 1):
                            if m == 0 or m == n or abs(n - m) > nmax:
                                continue
                            coeff = fv * QI(Fraction(1, 2 * m * n))
                            terms.append(
                                self._eta_trilinear(
                                    coeff,
                                    (self.eta(pm, A), -n),
                                    (self.eta(pm, B), m),
                                    (self.eta(-pm, C), n - m),
                                )
                            )
        terms = drop_zero_mode_terms(self.sys, terms)
        sgn = "+" if pm > 0 else "-"
        return OpSpec(name or f"Q^{sgn}_full", terms).check(self.sys)

    def q_spec(self, pm, factor=None):
        """The R-raising part Q^pm (degree +1/2):
        sum_{n>0} (1/n)(eta^{pm,A}_{-n} J^[0]_{A,n} - J^[1]_{A,-n} eta^{pm,A}_n)
        + sum_{m,n>0} f_ABC ( 1/(n(m+n)) eta^{pm,A}_{-n} eta^{mp,B}_{-m} eta^{pm,C}_{n+m}
                             - 1/(2mn)   eta^{pm,A}_{-n} eta^{pm,B}_{-m} eta^{mp,C}_{n+m} )."""
        rng = self._factor_range(factor)
        nmax = self.h2max // 2
        terms = []
        for A in rng:
            for n in range(1, nmax + 1):
                inv = QI(Fraction(1, n))
                j0 = self.matter_current_spec(A, n, component=0)
                for c, syms in j0.terms:
                    terms.append((inv * c, ((self.eta(pm, A), -n),) + syms))
                j1 = self.matter_current_spec(A, -n, component=1)
                for c, syms in j1.terms:
                    terms.append((-inv * c, syms + ((self.eta(pm, A), n),)))
        fhat = self.g.f_lowered(self.g.khat)
        for A in rng:
            for B in rng:
                for C in rng:
                    fv = fhat[A][B][C]
                    if not fv:
                        continue
                    for n in range(1, nmax + 1):
                        for m in range(1, nmax + 1):
                            if n + m > nmax:
                                continue
                            c1 = fv * QI(Fraction(1, n * (m + n)))
                            terms.append(
                                self._eta_trilinear(
                                    c1,
                                    (self.eta(pm, A), -n),
                                    (self.eta(-pm, B), -m),
                                    (self.eta(pm, C), n + m),
                                )
                            )
                            c2 = fv * QI(Fraction(-1, 2 * m * n))
                            terms.append(
                                self._eta_trilinear(
                                    c2,
                                    (self.eta(pm, A), -n),
                                    (self.eta(pm, B), -m),
                                    (self.eta(-pm, C), n + m),
                                )
                            )
        terms = drop_zero_mode_terms(self.sys, terms)
        sgn = "+" if pm > 0 else "-"
        return OpSpec(f"Q^{sgn}", terms).check(self.sys)

    def s_spec(self, pm, factor=None):
        """The R-lowering part S^pm (degree -1/2):
        sum_{n>0} (1/n)(eta^{pm,A}_{-n} J^[-1]_{A,n} - J^[0]_{A,-n} eta^{pm,A}_n)
        + sum_{m,n>0} f_ABC ( 1/(m(m+n)) eta^{pm,A}_{-n-m} eta^{mp,B}_n eta^{pm,C}_m
                             - 1/(2mn)   eta^{mp,A}_{-n-m} eta^{pm,B}_n eta^{pm,C}_m )."""
        rng = self._factor_range(factor)
        nmax = self.h2max // 2
        terms = []
        for A in rng:
            for n in range(1, nmax + 1):
                inv = QI(Fraction(1, n))
                jm1 = self.matter_current_spec(A, n, component=-1)
                for c, syms in jm1.terms:
                    terms.append((inv * c, ((self.eta(pm, A), -n),) + syms))
                j0 = self.matter_current_spec(A, -n, component=0)
                for c, syms in j0.terms:
                    terms.append((-inv * c, syms + ((self.eta(pm, A), n),)))
        fhat = self.g.f_lowered(self.g.khat)
        for A in rng:
            for B in rng:
                for C in rng:
                    fv = fhat[A][B][C]
                    if not fv:
                        continue
                    for n in range(1, nmax + 1):
                        for m in range(1, nmax + 1):
                            if n + m > nmax:
                                continue
                            c1 = fv * QI(Fraction(1, m * (m + n)))
                            terms.append(
                                self._eta_trilinear(
                                    c1,
                                    (self.eta(pm, A), -n - m),
                                    (self.eta(-pm, B), n),
                                    (self.eta(pm, C), m),
                                )
                            )
                            c2 = fv * QI(Fraction(-1, 2 * m * n))
                            terms.append(
                                self._eta_trilinear(
                                    c2,
                                    (self.eta(-pm, A), -n - m),
                                    (self.eta(pm, B), n),
                                    (self.eta(pm, C), m),
                                )
                            )
        terms = drop_zero_mode_terms(self.sys, terms)
        sgn = "+" if pm > 0 else "-"
        return OpSpec(f"S^{sgn}", terms).check(self.sys)

    def sl2_triple_specs(self, factor=None):
        """(Pi, L, Lambda) of the outer sl(2) on the ghost fermions:
        Pi = sum_{n>0} (1/n) Khat_AB (eta^{-,A}_{-n} eta^{+,B}_n + eta^{+,A}_{-n} eta^{-,B}_n),
        L = -sum (1/n) Khat_AB eta^{-,A}_{-n} eta^{-,B}_n,
        Lambda = +sum (1/n) Khat_AB eta^{+,A}_{-n} eta^{+,B}_n."""
        rng = self._factor_range(factor)
        nmax = self.h2max // 2
        pi_t, l_t, lam_t = [], [], []
        for A in rng:
            for B in rng:
                k = self.g.khat[A][B]
                if not k:
                    continue
                for n in range(1, nmax + 1):
                    w = QI(Fraction(1, n)) * k
                    pi_t.append((w, ((self.eta(-1, A), -n), (self.eta(+1, B), n))))
                    pi_t.append((w, ((self.eta(+1, A), -n), (self.eta(-1, B), n))))
                    l_t.append((-w, ((self.eta(-1, A), -n), (self.eta(-1, B), n))))
                    lam_t.append((w, ((self.eta(+1, A), -n), (self.eta(+1, B), n))))
        return (
            OpSpec("Pi", pi_t).check(self.sys),
            OpSpec("L", l_t).check(self.sys),
            OpSpec("Lambda", lam_t).check(self.sys),
        )

    def _factor_range(self, factor):
        if self.g is None:
            return range(0)
        if factor is None:
            return range(self.g.dim)
        return self.g.factor_range(factor)

    # -- assembled operators (cached) ------------------------------------

    def op(self, key):
        if key in self._cache:
            return self._cache[key]
        kind = key[0]
        if kind == "L":
            spec = virasoro_mode_spec(self, key[1])
        elif kind == "Jtot0":
            spec = self.jtot0_spec(key[1])
        elif kind == "J":
            spec = self.matter_current_spec(key[1], key[2])
        elif kind == "Jc":
            spec = self.matter_current_spec(key[1], key[2], component=key[3])
        elif kind == "bigQ":
            spec = self.bigQ_spec(key[1], factor=key[2])
        elif kind == "Q":
            spec = self.q_spec(key[1], factor=key[2])
        elif kind == "S":
            spec = self.s_spec(key[1], factor=key[2])
        elif kind in ("Pi", "Lef", "Lam"):
            pi, lef, lam = self.sl2_triple_specs(factor=key[1])
            ops = {
                "Pi": assemble(pi, self.space),
                "Lef": assemble(lef, self.space),
                "Lam": assemble(lam, self.space),
            }
            for kk, vv in ops.items():
                self._cache[(kk, key[1])] = vv
            return self._cache[key]
        else:
            raise KeyError(key)
        op = assemble(spec, self.space)
        self._cache[key] = op
        return op


# -- vacuum-level extractions -------------------------------------------------


def extract_level(model: Model):
    """k_AB from the vacuum matrix element of [J_{A,1}, J_{B,-1}].

    Returns the exact matrix k_AB together with the twice-critical
    reference -2 h^v K_AB per factor (abelian factors use level zero).
    """
    from .fock import apply_terms

    g = model.g
    n = g.dim
    k = dense_zero(n, n)
    for A in range(n):
        tA = model.matter_current_terms(A, 1)
        for B in range(n):
            tB = model.matter_current_terms(B, -1)
            mid = apply_terms(model.sys, tB, ())
            total = ZERO
            for st, c in mid.items():
                res = apply_terms(model.sys, tA, st, c)
                total = total + res.get((), ZERO)
            k[A][B] = total
    expected = dense_zero(n, n)
    for (name, start, dim, hv, abelian) in g.factors:
        coef = QI(-2 * hv)
        for a in range(start, start + dim):
            for b in range(start, start + dim):
                expected[a][b] = coef * g.K[a][b]
    ok = all(k[a][b] == expected[a][b] for a in range(n) for b in range(n))
    return k, expected, ok


def extract_central_charge(model: Model):
    """c from 2 <0| [L_2, L_{-2}] |0>; needs h_max >= 2."""
    from .fock import apply_terms

    if model.h2max < 4:
        raise ValidationError("central charge extraction needs h_max >= 2")
    l2 = virasoro_mode_spec(model, 2)
    lm2 = virasoro_mode_spec(model, -2)
    mid = apply_terms(model.sys, lm2.terms, ())
    total = ZERO
    for st, c in mid.items():
        res = apply_terms(model.sys, l2.terms, st, c)
        total = total + res.get((), ZERO)
    # [L2, L-2]|0> = L2 L-2 |0>; the 4 L_0 part annihilates the vacuum
    c = QI(2) * total
    if c.im != 0:
        raise ValidationError("central charge came out non-real")
    return c.re

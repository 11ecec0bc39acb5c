"""Lie algebra structure data, presets, and symplectic representations.

Structure constants and the invariant form are exact rationals; matter
representation matrices live in Q(i).  Each simple or abelian factor also
carries, when it exists, the involutive rescaling K-hat of the invariant
form (K = c * K-hat with K-hat^2 = 1).  K-hat is the pairing used by the
ghost sector and the conjugation layer: an exact quaternionic structure
requires an involutive metric, and rational bases force the rescaling.
"""

from __future__ import annotations

from fractions import Fraction

from .scalars import QI, ZERO, ONE, I as IUNIT
from .linalg import SMat, inverse, LinAlgError


class ValidationError(Exception):
    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


# -- small dense helpers over QI ---------------------------------------------


def dense_zero(n, m):
    return [[ZERO] * m for _ in range(n)]


def dense_id(n):
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def dense_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    out = dense_zero(n, m)
    for i in range(n):
        for l in range(k):
            v = a[i][l]
            if v:
                row = b[l]
                orow = out[i]
                for j in range(m):
                    if row[j]:
                        orow[j] = orow[j] + v * row[j]
    return out

def dense_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def dense_sub(a, b):
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def dense_scale(a, z):
    return [[z * x for x in row] for row in a]


def dense_eq(a, b):
    return all(x == y for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def dense_is_zero(a):
    return all(not x for row in a for x in row)


def dense_trace_prod(a, b):
    n = len(a)
    s = ZERO
    for i in range(n):
        for j in range(n):
            if a[i][j] and b[j][i]:
                s = s + a[i][j] * b[j][i]
    return s


def dense_inverse(a):
    m = SMat.from_dense(a)
    try:
        return inverse(m).to_dense()
    except LinAlgError as e:
        raise ValidationError(f"matrix is singular: {e}")


def dense_transpose(a):
    return [list(row) for row in zip(*a)]


EPS_UP = [[ZERO, ONE], [QI(-1), ZERO]]  # epsilon^{alpha beta}, eps^{+-} = 1
EPS_LOW = [[ZERO, QI(-1)], [ONE, ZERO]]  # inverse


# -- Lie algebra data ---------------------------------------------------------


class LieAlgebraData:
    """Validated structure constants and invariant form.

    f[A][B][C] are Fractions with [T_A, T_B] = f_AB^C T_C; K is the
    declared invariant form, K_inv its inverse.  factors is a list of
    (name, start, dim, dual_coxeter, abelian).  khat is the per-factor
    involutive rescaling of K (None when no rational one exists).
    """

    def __init__(self, dim, f, K, factors):
        self.dim = dim
        self.f = f
        self.K = K
        self.factors = factors
        self._validate()
        self.K_inv = [[v for v in row] for row in dense_inverse(self.K)]
        self.khat = self._compute_khat()
        self.khat_inv = self.khat  # involution: inverse equals itself

    # f with the third index lowered by an arbitrary symmetric form
    def f_lowered(self, form):
        n = self.dim
        out = [[[ZERO] * n for _ in range(n)] for _ in range(n)]
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    v = self.f[a][b][c]
                    if v:
                        for d in range(n):
                            if form[c][d]:
                                out[a][b][d] = out[a][b][d] + v * form[c][d]
        return out

    def killing(self):
        """B_AB = f_AC^D f_BD^C (adjoint trace form)."""
        n = self.dim
        B = dense_zero(n, n)
        for a in range(n):
            for b in range(n):
                s = ZERO
                for c in range(n):
                    for d in range(n):
                        if self.f[a][c][d] and self.f[b][d][c]:
                            s = s + self.f[a][c][d] * self.f[b][d][c]
                B[a][b] = s
        return B

    def adjoint_rep(self):
        """ad(T_A)^C_B = f_AB^C as dense matrices."""
        n = self.dim
        return [
            [[self.f[a][b][c] for b in range(n)] for c in range(n)]
            for a in range(n)
        ]

    def factor_range(self, k):
        name, start, dim, hv, ab = self.factors[k]
        return range(start, start + dim)

    def is_abelian(self):
        return all(ab for (_, _, _, _, ab) in self.factors)

    def _validate(self):
        n = self.dim
        f, K = self.f, self.K
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    if f[a][b][c] != -f[b][a][c]:
                        raise ValidationError(
                            f"antisymmetry violated at ({a + 1},{b + 1},{c + 1})"
                        )
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    for e in range(n):
                        s = ZERO
                        for d in range(n):
                            s = (
                                s
                                + f[a][b][d] * f[d][c][e]
                                + f[b][c][d] * f[d][a][e]
                                + f[c][a][d] * f[d][b][e]
                            )
                        if s:
                            raise ValidationError(
                                f"Jacobi identity violated at ({a + 1},{b + 1},{c + 1})"
                            )
        for a in range(n):
            for b in range(n):
                if K[a][b] != K[b][a]:
                    raise ValidationError(f"K not symmetric at ({a + 1},{b + 1})")
        flow = self.f_lowered(K)
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    if flow[a][b][c] != -flow[a][c][b]:
                        raise ValidationError(
                            f"invariance violated at ({a + 1},{b + 1},{c + 1})"
                        )

    def _compute_khat(self):
        """Per-factor involutive rescaling of K, oriented positive."""
        n = self.dim
        khat = dense_zero(n, n)
        for name, start, dim, hv, abelian in self.factors:
            sub = [[self.K[start + i][start + j] for j in range(dim)] for i in range(dim)]
            sq = dense_mul(sub, sub)
            c2 = sq[0][0]
            if not c2 or any(
                sq[i][j] != (c2 if i == j else ZERO)
                for i in range(dim)
                for j in range(dim)
            ):
                return None
            if c2.im != 0:
                return None
            num, den = c2.re.numerator, c2.re.denominator
            rnum, rden = _isqrt_exact(num), _isqrt_exact(den)
            if rnum is None or rden is None:
                return None
            c = Fraction(rnum, rden)
            cand = dense_scale(sub, QI(Fraction(1, 1) / c))
            # orient: positive trace (ghost metric is the compact positive form)
            tr = sum((cand[i][i] for i in range(dim)), ZERO)
            if tr.re < 0:
                cand = dense_scale(cand, QI(-1))
            for i in range(dim):
                for j in range(dim):
                    khat[start + i][start + j] = cand[i][j]
        return khat


def _delta(i, j):
    return ONE if i == j else ZERO


def _isqrt_exact(n):
    if n < 0:
        return None
    r = int(n ** 0.5)
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand * cand == n:
            return cand
    return None


# -- presets ------------------------------------------------------------------


def _su2_preset():
    """Rational compact form of sl(2): f_AB^C = eps_ABC, K = -1/2 delta.

    K is the trace form of the spin-1/2 defining representation
    T_A = -(i/2) sigma_A, so the Killing form is B = 4K and the dual
    Coxeter number relative to K is 2.
    """
    n = 3
    f = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    for (a, b, c, v) in [
        (0, 1, 2, 1), (1, 0, 2, -1),
        (1, 2, 0, 1), (2, 1, 0, -1),
        (2, 0, 1, 1), (0, 2, 1, -1),
    ]:
        f[a][b][c] = Fraction(v)
    K = [[QI(Fraction(-1, 2)) if i == j else ZERO for j in range(n)] for i in range(n)]
    return LieAlgebraData(n, _fq(f), K, [("sl2", 0, 3, Fraction(2), False)])


def _u1_preset():
    f = [[[Fraction(0)]]]
    K = [[ONE]]
    return LieAlgebraData(1, _fq(f), K, [("u1", 0, 1, Fraction(0), True)])


def _su3_preset():
    """Integer basis of su(3): E_jk - E_kj, i(E_jk + E_kj), i(E_jj - E_kk)."""
    basis = []
    for (j, k) in [(0, 1), (0, 2), (1, 2)]:
        m = dense_zero(3, 3)
        m[j][k] = ONE
        m[k][j] = QI(-1)
        basis.append(m)
    for (j, k) in [(0, 1), (0, 2), (1, 2)]:
        m = dense_zero(3, 3)
        m[j][k] = IUNIT
        m[k][j] = IUNIT
        basis.append(m)
    for j in (0, 1):
        m = dense_zero(3, 3)
        m[j][j] = IUNIT
        m[j + 1][j + 1] = QI(0, -1)
        basis.append(m)
    n = len(basis)
    K = [[dense_trace_prod(basis[a], basis[b]) for b in range(n)] for a in range(n)]
    Kinv = dense_inverse(K)
    f = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
    for a in range(n):
        for b in range(n):
            comm = dense_sub(dense_mul(basis[a], basis[b]), dense_mul(basis[b], basis[a]))
            # expand comm = f_ab^c basis_c using trace duality
            for c in range(n):
                s = ZERO
                for d in range(n):
                    v = dense_trace_prod(comm, basis[d])
                    if v:
                        s = s + Kinv[d][c] * v
                if s.im != 0 or s.re.denominator < 1:
                    raise ValidationError("su3 preset construction failed")
                f[a][b][c] = s.re
    return LieAlgebraData(n, _fq(f), K, [("sl3", 0, 8, Fraction(3), False)])


def _fq(f):
    return [[[Fraction(v) for v in row] for row in plane] for plane in f]


_PRESETS = {"u1": _u1_preset, "sl2": _su2_preset, "sl3": _su3_preset}


def direct_sum(parts):
    dim = sum(p.dim for p in parts)
    f = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
    K = dense_zero(dim, dim)
    factors = []
    off = 0
    for p in parts:
        for a in range(p.dim):
            for b in range(p.dim):
                K[off + a][off + b] = p.K[a][b]
                for c in range(p.dim):
                    f[off + a][off + b][off + c] = p.f[a][b][c]
        for (name, start, d, hv, ab) in p.factors:
            factors.append((name, start + off, d, hv, ab))
        off += p.dim
    return LieAlgebraData(dim, f, K, factors)


def load_lie_algebra(spec):
    """Preset name ("sl2", "u1+sl2", list of names) or raw {f, K, ...} data."""
    if spec is None:
        return None
    if isinstance(spec, str):
        names = [s.strip() for s in spec.split("+")] if "+" in spec else [spec]
        parts = []
        for nm in names:
            if nm not in _PRESETS:
                raise ValidationError(f"unknown Lie algebra preset {nm!r}")
            parts.append(_PRESETS[nm]())
        return parts[0] if len(parts) == 1 else direct_sum(parts)
    if isinstance(spec, list):
        return direct_sum([load_lie_algebra(s) for s in spec])
    if isinstance(spec, dict):
        from .scalars import parse_fraction

        f_raw = spec["f"]
        dim = len(f_raw)
        f = [
            [[Fraction(parse_fraction(str(v))) for v in row] for row in plane]
            for plane in f_raw
        ]
        K = [[QI(parse_fraction(str(v))) for v in row] for row in spec["K"]]
        hv = Fraction(str(spec.get("dual_coxeter", 0)))
        abelian = all(not v for plane in f for row in plane for v in row)
        name = spec.get("name", "raw")
        return LieAlgebraData(dim, f, K, [(name, 0, dim, hv, abelian)])
    raise ValidationError(f"cannot interpret Lie algebra spec {spec!r}")


# -- symplectic representations ----------------------------------------------


class SymplecticRep:
    """A symplectic vector space with an action of g.

    omega_up is the bracket pairing Omega^{ab}; omega_low its inverse; rep
    the list of generator matrices T_A (dim x dim over Q(i)); d_grades the
    internal degrees of the basis vectors.
    """

    def __init__(self, dim, omega_low, rep, d_grades, g: LieAlgebraData | None):
        self.dim = dim
        self.omega_low = omega_low
        self.omega_up = dense_inverse(omega_low)
        self.rep = rep
        self.d_grades = list(d_grades)
        self._validate(g)

    def _validate(self, g):
        n = self.dim
        if n % 2:
            raise ValidationError("symplectic dimension must be even")
        for a in range(n):
            for b in range(n):
                if self.omega_low[a][b] != -self.omega_low[b][a]:
                    raise ValidationError(f"Omega not antisymmetric at ({a + 1},{b + 1})")
        if g is not None and self.rep is not None:
            if len(self.rep) != g.dim:
                raise ValidationError("rep must provide one matrix per generator")
            for A, T in enumerate(self.rep):
                m = dense_mul(self.omega_low, T)
                for a in range(n):
                    for b in range(n):
                        if m[a][b] != m[b][a]:
                            raise ValidationError(
                                f"generator {A + 1} does not preserve Omega"
                            )
            for A in range(g.dim):
                for B in range(g.dim):
                    comm = dense_sub(
                        dense_mul(self.rep[A], self.rep[B]),
                        dense_mul(self.rep[B], self.rep[A]),
                    )
                    expect = dense_zero(n, n)
                    for C in range(g.dim):
                        v = g.f[A][B][C]
                        if v:
                            expect = dense_add(expect, dense_scale(self.rep[C], QI(v)))
                    if not dense_eq(comm, expect):
                        raise ValidationError(
                            f"[T_{A + 1}, T_{B + 1}] != f_AB^C T_C in matter rep"
                        )


def check_twice_critical(g: LieAlgebraData, reps):
    """Tr_rep(T_A T_B) = 2 Tr_ad(T_A T_B) entrywise, per factor pair.

    reps is a list of SymplecticRep (their trace forms add).  The abelian
    clause (vanishing level) is the same identity: Tr_ad vanishes whenever
    either index is abelian.  Returns (ok, report) with per-factor-pair
    entries.
    """
    n = g.dim
    tr_rep = dense_zero(n, n)
    for rep in reps:
        if rep.rep is None:
            continue
        for A in range(n):
            for B in range(n):
                tr_rep[A][B] = tr_rep[A][B] + dense_trace_prod(rep.rep[A], rep.rep[B])
    B_ad = g.killing()
    report = []
    ok = True
    for i, (ni, si, di, hvi, abi) in enumerate(g.factors):
        for j, (nj, sj, dj, hvj, abj) in enumerate(g.factors):
            good = True
            for A in range(si, si + di):
                for Bx in range(sj, sj + dj):
                    if tr_rep[A][Bx] != QI(2) * B_ad[A][Bx]:
                        good = False
                        break
                if not good:
                    break
            report.append(
                {
                    "factors": f"{ni}x{nj}",
                    "abelian": bool(abi and abj),
                    "ok": good,
                }
            )
            ok = ok and good
    return ok, report

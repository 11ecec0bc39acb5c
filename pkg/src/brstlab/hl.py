"""Hall-Littlewood chiral ring and Koszul-style derived Poisson reduction.

HL states saturate the BPS bound h = R - d/2 (d <= 0); for the shipped
free-field matter these are polynomials in the depth-one boson modes
(tensored with exterior generators for fermionic matter of internal degree
-1).  All HL arithmetic lives in the associated graded: the product is the
leading normally-ordered product and the bracket the degree-(-1,0) vertex
Lie action, which for free fields is the constant-coefficient Poisson
structure of the symplectic form.

The derived reduction models the BRST differential on the HL sector:
Q^+ annihilates matter HL generators and sends the ghost generator
eta^{-,A} to -Khat^{AB} mu_B with mu_B the quadratic moment map.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations

from .scalars import QI, ZERO, ONE
from .linalg import SMat, kernel, rank, solve, vstack_all
from .liealg import LieAlgebraData, ValidationError, dense_mul, dense_scale
from .fock import BOSON, FERMION


class HLVars:
    """Generator bookkeeping for the HL sector of a matter content.

    Bosonic matter generators (internal degree 0) become commuting
    variables; fermionic matter generators of internal degree -1 become
    exterior variables.  The g-ghosts contribute exterior variables
    eta^{-,A} when a gauge algebra is attached.
    """

    def __init__(self, matter_blocks, g: LieAlgebraData | None = None):
        self.bvars = []  # (block_index, a)
        self.fvars = []  # ("matter", block_index, a) or ("ghost", A)
        self.bnames = []
        self.fnames = []
        self.matter = matter_blocks
        self.g = g
        for bi, blk in enumerate(matter_blocks):
            for a in range(blk.dim):
                if blk.family == BOSON:
                    if blk.d_grades[a] != 0:
                        raise ValidationError(
                            "bosonic HL generators must carry internal degree 0"
                        )
                    self.bvars.append((bi, a))
                    self.bnames.append(f"{blk.name}^{a}")
                else:
                    if blk.d_grades[a] == -1:
                        self.fvars.append(("matter", bi, a))
                        self.fnames.append(f"{blk.name}^{a}")
        self.n_ghost = 0
        if g is not None:
            for A in range(g.dim):
                self.fvars.append(("ghost", A))
                self.fnames.append(f"eta^{{-,{A}}}")
            self.n_ghost = g.dim
        self.nb = len(self.bvars)
        self.nf = len(self.fvars)
        # constant Poisson pairing of the bosonic variables
        self.pairing = [[ZERO] * self.nb for _ in range(self.nb)]
        for i, (bi, a) in enumerate(self.bvars):
            for j, (bj, b) in enumerate(self.bvars):
                if bi == bj:
                    self.pairing[i][j] = matter_blocks[bi].omega_up[a][b]

    def monomial_grade(self, mono):
        """(R2, d, degree) of a monomial."""
        bexp, fset = mono
        p = sum(bexp)
        e = len(fset)
        d = 0
        for k in fset:
            tag = self.fvars[k]
            if tag[0] == "ghost":
                d -= 1
            else:
                d += self.matter[tag[1]].d_grades[tag[2]]
        return (p + e, d, p + e)


def mono_mul(x, y):
    """Product of monomials with the wedge sign; None if a fermion repeats."""
    bx, fx = x
    by, fy = y
    if fx & fy:
        return None, 0
    bexp = tuple(a + b for a, b in zip(bx, by))
    merged = sorted(fx | fy)
    # inversions between the two sorted tuples
    fx_s = sorted(fx)
    fy_s = sorted(fy)
    inv = 0
    for a in fx_s:
        inv += sum(1 for b in fy_s if b < a)
    sign = -1 if inv % 2 else 1
    return (bexp, frozenset(merged)), sign


def poly_mul_hl(p, q):
    out = {}
    for mx, cx in p.items():
        for my, cy in q.items():
            m, sign = mono_mul(mx, my)
            if m is None:
                continue
            v = cx * cy
            if sign < 0:
                v = -v
            s = out.get(m, ZERO) + v
            if s:
                out[m] = s
            else:
                out.pop(m, None)
    return out


def poly_bracket(vars_: HLVars, p, q):
    """{p, q} = Omega^{ab} dp/dq^a dq/dq^b (fermionic generators are
    Poisson-central here: their mutual vertex Lie action vanishes)."""
    out = {}
    for mx, cx in p.items():
        bx, fx = mx
        for a in range(vars_.nb):
            ea = bx[a]
            if not ea:
                continue
            dxa = (bx[:a] + (ea - 1,) + bx[a + 1 :], fx)
            for my, cy in q.items():
                by, fy = my
                for b in range(vars_.nb):
                    w = vars_.pairing[a][b]
                    if not w:
                        continue
                    eb = by[b]
                    if not eb:
                        continue
                    dyb = (by[:b] + (eb - 1,) + by[b + 1 :], fy)
                    m, sign = mono_mul(dxa, dyb)
                    if m is None:
                        continue
                    v = cx * cy * w * QI(ea * eb)
                    if sign < 0:
                        v = -v
                    s = out.get(m, ZERO) + v
                    if s:
                        out[m] = s
                    else:
                        out.pop(m, None)
    return out


def unit_mono(vars_: HLVars):
    return ((0,) * vars_.nb, frozenset())


def bvar_mono(vars_: HLVars, i):
    e = [0] * vars_.nb
    e[i] = 1
    return (tuple(e), frozenset())


def fvar_mono(vars_: HLVars, k):
    return ((0,) * vars_.nb, frozenset([k]))


def enumerate_block(vars_: HLVars, p, e):
    """Monomials with boson degree p and fermion count e, deterministic."""
    bparts = []

    def rec(i, rem, cur):
        if i == vars_.nb - 1:
            bparts.append(tuple(cur + [rem]))
            return
        for k in range(rem + 1):
            rec(i + 1, rem - k, cur + [k])

    if vars_.nb:
        rec(0, p, [])
    elif p == 0:
        bparts.append(())
    out = []
    for b in bparts:
        for fs in combinations(range(vars_.nf), e):
            out.append((b, frozenset(fs)))
    out.sort(key=lambda m: (m[0], tuple(sorted(m[1]))))
    return out


class HLRing:
    """Basis and structure tables of the HL ring, per (R2, d, degree)."""

    def __init__(self, vars_: HLVars, degree2_max):
        self.vars = vars_
        self.degree2_max = degree2_max
        self.blocks = {}
        for p in range(degree2_max + 1):
            for e in range(min(vars_.nf, degree2_max - p) + 1):
                monos = enumerate_block(vars_, p, e)
                for m in monos:
                    r2, d, deg = vars_.monomial_grade(m)
                    if r2 <= degree2_max:
                        self.blocks.setdefault((r2, d), []).append(m)
        for key in self.blocks:
            self.blocks[key].sort(key=lambda m: (m[0], tuple(sorted(m[1]))))

    def dims(self):
        return {key: len(v) for key, v in sorted(self.blocks.items())}


def moment_map_polys(vars_: HLVars, g: LieAlgebraData):
    """mu_A = (1/2)(Omega_low T_A)_{ab} q^a q^b per generator, as HL polys."""
    out = []
    half = QI(Fraction(1, 2))
    for A in range(g.dim):
        poly = {}
        for i, (bi, a) in enumerate(vars_.bvars):
            blk = vars_.matter[bi]
            if blk.rep is None:
                continue
            M = dense_mul(blk.omega_low, blk.rep[A])
            for j, (bj, b) in enumerate(vars_.bvars):
                if bj != bi:
                    continue
                c = half * M[a][b]
                if not c:
                    continue
                mono, sign = mono_mul(bvar_mono(vars_, i), bvar_mono(vars_, j))
                v = c if sign > 0 else -c
                s = poly.get(mono, ZERO) + v
                if s:
                    poly[mono] = s
                else:
                    poly.pop(mono, None)
        out.append(poly)
    return out


def gauge_action_on_vars(vars_: HLVars, g: LieAlgebraData):
    """Per generator A: linear action columns on (bvars, fvars).

    Matter generators transform with -T_A (the convention under which the
    moment maps are equivariant, lambda_X(mu_A) = f_XA^C mu_C, matching the
    adjoint action on the ghost generators); ghosts transform in the
    adjoint.  Only the kernels matter for dimensions, but equivariance of
    Q^+ requires this relative orientation.
    """
    acts = []
    for A in range(g.dim):
        bmat = [[ZERO] * vars_.nb for _ in range(vars_.nb)]
        for j, (bj, b) in enumerate(vars_.bvars):
            blk = vars_.matter[bj]
            if blk.rep is None:
                continue
            for i, (bi, a) in enumerate(vars_.bvars):
                if bi != bj:
                    continue
                v = blk.rep[A][a][b]
                if v:
                    bmat[i][j] = -v
        fmat = [[ZERO] * vars_.nf for _ in range(vars_.nf)]
        for k, tag in enumerate(vars_.fvars):
            if tag[0] == "ghost":
                B = tag[1]
                for l, tag2 in enumerate(vars_.fvars):
                    if tag2[0] == "ghost":
                        C = tag2[1]
                        v = g.f[A][B][C]
                        if v:
                            fmat[l][k] = QI(v)
            else:
                blk = vars_.matter[tag[1]]
                if blk.rep is None:
                    continue
                for l, tag2 in enumerate(vars_.fvars):
                    if tag2[0] == "matter" and tag2[1] == tag[1]:
                        v = blk.rep[A][tag2[2]][tag[2]]
                        if v:
                            fmat[l][k] = -v
        acts.append((bmat, fmat))
    return acts


def _action_matrix(vars_: HLVars, monos, index, bmat, fmat):
    """Derivation action of one gauge generator on a monomial block."""
    n = len(monos)
    m = SMat(n, n)
    for col, mono in enumerate(monos):
        bexp, fset = mono
        for a in range(vars_.nb):
            ea = bexp[a]
            if not ea:
                continue
            for a2 in range(vars_.nb):
                v = bmat[a2][a]
                if not v:
                    continue
                nb = list(bexp)
                nb[a] -= 1
                nb[a2] += 1
                tgt = (tuple(nb), fset)
                row = index[tgt]
                cur = m.rows[row].get(col, ZERO) + QI(ea) * v
                if cur:
                    m.rows[row][col] = cur
                else:
                    m.rows[row].pop(col, None)
        for k in sorted(fset):
            for k2 in range(vars_.nf):
                v = fmat[k2][k]
                if not v:
                    continue
                rest = fset - {k}
                if k2 in rest:
                    continue
                # sign: remove k from its position, insert k2
                pos_k = sum(1 for x in fset if x < k)
                pos_k2 = sum(1 for x in rest if x < k2)
                sign = -1 if (pos_k + pos_k2) % 2 else 1
                tgt = (bexp, frozenset(rest | {k2}))
                row = index.get(tgt)
                if row is None:
                    continue
                val = v if sign > 0 else -v
                cur = m.rows[row].get(col, ZERO) + val
                if cur:
                    m.rows[row][col] = cur
                else:
                    m.rows[row].pop(col, None)
    return m


def koszul_reduction(matter_blocks, g: LieAlgebraData, degree2_max):
    """Cohomology of ((HL_matter (x) /\\* g)^G, Q^+), graded by (R2, d).

    Q^+ kills matter HL generators and maps the ghost eta^{-,A} to
    -Khat^{AB} mu_B.  Returns (dims, invariant_dims, table) with cohomology
    dims per (R2, d); the ghost-degree-zero row of the table is the
    classical invariant-theory reduction.
    """
    if g.khat is None:
        raise ValidationError("Koszul reduction needs an involutive Khat")
    vars_ = HLVars(matter_blocks, g)
    ring = HLRing(vars_, degree2_max)
    mus = moment_map_polys(vars_, g)
    acts = gauge_action_on_vars(vars_, g)
    # invariant bases per block
    inv = {}
    indexes = {}
    for key, monos in ring.blocks.items():
        index = {m: i for i, m in enumerate(monos)}
        indexes[key] = index
        mats = [
            _action_matrix(vars_, monos, index, bmat, fmat) for (bmat, fmat) in acts
        ]
        stacked = vstack_all(mats) if mats else SMat(0, len(monos))
        inv[key] = kernel(stacked)
    # Q^+ on a monomial: odd derivation with Q^+(ghost k -> A) = -Khat^{AB} mu_B
    ghost_images = {}
    for k, tag in enumerate(vars_.fvars):
        if tag[0] != "ghost":
            continue
        A = tag[1]
        img = {}
        for B in range(g.dim):
            coef = g.khat[A][B]
            if not coef:
                continue
            for mono, c in mus[B].items():
                s = img.get(mono, ZERO) - coef * c
                if s:
                    img[mono] = s
                else:
                    img.pop(mono, None)
        ghost_images[k] = img

    def qplus_mono(mono):
        bexp, fset = mono
        out = {}
        fsorted = sorted(fset)
        for pos, k in enumerate(fsorted):
            if k not in ghost_images:
                continue
            sign = -1 if pos % 2 else 1
            rest = frozenset(fset - {k})
            for mimg, c in ghost_images[k].items():
                m2, s2 = mono_mul((bexp, rest), mimg)
                if m2 is None:
                    continue
                v = c if sign > 0 else -c
                if s2 < 0:
                    v = -v
                s = out.get(m2, ZERO) + v
                if s:
                    out[m2] = s
                else:
                    out.pop(m2, None)
        return out

    qblocks = {}
    for key, monos in ring.blocks.items():
        r2, d = key
        tgt_key = (r2 + 1, d + 1)
        tgt = ring.blocks.get(tgt_key)
        if tgt is None:
            continue
        tindex = indexes[tgt_key]
        m = SMat(len(tgt), len(monos))
        for col, mono in enumerate(monos):
            for m2, v in qplus_mono(mono).items():
                m.rows[tindex[m2]][col] = v
        qblocks[key] = m

    # restrict to invariants and take cohomology per (R2, d)
    dims = {}
    inv_dims = {}
    for key in sorted(ring.blocks):
        kv = inv[key]
        inv_dims[key] = kv.ncols
    restricted = {}
    for key, m in qblocks.items():
        r2, d = key
        tgt_key = (r2 + 1, d + 1)
        if inv[key].ncols == 0:
            continue
        img = m @ inv[key]
        if tgt_key not in inv or inv[tgt_key].ncols == 0:
            if not img.is_zero():
                raise ValidationError("Q^+ image escapes the invariant complex")
            restricted[key] = SMat(0, inv[key].ncols)
        else:
            restricted[key] = solve(inv[tgt_key], img)
    for key in sorted(ring.blocks):
        r2, d = key
        n = inv_dims[key]
        if n == 0:
            dims[key] = 0
            continue
        out_blk = restricted.get(key, SMat(0, n))
        src_key = (r2 - 1, d - 1)
        in_blk = restricted.get(src_key)
        rank_in = 0
        if in_blk is not None and inv_dims.get(src_key, 0) and in_blk.nrows == n:
            rank_in = rank(in_blk)
        dims[key] = (n - rank(out_blk)) - rank_in
    return dims, inv_dims, ring


# -- checks against the BRST side ----------------------------------------------


def hl_sector_harmonic_dims(ws):
    """dim ker Delta at the HL grades (h2 = R2 - d, d <= 0), keyed (R2, d)."""
    rc = ws.rc
    out = {}
    for grade in rc.grades():
        h2, r2, d = grade
        if d > 0 or h2 != r2 - d:
            continue
        blk = ws.delta.blocks.get((grade, grade))
        n = rc.dim(grade)
        if blk is None:
            out[(r2, d)] = out.get((r2, d), 0) + n
        else:
            out[(r2, d)] = out.get((r2, d), 0) + kernel(blk).ncols
    return out


def pva_kahler_report(rc):
    """[Q^alpha, Qbar_beta] = (1/2) delta^alpha_beta Delta, with
    Qbar_pm = (Q^pm)^dag = -+ S^-+, as exact matrix identities."""
    qp = rc.q(+1)
    qm = rc.q(-1)
    sp = rc.s(+1)
    sm = rc.s(-1)
    qbar_p = rc.adjoint(qp, name="qbar_+")
    qbar_m = rc.adjoint(qm, name="qbar_-")
    delta = rc.laplacian()
    half = QI(Fraction(1, 2))
    checks = {
        "qbar+_is_-S-": qbar_p.sub(sm.scale(QI(-1))).is_zero_on(),
        "qbar-_is_+S+": qbar_m.sub(sp).is_zero_on(),
        "[Q+,qbar+]=Delta/2": qp.commutator(qbar_p).sub(delta.scale(half)).is_zero_on(),
        "[Q-,qbar-]=Delta/2": qm.commutator(qbar_m).sub(delta.scale(half)).is_zero_on(),
        "[Q+,qbar-]=0": qp.commutator(qbar_m).is_zero_on(),
        "[Q-,qbar+]=0": qm.commutator(qbar_p).is_zero_on(),
        "[Q+,Q-]=0": qp.commutator(qm).is_zero_on(),
        "[qbar+,qbar-]=0": qbar_p.commutator(qbar_m).is_zero_on(),
        "(Q+)^2=0": qp.compose(qp).is_zero_on(),
        "(Q-)^2=0": qm.compose(qm).is_zero_on(),
    }
    checks["ok"] = all(checks.values())
    return checks

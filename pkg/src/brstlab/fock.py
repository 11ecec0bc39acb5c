"""Tri-graded Fock spaces for free symplectic bosons and fermions.

States are normal-ordered monomials of creation modes acting on the vacuum,
kept in a canonical order (bosons before fermions, conformal weight
descending, species ascending) with exact Koszul signs.  Every state carries
a grade (h, R, d); h and R are half-integers stored doubled as ints.

Mode conventions: a boson field q^a(z) = sum_n q^a_n z^{-n-1} has weight
1/2, so the mode q^a_n shifts h by -n-1/2 and the creation modes are
q^a_{-n-1}, n >= 0.  A fermion field eta^a(z) has weight 1, eta^a_n shifts
h by -n, creation modes are eta^a_{-n}, n >= 1, and eta^a_0 acts as zero on
the vacuum module.
"""

from __future__ import annotations

from fractions import Fraction

from .scalars import QI, ZERO, ONE

BOSON = 0
FERMION = 1


class ResourceError(Exception):
    """State budget exceeded during enumeration."""


class GeneratorSystem:
    """Free-field generator content: species, pairings, gradings.

    omega_up[i][j] is the bracket pairing: [x_i_n, x_j_m] equals
    omega_up[i][j] * delta_{n+m+1,0} for bosons and n * omega_up[i][j] *
    delta_{n+m,0} for fermions.  omega_low is its inverse, used by the
    conjugation and adjoint tables.
    """

    def __init__(self, families, names, d_grades, omega_up, omega_low, blocks):
        self.n = len(families)
        self.fam = list(families)
        self.names = list(names)
        self.d = list(d_grades)
        self.omega_up = omega_up
        self.omega_low = omega_low
        self.blocks = blocks  # list of (block_name, start, dim, family)
        self.partners_up = [
            [(j, omega_up[i][j]) for j in range(self.n) if omega_up[i][j]]
            for i in range(self.n)
        ]

    def weight2(self, g, n):
        """Doubled conformal weight of mode (g, n)."""
        return -2 * n - 1 if self.fam[g] == BOSON else -2 * n

    def is_creation(self, g, n):
        return n <= -1

    def mode_name(self, g, n):
        return f"{self.names[g]}_{{{n}}}"


def combine_systems(parts):
    """Block-diagonal union of generator systems (matter + ghosts etc.)."""
    families, names, dg, blocks = [], [], [], []
    total = sum(p.n for p in parts)
    up = [[ZERO] * total for _ in range(total)]
    low = [[ZERO] * total for _ in range(total)]
    off = 0
    for p in parts:
        families += p.fam
        names += p.names
        dg += p.d
        for bname, start, dim, fam in p.blocks:
            blocks.append((bname, start + off, dim, fam))
        for i in range(p.n):
            for j in range(p.n):
                up[off + i][off + j] = p.omega_up[i][j]
                low[off + i][off + j] = p.omega_low[i][j]
        off += p.n
    return GeneratorSystem(families, names, dg, up, low, blocks)


# -- states -----------------------------------------------------------------
#
# A state is a tuple of (g, n) symbols, sorted by the canonical key
# (family, n ascending == weight descending, species ascending).  The empty
# tuple is the vacuum.


def sym_key(sys: GeneratorSystem, sym):
    g, n = sym
    return (sys.fam[g], n, g)


def state_grade(sys: GeneratorSystem, state):
    """(h2, R2, d) of a monomial state."""
    h2 = 0
    d = 0
    for g, n in state:
        h2 += sys.weight2(g, n)
        d += sys.d[g]
    return (h2, len(state), d)


def state_parity(sys: GeneratorSystem, state):
    return sum(1 for g, _ in state if sys.fam[g] == FERMION) % 2


def state_name(sys: GeneratorSystem, state):
    if not state:
        return "|0>"
    return " ".join(sys.mode_name(g, n) for g, n in state) + " |0>"


def insert_creation(sys: GeneratorSystem, sym, state):
    """Insert a creation mode into a canonical state.

    Returns (sign, new_state); new_state is None when a fermionic mode
    repeats (Pauli).  The sign is the Koszul sign from moving the symbol
    past the prefix it ends up behind.
    """
    key = sym_key(sys, sym)
    fermionic = sys.fam[sym[0]] == FERMION
    pos = 0
    crossed = 0
    for s in state:
        k = sym_key(sys, s)
        if k < key:
            pos += 1
            if sys.fam[s[0]] == FERMION:
                crossed += 1
        else:
            break
    if fermionic and pos < len(state) and state[pos] == sym:
        return 1, None
    sign = -1 if (fermionic and crossed % 2) else 1
    return sign, state[:pos] + (sym,) + state[pos:]


def apply_mode(sys: GeneratorSystem, sym, state, coeff):
    """Apply one mode to a canonical state; returns {state: QI}.

    Creation modes insert; annihilation modes contract via the free-field
    brackets with exact Koszul signs and then vanish against the vacuum.
    """
    g, n = sym
    out = {}
    if n <= -1:
        sign, new = insert_creation(sys, sym, state)
        if new is not None:
            _acc(out, new, coeff if sign == 1 else -coeff)
        return out
    fam = sys.fam[g]
    if fam == FERMION and n == 0:
        return out
    sign = 1
    for pos, (g2, m) in enumerate(state):
        fam2 = sys.fam[g2]
        if fam2 == fam:
            pair = sys.omega_up[g][g2]
            if pair:
                if fam == BOSON and n + m + 1 == 0:
                    val = pair
                elif fam == FERMION and n + m == 0:
                    val = QI(n) * pair
                else:
                    val = None
                if val is not None and val:
                    c = coeff * val
                    if sign < 0:
                        c = -c
                    _acc(out, state[:pos] + state[pos + 1 :], c)
        if fam == FERMION and fam2 == FERMION:
            sign = -sign
    return out


def _acc(d, state, v):
    cur = d.get(state)
    s = v if cur is None else cur + v
    if s:
        d[state] = s
    elif cur is not None:
        del d[state]


def apply_terms(sys: GeneratorSystem, terms, state, coeff=ONE):
    """Apply a sum of mode monomials; terms = [(QI, (sym, ...)), ...].

    Symbols in a term are written in operator order (leftmost acts last).
    """
    out = {}
    for tc, syms in terms:
        cur = {state: tc * coeff}
        for sym in reversed(syms):
            nxt = {}
            for st, c in cur.items():
                for st2, c2 in apply_mode(sys, sym, st, c).items():
                    _acc(nxt, st2, c2)
            cur = nxt
            if not cur:
                break
        for st, c in cur.items():
            _acc(out, st, c)
    return out


# -- graded spaces ----------------------------------------------------------


class GradedSpace:
    """All basis states with h <= h_max, partitioned by (h2, R2, d)."""

    def __init__(self, sys: GeneratorSystem, h2max: int, blocks):
        self.sys = sys
        self.h2max = h2max
        self.blocks = blocks
        self.index = {}
        for grade, states in blocks.items():
            for pos, st in enumerate(states):
                self.index[st] = (grade, pos)

    def grades(self):
        return sorted(self.blocks.keys())

    def dim(self, grade):
        return len(self.blocks.get(grade, ()))

    def total_dim(self):
        return sum(len(v) for v in self.blocks.values())


def enumerate_space(sys: GeneratorSystem, h2max: int, budget: int = 500000):
    """Deterministic basis enumeration up to the weight cutoff."""
    modes = []
    for g in range(sys.n):
        n = -1
        while sys.weight2(g, n) <= h2max:
            modes.append((sys.weight2(g, n), (g, n)))
            n -= 1
    modes.sort(key=lambda t: (t[0], sym_key(sys, t[1])))
    blocks = {}
    count = 0
    stack = []

    def emit():
        nonlocal count
        state = tuple(sorted(stack, key=lambda s: sym_key(sys, s)))
        grade = state_grade(sys, state)
        blocks.setdefault(grade, []).append(state)
        count += 1
        if count > budget:
            raise ResourceError(
                f"state budget {budget} exceeded at grade h={Fraction(grade[0],2)}, "
                f"R={Fraction(grade[1],2)}, d={grade[2]}"
            )

    def rec(start, rem):
        emit()
        for i in range(start, len(modes)):
            w2, sym = modes[i]
            if w2 > rem:
                break
            fermionic = sys.fam[sym[0]] == FERMION
            if fermionic and sym in stack:
                continue
            stack.append(sym)
            rec(i, rem - w2)
            stack.pop()

    rec(0, h2max)
    for grade in blocks:
        blocks[grade].sort()
    return GradedSpace(sys, h2max, blocks)


# -- characters -------------------------------------------------------------


def character_table(space: GradedSpace):
    """[(h2, R2, d, dim)] sorted by grade."""
    return [(g[0], g[1], g[2], space.dim(g)) for g in space.grades()]


def _power_str(symbol, e: Fraction):
    if e == 0:
        return ""
    if e == 1:
        return symbol
    if e.denominator == 1:
        return f"{symbol}^{{{e}}}"
    return f"{symbol}^{{{e}}}"


def character_series(space: GradedSpace) -> str:
    """Generating series sum dim * q^h t^R z^d, truncated at the cutoff."""
    parts = []
    for (h2, r2, d), states in sorted(space.blocks.items()):
        dim = len(states)
        factors = []
        for sym, val2 in (("q", h2), ("t", r2)):
            s = _power_str(sym, Fraction(val2, 2))
            if s:
                factors.append(s)
        if d:
            factors.append(_power_str("z", Fraction(d)))
        mono = " ".join(factors)
        if not mono:
            parts.append(str(dim))
        elif dim == 1:
            parts.append(mono)
        else:
            parts.append(f"{dim}*{mono}")
    return " + ".join(parts) if parts else "0"


def spin_statistics_violations(space: GradedSpace):
    """States whose Grassmann parity differs from (-1)^{2(h+R)}."""
    bad = []
    for (h2, r2, d), states in sorted(space.blocks.items()):
        expect = (h2 + r2) % 2
        for st in states:
            if state_parity(space.sys, st) != expect:
                bad.append(((h2, r2, d), st))
    return bad


def bps_violations(space: GradedSpace):
    """States with h < R + |d|/2."""
    bad = []
    for (h2, r2, d), states in sorted(space.blocks.items()):
        if h2 < r2 + abs(d):
            bad.extend(((h2, r2, d), st) for st in states)
    return bad

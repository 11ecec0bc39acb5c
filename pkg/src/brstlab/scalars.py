"""Exact Gaussian-rational scalars.

Every coefficient in the workbench lives in Q(i): a + b*i with a, b
arbitrary-precision rationals.  All phases that occur (powers of i,
e^{i*pi*h} for half-integral h) stay inside this field, so no floating
point appears anywhere.
"""

from __future__ import annotations

from fractions import Fraction


class QI:
    """A Gaussian rational a + b*i, immutable and hashable."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", re if isinstance(re, Fraction) else Fraction(re))
        object.__setattr__(self, "im", im if isinstance(im, Fraction) else Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("QI is immutable")

    # -- field operations -------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        return QI(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return QI(-self.re, -self.im)

    def __sub__(self, other):
        other = _coerce(other)
        return QI(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        return QI(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        n = other.re * other.re + other.im * other.im
        if n == 0:
            raise ZeroDivisionError("division by zero in Q(i)")
        return QI(
            (self.re * other.re + self.im * other.im) / n,
            (self.im * other.re - self.re * other.im) / n,
        )

    def __rtruediv__(self, other):
        return _coerce(other) / self

    def conj(self):
        return QI(self.re, -self.im)

    def norm2(self):
        """|z|^2 as an exact rational."""
        return self.re * self.re + self.im * self.im

    # -- predicates and hashing -------------------------------------------

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def is_rational(self):
        return self.im == 0

    def __eq__(self, other):
        if isinstance(other, QI):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    # -- rendering ---------------------------------------------------------

    def __repr__(self):
        return f"QI({self.re!r}, {self.im!r})"

    def __str__(self):
        return format_qi(self)


ZERO = QI(0)
ONE = QI(1)
I = QI(0, 1)

_I_POW = (ONE, I, QI(-1), QI(0, -1))


def _coerce(x):
    if isinstance(x, QI):
        return x
    if isinstance(x, (int, Fraction)):
        return QI(x)
    raise TypeError(f"cannot coerce {type(x).__name__} into Q(i)")


def qi(re=0, im=0):
    return QI(re, im)


def i_pow(k: int) -> QI:
    """i^k for integer k (k may be negative)."""
    return _I_POW[k % 4]


def phase_exp_i_pi(h: Fraction) -> QI:
    """e^{i*pi*h} for half-integral h; equals i^{2h}."""
    two_h = 2 * h
    if two_h.denominator != 1:
        raise ValueError(f"e^(i*pi*{h}) is not in Q(i)")
    return i_pow(int(two_h))


def sign_pow(k: int) -> QI:
    """(-1)^k."""
    return ONE if k % 2 == 0 else QI(-1)


# -- serialization: "p/q" for rationals, "p/q+r/s*i" for Gaussian ones -----


def format_fraction(x: Fraction) -> str:
    return str(x)


def format_qi(z: QI) -> str:
    if z.im == 0:
        return str(z.re)
    if z.re == 0:
        if z.im == 1:
            return "i"
        if z.im == -1:
            return "-i"
        return f"{z.im}*i"
    sign = "+" if z.im > 0 else "-"
    mag = abs(z.im)
    istr = "i" if mag == 1 else f"{mag}*i"
    return f"{z.re}{sign}{istr}"


def parse_fraction(s: str) -> Fraction:
    return Fraction(s.strip())


def parse_qi(s: str) -> QI:
    """Parse "p/q", "p/q+r/s*i", "i", "-i", "r/s*i" and friends."""
    t = s.strip().replace(" ", "")
    if not t:
        raise ValueError("empty scalar string")
    if "i" not in t:
        return QI(Fraction(t))
    body = t[:-1]  # strip trailing 'i'
    if not t.endswith("i"):
        raise ValueError(f"malformed Gaussian rational: {s!r}")
    if body.endswith("*"):
        body = body[:-1]
    # split into real part and imaginary coefficient at the last +/- that is
    # not a leading sign and not inside an exponent (fractions have none)
    split = -1
    for k in range(len(body) - 1, 0, -1):
        if body[k] in "+-" and body[k - 1] not in "+-*/":
            split = k
            break
    if split == -1:
        re_s, im_s = "0", body
    else:
        re_s, im_s = body[:split], body[split:]
    if im_s in ("", "+"):
        im = Fraction(1)
    elif im_s == "-":
        im = Fraction(-1)
    else:
        im = Fraction(im_s)
    re = Fraction(re_s) if re_s else Fraction(0)
    return QI(re, im)


def parse_half_integer(s) -> Fraction:
    """A nonnegative-or-not half integer "p" or "p/2"; exact."""
    x = Fraction(s) if not isinstance(s, Fraction) else s
    if (2 * x).denominator != 1:
        raise ValueError(f"{s} is not a half-integer")
    return x

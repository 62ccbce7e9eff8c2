"""Exact univariate polynomial and rational-function arithmetic in q.

Stationary probabilities of the ring process are rational functions of the
asymmetry parameter q with a known common denominator, so every exact
computation in this package runs over ``QPoly`` (polynomials in q with
Fraction coefficients) and ``QRational`` (reduced quotients of two QPoly).
Coefficient lists are stored low degree first.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Union

Scalar = Union[int, Fraction]
PolyLike = Union["QPoly", int, Fraction]


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    """Positive gcd on Fractions: gcd of numerators over lcm of denominators."""
    if a == 0 and b == 0:
        return Fraction(0)
    num = math.gcd(a.numerator, b.numerator)
    den = (a.denominator * b.denominator) // math.gcd(a.denominator,
                                                      b.denominator)
    return Fraction(num, den)


class QPoly:
    """Polynomial in q over the rationals.

    Parameters
    ----------
    coeffs : iterable of int or Fraction
        Coefficients, low degree first.  Trailing zeros are stripped.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[Scalar] = ()):
        cs = [c if isinstance(c, Fraction) else Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs)

    # -- construction helpers -------------------------------------------

    @classmethod
    def constant(cls, c: Scalar) -> "QPoly":
        return cls((c,))

    @classmethod
    def monomial(cls, degree: int, c: Scalar = 1) -> "QPoly":
        if degree < 0:
            raise ValueError("monomial degree must be >= 0")
        return cls((0,) * degree + (c,))

    # -- basic queries ----------------------------------------------------

    @property
    def degree(self):
        """Degree of the polynomial; -inf for the zero polynomial."""
        return len(self.coeffs) - 1 if self.coeffs else -math.inf

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def leading(self) -> Fraction:
        if not self.coeffs:
            raise ValueError("zero polynomial has no leading coefficient")
        return self.coeffs[-1]

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def __eq__(self, other) -> bool:
        other = _coerce_poly(other)
        if other is NotImplemented:
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    # -- ring operations --------------------------------------------------

    def __add__(self, other) -> "QPoly":
        other = _coerce_poly(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return QPoly(out)

    __radd__ = __add__

    def __neg__(self) -> "QPoly":
        return QPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other) -> "QPoly":
        other = _coerce_poly(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "QPoly":
        other = _coerce_poly(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> "QPoly":
        other = _coerce_poly(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return QPoly()
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, ca in enumerate(a):
            if ca == 0:
                continue
            for j, cb in enumerate(b):
                out[i + j] += ca * cb
        return QPoly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "QPoly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        result = QPoly((1,))
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __divmod__(self, other) -> tuple["QPoly", "QPoly"]:
        other = _coerce_poly(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero:
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        quo = [Fraction(0)] * max(len(rem) - len(other.coeffs) + 1, 0)
        dlead = other.leading()
        dlen = len(other.coeffs)
        for i in range(len(rem) - dlen, -1, -1):
            c = rem[i + dlen - 1] / dlead
            if c == 0:
                continue
            quo[i] = c
            for j, dc in enumerate(other.coeffs):
                rem[i + j] -= c * dc
        return QPoly(quo), QPoly(rem)

    def exact_divide(self, other) -> "QPoly":
        """Divide by an exact factor, raising ValueError on any remainder."""
        quo, rem = divmod(self, other)
        if not rem.is_zero:
            raise ValueError(f"{self} is not divisible by {other}")
        return quo

    def shifted(self, k: int) -> "QPoly":
        """Multiply by q**k."""
        if k < 0:
            raise ValueError("shift must be non-negative")
        if self.is_zero:
            return self
        return QPoly((Fraction(0),) * k + self.coeffs)

    def reversed(self) -> "QPoly":
        """Reverse the coefficient order: q**deg * p(1/q)."""
        return QPoly(tuple(reversed(self.coeffs)))

    # -- gcd and normalization -------------------------------------------

    def content(self) -> Fraction:
        """Positive rational content (gcd of all coefficients)."""
        c = Fraction(0)
        for x in self.coeffs:
            c = _frac_gcd(c, x)
        return c

    def primitive(self) -> "QPoly":
        """Integer-coefficient primitive part with positive leading term."""
        if self.is_zero:
            return self
        c = self.content()
        if self.leading() < 0:
            c = -c
        return QPoly(tuple(x / c for x in self.coeffs))

    def gcd(self, other) -> "QPoly":
        """Primitive gcd in q over the rationals."""
        other = _coerce_poly(other)
        a, b = self, other
        while not b.is_zero:
            a, b = b, divmod(a, b)[1]
        if a.is_zero:
            return a
        return a.primitive()

    # -- evaluation and serialization --------------------------------------

    def evaluate_at(self, q0):
        """Horner evaluation; exact for Fraction/int input, float for float."""
        acc = Fraction(0) if isinstance(q0, (int, Fraction)) else 0.0
        for c in reversed(self.coeffs):
            acc = acc * q0 + c
        return acc

    __call__ = evaluate_at

    def __str__(self) -> str:
        if self.is_zero:
            return "[0]"
        parts = ", ".join(_fmt_frac(c) for c in self.coeffs)
        return f"[{parts}]"

    def __repr__(self) -> str:
        return f"QPoly({list(self.coeffs)!r})"

    @classmethod
    def parse(cls, text: str) -> "QPoly":
        """Inverse of str(): reads '[1, 2, 2, 1]' (low degree first)."""
        text = text.strip()
        if not (text.startswith("[") and text.endswith("]")):
            raise ValueError(f"not a coefficient list: {text!r}")
        inner = text[1:-1].strip()
        if not inner:
            return cls()
        return cls(Fraction(tok.strip()) for tok in inner.split(","))


def _fmt_frac(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c}"


def _coerce_poly(x) -> "QPoly":
    if isinstance(x, QPoly):
        return x
    if isinstance(x, (int, Fraction)):
        return QPoly((x,))
    return NotImplemented


ZERO = QPoly()
ONE = QPoly((1,))
Q = QPoly((0, 1))


class QRational:
    """Reduced quotient of two QPoly.

    The denominator is normalized to have integer coefficients with content
    one and a positive leading coefficient, so equal values compare equal.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: PolyLike, den: PolyLike = 1):
        num = _coerce_poly(num)
        den = _coerce_poly(den)
        if num is NotImplemented or den is NotImplemented:
            raise TypeError("QRational needs polynomial-like arguments")
        if den.is_zero:
            raise ZeroDivisionError("rational function with zero denominator")
        if num.is_zero:
            num, den = ZERO, ONE
        else:
            g = num.gcd(den)
            if g.degree > 0:
                num = num.exact_divide(g)
                den = den.exact_divide(g)
            scale = den.content()
            if den.leading() < 0:
                scale = -scale
            den = QPoly(tuple(c / scale for c in den.coeffs))
            num = QPoly(tuple(c / scale for c in num.coeffs))
        self.num = num
        self.den = den

    # -- queries ----------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    def is_polynomial(self) -> bool:
        return divmod(self.num, self.den)[1].is_zero

    def as_poly(self) -> QPoly:
        quo, rem = divmod(self.num, self.den)
        if not rem.is_zero:
            raise ValueError(f"{self} is not a polynomial")
        return quo

    def __bool__(self) -> bool:
        return not self.num.is_zero

    def __eq__(self, other) -> bool:
        other = _coerce_rational(other)
        if other is NotImplemented:
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((self.num, self.den))

    # -- field operations --------------------------------------------------

    def __add__(self, other) -> "QRational":
        other = _coerce_rational(other)
        if other is NotImplemented:
            return NotImplemented
        return QRational(self.num * other.den + other.num * self.den,
                         self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> "QRational":
        return QRational(-self.num, self.den)

    def __sub__(self, other) -> "QRational":
        other = _coerce_rational(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "QRational":
        other = _coerce_rational(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other) -> "QRational":
        other = _coerce_rational(other)
        if other is NotImplemented:
            return NotImplemented
        return QRational(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "QRational":
        other = _coerce_rational(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero:
            raise ZeroDivisionError("division by zero rational function")
        return QRational(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other) -> "QRational":
        other = _coerce_rational(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    def __pow__(self, n: int) -> "QRational":
        if not isinstance(n, int):
            raise ValueError("exponent must be an integer")
        if n < 0:
            return QRational(self.den, self.num) ** (-n)
        return QRational(self.num ** n, self.den ** n)

    # -- evaluation and transforms -----------------------------------------

    def evaluate_at(self, q0):
        num = self.num.evaluate_at(q0)
        den = self.den.evaluate_at(q0)
        if den == 0:
            raise ZeroDivisionError(f"denominator vanishes at q={q0}")
        return num / den

    __call__ = evaluate_at

    def substitute_inverse(self) -> "QRational":
        """Return the same rational function with q replaced by 1/q."""
        a = self.num.degree if not self.num.is_zero else 0
        b = self.den.degree
        num = self.num.reversed()
        den = self.den.reversed()
        if b >= a:
            num = num.shifted(b - a)
        else:
            den = den.shifted(a - b)
        return QRational(num, den)

    def __str__(self) -> str:
        return f"{self.num} / {self.den}"

    def __repr__(self) -> str:
        return f"QRational({self.num!r}, {self.den!r})"

    @classmethod
    def parse(cls, text: str) -> "QRational":
        """Inverse of str(): reads '[n0, n1, ...] / [d0, d1, ...]'.

        The separator is '/' between the bracketed lists; slashes inside a
        bracket belong to fractional coefficients.
        """
        closing = text.find("]")
        slash = text.find("/", closing + 1)
        if slash < 0:
            return cls(QPoly.parse(text))
        return cls(QPoly.parse(text[:slash]),
                   QPoly.parse(text[slash + 1:]))


def _coerce_rational(x):
    if isinstance(x, QRational):
        return x
    if isinstance(x, (QPoly, int, Fraction)):
        return QRational(x)
    return NotImplemented


RAT_ZERO = QRational(0)
RAT_ONE = QRational(1)
RAT_Q = QRational(Q)


# -- q-combinatorics --------------------------------------------------------

def qint(n: int) -> QPoly:
    """q-analog of the integer n: 1 + q + ... + q**(n-1)."""
    if n < 0:
        raise ValueError("qint needs n >= 0")
    return QPoly((1,) * n)


def qfact(n: int) -> QPoly:
    """q-factorial: product of qint(j) for j = 1..n."""
    if n < 0:
        raise ValueError("qfact needs n >= 0")
    out = ONE
    for j in range(1, n + 1):
        out = out * qint(j)
    return out


def common_denominator(counts, L: int | None = None) -> QPoly:
    """Common denominator polynomial for stationary probabilities.

    For class sizes ``counts = (k_1, ..., k_N)`` on a ring of ``L`` sites,
    every stationary probability times this polynomial is a polynomial in q
    with non-negative integer coefficients.  The value is the product over
    class prefixes K_n = k_1 + ... + k_n of binom(L, K_n), times for each
    n >= 2 with K_n < L the q-factorial quotient [K_n]_q! / [k_n]_q!.  A
    prefix that fills the whole ring is assigned deterministically (every
    slot is matched in place), so it contributes no weighted-choice factor.

    Parameters
    ----------
    counts : ParticleCounts or iterable of int
        Positive class sizes k_1..k_N.
    L : int, optional
        Ring size; required unless counts carries one.

    Returns
    -------
    QPoly
        The common denominator polynomial.
    """
    if hasattr(counts, "counts") and hasattr(counts, "L"):
        if L is None:
            L = counts.L
        counts = counts.counts
    if L is None:
        raise ValueError("ring size L is required")
    counts = tuple(counts)
    if not counts or any(k <= 0 for k in counts):
        raise ValueError("counts must be non-empty and positive")
    if sum(counts) > L:
        raise ValueError(f"counts sum to {sum(counts)} > L = {L}")
    out = ONE
    prefix = 0
    for n, k in enumerate(counts, start=1):
        prefix += k
        out = out * math.comb(L, prefix)
        if n >= 2 and prefix < L:
            out = out * qfact(prefix).exact_divide(qfact(k))
    return out

"""The planar model map T_{a,d}(x, y) = (y - a(x+y)^d, y - 2a(x+y)^d).

Every function works on plain floats and on exact ``Fraction`` values; the
arithmetic mode follows the input types.  Integer powers are computed by
repeated multiplication so that scalar and array evaluation round identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from numbers import Rational
from typing import Tuple, Union

Number = Union[int, float, Fraction]
Point = Tuple[Number, Number]
Matrix2 = Tuple[Tuple[Number, Number], Tuple[Number, Number]]

__all__ = [
    "BlowUp",
    "Branch",
    "DomainError",
    "InvalidBranch",
    "Matrix2",
    "ModelParams",
    "Point",
    "canonicalize",
    "conjugacy_scale",
    "evaluate",
    "eval",
    "integer_root",
    "inverse",
    "ipow",
    "iterate",
    "jacobian",
    "real_root",
]


class DomainError(ValueError):
    """Raised when an operation is asked for a point or parameter outside its domain."""


class InvalidBranch(DomainError):
    pass


class BlowUp(ArithmeticError):
    """Float iteration produced a non-finite value.

    ``step`` is the 1-based index of the offending application and ``last`` the
    last finite iterate.
    """

    def __init__(self, step: int, last: Point):
        super().__init__(f"non-finite iterate at step {step} from {last!r}")
        self.step = step
        self.last = last


class Branch(Enum):
    PLUS = "+"
    MINUS = "-"


@dataclass(frozen=True)
class ModelParams:
    a: Number
    d: int

    def __post_init__(self):
        if isinstance(self.d, bool) or not isinstance(self.d, int) or self.d < 2:
            raise DomainError(f"degree must be an integer >= 2, got {self.d!r}")
        if self.a == 0:
            raise DomainError("coefficient a must be nonzero")

    @property
    def even(self) -> bool:
        return self.d % 2 == 0

    @property
    def canonical(self) -> bool:
        return self.a == 1 or (self.a == -1 and not self.even)


def ipow(s, d: int):
    """s**d by left-to-right repeated multiplication (works on arrays too)."""
    if d == 0:
        return s * 0 + 1
    r = s
    for _ in range(d - 1):
        r = r * s
    return r


def _is_exact(v) -> bool:
    return isinstance(v, Rational)


def _check_finite(p: Point, step: int, last: Point) -> Point:
    x, y = p
    if isinstance(x, float) or isinstance(y, float):
        if not (math.isfinite(x) and math.isfinite(y)):
            raise BlowUp(step, last)
    return p


def evaluate(params: ModelParams, p: Point) -> Point:
    x, y = p
    try:
        t = params.a * ipow(x + y, params.d)
    except OverflowError:
        raise BlowUp(1, p) from None
    return _check_finite((y - t, y - 2 * t), 1, p)


# the operation name used throughout the documentation
eval = evaluate  # noqa: A001


def iterate(params: ModelParams, p: Point, k: int) -> Point:
    if k < 0:
        raise DomainError("iteration count must be non-negative")
    cur = p
    for step in range(1, k + 1):
        try:
            cur = evaluate(params, cur)
        except BlowUp:
            raise BlowUp(step, cur) from None
    return cur


def integer_root(n: int, d: int) -> int | None:
    """Exact d-th root of a non-negative integer, or None when n is not a perfect power."""
    if n < 0:
        raise DomainError("integer_root expects n >= 0")
    if n < 2:
        return n
    r = int(round(n ** (1.0 / d))) if n.bit_length() < 1000 else 1 << (n.bit_length() // d)
    # integer Newton iteration from above
    r = max(r, 1)
    while ipow(r, d) < n:
        r *= 2
    while True:
        nxt = ((d - 1) * r + n // ipow(r, d - 1)) // d
        if nxt >= r:
            break
        r = nxt
    return r if ipow(r, d) == n else None


def _float_root(t: float, d: int) -> float:
    if t == 0:
        return 0.0
    mag = abs(t)
    r = mag ** (1.0 / d)
    if math.isfinite(r) and r > 0:
        # one Newton step removes the error of the rounded exponent 1/d
        rd1 = r ** (d - 1)
        r = r - (rd1 * r - mag) / (d * rd1)
    return math.copysign(r, t)


def real_root(t: Number, d: int) -> Number:
    """Real d-th root: sign(t)|t|^(1/d) for odd d, the non-negative root for even d.

    Exact ``Fraction`` input that is a perfect d-th power returns an exact value.
    """
    if d % 2 == 0 and t < 0:
        raise DomainError(f"even root of negative value {t!r}")
    if d == 1:
        return t
    if _is_exact(t):
        q = Fraction(t)
        sign = -1 if q < 0 else 1
        num = integer_root(abs(q.numerator), d)
        den = integer_root(q.denominator, d)
        if num is not None and den is not None:
            return sign * Fraction(num, den)
        return _float_root(float(q), d)
    return _float_root(float(t), d)


def canonicalize(a: Number, d: int) -> Tuple[int, Number]:
    """Return (sign, mu) with a*mu^(d-1) = sign and sign in {+1, -1}.

    Then T_a(mu*q) = mu*T_sign(q).  For even d the sign is always +1.
    """
    ModelParams(a, d)
    if d % 2 == 0:
        return 1, real_root(Fraction(1) / a if _is_exact(a) else 1.0 / a, d - 1)
    sign = 1 if a > 0 else -1
    inv = Fraction(1) / abs(a) if _is_exact(a) else 1.0 / abs(a)
    return sign, real_root(inv, d - 1)


def conjugacy_scale(a1: Number, a2: Number, d: int) -> Number:
    """mu with T_{a1}(mu*p) = mu*T_{a2}(p), i.e. mu^(d-1) = a2/a1."""
    ModelParams(a1, d)
    ModelParams(a2, d)
    ratio = Fraction(a2) / Fraction(a1) if _is_exact(a1) and _is_exact(a2) else a2 / a1
    if d % 2 == 1 and ratio < 0:
        raise DomainError("for odd d the coefficients must have the same sign")
    return real_root(ratio, d - 1)


def _inverse_canonical(a: int, d: int, p: Point, branch: Branch) -> Point:
    x, y = p
    diff = x - y
    target = diff if a == 1 else -diff
    if d % 2 == 0:
        if target < 0:
            raise DomainError(f"point {p!r} is outside the range of the map")
        t = real_root(target, d)
        if branch is Branch.MINUS:
            t = -t
    else:
        t = real_root(target, d)
    v = 2 * x - y
    return (t - v, v)


def inverse(params: ModelParams, p: Point, branch: Branch = Branch.PLUS) -> Point:
    """Preimage of p.  For even d, PLUS lands in {x >= -y} and MINUS in {x <= -y}."""
    a, d = params.a, params.d
    if d % 2 == 1 and branch is Branch.MINUS:
        raise InvalidBranch("odd d has a single inverse branch (PLUS)")
    if params.canonical:
        return _inverse_canonical(int(a), d, p, branch)
    sign, mu = canonicalize(a, d)
    if d % 2 == 0 and mu < 0:
        branch = Branch.MINUS if branch is Branch.PLUS else Branch.PLUS
    u, v = _inverse_canonical(sign, d, (p[0] / mu, p[1] / mu), branch)
    return (mu * u, mu * v)


def jacobian(params: ModelParams, p: Point) -> Matrix2:
    x, y = p
    k = params.a * params.d * ipow(x + y, params.d - 1)
    return ((-k, 1 - k), (-2 * k, 1 - 2 * k))

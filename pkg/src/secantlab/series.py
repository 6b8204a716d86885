"""Exact power series for the stable and center manifolds of the model map at the origin."""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import reduce
from typing import Sequence

import mpmath

from .model_map import DomainError, ModelParams

__all__ = [
    "InsufficientData",
    "ManifoldKind",
    "OutOfRadius",
    "PowerSeries",
    "RadiusEstimate",
    "SeriesOrderError",
    "estimate_radius",
    "eval_series",
    "induced_dynamics",
    "lattice_orders",
    "solve_invariant",
]


class SeriesOrderError(IndexError):
    pass


class InsufficientData(ValueError):
    pass


class OutOfRadius(ValueError):
    pass


class ManifoldKind(Enum):
    STABLE = "stable"
    CENTER = "center"


@dataclass(frozen=True)
class RadiusEstimate:
    lower: float
    point_estimate: float
    upper: float

    def __post_init__(self):
        if not (0 < self.lower <= self.point_estimate <= self.upper):
            raise ValueError(f"inconsistent radius bracket {self}")


@dataclass(frozen=True)
class PowerSeries:
    """Truncated series sum c_n x^n, n = 0..N, with exact rational coefficients."""

    coefficients: tuple
    radius: RadiusEstimate | None = field(default=None, compare=False)
    complete: bool = field(default=True, compare=False)

    def __init__(self, coefficients: Sequence, radius: RadiusEstimate | None = None, complete: bool = True):
        object.__setattr__(self, "coefficients", tuple(Fraction(c) for c in coefficients))
        object.__setattr__(self, "radius", radius)
        object.__setattr__(self, "complete", complete)

    @property
    def N(self) -> int:
        return len(self.coefficients) - 1

    def __getitem__(self, n: int) -> Fraction:
        if n < 0 or n > self.N:
            raise SeriesOrderError(f"order {n} outside 0..{self.N}")
        return self.coefficients[n]

    def __len__(self) -> int:
        return len(self.coefficients)

    def with_radius(self, radius: RadiusEstimate | None = None) -> "PowerSeries":
        return PowerSeries(self.coefficients, radius or estimate_radius(self), self.complete)

    def truncate(self, n: int) -> "PowerSeries":
        return PowerSeries(self.coefficients[: n + 1])

    def nonzero_orders(self) -> list[int]:
        return [n for n, c in enumerate(self.coefficients) if c != 0]

    # ring arithmetic; results are truncated to the smaller order
    def __add__(self, other):
        if not isinstance(other, PowerSeries):
            return PowerSeries([self.coefficients[0] + Fraction(other), *self.coefficients[1:]])
        n = min(self.N, other.N)
        a, b = _pad(self.coefficients, n), _pad(other.coefficients, n)
        return PowerSeries([p + q for p, q in zip(a, b)])

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries([-c for c in self.coefficients])

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, PowerSeries):
            k = Fraction(other)
            return PowerSeries([k * c for c in self.coefficients])
        n = min(self.N, other.N)
        return PowerSeries(_mul(self.coefficients, other.coefficients, n))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not supported")
        return PowerSeries(_pow(self.coefficients, k, self.N))

    def compose(self, inner: "PowerSeries") -> "PowerSeries":
        """self(inner(x)); needs inner[0] == 0."""
        if inner.coefficients[0] != 0:
            raise ValueError("inner series must vanish at 0")
        n = min(self.N, inner.N)
        return PowerSeries(_compose(self.coefficients, inner.coefficients, n))

    def derivative(self) -> "PowerSeries":
        return PowerSeries([k * c for k, c in enumerate(self.coefficients)][1:] or [0])

    def __call__(self, x):
        return eval_series(self, x)[0]

    def to_csv(self) -> str:
        lines = ["n,numerator,denominator,float"]
        for n, c in enumerate(self.coefficients):
            lines.append(f"{n},{c.numerator},{c.denominator},{float(c)!r}")
        return "\n".join(lines) + "\n"


def _pad(cs, n):
    cs = list(cs[: n + 1])
    return cs + [0] * (n + 1 - len(cs))


def _mul(a, b, n):
    a, b = _pad(a, n), _pad(b, n)
    anz = [i for i, c in enumerate(a) if c != 0]
    bnz = [j for j, c in enumerate(b) if c != 0]
    out = [0] * (n + 1)
    for i in anz:
        ai = a[i]
        for j in bnz:
            if i + j > n:
                break
            out[i + j] += ai * b[j]
    return out


def _pow(a, k, n):
    out = [1] + [0] * n
    base = _pad(a, n)
    while k:
        if k & 1:
            out = _mul(out, base, n)
        k >>= 1
        if k:
            base = _mul(base, base, n)
    return out


def _compose(f, g, n):
    f = _pad(f, n)
    out = [0] * (n + 1)
    for c in reversed(f):
        out = _mul(out, g, n)
        out[0] += c
    return out


def lattice_orders(d: int, N: int) -> list[int]:
    """Orders d + k(d - 1) <= N where the manifold series may be nonzero."""
    return list(range(d, N + 1, d - 1))


def _check_params(params: ModelParams, N: int):
    if params.a not in (1, -1):
        raise DomainError("solve_invariant needs canonical a = +1 or -1")
    if params.a == -1 and params.d % 2 == 0:
        raise DomainError("a = -1 is canonical only for odd d")
    if N < params.d:
        raise DomainError("need N >= d")


def solve_invariant(
    params: ModelParams,
    kind: ManifoldKind,
    N: int = 60,
    method: str = "recurrence",
    max_bits: int = 1 << 22,
) -> PowerSeries:
    """Graph y = phi(x) with phi(first component of T(x, phi)) = second component.

    ``method="recurrence"`` runs an online order-by-order recurrence (fast, used
    for large N); ``method="ring"`` solves one linear equation per order with
    generic series arithmetic and serves as an independent cross-check.
    Coefficients whose size exceeds ``max_bits`` stop the solve early and the
    partial series is returned with ``complete=False``.
    """
    _check_params(params, N)
    if method == "ring":
        return _solve_ring(params, kind, N, max_bits)
    if method == "recurrence":
        return _solve_recurrence(params, kind, N, max_bits)
    raise ValueError(f"unknown method {method!r}")


def _solve_ring(params: ModelParams, kind: ManifoldKind, N: int, max_bits: int) -> PowerSeries:
    a, d = int(params.a), params.d
    c = [0] * (N + 1)
    if kind is ManifoldKind.CENTER:
        c[1] = 1
    x = [0, 1]

    def residual(n):
        phi = c[: n + 1]
        w = [p + q for p, q in zip(_pad(x, n), phi)]
        wd = _pow(w, d, n)
        u = [p - a * q for p, q in zip(phi, wd)]
        v = [p - 2 * a * q for p, q in zip(phi, wd)]
        return _compose(phi, u, n)[n] - v[n]

    for n in range(2, N + 1):
        c[n] = 0
        r0 = residual(n)
        c[n] = 1
        slope = residual(n) - r0
        if slope == 0:
            raise ArithmeticError(f"order {n} is resonant")
        c[n] = Fraction(-r0, slope) if not isinstance(r0, Fraction) else -r0 / slope
        if isinstance(c[n], Fraction) and c[n].denominator == 1:
            c[n] = c[n].numerator
        if abs(Fraction(c[n]).numerator).bit_length() > max_bits:
            return PowerSeries(c[:n], complete=False)
    return PowerSeries(c)


def _dot(a, b):
    return sum(map(operator.mul, a, b))


def _solve_recurrence(params: ModelParams, kind: ManifoldKind, N: int, max_bits: int) -> PowerSeries:
    a, d = int(params.a), params.d
    center = kind is ManifoldKind.CENTER
    c = [0] * (N + 1)
    w = [0] * (N + 1)  # x + phi
    u = [0] * (N + 1)  # first component of T(x, phi(x))
    if center:
        c[1], w[1], u[1] = 1, 2, 1
    else:
        w[1] = 1
    W = [None, w] + [[0] * (N + 1) for _ in range(d - 1)]
    for j in range(2, d + 1):
        if j <= N:
            W[j][j] = w[1] ** j
    kmax = N if center else N // d
    U = [None, u] + [[0] * (N + 1) for _ in range(max(kmax - 1, 0))]
    if center:
        for k in range(2, kmax + 1):
            U[k][k] = 1
    for n in range(2, N + 1):
        for j in range(2, d + 1):
            if n > j:
                W[j][n] = _dot(w[1:n], W[j - 1][n - 1 : 0 : -1])
        P = W[d][n]
        top = n - 1 if center else n // d
        known = 0
        for k in range(2, top + 1):
            s = _dot(u[1:n], U[k - 1][n - 1 : 0 : -1])
            U[k][n] = s
            known += c[k] * s
        cn = -a * P - known if center else known + 2 * a * P
        if cn and abs(cn).bit_length() > max_bits:
            return PowerSeries(c[:n], complete=False)
        c[n], w[n], u[n] = cn, cn, cn - a * P
    return PowerSeries(c)


def induced_dynamics(params: ModelParams, series: PowerSeries, kind: ManifoldKind) -> PowerSeries:
    """R(x) = first component of T(x, phi(x)), to the order of ``series``."""
    x = PowerSeries([0, 1] + [0] * (series.N - 1))
    a = Fraction(params.a)
    return series - a * (x + series) ** params.d


def _stride(orders: list[int]) -> int:
    if len(orders) < 2:
        return 1
    return reduce(math.gcd, (b - a for a, b in zip(orders, orders[1:])))


def estimate_radius(series: PowerSeries) -> RadiusEstimate:
    """Radius of convergence from coefficient ratios on the nonzero subsequence.

    The ratio sequence r_k = |b_k / b_{k+1}| of an algebraic singularity behaves
    like rho(1 + c/k); a first-order Richardson step removes the 1/k term and
    Aitken's delta-squared process accelerates the result.  The bracket is the
    min/max of the last 10 accelerated values.
    """
    orders = [n for n in series.nonzero_orders() if n >= 1]
    if len(orders) < 50:
        raise InsufficientData(f"need >= 50 nonzero coefficients, have {len(orders)}")
    stride = _stride(orders)
    start = orders[0]
    with mpmath.workdps(60):
        b = [mpmath.mpf(series[n].numerator) / series[n].denominator for n in range(start, orders[-1] + 1, stride)]
        b = [abs(v) for v in b]
        r = [b[k] / b[k + 1] for k in range(len(b) - 1) if b[k + 1] != 0]
        rich = [(k + 1) * r[k] - k * r[k - 1] for k in range(1, len(r))]
        acc = []
        for i in range(len(rich) - 2):
            den = rich[i + 2] - 2 * rich[i + 1] + rich[i]
            if den == 0:
                acc.append(rich[i + 2])
            else:
                acc.append(rich[i] - (rich[i + 1] - rich[i]) ** 2 / den)
        tail = [float(v ** (mpmath.mpf(1) / stride)) for v in acc[-10:]]
    return RadiusEstimate(min(tail), tail[-1], max(tail))


def eval_series(series: PowerSeries, x: float) -> tuple[float, float]:
    """Horner evaluation with a geometric tail bound."""
    radius = series.radius
    orders = series.nonzero_orders()
    if radius is None and len([n for n in orders if n >= 1]) >= 50:
        radius = estimate_radius(series)
    if radius is not None and abs(x) >= 0.9 * radius.point_estimate:
        raise OutOfRadius(f"|x| = {abs(x)} outside 0.9 * {radius.point_estimate}")
    cs = [float(c) for c in series.coefficients]
    value = cs[-1]
    for c in reversed(cs[:-1]):
        value = value * x + c
    if x == 0 or not orders:
        return value, 0.0
    last = orders[-1]
    term = abs(cs[last] * x**last)
    if radius is not None:
        ratio = abs(x) / radius.point_estimate
    elif len(orders) >= 2 and orders[-2] >= 1:
        prev = orders[-2]
        prev_term = abs(cs[prev] * x**prev)
        ratio = (term / prev_term) ** (1.0 / (last - prev)) if prev_term else math.inf
    else:
        return value, math.inf
    if ratio >= 1:
        return value, math.inf
    return value, term * ratio / (1 - ratio)

"""Secant map S_p(x, y) = (y, y - p(y)(x - y)/(p(x) - p(y))) and the critical three-cycle."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .model_map import DomainError, Point
from .policy import SECANT_POLICY, IterationPolicy

__all__ = [
    "CriticalPoint",
    "DegenerateCritical",
    "ExtendedPoint",
    "NormalizedPolynomial",
    "NotCritical",
    "Polynomial",
    "ThreeCycleClass",
    "classify_three_cycle",
    "classify_three_cycle_array",
    "critical_points",
    "model_coefficient",
    "normalize_at_critical",
    "real_roots",
    "secant_step",
]

M_BLOW = 1e12
DD_REL = 1e-8


class NotCritical(DomainError):
    pass


class DegenerateCritical(DomainError):
    pass


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial with exact rational coefficients, lowest power first."""

    coefficients: tuple

    def __init__(self, coefficients: Sequence):
        cs = [Fraction(c) for c in coefficients]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        if not cs:
            cs = [Fraction(0)]
        object.__setattr__(self, "coefficients", tuple(cs))

    @property
    def deg(self) -> int:
        if len(self.coefficients) == 1 and self.coefficients[0] == 0:
            return -1
        return len(self.coefficients) - 1

    @property
    def float_coefficients(self) -> tuple:
        return tuple(float(c) for c in self.coefficients)

    def __call__(self, x):
        cs = self.coefficients
        if not isinstance(x, (int, Fraction)):
            cs = self.float_coefficients
        r = cs[-1]
        for c in reversed(cs[:-1]):
            r = r * x + c
        return r

    def derivative(self) -> "Polynomial":
        if len(self.coefficients) == 1:
            return Polynomial([0])
        return Polynomial([k * c for k, c in enumerate(self.coefficients)][1:])

    def shift(self, c) -> "Polynomial":
        """Coefficients of p(x + c), exact for rational c."""
        c = Fraction(c)
        out = list(self.coefficients)
        n = len(out)
        # repeated synthetic division
        for i in range(n):
            for j in range(n - 2, i - 1, -1):
                out[j] += c * out[j + 1]
        return Polynomial(out)

    def scale(self, k) -> "Polynomial":
        k = Fraction(k)
        return Polynomial([c * k for c in self.coefficients])

    def __str__(self) -> str:
        out = ""
        for k, c in enumerate(self.coefficients):
            if c == 0 and len(self.coefficients) > 1:
                continue
            mono = "" if k == 0 else ("x" if k == 1 else f"x^{k}")
            body = f"{abs(c)}*{mono}" if mono else f"{abs(c)}"
            if not out:
                out = f"-{body}" if c < 0 else body
            else:
                out += f" - {body}" if c < 0 else f" + {body}"
        return out

    _TERM = re.compile(
        r"""\s*(?P<sign>[+-])?\s*
        (?P<coef>\d+(?:\.\d*)?(?:/\d+)?|\.\d+)?
        \s*(?P<star>\*)?\s*
        (?P<var>x(?:\s*(?:\^|\*\*)\s*(?P<pow>\d+))?)?\s*""",
        re.VERBOSE,
    )

    @classmethod
    def parse(cls, text: str) -> "Polynomial":
        """Parse 'c0 + c1*x + c2*x^2 + ...' with rational coefficients p/q."""
        if not text or not text.strip():
            raise ValueError("empty polynomial")
        coeffs: dict[int, Fraction] = {}
        pos, first = 0, True
        s = text.strip()
        while pos < len(s):
            m = cls._TERM.match(s, pos)
            if not m or m.end() == pos:
                raise ValueError(f"malformed polynomial near {s[pos:]!r}")
            sign, coef, star, var = m.group("sign"), m.group("coef"), m.group("star"), m.group("var")
            if not first and sign is None:
                raise ValueError(f"missing operator near {s[pos:]!r}")
            if coef is None and var is None:
                raise ValueError(f"malformed term near {s[pos:]!r}")
            if star and (coef is None or var is None):
                raise ValueError(f"dangling '*' near {s[pos:]!r}")
            value = Fraction(coef) if coef is not None else Fraction(1)
            if sign == "-":
                value = -value
            power = 0
            if var is not None:
                power = int(m.group("pow")) if m.group("pow") else 1
            coeffs[power] = coeffs.get(power, Fraction(0)) + value
            pos, first = m.end(), False
        top = max(coeffs)
        return cls([coeffs.get(k, 0) for k in range(top + 1)])


@dataclass(frozen=True)
class NormalizedPolynomial:
    """q(x) = p(x + c)/p(c) = 1 + a_2 x^2 + ... + a_{d+1} x^{d+1} with a_2 a_{d+1} != 0."""

    poly: Polynomial
    critical: float
    d: int

    @property
    def a2(self) -> Fraction:
        return self.poly.coefficients[2]

    @property
    def leading(self) -> Fraction:
        return self.poly.coefficients[-1]


@dataclass(frozen=True)
class ExtendedPoint:
    """A secant iterate; ``blown_up`` marks a step that left every finite chart."""

    x: float
    y: float
    blown_up: bool = False

    @property
    def point(self) -> Point:
        return (self.x, self.y)


@dataclass(frozen=True)
class CriticalPoint:
    value: float
    nondegenerate: bool


class ThreeCycleClass(Enum):
    IN_BASIN = "InBasin"
    NOT_IN_BASIN = "NotInBasin"
    UNDECIDED = "Undecided"


def secant_step(p: Polynomial, pt: Point) -> ExtendedPoint:
    """One secant step.  Exact for rational input, float otherwise."""
    x, y = pt
    exact = all(isinstance(v, (int, Fraction)) for v in pt)
    if not exact:
        x, y = float(x), float(y)
    py = p(y)
    if abs(x - y) < DD_REL * (1 + abs(x) + abs(y)):
        dpy = p.derivative()(y)
        if dpy == 0:
            return ExtendedPoint(x, y, True)
        ny = y - py / dpy
    else:
        den = p(x) - py
        if den == 0:
            return ExtendedPoint(x, y, True)
        ny = y - py * (x - y) / den
    if not exact and not (math.isfinite(ny) and abs(ny) <= M_BLOW):
        return ExtendedPoint(x, y, True)
    if exact and abs(ny) > M_BLOW:
        return ExtendedPoint(x, y, True)
    return ExtendedPoint(y, ny)


def _horner(cs: Sequence[float], x):
    r = cs[-1]
    for c in reversed(cs[:-1]):
        r = r * x + c
    return r


def _cauchy_bound(cs: Sequence[float]) -> float:
    lead = cs[-1]
    return 1.0 + max(abs(c / lead) for c in cs[:-1])


def real_roots(p: Polynomial) -> list[float]:
    """All real roots of p, isolated by the monotone pieces between critical points."""
    cs = list(p.float_coefficients)
    return _real_roots(cs)


def _real_roots(cs: list[float]) -> list[float]:
    while len(cs) > 1 and cs[-1] == 0:
        cs.pop()
    n = len(cs) - 1
    if n <= 0:
        return []
    if n == 1:
        return [-cs[0] / cs[1]]
    dcs = [k * c for k, c in enumerate(cs)][1:]
    turning = _real_roots(dcs)
    bound = _cauchy_bound(cs)
    knots = [-bound] + sorted(t for t in turning if -bound < t < bound) + [bound]
    mag = sum(abs(c) for c in cs)
    roots = []
    for lo, hi in zip(knots[:-1], knots[1:]):
        flo, fhi = _horner(cs, lo), _horner(cs, hi)
        if flo == 0 or fhi == 0 or (flo < 0) == (fhi < 0):
            continue
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            fm = _horner(cs, mid)
            if fm == 0:
                lo = hi = mid
                break
            if (fm < 0) == (flo < 0):
                lo, flo = mid, fm
            else:
                hi = mid
        roots.append(_polish(cs, dcs, 0.5 * (lo + hi)))
    for t in knots:
        scale = mag * max(1.0, abs(t)) ** n
        if abs(_horner(cs, t)) <= 1e-13 * scale:
            roots.append(t)
    roots.sort()
    out: list[float] = []
    for r in roots:
        if not out or abs(r - out[-1]) > 1e-12 * max(1.0, abs(r)):
            out.append(r)
    return out


def _polish(cs, dcs, r: float) -> float:
    best, fbest = r, abs(_horner(cs, r))
    for _ in range(3):
        dv = _horner(dcs, r)
        if dv == 0:
            break
        r = r - _horner(cs, r) / dv
        fr = abs(_horner(cs, r))
        if fr < fbest:
            best, fbest = r, fr
        else:
            break
    return best


def critical_points(p: Polynomial) -> list[CriticalPoint]:
    """Real roots of p', each flagged nondegenerate when p(c) p''(c) != 0."""
    if p.deg < 2:
        raise DomainError("need degree >= 2")
    dp = p.derivative()
    d2 = dp.derivative()
    out = []
    for c in real_roots(dp):
        scale = sum(abs(float(v)) for v in p.coefficients) * max(1.0, abs(c)) ** p.deg
        nondeg = abs(p(c)) > 1e-12 * scale and abs(d2(c)) > 1e-12 * scale
        out.append(CriticalPoint(c, nondeg))
    return out


def normalize_at_critical(p: Polynomial, c) -> NormalizedPolynomial:
    """q(x) = p(x + c)/p(c); the linear coefficient is set to zero after the criticality check."""
    if p.deg < 3:
        raise DomainError("the model needs deg p = d + 1 with d >= 2")
    dp = p.derivative()
    if abs(dp(c)) > 1e-10:
        raise NotCritical(f"p'({c}) = {dp(c)} is not zero")
    pc = p(Fraction(c))
    if pc == 0:
        raise DegenerateCritical("p(c) = 0")
    q = p.shift(c).scale(Fraction(1) / pc)
    cs = list(q.coefficients)
    cs[1] = Fraction(0)
    if abs(float(cs[2])) <= 1e-12:
        raise DegenerateCritical("p''(c) = 0")
    return NormalizedPolynomial(Polynomial(cs), float(c), len(cs) - 2)


def model_coefficient(q: NormalizedPolynomial) -> Fraction:
    """a = (-a_2)^d / a_{d+1}."""
    return (-q.a2) ** q.d / q.leading


def _secant_step_array(cs, dcs, x, y):
    """Vectorised secant step; returns (new_y, blown) with the same float recipe as secant_step."""
    py = _horner(cs, y)
    near = np.abs(x - y) < DD_REL * (1 + np.abs(x) + np.abs(y))
    with np.errstate(all="ignore"):
        den = np.where(near, _horner(dcs, y), _horner(cs, x) - py)
        num = np.where(near, py, py * (x - y))
        ny = y - num / den
    blown = (den == 0) | ~np.isfinite(ny) | (np.abs(ny) > M_BLOW)
    return ny, blown


def classify_three_cycle_array(q: NormalizedPolynomial, xs, ys, policy: IterationPolicy = SECANT_POLICY):
    """Classify many starting points; returns (labels, steps) with labels as ThreeCycleClass values.

    A period is counted when the orbit passes small -> (small, large) -> (large, small) -> small,
    with small = eps and large = eps^(-1/2), and the small point does not move away from 0.
    ``window`` consecutive periods give InBasin.  A blow-up right after a verified period,
    or at a start on the critical point itself, also gives InBasin.
    """
    cs = [float(c) for c in q.poly.coefficients]
    dcs = [k * c for k, c in enumerate(cs)][1:]
    x = np.array(xs, dtype=float).ravel()
    y = np.array(ys, dtype=float).ravel()
    n = x.size
    eps = policy.eps_converge
    big = eps ** -0.5
    label = np.zeros(n, dtype=np.int8)  # 0 undecided, 1 in, 2 not in
    steps = np.full(n, policy.max_iter, dtype=np.int64)
    phase = np.zeros(n, dtype=np.int8)  # position within a candidate period
    periods = np.zeros(n, dtype=np.int64)
    last_norm = np.full(n, np.inf)
    active = np.arange(n)
    root_tol = 1e-12 * sum(abs(c) for c in cs)

    def settle(idx, value, k):
        label[idx] = value
        steps[idx] = k

    for k in range(policy.max_iter):
        if active.size == 0:
            break
        ax, ay = x[active], y[active]
        small_pt = (np.abs(ax) < eps) & (np.abs(ay) < eps)
        norm = np.maximum(np.abs(ax), np.abs(ay))
        ph = phase[active]
        # phase bookkeeping for the current point
        ok1 = (ph == 1) & (np.abs(ax) < eps) & (np.abs(ay) > big)
        ok2 = (ph == 2) & (np.abs(ax) > big) & (np.abs(ay) < big ** -1)
        closes = (ph == 3) & small_pt
        improving = closes & (norm <= last_norm[active])
        failed = ((ph == 1) & ~ok1) | ((ph == 2) & ~ok2) | ((ph == 3) & ~small_pt) | (closes & ~improving)
        per = np.where(improving, periods[active] + 1, periods[active])
        per = np.where(failed, 0, per)
        periods[active] = per
        newph = np.where(ok1, 2, np.where(ok2, 3, np.where(small_pt, 1, 0)))
        phase[active] = newph
        last_norm[active] = np.where(small_pt, norm, last_norm[active])
        done_in = per >= policy.window
        # root reached: the secant map fixes (r, r)
        at_root = (np.abs(ax - ay) <= 1e-12 * (1 + np.abs(ay))) & (np.abs(_horner(cs, ay)) <= root_tol)
        escaped = np.minimum(np.abs(ax), np.abs(ay)) > policy.escape_radius
        settle(active[done_in], 1, k)
        settle(active[~done_in & (at_root | escaped)], 2, k)
        keep = ~(done_in | at_root | escaped)
        active = active[keep]
        if active.size == 0:
            break
        ax, ay = x[active], y[active]
        ny, blown = _secant_step_array(cs, dcs, ax, ay)
        if blown.any():
            bidx = active[blown]
            hit = (
                (phase[bidx] >= 1)
                & (np.abs(x[bidx]) < eps)
                & (np.abs(y[bidx]) < eps)
                & ((periods[bidx] >= 1) | (k == 0) & (x[bidx] == 0) & (y[bidx] == 0))
            )
            settle(bidx[hit], 1, k)
            settle(bidx[~hit], 0, k)
            ny, ax, ay, active = ny[~blown], ax[~blown], ay[~blown], active[~blown]
        x[active] = ay
        y[active] = ny
    values = np.array([ThreeCycleClass.UNDECIDED, ThreeCycleClass.IN_BASIN, ThreeCycleClass.NOT_IN_BASIN])
    return values[label], steps


def classify_three_cycle(q: NormalizedPolynomial, pt: Point, policy: IterationPolicy = SECANT_POLICY) -> ThreeCycleClass:
    labels, _ = classify_three_cycle_array(q, [pt[0]], [pt[1]], policy)
    return labels[0]

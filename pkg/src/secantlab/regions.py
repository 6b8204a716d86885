"""Named phase-plane regions and sampled certificates for containment, invariance and contraction."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy.stats import qmc

from .basin import BasinRaster, Label, even_trap, r_bound
from .cycles import M_STAR, two_cycle_data
from .model_map import DomainError, ModelParams, Point, evaluate

__all__ = [
    "Certificate",
    "CurveRegion",
    "Polygon",
    "RegionSpec",
    "build_region",
    "check_contraction",
    "check_forward_invariance",
    "check_pointwise_inequality",
    "check_raster_bound",
    "INEQUALITY_CLAIMS",
]

SEED = 20240607


# ---------------------------------------------------------------------------
# region values


@dataclass(frozen=True)
class Polygon:
    """Closed convex polygon, vertices counterclockwise."""

    name: str
    vertices: tuple

    def __post_init__(self):
        v = np.array([[float(a), float(b)] for a, b in self.vertices])
        e = np.roll(v, -1, axis=0) - v
        area = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
        if area <= 0:
            raise DomainError(f"{self.name}: vertices must be counterclockwise with positive area")
        object.__setattr__(self, "_v", v)
        object.__setattr__(self, "_e", e)

    def margin(self, x, y):
        """Signed distance to the boundary, positive inside (exact inside; a lower bound outside)."""
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        out = np.full(np.broadcast(x, y).shape, np.inf)
        for (vx, vy), (ex, ey) in zip(self._v, self._e):
            L = math.hypot(ex, ey)
            out = np.minimum(out, (ex * (y - vy) - ey * (x - vx)) / L)
        return out

    def contains(self, x, y):
        return self.margin(x, y) >= 0

    def perimeter(self) -> float:
        return float(np.hypot(self._e[:, 0], self._e[:, 1]).sum())

    def boundary_samples(self, n: int, seed: int = SEED) -> np.ndarray:
        lengths = np.hypot(self._e[:, 0], self._e[:, 1])
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        u = _sobol(1, n, seed)[:, 0] * cum[-1]
        k = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(lengths) - 1)
        t = (u - cum[k]) / lengths[k]
        return self._v[k] + t[:, None] * self._e[k]

    def diameter(self) -> float:
        v = self._v
        return float(np.max(np.hypot(v[:, None, 0] - v[None, :, 0], v[:, None, 1] - v[None, :, 1])))


@dataclass(frozen=True)
class CurveRegion:
    """Region given by a membership margin and a parametrised boundary."""

    name: str
    margin_fn: Callable = field(repr=False)
    boundary: tuple = field(repr=False)  # pieces (fn, t0, t1), fn vectorised over t
    notes: str = ""

    def margin(self, x, y):
        return self.margin_fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def contains(self, x, y):
        return self.margin(x, y) >= 0

    def boundary_samples(self, n: int, seed: int = SEED) -> np.ndarray:
        # arclength-uniform: tabulate each piece finely, then invert the cumulative length
        tabs = []
        for fn, t0, t1 in self.boundary:
            t = np.linspace(t0, t1, 4097)
            p = np.column_stack(fn(t))
            s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(p, axis=0).T))])
            tabs.append((fn, t, s))
        total = sum(s[-1] for _, _, s in tabs)
        offsets = np.cumsum([0.0] + [s[-1] for _, _, s in tabs])
        u = _sobol(1, n, seed)[:, 0] * total
        out = np.empty((n, 2))
        k = np.clip(np.searchsorted(offsets, u, side="right") - 1, 0, len(tabs) - 1)
        for j, (fn, t, s) in enumerate(tabs):
            sel = k == j
            tt = np.interp(u[sel] - offsets[j], s, t)
            out[sel] = np.column_stack(fn(tt))
        return out


@dataclass(frozen=True)
class RegionSpec:
    name: str
    d: int | None = None
    b: Fraction | None = None

    def __post_init__(self):
        if self.b is not None:
            object.__setattr__(self, "b", Fraction(self.b))


REGION_NAMES = ("Qb", "Qstar", "TriangleD", "TriangleE", "TrapT", "BoxK", "Omega", "D0", "Omega0Plus")


def _need_odd(d):
    if d is None or d < 3 or d % 2 == 0:
        raise DomainError("this region is defined for odd d >= 3")


def _need_even(d):
    if d is None or d < 2 or d % 2:
        raise DomainError("this region is defined for even d >= 2")


def _oroot(t, d):
    return np.sign(t) * np.abs(t) ** (1.0 / d)


def qb_vertices(b: Fraction, d: int) -> tuple:
    h = Fraction(b) ** d
    return ((2 * h, 0), (2 * h, 2 * h), (0, 2 * h), (-h, 0), (-h, -h), (0, -h))


def build_region(spec: RegionSpec):
    name, d = spec.name, spec.d
    if name in ("Qb", "Qstar"):
        _need_odd(d)
        b = Fraction(1, 2) if name == "Qstar" else spec.b
        if b is None or not (0 < b <= Fraction(1, 2)):
            raise DomainError("Qb needs 0 < b <= 1/2")
        return Polygon(f"Q_{b}(d={d})", qb_vertices(b, d))
    if name == "TriangleE":
        return Polygon("E", ((0, 1), (Fraction(-1, 2), 0), (Fraction(-1, 3), 0)))
    if name == "TriangleD":
        _need_odd(d)
        mp = two_cycle_data(d).m_plus
        return Polygon(
            f"D(d={d})",
            ((0, -1), (1 / (mp + 1), -1 / (mp + 1)), (Fraction(1) / (Fraction(M_STAR) + 1), -Fraction(1) / (Fraction(M_STAR) + 1))),
        )
    if name == "TrapT":
        _need_even(d)
        R = r_bound(d)
        return Polygon(f"T_R(d={d})", ((0, 0), (R, 0), (R, R)))
    if name == "BoxK":
        _need_even(d)
        return _box_k(d)
    if name == "Omega":
        _need_odd(d)
        return _omega(d)
    if name == "D0":
        _need_odd(d)
        return _d0(d)
    if name == "Omega0Plus":
        _need_even(d)
        return _omega0_plus(d)
    raise DomainError(f"unknown region {name!r}; choose from {', '.join(REGION_NAMES)}")


def _box_k(d: int) -> CurveRegion:
    R = r_bound(d)

    def margin(x, y):
        m = np.minimum(np.minimum(x + 5 * R, R - x), np.minimum(y, 2 * R - y))
        return np.where((x == 0) & (y == 0), R, m)

    pieces = (
        (lambda t: (t, np.zeros_like(t)), -5 * R, R),
        (lambda t: (np.full_like(t, R), t), 0.0, 2 * R),
        (lambda t: (-t, np.full_like(t, 2 * R)), -R, 5 * R),
        (lambda t: (np.full_like(t, -5 * R), -t), -2 * R, 0.0),
    )
    return CurveRegion(f"K(d={d})", margin, pieces, "open box plus the origin")


def _omega(d: int) -> CurveRegion:
    """T^{-1}(E_2) for a = 1: points whose image lies between gamma- and gamma+ with y >= 1."""
    P = ModelParams(1, d)

    def margin(x, y):
        X, Y = evaluate(P, (x, y))
        gp = _oroot(Y, d) - Y
        gm = _oroot((Y + 1) / 2, d) - Y
        return np.minimum(np.minimum(gp - X, X - gm), Y - 1)

    def pre(fn):
        def g(t):
            X, Y = fn(t)
            s = _oroot(X - Y, d)
            return s - (2 * X - Y), 2 * X - Y

        return g

    pieces = (
        (pre(lambda t: (_oroot(t, d) - t, t)), 1.0, 50.0),
        (pre(lambda t: (_oroot((t + 1) / 2, d) - t, t)), 1.0, 50.0),
    )
    return CurveRegion(f"Omega(d={d})", margin, pieces, "membership by mapping into E_2; boundary sampled for 1 <= y <= 50")


def sigma0(t, d: int, sign: int):
    """sigma0+ (sign=1) = T^{-2}(t, 0) and sigma0- (sign=-1) = T^{-2}(0, -t) for a = -1."""
    t = np.asarray(t, dtype=float)
    r = _oroot(t, d)
    if sign > 0:
        return 6 * t + 2 * r + _oroot(4 * t + r, d), -6 * t - 2 * r
    return 3 * t + 2 * r + _oroot(2 * t + r, d), -3 * t - 2 * r


def _d0(d: int) -> CurveRegion:
    P = ModelParams(-1, d)

    def margin(x, y):
        X, Y = evaluate(P, evaluate(P, (x, y)))
        return np.minimum(X, -Y)

    pieces = (
        (lambda t: sigma0(t, d, 1), 0.0, 10.0),
        (lambda t: sigma0(t, d, -1), 0.0, 10.0),
    )
    return CurveRegion(f"D0(d={d})", margin, pieces, "membership by T^2 into the fourth quadrant")


def _omega0_plus(d: int) -> CurveRegion:
    trap = even_trap(d)
    rho = trap.rho

    def margin(x, y):
        return np.minimum(np.minimum((x - y) / math.sqrt(2), rho - x), np.minimum(y - trap.phi(x), x))

    pieces = (
        (lambda t: (t, trap.phi(t)), 0.0, rho),
        (lambda t: (np.full_like(t, rho), t), float(trap.phi(rho)), rho),
        (lambda t: (-t, -t), -rho, 0.0),
    )
    return CurveRegion(f"Omega0+(d={d})", margin, pieces, f"rho2 = {rho!r}; lower side is the stable graph")


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True)
class Certificate:
    claim: str
    passed: bool
    samples: int
    worst_margin: float
    worst_point: Point
    notes: tuple = ()

    def __post_init__(self):
        if self.passed != (self.worst_margin > 0):
            raise ValueError("certificate must pass exactly when worst_margin > 0")

    def report(self) -> str:
        lines = [
            f"claim: {self.claim}",
            f"samples: {self.samples}",
            f"worst_margin: {self.worst_margin!r}",
            f"worst_point: ({self.worst_point[0]!r}, {self.worst_point[1]!r})",
        ]
        lines += [f"{k}: {v}" for k, v in self.notes]
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines) + "\n"


def _sobol(dim: int, n: int, seed: int = SEED) -> np.ndarray:
    m = max(1, math.ceil(math.log2(max(n, 2))))
    return qmc.Sobol(dim, scramble=True, seed=seed).random_base2(m)[:n]


def _reduce(claim, pts, margins, notes=()):
    """Deterministic min reduction; NaN margins count as failures."""
    margins = np.where(np.isnan(margins), -np.inf, margins)
    if len(margins) == 0:
        return Certificate(claim, True, 0, math.inf, (math.nan, math.nan), tuple(notes))
    i = int(np.argmin(margins))
    w = float(margins[i])
    return Certificate(claim, w > 0, len(margins), w, (float(pts[i, 0]), float(pts[i, 1])), tuple(notes))


def _chunked(fn, pts: np.ndarray, workers: int) -> np.ndarray:
    if workers <= 1 or len(pts) < 2:
        return fn(pts)
    parts = np.array_split(pts, workers)
    with ThreadPoolExecutor(workers) as ex:
        return np.concatenate(list(ex.map(fn, parts)))


def check_forward_invariance(params: ModelParams, region, samples: int = 10_000, margin: float = 0.0, workers: int = 1) -> Certificate:
    """Map arclength-uniform boundary samples once; every image must be inside by more than ``margin``."""
    pts = region.boundary_samples(samples)

    def job(p):
        with np.errstate(all="ignore"):
            X, Y = evaluate(params, (p[:, 0], p[:, 1]))
            return region.margin(X, Y) - margin

    m = _chunked(job, pts, workers)
    notes = [("map", f"T(a={params.a}, d={params.d})"), ("region", region.name), ("required_margin", repr(margin))]
    return _reduce(f"forward invariance of {region.name}", pts, m, notes)


INEQUALITY_CLAIMS = ("MonotoneLiftOnE", "SigmaPlusBelowAntidiagonal", "GammaCurvesMonotone")


def _triangle_samples(n: int, verts, seed: int = SEED) -> np.ndarray:
    u = _sobol(2, n, seed)
    # fold the unit square onto the triangle, staying off the edges
    u = np.clip(u, 1e-9, 1 - 1e-9)
    flip = u.sum(1) > 1
    u[flip] = 1 - u[flip]
    a, b, c = (np.array([float(p[0]), float(p[1])]) for p in verts)
    return a + u[:, :1] * (b - a) + u[:, 1:] * (c - a)


def lift_margin(d: int, x, y):
    """G(x, y) = 2y - 6x + 2(x - y)^(1/d), the gain in y under T^{-2} on E (a = 1)."""
    return 2 * y - 6 * x + 2 * _oroot(x - y, d)


def check_pointwise_inequality(d: int, claim: str, samples: int = 10_000, workers: int = 1) -> Certificate:
    if claim not in INEQUALITY_CLAIMS:
        raise DomainError(f"unknown claim {claim!r}; choose from {', '.join(INEQUALITY_CLAIMS)}")
    _need_odd(d)
    if claim == "MonotoneLiftOnE":
        E = build_region(RegionSpec("TriangleE"))
        pts = _triangle_samples(samples, E.vertices)
        m = _chunked(lambda p: lift_margin(d, p[:, 0], p[:, 1]), pts, workers)
        i = int(np.argmin(m))
        dist = math.hypot(pts[i, 0], pts[i, 1] - 1)
        notes = [("domain", "triangle (0,1), (-1/2,0), (-1/3,0)"), ("equality_locus", "(0, 1)"),
                 ("worst_distance_to_equality_locus", repr(dist))]
        return _reduce(f"T^-2 lifts y on E (d={d})", pts, m, notes)
    if claim == "SigmaPlusBelowAntidiagonal":
        P = ModelParams(-1, d)
        t = 10.0 ** (_sobol(1, samples)[:, 0] * 9 - 6)

        def job(tt):
            X, Y = evaluate(P, sigma0(tt, d, 1))
            return -(X + Y) / math.sqrt(2)

        m = _chunked(job, t, workers)
        pts = np.column_stack(evaluate(P, sigma0(t, d, 1)))
        notes = [("curve", "sigma1+ = T(sigma0+(t)), a = -1"), ("t_range", "[1e-6, 1e3] log-uniform")]
        return _reduce(f"sigma1+ below y = -x (d={d})", pts, m, notes)
    # GammaCurvesMonotone: x-components of gamma+-, sigma+- decrease in y
    bound = 1 / d - 1
    u = _sobol(1, samples)[:, 0]
    y_up = 1 + 10.0 ** (u * 6 - 3)
    y_dn = -y_up
    curves = {
        "gamma+": (lambda y: _oroot(y, d) - y, y_up),
        "gamma-": (lambda y: _oroot((y + 1) / 2, d) - y, y_up),
        "sigma-": (lambda y: _oroot(y, d) - y, y_dn),
        "sigma+": (lambda y: _oroot((y - 1) / 2, d) - y, y_dn),
    }
    all_pts, all_m, worst_slope = [], [], -math.inf
    for name, (fn, ys) in curves.items():
        h = 1e-6 * np.maximum(1, np.abs(ys))
        slope = (fn(ys + h) - fn(ys - h)) / (2 * h)
        worst_slope = max(worst_slope, float(slope.max()))
        # proven bound 1/d - 1; finite differences are trusted to 1e-9
        all_m.append(np.minimum(-slope, bound + 1e-9 - slope))
        all_pts.append(np.column_stack([fn(ys), ys]))
    notes = [("curves", ", ".join(curves)), ("derivative_bound", repr(bound)), ("max_sampled_slope", repr(worst_slope))]
    return _reduce(f"gamma/sigma curves decreasing (d={d})", np.vstack(all_pts), np.concatenate(all_m), notes)


def _inv(a: int, d: int, X, Y):
    t = _oroot((X - Y) / a, d)
    return t - (2 * X - Y), 2 * X - Y


def check_contraction(d: int, a: int, samples: int = 10_000, workers: int = 1) -> Certificate:
    """x2 < lambda x0 on Omega (a = 1) or x2 <= x0/2 on D0 (a = -1), with T^2 images in the target quadrant."""
    _need_odd(d)
    if a not in (1, -1):
        raise DomainError("a must be +1 or -1")
    P = ModelParams(a, d)
    u = _sobol(2, samples)
    u = np.clip(u, 1e-6, 1 - 1e-6)
    if a == 1:
        lam = d * d / (1 - 2 * d) ** 2
        # interior of E_2 for 1 < y < 1e4, mapped back into Omega
        Y = 1 + 10.0 ** (u[:, 0] * 7 - 3)
        lo, hi = _oroot((Y + 1) / 2, d) - Y, _oroot(Y, d) - Y
        X = lo + u[:, 1] * (hi - lo)
        x0, y0 = _inv(1, d, X, Y)
        factor = lam
    else:
        factor = 0.5
        # interior of the fourth quadrant, mapped back by T^-2 into D0
        X = 10.0 ** (u[:, 0] * 7 - 4)
        Y = -(10.0 ** (u[:, 1] * 7 - 4))
        x1, y1 = _inv(-1, d, X, Y)
        x0, y0 = _inv(-1, d, x1, y1)
    pts = np.column_stack([x0, y0])

    def job(p):
        x2, y2 = evaluate(P, evaluate(P, (p[:, 0], p[:, 1])))
        ratio = x2 / p[:, 0]
        m = factor - ratio
        if a == 1:
            # image in Q4* = {x >= 0, y <= -1}
            m = np.minimum(m, np.minimum(ratio, (-1 - y2) / np.maximum(1, np.abs(y2))))
        else:
            m = np.minimum(m, np.minimum(ratio, -y2 / np.maximum(1e-300, np.abs(p[:, 1]))))
        return np.where(p[:, 0] > 0, m, -np.inf)

    m = _chunked(job, pts, workers)
    notes = [("factor", repr(factor)), ("domain", "Omega = T^-1(E_2)" if a == 1 else "D0 = T^-2(Q_4)"),
             ("image", "Q4* = {x >= 0, y <= -1}" if a == 1 else "Q4 = {x >= 0, y <= 0}")]
    return _reduce(f"T^2 contraction (d={d}, a={a})", pts, m, notes)


def check_raster_bound(raster: BasinRaster, region, params: ModelParams | None = None, margin: float = 0.0) -> Certificate:
    """Every Converged pixel centre (or its first image when ``params`` is given) lies in the region.

    Pass a small negative ``margin`` for closed regions whose boundary points count as inside.
    """
    rows, cols = np.nonzero(raster.labels == Label.CONVERGED)
    xs = raster.grid.xs()[cols]
    ys = raster.grid.ys()[rows]
    if params is not None:
        xs, ys = evaluate(params, (xs, ys))
    pts = np.column_stack([xs, ys])
    m = region.margin(xs, ys) - margin if len(xs) else np.empty(0)
    notes = [("region", region.name), ("mapped_once", str(params is not None)), ("required_margin", repr(margin)),
             ("grid", raster.grid.describe())]
    return _reduce(f"converged pixels inside {region.name}", pts, m, notes)

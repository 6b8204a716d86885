"""Global stable and unstable manifolds: curve continuation and nested-set bracketing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np

from .cycles import M_STAR, two_cycle_data
from .model_map import Branch, DomainError, ModelParams, Point, evaluate, inverse
from .series import ManifoldKind, solve_invariant

__all__ = [
    "BoundaryEven",
    "NoCrossing",
    "Polyline",
    "PrecisionExhausted",
    "SeedTooCoarse",
    "StableBracket",
    "StableTraceEven",
    "TracePolicy",
    "UnstableTrace",
    "assemble_basin_boundary_even",
    "bracket_stable_point",
    "in_triangle_D_image",
    "sigma0_minus",
    "sigma0_plus",
    "trace_stable_origin_even",
    "trace_unstable_two_cycle",
]


class SeedTooCoarse(ValueError):
    pass


class NoCrossing(RuntimeError):
    pass


class PrecisionExhausted(ArithmeticError):
    pass


@dataclass(frozen=True)
class TracePolicy:
    seed_radius: float = 0.05
    max_step: float = 2e-3
    angle_bound: float = 0.1
    max_arclength: float = 50.0
    bisection_tol: float = 1e-12
    max_vertices: int = 400_000

    def __post_init__(self):
        if self.seed_radius <= 0 or self.max_step <= 0 or self.angle_bound <= 0:
            raise ValueError("trace policy values must be positive")
        if self.bisection_tol < 1e-14:
            raise ValueError("bisection_tol below 1e-14 is not meaningful in double precision")


@dataclass(frozen=True)
class Polyline:
    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        object.__setattr__(self, "vertices", v)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def closed(self) -> bool:
        return len(self) > 2 and bool(np.all(self.vertices[0] == self.vertices[-1]))

    def segment_lengths(self) -> np.ndarray:
        return np.hypot(*np.diff(self.vertices, axis=0).T)

    def arclength(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.segment_lengths())])

    def turning_angles(self) -> np.ndarray:
        v = self.vertices
        e = np.diff(v, axis=0)
        if self.closed:
            e = np.vstack([e, e[:1]])
        a1 = np.arctan2(e[:-1, 1], e[:-1, 0])
        a2 = np.arctan2(e[1:, 1], e[1:, 0])
        return np.abs((a2 - a1 + np.pi) % (2 * np.pi) - np.pi)

    def distance_to(self, pts) -> np.ndarray:
        """Euclidean distance from each point to the polyline."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        a = self.vertices[:-1]
        b = self.vertices[1:]
        ab = b - a
        L2 = np.maximum((ab**2).sum(1), 1e-300)
        out = np.empty(len(pts))
        for i, p in enumerate(pts):
            t = np.clip(((p - a) * ab).sum(1) / L2, 0, 1)
            proj = a + t[:, None] * ab
            out[i] = np.sqrt(((proj - p) ** 2).sum(1)).min()
        return out

    def to_csv(self) -> str:
        s = self.arclength()
        lines = ["s,x,y"] + [f"{float(si)!r},{float(x)!r},{float(y)!r}" for si, (x, y) in zip(s, self.vertices)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "Polyline":
        rows = [ln for ln in text.strip().splitlines()[1:] if ln.strip()]
        return cls(np.array([[float(v) for v in ln.split(",")[1:3]] for ln in rows]))


class _Curve:
    """Concatenation of parametrised pieces with adaptive refinement in each parameter."""

    def __init__(self, policy: TracePolicy):
        self.policy = policy
        self.pieces: list[tuple[Callable, list, list]] = []

    def add(self, fn: Callable[[float], Point], s0: float, s1: float, n: int = 32):
        ss = list(np.linspace(s0, s1, n + 1))
        self.pieces.append((fn, ss, [np.asarray(fn(s), dtype=float) for s in ss]))

    def _flat(self):
        verts, owner = [], []
        for k, (_, ss, pts) in enumerate(self.pieces):
            start = 0 if k == 0 else 1
            for i in range(start, len(ss)):
                verts.append(pts[i])
                owner.append((k, i))
        return np.array(verts), owner

    def refine(self, passes: int = 80):
        pol = self.policy
        for _ in range(passes):
            verts, owner = self._flat()
            e = np.diff(verts, axis=0)
            lengths = np.hypot(e[:, 0], e[:, 1])
            ang = np.arctan2(e[:, 1], e[:, 0])
            turn = np.abs((ang[1:] - ang[:-1] + np.pi) % (2 * np.pi) - np.pi)
            split = lengths > pol.max_step
            bad = turn > pol.angle_bound
            split[:-1] |= bad
            split[1:] |= bad
            todo: dict[int, set] = {}
            for j in np.flatnonzero(split):
                k, i = owner[j + 1]
                _, ss, _ = self.pieces[k]
                if abs(ss[i] - ss[i - 1]) > 1e-15 * max(1.0, abs(ss[i])):
                    todo.setdefault(k, set()).add(i)
            if not todo:
                return
            total = sum(len(p[1]) for p in self.pieces)
            if total > pol.max_vertices:
                return
            for k, idxs in todo.items():
                fn, ss, pts = self.pieces[k]
                new_s, new_p = [ss[0]], [pts[0]]
                for i in range(1, len(ss)):
                    if i in idxs:
                        m = 0.5 * (ss[i - 1] + ss[i])
                        new_s.append(m)
                        new_p.append(np.asarray(fn(m), dtype=float))
                    new_s.append(ss[i])
                    new_p.append(pts[i])
                self.pieces[k] = (fn, new_s, new_p)

    def insert(self, k: int, s: float):
        fn, ss, pts = self.pieces[k]
        i = int(np.searchsorted(ss, s)) if ss[0] < ss[-1] else None
        if i is None:
            raise ValueError("pieces must have increasing parameters")
        ss.insert(i, s)
        pts.insert(i, np.asarray(fn(s), dtype=float))

    def polyline(self) -> Polyline:
        verts, _ = self._flat()
        keep = [0]
        for i in range(1, len(verts)):
            if np.hypot(*(verts[i] - verts[keep[-1]])) > 1e-14:
                keep.append(i)
        return Polyline(verts[keep])


# ---------------------------------------------------------------------------
# stable manifold of the origin, d even, a = 1


@dataclass(frozen=True)
class StableTraceEven:
    d: int
    p: float
    curve: Polyline
    levels: int
    seed_crossing: float


@dataclass(frozen=True)
class BoundaryEven:
    d: int
    p: float
    curve: Polyline
    gamma: Polyline
    gamma_plus: Polyline
    gamma_minus: Polyline
    slope_two_point: Point
    q_plus: Point
    q_minus: Point
    end_tangent_angle: float


class _EvenMaps:
    def __init__(self, d: int, rho: float):
        if d % 2:
            raise DomainError("stable-manifold tracing of the origin needs even d")
        self.d = d
        self.params = ModelParams(1, d)
        s = solve_invariant(self.params, ManifoldKind.STABLE, 60)
        self.cs = [float(c) for c in s.coefficients]
        self.rho = rho

    def phi(self, x: float) -> float:
        r = self.cs[-1]
        for c in reversed(self.cs[:-1]):
            r = r * x + c
        return r

    def seed(self, s: float) -> Point:
        return (s, self.phi(s))

    def up(self, q: Point, branch: Branch = Branch.PLUS) -> Point:
        x, y = q
        if x < y and (y - x) <= 1e-13 * max(1.0, abs(x)):
            # rounding put a diagonal point on the wrong side
            x = y
        return inverse(self.params, (x, y), branch)

    def level(self, k: int, s: float) -> Point:
        q = self.seed(s)
        for _ in range(k):
            q = self.up(q)
        return q


def _bisect(f: Callable[[float], bool], lo: float, hi: float, tol: float, count: int = 200):
    """Shrink [lo, hi] keeping f(lo) true and f(hi) false."""
    for _ in range(count):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid):
            lo = mid
        else:
            hi = mid
    return lo, hi


def _stable_setup(d: int, policy: TracePolicy):
    maps = _EvenMaps(d, policy.seed_radius)
    rho = policy.seed_radius
    r1 = evaluate(maps.params, maps.seed(rho))[0]
    q = maps.seed(rho)
    K = None
    for k in range(1, 200):
        try:
            q = maps.up(q)
        except DomainError:
            K = k
            break
        if q[0] - q[1] <= 0:
            K = k
            break
    if K is None:
        raise NoCrossing("stable manifold never reached the diagonal")

    def before(s):
        try:
            x, y = maps.level(K, s)
        except DomainError:
            return False
        return x - y > 0

    lo, hi = _bisect(before, r1, rho, 1e-17)
    # tighten so that the crossing abscissa is fixed to bisection_tol
    plo, phi_ = maps.level(K, lo), maps.level(K, hi) if before(hi) else None
    p = 0.5 * (plo[0] + plo[1])
    return maps, K, r1, lo, p


def trace_stable_origin_even(d: int, policy: TracePolicy = TracePolicy()) -> StableTraceEven:
    """Continue the local stable graph by the inverse branch landing in {x >= -y} up to (p, p)."""
    maps, K, r1, s_star, p = _stable_setup(d, policy)
    curve = _Curve(policy)
    curve.add(maps.seed, 0.0, maps.rho)
    for k in range(1, K):
        curve.add(lambda s, k=k: maps.level(k, s), r1, maps.rho)
    curve.add(lambda s: maps.level(K, s), r1, s_star)
    curve.refine()
    line = curve.polyline()
    verts = line.vertices.copy()
    verts[-1] = (p, p)
    return StableTraceEven(d, p, Polyline(verts), K, s_star)


def _reflect(q) -> np.ndarray:
    """(x, y) -> (-2y - x, y); T is invariant under this reflection for even d."""
    q = np.asarray(q, dtype=float)
    return np.array([-2 * q[1] - q[0], q[1]])


def assemble_basin_boundary_even(d: int, policy: TracePolicy = TracePolicy()) -> BoundaryEven:
    """Closed boundary of the basin: the stable curve, its two preimages, joined at (p,p) and (-p,p)."""
    maps, K, r1, s_star, p = _stable_setup(d, policy)
    s_back = evaluate(maps.params, maps.seed(s_star))[0]

    def arc(s):
        return maps.up(maps.level(K, s))

    def gamma_pieces(c: _Curve, mirror: bool):
        fns = [maps.seed] + [lambda s, k=k: maps.level(k, s) for k in range(1, K + 1)]
        spans = [(0.0, maps.rho)] + [(r1, maps.rho)] * (K - 1) + [(r1, s_star)]
        items = list(zip(fns, spans))
        if mirror:
            items = items[::-1]
            for fn, (a, b) in items:
                c.add(lambda u, fn=fn: _reflect(fn(-u)), -b, -a)
        else:
            for fn, (a, b) in items:
                c.add(fn, a, b)

    curve = _Curve(policy)
    gamma_pieces(curve, False)
    curve.add(arc, s_back, s_star)
    curve.add(lambda u: _reflect(arc(-u)), -s_star, -s_back)
    gamma_pieces(curve, True)
    curve.refine()
    # grade the parameter geometrically towards the square-root end at (-p, p)
    a_idx = K + 1
    for j in range(1, 60):
        h = (s_star - s_back) * 2.0**-j * 1e-2
        curve.insert(a_idx, s_star - h)
        curve.insert(a_idx + 1, -s_star + h)
    line = curve.polyline()
    v = line.vertices.copy()
    v[0] = v[-1] = (0.0, 0.0)
    # locate the junction vertices and pin them to their exact values
    i_pp = int(np.argmin(np.hypot(v[:, 0] - p, v[:, 1] - p)))
    i_mp = int(np.argmin(np.hypot(v[:, 0] + p, v[:, 1] - p)))
    v[i_pp] = (p, p)
    v[i_mp] = (-p, p)
    closed = Polyline(v)
    gamma = Polyline(v[: i_pp + 1])
    gplus = Polyline(v[: i_mp + 1])
    gminus = Polyline(np.array([_reflect(q) for q in v[: i_mp + 1]]))
    # horizontal tangency at (-p, p): direction of the last chord of the arc
    prev = v[i_mp - 1]
    end_angle = math.atan2(abs(prev[1] - p), abs(prev[0] + p))

    # point of slope 2 on the stable curve and its two preimages
    def slope_at(k, s, h=1e-9):
        a, b = maps.level(k, s - h), maps.level(k, s + h)
        return (b[1] - a[1]) / (b[0] - a[0])

    q2 = None
    for k in range(0, K + 1):
        lo, hi = (0.0 + 1e-12, maps.rho) if k == 0 else (r1, maps.rho if k < K else s_star)
        grid = np.linspace(lo, hi, 400)
        sl = [slope_at(k, s) for s in grid]
        idx = [i for i in range(len(grid) - 1) if sl[i] < 2 <= sl[i + 1]]
        if idx:
            i = idx[0]
            a, b = _bisect(lambda s: slope_at(k, s) < 2, grid[i], grid[i + 1], 1e-14)
            q2 = maps.level(k, 0.5 * (a + b))
            break
    if q2 is None:
        raise NoCrossing("no point of slope 2 on the stable curve")
    qp = maps.up(q2, Branch.PLUS)
    qm = maps.up(q2, Branch.MINUS)
    return BoundaryEven(d, p, closed, gamma, gplus, gminus, q2, qp, qm, end_angle)


# ---------------------------------------------------------------------------
# unstable manifold of the two-cycle, d odd, a = 1


@dataclass(frozen=True)
class UnstableTrace:
    d: int
    curve: Polyline
    p_hat: float
    x0_crossing: float
    tangent_slope: float
    inside_image_of_D: bool
    seed_defect: float


def _triangle_D(d: int):
    m_p = two_cycle_data(d).m_plus
    return np.array([(0.0, -1.0), (1 / (m_p + 1), -1 / (m_p + 1)), (1 / (M_STAR + 1), -1 / (M_STAR + 1))])


def _in_triangle(tri: np.ndarray, q, tol: float = 1e-9) -> bool:
    q = np.asarray(q, dtype=float)
    for i in range(3):
        a, b = tri[i], tri[(i + 1) % 3]
        cross = (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0])
        if cross < -tol:
            return False
    return True


def in_triangle_D_image(d: int, q) -> bool:
    """q in T(D), tested as T^{-1}(q) in D (T is a homeomorphism for odd d)."""
    pre = inverse(ModelParams(1, d), (float(q[0]), float(q[1])))
    return _in_triangle(_triangle_D(d), pre)


def trace_unstable_two_cycle(d: int, policy: TracePolicy = TracePolicy(seed_radius=1e-6)) -> UnstableTrace:
    """Forward T^2 images of a fundamental segment on the unstable line of (0, 1), branch into y < 1."""
    if d % 2 == 0 or d < 3:
        raise DomainError("the two-cycle exists for odd d >= 3")
    params = ModelParams(1, d)
    cyc = two_cycle_data(d)
    v = np.array([-1.0, -cyc.m_plus]) / math.hypot(1.0, cyc.m_plus)
    delta = policy.seed_radius
    p0 = np.array([0.0, 1.0])

    def T2(q):
        return evaluate(params, evaluate(params, (q[0], q[1])))

    a0 = p0 + delta * v
    a1 = np.array(T2(a0))
    expected = p0 + cyc.lambda_plus * delta * v
    defect = float(np.hypot(*(a1 - expected)) / (cyc.lambda_plus * delta))
    if defect > 1e-3:
        raise SeedTooCoarse(f"seed radius {delta} gives relative second-order defect {defect:.2e}")

    def seg(t):
        return a0 + t * (a1 - a0)

    def level(k, t):
        q = seg(t)
        for _ in range(k):
            q = T2(q)
        return np.asarray(q, dtype=float)

    # find the first level whose image reaches the diagonal
    K = None
    length = 0.0
    for k in range(0, 200):
        ts = np.linspace(0, 1, 257)
        pts = np.array([level(k, t) for t in ts])
        length += float(np.hypot(*np.diff(pts, axis=0).T).sum())
        if np.any(pts[:, 0] - pts[:, 1] >= 0):
            K = k
            break
        if length > policy.max_arclength:
            break
    if K is None:
        raise NoCrossing("unstable curve did not reach the diagonal within max_arclength")

    pts = np.array([level(K, t) for t in ts])
    j = int(np.flatnonzero(pts[:, 0] - pts[:, 1] >= 0)[0])
    # T maps the antidiagonal onto the diagonal with x - y = (x + y)^d, so the curve
    # touches the diagonal to order d there; bisect on the transversal crossing of
    # the antidiagonal one half-step earlier instead
    if K == 0:
        raise SeedTooCoarse("the seed segment already reaches the diagonal")

    def half(t):
        return evaluate(params, tuple(level(K - 1, t)))

    lo, hi = _bisect(lambda t: sum(half(t)) < 0, ts[j - 1], ts[j], 1e-16)
    # float seeds near (0, 1) sit on a lattice that K double steps stretch into gaps
    # of order 1e-10 along the curve; interpolate between the bracketing points
    qa, qb = half(lo), half(hi)
    sa, sb = sum(qa), sum(qb)
    w = -sa / (sb - sa) if sb != sa else 0.0
    p_hat = qa[1] + w * (qb[1] - qa[1])
    t_cross = lo

    curve = _Curve(policy)
    curve.add(lambda t: p0 + t * (a0 - p0), 0.0, 1.0, n=4)
    for k in range(0, K):
        curve.add(lambda t, k=k: level(k, t), 0.0, 1.0)
    curve.add(lambda t: level(K, t), 0.0, t_cross)
    curve.refine()
    line = curve.polyline()
    verts = line.vertices.copy()
    verts[-1] = (p_hat, p_hat)
    line = Polyline(verts)

    # crossing of the horizontal axis
    ys = verts[:, 1]
    jj = int(np.flatnonzero(ys <= 0)[0])
    owner = _locate(curve, verts[jj - 1], verts[jj])
    if owner is not None:
        k, (ta, tb) = owner
        fn = curve.pieces[k][0]
        lo, hi = _bisect(lambda t: fn(t)[1] > 0, ta, tb, 1e-16)
        a, b = fn(lo), fn(hi)
        x0c = float(a[0] + (b[0] - a[0]) * a[1] / (a[1] - b[1])) if a[1] != b[1] else float(a[0])
    else:
        a, b = verts[jj - 1], verts[jj]
        x0c = float(a[0] + (b[0] - a[0]) * a[1] / (a[1] - b[1]))

    # tangent slope at (0, 1) from the first vertex about 1e-4 away
    dist = np.hypot(verts[:, 0], verts[:, 1] - 1)
    i = int(np.flatnonzero(dist >= 1e-4)[0])
    slope = float((verts[i, 1] - 1) / verts[i, 0])
    inside = all(in_triangle_D_image(d, q) for q in verts)
    return UnstableTrace(d, line, float(p_hat), x0c, slope, inside, defect)


def _locate(curve: _Curve, a, b):
    for k, (_, ss, pts) in enumerate(curve.pieces):
        for i in range(1, len(ss)):
            if np.allclose(pts[i - 1], a, atol=1e-15) and np.allclose(pts[i], b, atol=1e-15):
                return k, (ss[i - 1], ss[i])
    return None


# ---------------------------------------------------------------------------
# nested-set bracketing of stable-manifold points, d odd


def sigma0_plus(t, d: int):
    """Preimage under T^2 (a = -1) of (t, 0)."""
    r = mpmath.root(t, d) if t >= 0 else -mpmath.root(-t, d)
    return (6 * t + 2 * r + _oroot(4 * t + r, d), -6 * t - 2 * r)


def sigma0_minus(t, d: int):
    """Preimage under T^2 (a = -1) of (0, -t)."""
    r = _oroot(t, d)
    return (3 * t + 2 * r + _oroot(2 * t + r, d), -3 * t - 2 * r)


def _oroot(t, d: int):
    return mpmath.root(t, d) if t >= 0 else -mpmath.root(-t, d)


@dataclass(frozen=True)
class StableBracket:
    d: int
    a: int
    x0: float
    point: Point
    y_exact: str
    lower: float
    upper: float
    steps_in_region: int
    orbit_x: tuple
    orbit_y: tuple
    contraction: float
    precision_digits: int
    converged: bool = False
    boundary_y: tuple = field(default=())


def _T_mp(a: int, d: int, q):
    s = q[0] + q[1]
    t = a * s**d
    return (q[1] - t, q[1] - 2 * t)


def _side_plus_cycle(d: int, q):
    """Region test for T^{-1}(E_2) inside the quarter plane x >= 0, y <= -1 (a = 1).

    Returns 0 inside, +1 beyond the boundary on the side of the vertical axis,
    -1 beyond the boundary on the side of the line y = -1.
    """
    x, y = q
    s = x + y
    sd = s**d
    if x < 0:
        return 1
    if y > -1:
        return -1
    if sd <= y:
        return 1
    if sd >= (y - 1) / 2:
        return -1
    X, Y = _T_mp(1, d, q)
    Sd = (X + Y) ** d
    if Sd > Y:
        return 1
    if Sd < (Y + 1) / 2:
        return -1
    return 0


def _side_minus_origin(d: int, q):
    """Region test for T^{-2}(fourth quadrant), a = -1; +1 when T^2 q has y > 0, -1 when x < 0."""
    X, Y = _T_mp(-1, d, _T_mp(-1, d, q))
    if Y > 0:
        return 1
    if X < 0:
        return -1
    return 0


def _run(d, a, q, max_steps, tiny=None):
    """Follow the T^2 orbit while it stays in the region.

    Returns (side, steps, xs, ys, converged).  For a = -1 the orbit counts as converged
    once it is within ``tiny`` of the origin: the attraction along the stable manifold is
    super-exponential while the region is a cusp of width ~x^(d^2) there, so no finite
    precision can follow it further.
    """
    side_fn = _side_plus_cycle if a == 1 else _side_minus_origin
    xs, ys = [q[0]], [q[1]]
    for j in range(max_steps):
        if tiny is not None and max(abs(q[0]), abs(q[1])) < tiny:
            return 0, j, xs, ys, True
        side = side_fn(d, q)
        if side != 0:
            return side, j, xs, ys, False
        q = _T_mp(a, d, _T_mp(a, d, q))
        xs.append(q[0])
        ys.append(q[1])
    return 0, max_steps, xs, ys, False


def _solve_mono(f, lo, hi):
    """Root of an increasing function by bisection to the working precision."""
    for _ in range(int(mpmath.mp.prec) + 40):
        mid = (lo + hi) / 2
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def _segment_ends(d: int, a: int, x0):
    """y-values where the vertical line x = x0 meets the two boundary curves of the region."""
    if a == 1:
        # sigma-: x = y^(1/d) - y ; sigma+: x = ((y - 1)/2)^(1/d) - y, both decreasing in y for y <= -1
        big = -(abs(x0) + 2) * 4
        y1 = _solve_mono(lambda y: -(_oroot(y, d) - y - x0), big, mpmath.mpf(-1))
        y2 = _solve_mono(lambda y: -(_oroot((y - 1) / 2, d) - y - x0), big, mpmath.mpf(-1))
        return y1, y2
    # a = -1: curves parametrised by t >= 0 with increasing abscissa
    top = mpmath.mpf(abs(x0)) + 2
    t1 = _solve_mono(lambda t: sigma0_minus(t, d)[0] - x0, mpmath.mpf(0), top)
    t2 = _solve_mono(lambda t: sigma0_plus(t, d)[0] - x0, mpmath.mpf(0), top)
    return sigma0_minus(t1, d)[1], sigma0_plus(t2, d)[1]


def bracket_stable_point(
    d: int,
    a: int,
    x0: float,
    policy: TracePolicy = TracePolicy(),
    min_steps: int = 20,
    max_steps: int = 400,
) -> StableBracket:
    """Locate the stable-manifold point on the vertical line x = x0 by exit-side bisection.

    a = 1: stable manifold of the two-cycle inside T^{-1}(E_2); a = -1: stable manifold of the
    origin inside T^{-2}(fourth quadrant).  High-precision arithmetic is escalated until the
    returned point stays in the region for ``min_steps`` double steps, or (a = -1) until its
    orbit reaches the origin without leaving the region.
    """
    if d % 2 == 0 or d < 3 or a not in (1, -1):
        raise DomainError("bracketing needs odd d >= 3 and a = +1 or -1")
    if not x0 > 0:
        raise DomainError("the vertical segment must have x0 > 0")
    for dps in (60, 120, 240, 480):
        with mpmath.workdps(dps):
            X0 = mpmath.mpf(x0)
            ya, yb = _segment_ends(d, a, X0)
            # classify just outside each end, where the side is unambiguous
            push = (ya - yb) * mpmath.mpf(10) ** (-dps // 3)
            sa = _run(d, a, (X0, ya + push), 1)[0]
            sb = _run(d, a, (X0, yb - push), 1)[0]
            if sa == sb:
                raise DomainError(f"segment at x0={x0} does not cross the region boundary pair")
            tiny = mpmath.mpf(10) ** (-dps // 4) if a == -1 else None
            lo, hi = ya, yb
            width_goal = mpmath.mpf(10) ** (-(dps - 15)) * (1 + abs(ya))
            best = None
            for _ in range(dps * 4):
                mid = (lo + hi) / 2
                side, steps, xs, ys, conv = _run(d, a, (X0, mid), max_steps, tiny)
                if side == 0:
                    best = (mid, steps, xs, ys, conv)
                    break
                if side == sa:
                    lo = mid
                else:
                    hi = mid
                if abs(hi - lo) < width_goal:
                    break
            if best is None:
                mid = (lo + hi) / 2
                best = (mid, *_run(d, a, (X0, mid), max_steps, tiny)[1:])
            mid, steps, xs, ys, conv = best
            if steps >= min_steps or conv:
                n = min(steps, len(xs) - 1)
                ratios = [xs[k + 1] / xs[k] for k in range(n) if xs[k] != 0]
                factor = float(max(ratios)) if ratios else 0.0
                return StableBracket(
                    d,
                    a,
                    float(x0),
                    (float(x0), float(mid)),
                    mpmath.nstr(mid, dps - 5),
                    float(min(lo, hi)),
                    float(max(lo, hi)),
                    int(steps),
                    tuple(float(v) for v in xs[: n + 1]),
                    tuple(float(v) for v in ys[: n + 1]),
                    factor,
                    dps,
                    conv,
                    (float(ya), float(yb)),
                )
    raise PrecisionExhausted(f"could not keep the orbit in the region for {min_steps} double steps")

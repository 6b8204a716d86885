"""Escape-time classification of the model map (and the secant map) on pixel grids."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .model_map import DomainError, ModelParams, Point, canonicalize, ipow
from .policy import SECANT_POLICY, IterationPolicy
from .secant_map import NormalizedPolynomial, ThreeCycleClass, classify_three_cycle_array
from .series import ManifoldKind, solve_invariant

__all__ = [
    "BasinRaster",
    "GridSpec",
    "IterationPolicy",
    "Label",
    "boundary_compare",
    "boundary_points",
    "classify_array",
    "classify_point",
    "components",
    "even_trap",
    "load_raster",
    "render_basin",
    "r_bound",
    "save_raster",
]

MapSpec = Union[ModelParams, NormalizedPolynomial]


class Label(IntEnum):
    UNDECIDED = 0
    CONVERGED = 1
    ESCAPED = 2
    ON_CYCLE = 3


GRAY = {Label.UNDECIDED: 128, Label.CONVERGED: 255, Label.ESCAPED: 0, Label.ON_CYCLE: 192}
COLOR = {
    Label.UNDECIDED: (128, 128, 128),
    Label.CONVERGED: (255, 0, 0),
    Label.ESCAPED: (255, 255, 255),
    Label.ON_CYCLE: (0, 0, 255),
}


@dataclass(frozen=True)
class GridSpec:
    xmin: float
    xmax: float
    ymin: float
    ymax: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError("empty window")
        if self.width < 1 or self.height < 1:
            raise ValueError("grid needs positive size")

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / self.width

    @property
    def dy(self) -> float:
        return (self.ymax - self.ymin) / self.height

    @property
    def pixel_diagonal(self) -> float:
        return math.hypot(self.dx, self.dy)

    def xs(self) -> np.ndarray:
        return self.xmin + (np.arange(self.width) + 0.5) * self.dx

    def ys(self) -> np.ndarray:
        """Row centres, top row first."""
        return self.ymax - (np.arange(self.height) + 0.5) * self.dy

    def center(self, row: int, col: int) -> Point:
        return (self.xmin + (col + 0.5) * self.dx, self.ymax - (row + 0.5) * self.dy)

    def describe(self) -> str:
        return (
            f"xmin={self.xmin!r} xmax={self.xmax!r} ymin={self.ymin!r} ymax={self.ymax!r} "
            f"width={self.width} height={self.height}"
        )


@dataclass(frozen=True)
class BasinRaster:
    grid: GridSpec
    labels: np.ndarray
    counts: np.ndarray
    policy: IterationPolicy
    source: str = ""

    def fraction(self, label: Label) -> float:
        return float(np.mean(self.labels == label))

    def mask(self, label: Label) -> np.ndarray:
        return self.labels == label


def r_bound(d: int) -> float:
    """R_d = (1 - 1/d)(2d)^(-1/(d-1)); the basin of T_{1,d}, d even, sits in a box of this scale."""
    return (1 - 1 / d) * (2 * d) ** (-1 / (d - 1))


@dataclass(frozen=True)
class EvenTrap:
    """Region above the stable graph near 0 that is invariant and lies in the basin (d even, a = 1)."""

    d: int
    coefficients: tuple
    rho: float

    def phi(self, x):
        cs = self.coefficients
        r = cs[-1]
        for c in reversed(cs[:-1]):
            r = r * x + c
        return r

    def dphi(self, x):
        cs = [k * c for k, c in enumerate(self.coefficients)][1:]
        r = cs[-1]
        for c in reversed(cs[:-1]):
            r = r * x + c
        return r

    def contains(self, x, y):
        return (x >= 0) & (x <= self.rho) & (y <= x) & (y > self.phi(x) * (1 + 1e-9))


@lru_cache(maxsize=None)
def even_trap(d: int, N: int = 60) -> EvenTrap:
    s = solve_invariant(ModelParams(1, d), ManifoldKind.STABLE, N)
    cs = tuple(float(c) for c in s.coefficients)
    tmp = EvenTrap(d, cs, 0.0)
    cap = 0.5 * (4 * d) ** (-1 / (d - 1))
    # point where the graph has slope 1/2 (the graph is convex)
    lo, hi = 0.0, cap
    if tmp.dphi(hi) > 0.5:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if tmp.dphi(mid) > 0.5:
                hi = mid
            else:
                lo = mid
        cap = min(cap, lo)
    return EvenTrap(d, cs, 0.9 * cap)


def _in_qstar(x, y, d: int):
    h = 0.5**d
    return (x >= -h) & (x <= 2 * h) & (y >= -h) & (y <= 2 * h) & (y <= 2 * x + 2 * h) & (y >= 0.5 * x - h)


def _classify_model(params: ModelParams, x0: np.ndarray, y0: np.ndarray, policy: IterationPolicy):
    d = params.d
    sign, mu = canonicalize(params.a, d)
    mu = float(mu)
    amu = abs(mu)
    x = x0 / mu
    y = y0 / mu
    n = x.size
    labels = np.full(n, Label.UNDECIDED, dtype=np.int8)
    counts = np.full(n, policy.max_iter, dtype=np.int32)
    near = np.zeros(n, dtype=np.int32)

    def step(u, v):
        t = sign * ipow(u + v, d)
        return v - t, v - 2 * t

    with np.errstate(all="ignore"):
        u2, v2 = step(*step(x, y))
    on_cycle = (u2 == x) & (v2 == y) & ((x != 0) | (y != 0))
    labels[on_cycle] = Label.ON_CYCLE
    counts[on_cycle] = 0
    active = np.flatnonzero(~on_cycle)
    cx, cy = x[active], y[active]
    trap = even_trap(d) if d % 2 == 0 else None
    R = r_bound(d)
    for k in range(policy.max_iter + 1):
        if active.size == 0:
            break
        norm = amu * np.maximum(np.abs(cx), np.abs(cy))
        origin = (cx == 0) & (cy == 0)
        if trap is not None:
            trapped = origin | trap.contains(cx, cy)
            outside = ~origin & ~((cx > -5 * R) & (cx < R) & (cy > 0) & (cy < 2 * R))
            if k >= 1:
                outside |= cy < 0
        elif sign == 1:
            trapped = origin | _in_qstar(cx, cy, d)
            outside = np.zeros(active.size, dtype=bool)
        else:
            trapped = origin
            outside = np.zeros(active.size, dtype=bool)
        nr = np.where(norm < policy.eps_converge, near[active] + 1, 0)
        near[active] = nr
        conv = trapped | (nr >= policy.window)
        esc = ~conv & (outside | ~np.isfinite(norm) | (norm > policy.escape_radius))
        done = conv | esc
        labels[active[conv]] = Label.CONVERGED
        labels[active[esc]] = Label.ESCAPED
        counts[active[done]] = k
        keep = ~done
        active, cx, cy = active[keep], cx[keep], cy[keep]
        if k == policy.max_iter or active.size == 0:
            break
        with np.errstate(all="ignore"):
            cx, cy = step(cx, cy)
    return labels, counts


def _classify_secant(q: NormalizedPolynomial, x0: np.ndarray, y0: np.ndarray, policy: IterationPolicy):
    cls, steps = classify_three_cycle_array(q, x0, y0, policy)
    labels = np.full(x0.size, Label.UNDECIDED, dtype=np.int8)
    labels[cls == ThreeCycleClass.IN_BASIN] = Label.CONVERGED
    labels[cls == ThreeCycleClass.NOT_IN_BASIN] = Label.ESCAPED
    labels[(x0 == 0) & (y0 == 0)] = Label.ON_CYCLE
    return labels, steps.astype(np.int32)


def classify_array(spec: MapSpec, xs, ys, policy: IterationPolicy | None = None):
    """Vectorised classifier; returns (labels, counts) as flat arrays."""
    x = np.asarray(xs, dtype=float).ravel()
    y = np.asarray(ys, dtype=float).ravel()
    if isinstance(spec, NormalizedPolynomial):
        return _classify_secant(spec, x, y, policy or SECANT_POLICY)
    return _classify_model(spec, x, y, policy or IterationPolicy())


def classify_point(spec: MapSpec, pt: Point, policy: IterationPolicy | None = None) -> tuple[Label, int]:
    labels, counts = classify_array(spec, [pt[0]], [pt[1]], policy)
    return Label(int(labels[0])), int(counts[0])


def render_basin(spec: MapSpec, grid: GridSpec, policy: IterationPolicy | None = None, workers: int = 1) -> BasinRaster:
    """Classify every pixel centre.  Rows are split into blocks; the result does not depend on ``workers``."""
    if policy is None:
        policy = SECANT_POLICY if isinstance(spec, NormalizedPolynomial) else IterationPolicy()
    xs, ys = grid.xs(), grid.ys()
    block = 8
    starts = list(range(0, grid.height, block))

    def job(r0):
        rows = ys[r0 : r0 + block]
        X, Y = np.meshgrid(xs, rows)
        lab, cnt = classify_array(spec, X, Y, policy)
        return lab.reshape(len(rows), grid.width), cnt.reshape(len(rows), grid.width)

    if workers <= 1:
        parts = [job(r) for r in starts]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(job, starts))
    labels = np.vstack([p[0] for p in parts])
    counts = np.vstack([p[1] for p in parts])
    return BasinRaster(grid, labels, counts, policy, describe_spec(spec))


def describe_spec(spec: MapSpec) -> str:
    if isinstance(spec, NormalizedPolynomial):
        return f"secant q={spec.poly} critical={spec.critical!r}"
    return f"model a={spec.a!r} d={spec.d}"


def boundary_points(raster: BasinRaster, label: Label = Label.CONVERGED) -> np.ndarray:
    """Midpoints of pixel edges separating ``label`` from everything else."""
    g = raster.grid
    m = raster.labels == label
    xs, ys = g.xs(), g.ys()
    out = []
    r, c = np.nonzero(m[:, 1:] != m[:, :-1])
    out.append(np.column_stack([g.xmin + (c + 1) * g.dx, ys[r]]))
    r, c = np.nonzero(m[1:, :] != m[:-1, :])
    out.append(np.column_stack([xs[c], g.ymax - (r + 1) * g.dy]))
    return np.vstack(out)


def _densify(curve: np.ndarray, spacing: float) -> np.ndarray:
    curve = np.asarray(curve, dtype=float)
    pts = [curve[:1]]
    for a, b in zip(curve[:-1], curve[1:]):
        n = max(1, int(math.ceil(np.hypot(*(b - a)) / spacing)))
        t = (np.arange(1, n + 1) / n)[:, None]
        pts.append(a + t * (b - a))
    return np.vstack(pts)


def boundary_compare(raster: BasinRaster, label: Label, curve) -> float:
    """Symmetric Hausdorff distance between the pixel-edge boundary of ``label`` and a polyline."""
    m = raster.labels == label
    if not m.any() or m.all():
        raise DomainError(f"raster needs pixels inside and outside {label.name}")
    bp = boundary_points(raster, label)
    spacing = 0.05 * min(raster.grid.dx, raster.grid.dy)
    dense = _densify(getattr(curve, "vertices", curve), spacing)
    d1 = cKDTree(dense).query(bp)[0].max()
    d2 = cKDTree(bp).query(dense)[0].max()
    return float(max(d1, d2))


def components(mask: np.ndarray, connectivity: int = 8) -> int:
    """Number of connected components of a boolean mask.

    Thin diagonal tentacles of a basin rasterize as corner-touching pixel chains,
    so the foreground default is 8-connectivity; use 4 for a complement.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    structure = np.ones((3, 3), dtype=bool) if connectivity == 8 else None
    return int(ndimage.label(mask, structure=structure)[1])


def _pgm_bytes(array: np.ndarray, maxval: int, comments: Sequence[str]) -> bytes:
    h, w = array.shape
    head = "P5\n" + "".join(f"# {c}\n" for c in comments) + f"{w} {h}\n{maxval}\n"
    if maxval < 256:
        body = array.astype(np.uint8).tobytes()
    else:
        body = array.astype(">u2").tobytes()
    return head.encode("ascii") + body


def _comments(raster: BasinRaster) -> list[str]:
    return [f"grid {raster.grid.describe()}", f"policy {raster.policy.describe()}", f"map {raster.source}"]


def labels_pgm(raster: BasinRaster) -> bytes:
    lut = np.zeros(4, dtype=np.uint8)
    for k, v in GRAY.items():
        lut[k] = v
    return _pgm_bytes(lut[raster.labels], 255, _comments(raster))


def counts_pgm(raster: BasinRaster) -> bytes:
    return _pgm_bytes(np.clip(raster.counts, 0, 65535), 65535, _comments(raster))


def labels_ppm(raster: BasinRaster) -> bytes:
    lut = np.zeros((4, 3), dtype=np.uint8)
    for k, v in COLOR.items():
        lut[k] = v
    h, w = raster.labels.shape
    head = "P6\n" + "".join(f"# {c}\n" for c in _comments(raster)) + f"{w} {h}\n255\n"
    return head.encode("ascii") + lut[raster.labels].tobytes()


def save_raster(raster: BasinRaster, stem: str | Path, ppm: bool = False) -> list[Path]:
    stem = Path(stem)
    paths = [stem.with_name(stem.name + ".pgm"), stem.with_name(stem.name + "_counts.pgm")]
    paths[0].write_bytes(labels_pgm(raster))
    paths[1].write_bytes(counts_pgm(raster))
    if ppm:
        paths.append(stem.with_name(stem.name + ".ppm"))
        paths[2].write_bytes(labels_ppm(raster))
    return paths


def _read_pgm(data: bytes):
    pos, fields, comments = 0, [], []
    while len(fields) < 4:
        while data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            end = data.index(b"\n", pos)
            comments.append(data[pos + 1 : end].decode("ascii").strip())
            pos = end + 1
            continue
        end = pos
        while not data[end : end + 1].isspace():
            end += 1
        fields.append(data[pos:end].decode("ascii"))
        pos = end
    pos += 1
    if fields[0] != "P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    arr = np.frombuffer(data[pos:], dtype=dtype, count=w * h).reshape(h, w)
    return arr, comments


def _parse_kv(text: str) -> dict:
    out = {}
    for tok in text.split():
        k, v = tok.split("=", 1)
        out[k] = v
    return out


def load_raster(labels_path: str | Path, counts_path: str | Path) -> BasinRaster:
    lab, comments = _read_pgm(Path(labels_path).read_bytes())
    cnt, _ = _read_pgm(Path(counts_path).read_bytes())
    inv = np.zeros(256, dtype=np.int8)
    for k, v in GRAY.items():
        inv[v] = k
    meta = {c.split(" ", 1)[0]: c.split(" ", 1)[1] if " " in c else "" for c in comments}
    g = _parse_kv(meta["grid"])
    grid = GridSpec(
        float(g["xmin"]), float(g["xmax"]), float(g["ymin"]), float(g["ymax"]), int(g["width"]), int(g["height"])
    )
    p = _parse_kv(meta["policy"])
    policy = IterationPolicy(float(p["eps_converge"]), int(p["window"]), float(p["escape_radius"]), int(p["max_iter"]))
    return BasinRaster(grid, inv[lab], cnt.astype(np.int32), policy, meta.get("map", ""))

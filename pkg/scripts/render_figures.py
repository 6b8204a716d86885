"""Render the three model basins and the secant basin as PGM/PPM files.

    python3 scripts/render_figures.py --out figures --px 512 --workers 4
"""

import argparse
from pathlib import Path

from secantlab.basin import GridSpec, IterationPolicy, Label, render_basin, save_raster
from secantlab.model_map import ModelParams
from secantlab.secant_map import Polynomial, normalize_at_critical

WINDOW = (-1.5, 1.5, -1.5, 1.5)


def jobs(px):
    g = GridSpec(*WINDOW, px, px)
    yield "basin_1_2", ModelParams(1, 2), g, IterationPolicy()
    yield "basin_1_3", ModelParams(1, 3), g, IterationPolicy()
    yield "basin_m1_3", ModelParams(-1, 3), g, IterationPolicy(max_iter=10_000)
    q = normalize_at_critical(Polynomial.parse("1 - 2x^2 + x^3"), 0)
    yield "secant-basin_4_2", q, GridSpec(-0.05, 0.05, -0.05, 0.05, px, px), None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="figures")
    ap.add_argument("--px", type=int, default=512)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--skip-secant", action="store_true", help="the secant basin is the slow one")
    ns = ap.parse_args()
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, spec, grid, policy in jobs(ns.px):
        if ns.skip_secant and name.startswith("secant"):
            continue
        r = render_basin(spec, grid, policy, ns.workers)
        paths = save_raster(r, out / name, ppm=True)
        print(f"{name}: converged fraction {r.fraction(Label.CONVERGED):.4f} -> {', '.join(map(str, paths))}")


if __name__ == "__main__":
    main()

"""Run every sampled certificate and write one report per claim into a directory.

Exit status is 1 if any expected-pass certificate fails or a negative control passes.
"""

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from secantlab.model_map import ModelParams
from secantlab.regions import (
    INEQUALITY_CLAIMS,
    RegionSpec,
    build_region,
    check_contraction,
    check_forward_invariance,
    check_pointwise_inequality,
)


def certificates(samples, workers):
    for b, d in ((Fraction(1, 2), 3), (Fraction(1, 4), 3), (Fraction(1, 2), 5), (Fraction(1, 4), 5)):
        region = build_region(RegionSpec("Qb", d=d, b=b))
        yield f"invariance_Qb_{b.numerator}over{b.denominator}_{d}", True, check_forward_invariance(ModelParams(1, d), region, samples, 0.0, workers)
    omega = build_region(RegionSpec("Omega0Plus", d=2))
    yield "invariance_Omega0Plus_2", True, check_forward_invariance(ModelParams(1, 2), omega, samples, -1e-12, workers)
    qstar = build_region(RegionSpec("Qstar", d=3))
    yield "control_invariance_Qstar_m1_3", False, check_forward_invariance(ModelParams(-1, 3), qstar, samples, 0.0, workers)
    for d in (3, 5):
        for claim in INEQUALITY_CLAIMS:
            yield f"{claim}_{d}", True, check_pointwise_inequality(d, claim, samples, workers)
    for d, a in ((3, 1), (5, 1), (3, -1), (5, -1)):
        yield f"contraction_{d}_{a}".replace("-", "m"), True, check_contraction(d, a, samples, workers)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="certificates")
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--workers", type=int, default=1)
    ns = ap.parse_args()
    out = Path(ns.out)
    out.mkdir(parents=True, exist_ok=True)
    bad = 0
    for name, expect, cert in certificates(ns.samples, ns.workers):
        (out / f"{name}.txt").write_text(cert.report())
        ok = cert.passed == expect
        bad += not ok
        print(f"{name:40s} {'PASS' if cert.passed else 'FAIL'}  worst_margin={cert.worst_margin:.3e}{'' if ok else '  UNEXPECTED'}")
    sys.exit(1 if bad else 0)


if __name__ == "__main__":
    main()

"""Tabulate the leading manifold coefficients and radius estimates for the standard (a, d) cases."""

import argparse

from secantlab.model_map import ModelParams
from secantlab.series import InsufficientData, ManifoldKind, estimate_radius, solve_invariant

CASES = [(1, 2), (1, 3), (1, 4), (1, 5), (-1, 3), (-1, 5)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--order", type=int, default=60)
    ap.add_argument("--radius-order", type=int, default=400, help="order used for the radius of the even stable series")
    ns = ap.parse_args()
    print("a,d,alpha_d,alpha_2d-1,beta_d,beta_2d-1")
    for a, d in CASES:
        s = solve_invariant(ModelParams(a, d), ManifoldKind.STABLE, ns.order)
        c = solve_invariant(ModelParams(a, d), ManifoldKind.CENTER, ns.order)
        print(f"{a},{d},{s[d]},{s[2 * d - 1]},{c[d]},{c[2 * d - 1]}")
    print()
    print("d,N,radius_lower,radius_estimate,radius_upper")
    for d, N in ((2, ns.radius_order), (4, ns.radius_order // 2)):
        try:
            r = estimate_radius(solve_invariant(ModelParams(1, d), ManifoldKind.STABLE, N))
        except InsufficientData as e:
            print(f"{d},{N},,,  # {e}")
            continue
        print(f"{d},{N},{r.lower!r},{r.point_estimate!r},{r.upper!r}")


if __name__ == "__main__":
    main()

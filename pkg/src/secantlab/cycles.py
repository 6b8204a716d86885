"""The hyperbolic two-cycle {(0, 1), (0, -1)} of T_{1,d} for odd d."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .model_map import DomainError, ModelParams, Point, evaluate, jacobian

__all__ = ["CycleData", "two_cycle_data", "verify_periodic", "M_STAR"]

# slope of the steeper edge of the triangle near (0, -1)
M_STAR = 3.5


@dataclass(frozen=True)
class CycleData:
    d: int
    points: tuple
    multiplier: tuple
    lambda_minus: float
    lambda_plus: float
    m_minus: float
    m_plus: float

    def csv_row(self) -> str:
        return f"{self.d},{self.lambda_minus!r},{self.lambda_plus!r},{self.m_minus!r},{self.m_plus!r}"


CSV_HEADER = "d,lambda_minus,lambda_plus,m_minus,m_plus"


def two_cycle_data(d: int) -> CycleData:
    """Closed-form eigendata of DT^2 at (0, 1); eigenvectors are (1, m)."""
    if d < 3 or d % 2 == 0:
        raise DomainError("the two-cycle exists for odd d >= 3")
    mult = ((3 * d * d - 2 * d, 3 * d * d - 4 * d + 1), (6 * d * d - 2 * d, 6 * d * d - 6 * d + 1))
    root = math.sqrt(9 * d * d - 10 * d + 1)
    tr = 9 * d * d - 8 * d + 1
    lam_p = 0.5 * (tr + (3 * d - 1) * root)
    # product of the eigenvalues is det = d^2; avoids cancellation in the small one
    lam_m = d * d / lam_p
    m_p = 4 * d / (1 - d + root)
    m_m = 4 * d / (1 - d - root)
    return CycleData(d, ((0, 1), (0, -1)), mult, lam_m, lam_p, m_m, m_p)


def verify_periodic(params: ModelParams, points: Iterable[Point], period: int | None = None) -> float:
    """Largest Euclidean distance between T(points[i]) and points[i+1] around the cycle."""
    pts = list(points)
    if not pts:
        raise DomainError("empty cycle")
    if period is not None and period != len(pts):
        raise DomainError(f"{len(pts)} points given for period {period}")
    worst = 0.0
    for i, p in enumerate(pts):
        q = evaluate(params, p)
        nxt = pts[(i + 1) % len(pts)]
        worst = max(worst, math.hypot(float(q[0]) - float(nxt[0]), float(q[1]) - float(nxt[1])))
    return worst


def cycle_multiplier(params: ModelParams, points: Iterable[Point]):
    """Product of Jacobians around the cycle, in orbit order (later factors on the left)."""
    M = ((1, 0), (0, 1))
    for p in points:
        J = jacobian(params, p)
        M = (
            (J[0][0] * M[0][0] + J[0][1] * M[1][0], J[0][0] * M[0][1] + J[0][1] * M[1][1]),
            (J[1][0] * M[0][0] + J[1][1] * M[1][0], J[1][0] * M[0][1] + J[1][1] * M[1][1]),
        )
    return M

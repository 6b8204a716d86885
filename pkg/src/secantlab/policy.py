from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class IterationPolicy:
    """Stopping rules shared by the model-map and secant-map classifiers."""

    eps_converge: float = 1e-8
    window: int = 5
    escape_radius: float = 1e6
    max_iter: int = 5000

    def __post_init__(self):
        if not (0 < self.eps_converge < 1 < self.escape_radius):
            raise ValueError("need 0 < eps_converge < 1 < escape_radius")
        if self.window < 1 or self.max_iter < 1:
            raise ValueError("window and max_iter must be positive")

    def describe(self) -> str:
        return (
            f"eps_converge={self.eps_converge!r} window={self.window} "
            f"escape_radius={self.escape_radius!r} max_iter={self.max_iter}"
        )


# convergence to the critical cycle is algebraic in the neutral direction, so
# the secant classifier watches a coarser neighbourhood over many periods
SECANT_POLICY = IterationPolicy(eps_converge=1e-3, window=30, escape_radius=1e6, max_iter=30000)

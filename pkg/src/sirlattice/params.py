"""Model parameters and initial conditions shared by every subsystem."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ModelParams:
    """Supercriticality parameter and village size.

    ``p_edge`` is the per-pair infection probability (1 + theta) / (5 N);
    combinations where it would exceed 1 are rejected.
    """

    theta: float
    village_size: int

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if self.village_size < 1:
            raise ValueError(f"village_size must be >= 1, got {self.village_size}")
        if self.p_edge > 1.0:
            raise ValueError(
                f"infection probability (1+theta)/(5N) = {self.p_edge} exceeds 1; "
                f"increase the village size"
            )

    @property
    def p_edge(self) -> float:
        return (1.0 + self.theta) / (5.0 * self.village_size)


# Initial-condition variants.  "unit" is the single-infected-individual start
# (stochastic process only); "gamma" infects a fraction gamma of the origin
# village; "diag-line" infects fraction gamma of every village on x + y = 0;
# "custom" takes an explicit field.
IC_KINDS = ("unit", "gamma", "diag-line", "custom")


@dataclass(frozen=True)
class InitialCondition:
    kind: str
    gamma: float = 1.0
    field: object = None  # RealField for kind == "custom"

    def __post_init__(self):
        if self.kind not in IC_KINDS:
            raise ValueError(f"unknown initial condition {self.kind!r}; expected one of {IC_KINDS}")
        if self.kind in ("gamma", "diag-line") and not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.kind == "custom" and self.field is None:
            raise ValueError("custom initial condition requires a field")

    @staticmethod
    def unit() -> "InitialCondition":
        return InitialCondition("unit")

    @staticmethod
    def origin_fraction(gamma: float) -> "InitialCondition":
        return InitialCondition("gamma", gamma=gamma)

    @staticmethod
    def diagonal_line(gamma: float) -> "InitialCondition":
        return InitialCondition("diag-line", gamma=gamma)

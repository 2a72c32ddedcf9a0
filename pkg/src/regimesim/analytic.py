"""Closed-form energy-savings model for a homogeneous cluster.

Compares a reference scenario, where every server runs at the average
load, against a consolidated scenario where the workload is packed onto
fewer servers held at their optimal operating point and the rest sleep.
"""

from __future__ import annotations

from dataclasses import dataclass


class InfeasibleModelError(ValueError):
    """Consolidation target cannot absorb the average load."""


def homogeneous_savings(a_avg: float, a_opt: float, b_avg: float, b_opt: float) -> float:
    """Energy ratio reference/consolidated for a homogeneous cluster.

    ``a_*`` are normalized performance levels, ``b_*`` the normalized
    energy drawn at those levels. Both scenarios perform the same volume
    of computation, so the awake-server count shrinks by a_avg/a_opt.
    """
    if a_opt <= 0 or b_opt <= 0:
        raise ValueError("a_opt and b_opt must be positive")
    if a_avg <= 0:
        raise ValueError("a_avg must be positive")
    if a_avg > a_opt:
        raise InfeasibleModelError(
            f"average load {a_avg} exceeds consolidation target {a_opt}"
        )
    return (a_opt / a_avg) * (b_avg / b_opt)


@dataclass(frozen=True)
class HomogeneousModelParams:
    """Inputs of the homogeneous model.

    ``a_avg`` is the mean of the uniform load range [a_min, a_max].
    ``epsilon`` is the energy premium of the optimal point over the
    average draw, b_opt = b_avg + epsilon.
    """

    n: int
    a_min: float
    a_max: float
    b_avg: float
    b_opt: float
    a_opt: float

    def __post_init__(self) -> None:
        if self.n <= 0:
            raise ValueError("n must be positive")
        if not 0.0 <= self.a_min <= self.a_max <= 1.0:
            raise ValueError("load range must satisfy 0 <= a_min <= a_max <= 1")

    @property
    def a_avg(self) -> float:
        return (self.a_min + self.a_max) / 2.0

    @property
    def epsilon(self) -> float:
        return self.b_opt - self.b_avg

    @property
    def n_sleep(self) -> float:
        """Servers freed by consolidation, as a real number.

        Callers round down when they need a whole-server count.
        """
        if self.a_avg > self.a_opt:
            raise InfeasibleModelError(
                f"average load {self.a_avg} exceeds consolidation target {self.a_opt}"
            )
        return self.n * (1.0 - self.a_avg / self.a_opt)

    def savings_ratio(self) -> float:
        return homogeneous_savings(self.a_avg, self.a_opt, self.b_avg, self.b_opt)

"""Longitudinal CACC law with a constant time-headway gap policy.

The desired bumper gap to the predecessor is ``h * v + d``. The controller is
a PD law on the spacing error whose derivative term contains the follower's
own acceleration; solving that implicit relation for the acceleration gives
the explicit command returned by :func:`control_accel`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class CaccParams:
    headway_h: float = 0.5
    standstill_d: float = 2.0
    k_p: float = 0.2
    k_d: float = 0.7

    def __post_init__(self) -> None:
        for name in ("headway_h", "standstill_d", "k_p", "k_d"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
        if 1.0 + self.k_d * self.headway_h <= 0:
            raise ValueError("1 + k_d * headway_h must be positive")


@dataclass(frozen=True)
class GapMeasurement:
    """Inputs of one follower's control step.

    ``delta_x`` is the bumper gap to the predecessor, ``delta_v`` is
    predecessor speed minus own speed, ``predecessor_accel`` comes from the
    last received message.
    """

    delta_x: float
    delta_v: float
    predecessor_accel: float
    self_v: float
    self_a: float = 0.0


def safe_gap(p: CaccParams, v: float) -> float:
    if v < 0:
        raise ValueError(f"speed must be >= 0, got {v}")
    return p.headway_h * v + p.standstill_d


def spacing_error(p: CaccParams, g: GapMeasurement) -> tuple[float, float]:
    """Return the spacing error and its time derivative."""
    e = g.delta_x - (p.headway_h * g.self_v + p.standstill_d)
    e_dot = g.delta_v - p.headway_h * g.self_a
    return e, e_dot


def control_accel(p: CaccParams, g: GapMeasurement) -> float:
    """Acceleration command, unclamped."""
    e = g.delta_x - p.headway_h * g.self_v - p.standstill_d
    return (g.predecessor_accel + p.k_p * e + p.k_d * g.delta_v) / (1.0 + p.k_d * p.headway_h)


def pd_residual(p: CaccParams, g: GapMeasurement, a_candidate: float) -> float:
    """How far ``a_candidate`` is from satisfying the implicit PD law.

    The relative acceleration ``a_candidate - a_pred`` is compared against
    ``k_p * e + k_d * (delta_v - h * a_candidate)``; the result is zero
    exactly when the candidate solves the law.
    """
    e = g.delta_x - p.headway_h * g.self_v - p.standstill_d
    pd_term = p.k_p * e + p.k_d * (g.delta_v - p.headway_h * a_candidate)
    return (a_candidate - g.predecessor_accel) - pd_term

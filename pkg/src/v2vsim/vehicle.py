"""Planar kinematic vehicle model.

Heading convention: a vehicle with yaw ``theta`` moves along the unit vector
``(sin theta, cos theta)``, so ``yaw = 0`` points along +y. Lanes in every
scenario run along +y and lateral offsets are x coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

DEFAULT_DT = 0.01


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class VehicleState:
    id: int
    x: float
    y: float
    yaw: float = 0.0
    v: float = 0.0
    a: float = 0.0
    width: float = 1.8
    length: float = 4.5

    def __post_init__(self) -> None:
        _require_finite(x=self.x, y=self.y, yaw=self.yaw, v=self.v, a=self.a,
                        width=self.width, length=self.length)
        if self.v < 0:
            raise ValueError(f"vehicle {self.id}: speed must be >= 0, got {self.v}")
        if self.width <= 0 or self.length <= 0:
            raise ValueError(f"vehicle {self.id}: width and length must be > 0")
        object.__setattr__(self, "yaw", normalize_angle(self.yaw))

    @property
    def heading(self) -> tuple[float, float]:
        return math.sin(self.yaw), math.cos(self.yaw)

    @property
    def velocity(self) -> tuple[float, float]:
        hx, hy = self.heading
        return self.v * hx, self.v * hy


@dataclass(frozen=True)
class ActuatorLimits:
    a_max: float = 6.0
    a_min: float = -8.0
    lane_blend_duration: float = 2.0
    # one lane width is crossed in lane_blend_duration
    lane_width: float = 3.5

    def __post_init__(self) -> None:
        _require_finite(a_max=self.a_max, a_min=self.a_min,
                        lane_blend_duration=self.lane_blend_duration,
                        lane_width=self.lane_width)
        if not self.a_min < 0 < self.a_max:
            raise ValueError("actuator limits need a_min < 0 < a_max")
        if self.lane_blend_duration <= 0 or self.lane_width <= 0:
            raise ValueError("lane_blend_duration and lane_width must be > 0")

    def clamp(self, accel: float) -> float:
        return min(max(accel, self.a_min), self.a_max)

    @property
    def lateral_speed(self) -> float:
        return self.lane_width / self.lane_blend_duration


def lane_center(x: float, lane_width: float = 3.5) -> float:
    """Centerline of the lane containing lateral position ``x``.

    Lanes are ``lane_width`` wide with a boundary at x = 0, so the two
    highway lanes have centerlines at -lane_width/2 and +lane_width/2.
    """
    return lane_width * (math.floor(x / lane_width) + 0.5)


def step(
    state: VehicleState,
    commanded_accel: float,
    lateral_target: float | None,
    dt: float,
    limits: ActuatorLimits,
) -> VehicleState:
    """Advance one vehicle by ``dt`` with semi-implicit Euler.

    The command is clamped to the actuator limits, speed is updated first and
    the new speed moves the vehicle. With a lateral target the vehicle slides
    toward that x coordinate at one lane width per ``lane_blend_duration``
    while moving along +y, and its yaw follows the motion direction.
    """
    _require_finite(commanded_accel=commanded_accel, dt=dt)
    if lateral_target is not None:
        _require_finite(lateral_target=lateral_target)
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")

    accel = limits.clamp(commanded_accel)
    v_next = state.v + accel * dt
    if v_next < 0.0:
        v_next = 0.0
        accel = 0.0
    travel = v_next * dt

    if lateral_target is None:
        hx, hy = state.heading
        return replace(state, x=state.x + travel * hx, y=state.y + travel * hy,
                       v=v_next, a=accel)

    remaining = lateral_target - state.x
    max_shift = limits.lateral_speed * dt
    if abs(remaining) <= max_shift:
        dx, x_next = remaining, lateral_target
    else:
        dx = math.copysign(max_shift, remaining)
        x_next = state.x + dx
    if dx == 0.0 and travel == 0.0:
        yaw = state.yaw
    else:
        yaw = math.atan2(dx, travel)
    return replace(state, x=x_next, y=state.y + travel, yaw=yaw,
                   v=v_next, a=accel)


def distance_between(s1: VehicleState, s2: VehicleState) -> float:
    return math.hypot(s2.x - s1.x, s2.y - s1.y)

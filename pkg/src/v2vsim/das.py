"""Collision warning for the "following" case.

For every pair of vehicles travelling in the same direction, vehicle B is
projected onto A's heading line. The foot of the perpendicular P splits the
A-B offset into a lateral part ``d_p`` (P to B) and a longitudinal part
``d_a`` (A to P). The pair is treated as same-lane when ``d_p`` is below the
lateral safety distance, the direction of AP relative to A's velocity tells
which vehicle follows, and a warning is raised when ``d_a`` is shorter than
the stopping-distance based safety distance ``d_sf``.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

from .vehicle import VehicleState, normalize_angle


class Role(enum.Enum):
    FOLLOWER = "follower"
    LEADER = "leader"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class DasParams:
    beta: float = 0.17
    d_mls: float = 0.5
    d_min: float = 2.0
    t_r: float = 1.0
    a_f: float = 6.0
    a_l: float = 6.0

    def __post_init__(self) -> None:
        for name in ("beta", "d_mls", "d_min", "t_r", "a_f", "a_l"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not 0 < self.beta < math.pi:
            raise ValueError("beta must lie in (0, pi)")
        if self.d_mls < 0 or self.t_r < 0:
            raise ValueError("d_mls and t_r must be >= 0")
        if self.d_min <= 0 or self.a_f <= 0 or self.a_l <= 0:
            raise ValueError("d_min, a_f and a_l must be > 0")


@dataclass(frozen=True)
class PairGeometry:
    p: tuple[float, float]
    u: float
    d_p: float
    d_a: float
    denominator: float
    role_of_a: Role | None = None


@dataclass(frozen=True)
class WarningEvent:
    time: float
    follower_id: int
    leader_id: int
    d_a: float
    d_sf: float
    d_p: float

    def __post_init__(self) -> None:
        if not self.d_a < self.d_sf:
            raise ValueError("a warning requires d_a < d_sf")


def angle_difference(theta_a: float, theta_b: float) -> float:
    """Shortest-arc absolute difference between two headings."""
    return abs(normalize_angle(theta_a - theta_b))


def orientation_aligned(theta_a: float, theta_b: float, beta: float) -> bool:
    return angle_difference(theta_a, theta_b) < beta


def project(a: VehicleState, b: VehicleState) -> PairGeometry:
    # A' is one unit ahead of A along its heading
    xa2 = math.sin(a.yaw) + a.x
    ya2 = math.cos(a.yaw) + a.y
    dxa, dya = xa2 - a.x, ya2 - a.y
    denominator = math.sqrt(dxa * dxa + dya * dya)
    u = ((b.x - a.x) * dxa + (b.y - a.y) * dya) / denominator
    xp = a.x + u * dxa
    yp = a.y + u * dya
    d_p = math.hypot(xp - b.x, yp - b.y)
    d_a = math.hypot(xp - a.x, yp - a.y)
    return PairGeometry(p=(xp, yp), u=u, d_p=d_p, d_a=d_a, denominator=denominator)


def lateral_safety(params: DasParams, width_a: float, width_b: float) -> float:
    return width_a / 2 + width_b / 2 + params.d_mls


def classify_role(a: VehicleState, p: tuple[float, float]) -> Role:
    """A follows when P lies ahead of A along its velocity.

    The angle test ``phi < pi/2`` reduces to a positive dot product. A
    stationary A or a P on top of A leaves the angle undefined. Speed is
    non-negative, so the unit heading gives the same sign as the velocity
    without underflowing at tiny speeds.
    """
    apx, apy = p[0] - a.x, p[1] - a.y
    vx, vy = a.heading
    if (apx == 0.0 and apy == 0.0) or a.v == 0.0:
        return Role.INDETERMINATE
    return Role.FOLLOWER if apx * vx + apy * vy > 0 else Role.LEADER


def safety_distance(params: DasParams, v_f: float, v_l: float) -> float:
    """Longitudinal safety distance, never below ``d_min``."""
    if v_f < 0 or v_l < 0:
        raise ValueError("speeds must be >= 0")
    raw = (params.d_min + v_f * params.t_r
           + 0.5 * (v_f * v_f / params.a_f - v_l * v_l / params.a_l))
    return max(raw, params.d_min)


def evaluate_pair(
    a: VehicleState, b: VehicleState, params: DasParams, now: float
) -> WarningEvent | None:
    if not orientation_aligned(a.yaw, b.yaw, params.beta):
        return None
    geom = project(a, b)
    if not geom.d_p < lateral_safety(params, a.width, b.width):
        return None
    role = classify_role(a, geom.p)
    if role is Role.INDETERMINATE:
        return None
    follower, leader = (a, b) if role is Role.FOLLOWER else (b, a)
    d_sf = safety_distance(params, follower.v, leader.v)
    if geom.d_a < d_sf:
        return WarningEvent(time=now, follower_id=follower.id, leader_id=leader.id,
                            d_a=geom.d_a, d_sf=d_sf, d_p=geom.d_p)
    return None


def evaluate_all(
    vehicles: Sequence[VehicleState], params: DasParams, now: float
) -> list[WarningEvent]:
    """Check every unordered pair once, the lower id playing A."""
    ids = [v.id for v in vehicles]
    if len(set(ids)) != len(ids):
        raise ValueError(f"duplicate vehicle ids: {ids}")
    ordered = sorted(vehicles, key=lambda s: s.id)
    events = []
    for a, b in itertools.combinations(ordered, 2):
        event = evaluate_pair(a, b, params, now)
        if event is not None:
            events.append(event)
    events.sort(key=lambda e: (e.follower_id, e.leader_id))
    return events

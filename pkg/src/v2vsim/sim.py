"""Deterministic simulation loop tying vehicles, network and controllers together.

Every tick runs the same fixed sequence: all vehicles broadcast a kinematic
message, due messages are delivered and latched per receiver, commands are
computed from the latched messages (CACC, collision warning, scripted
behaviors), every vehicle is integrated, and one log row per vehicle is
appended. The row for tick ``t`` holds the state at ``t`` together with the
command issued at ``t``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from . import cacc, das
from .network import (
    Delivery,
    KinematicMessage,
    NetworkModel,
    build_ego_topology,
    build_precedent_topology,
)
from .scenario import (
    LaneChange,
    Scenario,
    SpeedProfile,
    StoppedLead,
    profile_tracking_accel,
    scripted_ego_driver,
)
from .vehicle import VehicleState, step

log = logging.getLogger(__name__)

LOG_COLUMNS = ("t", "vehicle_id", "x", "y", "yaw", "v", "a_command", "a_applied",
               "gap_to_predecessor", "spacing_error", "warning_flag")


class SimulationError(RuntimeError):
    def __init__(self, tick: int, vehicle_id: int, detail: str):
        super().__init__(f"tick {tick}, vehicle {vehicle_id}: {detail}")
        self.tick = tick
        self.vehicle_id = vehicle_id


@dataclass(frozen=True)
class LogRow:
    t: float
    vehicle_id: int
    x: float
    y: float
    yaw: float
    v: float
    a_command: float
    a_applied: float
    gap_to_predecessor: float | None
    spacing_error: float | None
    warning_flag: int

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in LOG_COLUMNS)


@dataclass
class SimLog:
    dt: float
    seed: int = 0
    rows: list[LogRow] = field(default_factory=list)
    events: list[das.WarningEvent] = field(default_factory=list)
    deliveries: list[Delivery] = field(default_factory=list)

    @property
    def vehicle_ids(self) -> list[int]:
        return sorted({r.vehicle_id for r in self.rows})

    def rows_for(self, vehicle_id: int) -> list[LogRow]:
        rows = [r for r in self.rows if r.vehicle_id == vehicle_id]
        if not rows:
            raise KeyError(f"vehicle {vehicle_id} is not in the log")
        return rows

    def series(self, vehicle_id: int, column: str) -> list:
        if column not in LOG_COLUMNS:
            raise KeyError(f"unknown column {column!r}")
        return [getattr(r, column) for r in self.rows_for(vehicle_id)]

    def times(self) -> list[float]:
        return sorted({r.t for r in self.rows})


def bumper_gap(follower: VehicleState, pred_xy: tuple[float, float], pred_length: float) -> float:
    """Gap from follower nose to predecessor tail, measured along the follower's heading."""
    hx, hy = follower.heading
    offset = (pred_xy[0] - follower.x) * hx + (pred_xy[1] - follower.y) * hy
    return offset - (pred_length + follower.length) / 2


def build_network(s: Scenario) -> NetworkModel | None:
    spec = s.network
    if spec.topology == "precedent":
        net = build_precedent_topology(s.chain_order(), delay=spec.delay)
        net.range_limit = spec.range_limit
        return net
    if spec.topology == "ego":
        return build_ego_topology(s.ids, s.controller.ego_id, range_limit=spec.range_limit,
                                  delay=spec.delay)
    return None


def message_state(msg: KinematicMessage, template: VehicleState) -> VehicleState:
    """What a receiver knows about the sender: message kinematics plus known dimensions."""
    x, y, _ = msg.position
    return VehicleState(id=msg.sender_id, x=x, y=y, yaw=msg.yaw, v=msg.speed, a=msg.accel,
                        width=template.width, length=template.length)


class _Driver:
    """Per-vehicle command source built from a behavior spec."""

    def __init__(self, s: Scenario, vehicle_id: int):
        spec = s.vehicle(vehicle_id)
        b = spec.behavior
        self.kind = b.kind
        self.gain = b.gain
        self.limits = s.limits
        cruise = b.speed if b.speed is not None else spec.state.v
        self.profile: SpeedProfile | None = b.profile
        if b.kind in ("constant", "stopped_lead", "lane_change"):
            self.profile = SpeedProfile.constant(cruise)
        self.stopped_lead = None
        self.lane_change = None
        if b.kind == "stopped_lead":
            rng = b.trigger_range if b.trigger_range is not None else 30.0
            self.stopped_lead = StoppedLead(a_brake=s.limits.a_min, trigger_range=rng)
        if b.kind == "lane_change":
            rng = b.trigger_range if b.trigger_range is not None else 15.0
            self.lane_change = LaneChange(lane_width=s.limits.lane_width, trigger_range=rng)
        self.brake_on_warning = b.brake_on_warning
        self.reaction_time = b.reaction_time
        self.warned_at: float | None = None
        self.lateral_target: float | None = None


def run(scenario: Scenario, seed: int | None = None) -> SimLog:
    s = scenario
    dt = s.dt
    n_ticks = round(s.duration / dt)
    ids = s.ids
    ego_id = s.controller.ego_id
    states = {spec.state.id: spec.state for spec in s.vehicles}
    templates = dict(states)
    drivers = {vid: _Driver(s, vid) for vid in ids}
    net = build_network(s)
    latched: dict[int, dict[int, KinematicMessage]] = {vid: {} for vid in ids}
    predecessor = {}
    if s.network.topology == "precedent":
        chain = s.chain_order()
        predecessor = {b: a for a, b in zip(chain, chain[1:])}
    params = s.controller.cacc
    log_ = SimLog(dt=dt, seed=s.rng_seed if seed is None else seed)

    for k in range(n_ticks + 1):
        t = k * dt

        # (1) broadcast
        if net is not None:
            positions = {vid: (st.x, st.y) for vid, st in states.items()}
            for vid in ids:
                st = states[vid]
                msg = KinematicMessage(vid, (st.x, st.y, 0.0), st.yaw, st.v, st.a, t)
                net.send(vid, msg, t, positions)
            # (2) deliver, (3) latch
            for dst, msg in net.deliver_due(t):
                latched[dst][msg.sender_id] = msg
                log_.deliveries.append(Delivery(t, msg.sender_id, dst, msg))

        # (4) commands
        warnings: list[das.WarningEvent] = []
        if s.controller.das is not None and ego_id is not None:
            view = [states[ego_id]] + [message_state(m, templates[src])
                                       for src, m in sorted(latched[ego_id].items())]
            warnings = das.evaluate_all(view, s.controller.das, t)
            log_.events.extend(warnings)
        warned_ids = {e.follower_id for e in warnings} | {e.leader_id for e in warnings}

        commands: dict[int, float] = {}
        gaps: dict[int, tuple[float | None, float | None]] = {}
        for vid in ids:
            st, drv = states[vid], drivers[vid]
            gap = err = None
            if drv.kind == "cacc":
                pred = predecessor[vid]
                true_pred = states[pred]
                gap = bumper_gap(st, (true_pred.x, true_pred.y), true_pred.length)
                err = gap - cacc.safe_gap(params, st.v)
                msg = latched[vid].get(pred)
                if msg is None:
                    command = 0.0
                else:
                    measured = cacc.GapMeasurement(
                        delta_x=bumper_gap(st, msg.position[:2], templates[pred].length),
                        delta_v=msg.speed - st.v,
                        predecessor_accel=msg.accel,
                        self_v=st.v,
                        self_a=st.a,
                    )
                    command = cacc.control_accel(params, measured)
            elif drv.kind in ("profile", "constant"):
                command = profile_tracking_accel(drv.profile, st, t, drv.gain)
            elif drv.kind == "stopped_lead":
                brake = drv.stopped_lead(st, states[ego_id])
                command = brake if brake is not None else profile_tracking_accel(
                    drv.profile, st, t, drv.gain)
            elif drv.kind == "lane_change":
                drv.lateral_target = drv.lane_change(st, states[ego_id])
                command = profile_tracking_accel(drv.profile, st, t, drv.gain)
            elif drv.kind == "scripted_ego":
                if drv.brake_on_warning and drv.warned_at is None and vid in warned_ids:
                    drv.warned_at = t
                if drv.warned_at is not None and t >= drv.warned_at + drv.reaction_time - 1e-9:
                    command = s.limits.a_min
                else:
                    command = scripted_ego_driver(drv.profile, st, t, drv.gain)
            else:
                command = 0.0
            if not math.isfinite(command):
                raise SimulationError(k, vid, f"non-finite command {command!r}")
            commands[vid] = command
            gaps[vid] = (gap, err)

        # (5) integrate, (6) log
        for vid in sorted(ids):
            st = states[vid]
            try:
                nxt = step(st, commands[vid], drivers[vid].lateral_target, dt, s.limits)
            except ValueError as exc:
                raise SimulationError(k, vid, str(exc)) from None
            gap, err = gaps[vid]
            log_.rows.append(LogRow(t, vid, st.x, st.y, st.yaw, st.v, commands[vid], nxt.a,
                                    gap, err, int(vid in warned_ids)))
            states[vid] = nxt

    log.debug("scenario %s: %d ticks, %d warnings", s.name, n_ticks + 1, len(log_.events))
    return log_

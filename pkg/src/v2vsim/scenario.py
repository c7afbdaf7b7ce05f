"""Declarative scenarios and the scripted behaviors they reference.

Scenario files are TOML with four kinds of tables::

    [scenario]        name, duration, dt, seed, and optional actuator limits
                      (a_max, a_min, lane_blend_duration, lane_width)
    [network]         topology = "precedent" | "ego" | "none", delay,
                      optional range and order
    [controller]      CACC gains (kp, kd, headway, standstill); setting
                      ``ego`` turns on collision warning with the optional
                      keys beta, d_mls, d_min, t_r, a_f, a_l
    [vehicle.<id>]    x, y, yaw, v, width, length, behavior plus the
                      behavior's own keys

Unknown keys are rejected. The built-in fixtures live next to this module
and can be loaded by name.
"""

from __future__ import annotations

import bisect
import math
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import tomli_w

from .cacc import CaccParams
from .das import DasParams
from .network import DEFAULT_RANGE
from .vehicle import ActuatorLimits, VehicleState, lane_center

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KMH_70 = 70.0 / 3.6
STOPPED_LEAD_RANGE = 30.0
LANE_CHANGE_RANGE = 15.0
FIXTURES = ("delay_sweep", "platoon4", "stopped_lead", "lane_change")

BEHAVIORS = ("idle", "profile", "constant", "cacc", "stopped_lead", "lane_change",
             "scripted_ego")
TOPOLOGIES = ("precedent", "ego", "none")


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class SpeedProfile:
    """Piecewise-linear speed over time, held constant past either end."""

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        points = tuple((float(t), float(v)) for t, v in self.breakpoints)
        if not points:
            raise ValueError("a speed profile needs at least one breakpoint")
        times = [t for t, _ in points]
        if any(t1 >= t2 for t1, t2 in zip(times, times[1:])):
            raise ValueError("profile times must be strictly increasing")
        if any(v < 0 or not math.isfinite(v) for _, v in points):
            raise ValueError("profile speeds must be finite and >= 0")
        object.__setattr__(self, "breakpoints", points)
        object.__setattr__(self, "_times", times)

    @classmethod
    def constant(cls, speed: float) -> SpeedProfile:
        return cls(((0.0, speed),))

    def __call__(self, t: float) -> float:
        points = self.breakpoints
        i = bisect.bisect_right(self._times, t)
        if i == 0:
            return points[0][1]
        if i == len(points):
            return points[-1][1]
        (t0, v0), (t1, v1) = points[i - 1], points[i]
        if t == t0:
            return v0
        return v0 + (v1 - v0) * (t - t0) / (t1 - t0)


def leader_profile_urban() -> SpeedProfile:
    """Leader speed for the delay experiment: 0 to 37, down to 8, back to 37, down to 3 m/s."""
    return SpeedProfile(((0.0, 0.0), (10.0, 37.0), (15.0, 8.0), (25.0, 37.0), (33.0, 3.0)))


def profile_tracking_accel(profile: SpeedProfile, state: VehicleState, t: float,
                           gain: float = 1.0) -> float:
    if gain <= 0:
        raise ValueError("gain must be > 0")
    return gain * (profile(t) - state.v)


def scripted_ego_driver(profile: SpeedProfile, state: VehicleState, t: float,
                        gain: float = 1.0) -> float:
    """Stand-in for a human driver: proportional tracking of a speed profile."""
    return profile_tracking_accel(profile, state, t, gain)


def gap_behind(front: VehicleState, rear: VehicleState) -> float | None:
    """Bumper gap from ``front``'s rear to ``rear``'s nose along ``front``'s heading.

    None when ``rear`` is not behind ``front`` (alongside or ahead).
    """
    hx, hy = front.heading
    offset = (front.x - rear.x) * hx + (front.y - rear.y) * hy
    gap = offset - (front.length + rear.length) / 2
    return gap if gap >= 0 else None


@dataclass
class StoppedLead:
    """Brake fully once the ego is close behind, and keep braking until stopped."""

    a_brake: float
    trigger_range: float = STOPPED_LEAD_RANGE
    triggered: bool = False

    def __call__(self, lead: VehicleState, ego: VehicleState) -> float | None:
        if not self.triggered:
            gap = gap_behind(lead, ego)
            self.triggered = gap is not None and gap <= self.trigger_range
        return self.a_brake if self.triggered else None


def stopped_lead_behavior(lead: VehicleState, ego: VehicleState, a_brake: float,
                          trigger_range: float = STOPPED_LEAD_RANGE) -> float | None:
    """Single-shot form of :class:`StoppedLead`, without the latch."""
    return StoppedLead(a_brake, trigger_range)(lead, ego)


@dataclass
class LaneChange:
    """Cut into the ego's lane once the ego approaches from behind in another lane."""

    lane_width: float = 3.5
    trigger_range: float = LANE_CHANGE_RANGE
    target: float | None = None

    def __call__(self, truck: VehicleState, ego: VehicleState) -> float | None:
        if self.target is None:
            ego_lane = lane_center(ego.x, self.lane_width)
            if ego_lane != lane_center(truck.x, self.lane_width):
                gap = gap_behind(truck, ego)
                if gap is not None and gap <= self.trigger_range:
                    self.target = ego_lane
        return self.target


def lane_change_behavior(truck: VehicleState, ego: VehicleState, lane_width: float = 3.5,
                         trigger_range: float = LANE_CHANGE_RANGE) -> float | None:
    """Single-shot form of :class:`LaneChange`, without the latch."""
    return LaneChange(lane_width, trigger_range)(truck, ego)


@dataclass(frozen=True)
class BehaviorSpec:
    kind: str = "idle"
    profile: SpeedProfile | None = None
    gain: float = 1.0
    speed: float | None = None
    trigger_range: float | None = None
    brake_on_warning: bool = False
    reaction_time: float = 1.0


@dataclass(frozen=True)
class VehicleSpec:
    state: VehicleState
    behavior: BehaviorSpec = field(default_factory=BehaviorSpec)


@dataclass(frozen=True)
class NetworkSpec:
    topology: str = "none"
    delay: float = 0.0
    range_limit: float | None = None
    order: tuple[int, ...] | None = None


@dataclass(frozen=True)
class ControllerSpec:
    cacc: CaccParams = field(default_factory=CaccParams)
    das: DasParams | None = None
    ego_id: int | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    vehicles: tuple[VehicleSpec, ...]
    duration: float
    dt: float = 0.01
    network: NetworkSpec = field(default_factory=NetworkSpec)
    controller: ControllerSpec = field(default_factory=ControllerSpec)
    limits: ActuatorLimits = field(default_factory=ActuatorLimits)
    rng_seed: int = 0

    def __post_init__(self) -> None:
        validate(self)

    @property
    def ids(self) -> list[int]:
        return [spec.state.id for spec in self.vehicles]

    def vehicle(self, vehicle_id: int) -> VehicleSpec:
        for spec in self.vehicles:
            if spec.state.id == vehicle_id:
                return spec
        raise KeyError(vehicle_id)

    def chain_order(self) -> list[int]:
        return list(self.network.order) if self.network.order else self.ids

    def with_delay(self, delay: float) -> Scenario:
        return replace(self, network=replace(self.network, delay=delay))

    def with_cacc(self, **overrides: float) -> Scenario:
        cacc = replace(self.controller.cacc, **overrides)
        return replace(self, controller=replace(self.controller, cacc=cacc))


def validate(s: Scenario) -> None:
    if not (math.isfinite(s.duration) and s.duration > 0):
        raise ScenarioError(f"scenario.duration must be > 0, got {s.duration}")
    if not (math.isfinite(s.dt) and s.dt > 0):
        raise ScenarioError(f"scenario.dt must be > 0, got {s.dt}")
    ids = s.ids
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise ScenarioError(f"duplicate vehicle id(s): {dupes}")
    known = set(ids)

    net = s.network
    if net.topology not in TOPOLOGIES:
        raise ScenarioError(f"network.topology must be one of {TOPOLOGIES}, got {net.topology!r}")
    if not (math.isfinite(net.delay) and net.delay >= 0):
        raise ScenarioError(f"network.delay must be >= 0, got {net.delay}")
    if net.order is not None:
        if sorted(net.order) != sorted(ids):
            raise ScenarioError("network.order must list every vehicle id exactly once")
    if net.topology == "precedent" and len(ids) < 2:
        raise ScenarioError("network.topology 'precedent' needs at least two vehicles")

    ego = s.controller.ego_id
    if ego is not None and ego not in known:
        raise ScenarioError(f"controller.ego refers to unknown vehicle {ego}")
    if net.topology == "ego" and ego is None:
        raise ScenarioError("network.topology 'ego' requires controller.ego")

    chain = s.chain_order()
    for spec in s.vehicles:
        b, vid = spec.behavior, spec.state.id
        where = f"vehicle.{vid}"
        if b.kind not in BEHAVIORS:
            raise ScenarioError(f"{where}.behavior must be one of {BEHAVIORS}, got {b.kind!r}")
        if b.gain <= 0:
            raise ScenarioError(f"{where}.gain must be > 0")
        if b.kind in ("profile", "scripted_ego") and b.profile is None:
            raise ScenarioError(f"{where}.profile is required for behavior {b.kind!r}")
        if b.kind == "cacc":
            if net.topology != "precedent":
                raise ScenarioError(f"{where}: behavior 'cacc' needs network.topology 'precedent'")
            if chain.index(vid) == 0:
                raise ScenarioError(f"{where}: the first vehicle of the chain has no predecessor")
        if b.kind in ("stopped_lead", "lane_change", "scripted_ego") and ego is None:
            raise ScenarioError(f"{where}: behavior {b.kind!r} requires controller.ego")
        if b.kind in ("stopped_lead", "lane_change") and vid == ego:
            raise ScenarioError(f"{where}: the ego cannot run behavior {b.kind!r}")
        if b.trigger_range is not None and b.trigger_range < 0:
            raise ScenarioError(f"{where}.trigger_range must be >= 0")
        if b.reaction_time < 0:
            raise ScenarioError(f"{where}.reaction_time must be >= 0")


# --- TOML (de)serialization -------------------------------------------------

_SCENARIO_KEYS = {"name", "duration", "dt", "seed", "a_max", "a_min",
                  "lane_blend_duration", "lane_width"}
_NETWORK_KEYS = {"topology", "delay", "range", "order"}
_CACC_KEYS = {"kp": "k_p", "kd": "k_d", "headway": "headway_h", "standstill": "standstill_d"}
_DAS_KEYS = ("beta", "d_mls", "d_min", "t_r", "a_f", "a_l")
_VEHICLE_KEYS = {"x", "y", "yaw", "v", "width", "length", "behavior", "profile", "gain",
                 "speed", "trigger_range", "brake_on_warning", "reaction_time"}
_TOP_KEYS = {"scenario", "network", "controller", "vehicle"}


def _check_keys(table: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ScenarioError(f"unknown key(s) in [{where}]: {', '.join(unknown)}")


def _number(table: dict, key: str, where: str, default: Any = None) -> Any:
    value = table.get(key, default)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}.{key} must be a number, got {value!r}")
    return float(value)


def _build(call, where: str, **kwargs):
    try:
        return call(**kwargs)
    except ScenarioError:
        raise
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def scenario_from_dict(data: dict) -> Scenario:
    _check_keys(data, _TOP_KEYS, "top level")
    if "scenario" not in data:
        raise ScenarioError("missing [scenario] table")
    sc = data["scenario"]
    _check_keys(sc, _SCENARIO_KEYS, "scenario")
    for key in ("name", "duration"):
        if key not in sc:
            raise ScenarioError(f"scenario.{key} is required")
    if not isinstance(sc["name"], str):
        raise ScenarioError("scenario.name must be a string")
    seed = sc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ScenarioError(f"scenario.seed must be an integer, got {seed!r}")
    limit_kwargs = {k: _number(sc, k, "scenario") for k in
                    ("a_max", "a_min", "lane_blend_duration", "lane_width") if k in sc}
    limits = _build(ActuatorLimits, "scenario", **limit_kwargs)

    nt = data.get("network", {})
    _check_keys(nt, _NETWORK_KEYS, "network")
    topology = nt.get("topology", "none")
    order = nt.get("order")
    if order is not None:
        if not isinstance(order, list) or not all(isinstance(i, int) and not isinstance(i, bool)
                                                  for i in order):
            raise ScenarioError("network.order must be a list of integer ids")
        order = tuple(order)
    range_limit = _number(nt, "range", "network")
    if range_limit is None and topology == "ego":
        range_limit = DEFAULT_RANGE
    network = NetworkSpec(topology=topology, delay=_number(nt, "delay", "network", 0.0),
                          range_limit=range_limit, order=order)

    ct = data.get("controller", {})
    _check_keys(ct, set(_CACC_KEYS) | set(_DAS_KEYS) | {"ego"}, "controller")
    cacc = _build(CaccParams, "controller",
                  **{field_: _number(ct, key, "controller") for key, field_ in _CACC_KEYS.items()
                     if key in ct})
    ego = ct.get("ego")
    das = None
    if ego is not None:
        if isinstance(ego, bool) or not isinstance(ego, int):
            raise ScenarioError(f"controller.ego must be an integer id, got {ego!r}")
        das = _build(DasParams, "controller",
                     **{k: _number(ct, k, "controller") for k in _DAS_KEYS if k in ct})
    elif any(k in ct for k in _DAS_KEYS):
        raise ScenarioError("collision-warning keys in [controller] require controller.ego")
    controller = ControllerSpec(cacc=cacc, das=das, ego_id=ego)

    vehicles = []
    vt = data.get("vehicle", {})
    if not isinstance(vt, dict) or not vt:
        raise ScenarioError("at least one [vehicle.<id>] table is required")
    for key, table in vt.items():
        try:
            vid = int(key)
        except ValueError:
            raise ScenarioError(f"vehicle table name must be an integer id, got 'vehicle.{key}'") from None
        where = f"vehicle.{key}"
        _check_keys(table, _VEHICLE_KEYS, where)
        for req in ("x", "y"):
            if req not in table:
                raise ScenarioError(f"{where}.{req} is required")
        state_kwargs = {k: _number(table, k, where) for k in
                        ("x", "y", "yaw", "v", "width", "length") if k in table}
        state = _build(VehicleState, where, id=vid, **state_kwargs)
        profile = table.get("profile")
        if profile == "urban":
            profile = leader_profile_urban()
        elif profile is not None:
            if not isinstance(profile, list) or not all(
                    isinstance(p, list) and len(p) == 2 for p in profile):
                raise ScenarioError(f"{where}.profile must be 'urban' or a list of [t, v] pairs")
            profile = _build(SpeedProfile, f"{where}.profile",
                             breakpoints=tuple(tuple(p) for p in profile))
        brake = table.get("brake_on_warning", False)
        if not isinstance(brake, bool):
            raise ScenarioError(f"{where}.brake_on_warning must be true or false")
        behavior = BehaviorSpec(
            kind=table.get("behavior", "idle"),
            profile=profile,
            gain=_number(table, "gain", where, 1.0),
            speed=_number(table, "speed", where),
            trigger_range=_number(table, "trigger_range", where),
            brake_on_warning=brake,
            reaction_time=_number(table, "reaction_time", where, 1.0),
        )
        vehicles.append(VehicleSpec(state=state, behavior=behavior))

    return Scenario(
        name=sc["name"],
        vehicles=tuple(vehicles),
        duration=_number(sc, "duration", "scenario"),
        dt=_number(sc, "dt", "scenario", 0.01),
        network=network,
        controller=controller,
        limits=limits,
        rng_seed=seed,
    )


def scenario_to_dict(s: Scenario) -> dict:
    lim = s.limits
    out: dict[str, Any] = {
        "scenario": {"name": s.name, "duration": s.duration, "dt": s.dt, "seed": s.rng_seed,
                     "a_max": lim.a_max, "a_min": lim.a_min,
                     "lane_blend_duration": lim.lane_blend_duration,
                     "lane_width": lim.lane_width},
        "network": {"topology": s.network.topology, "delay": s.network.delay},
    }
    if s.network.range_limit is not None:
        out["network"]["range"] = s.network.range_limit
    if s.network.order is not None:
        out["network"]["order"] = list(s.network.order)
    c = s.controller.cacc
    ctl: dict[str, Any] = {"kp": c.k_p, "kd": c.k_d, "headway": c.headway_h,
                           "standstill": c.standstill_d}
    if s.controller.ego_id is not None:
        ctl["ego"] = s.controller.ego_id
        das = s.controller.das or DasParams()
        ctl.update({k: getattr(das, k) for k in _DAS_KEYS})
    out["controller"] = ctl
    vehicles = {}
    for spec in s.vehicles:
        st, b = spec.state, spec.behavior
        row: dict[str, Any] = {"x": st.x, "y": st.y, "yaw": st.yaw, "v": st.v,
                               "width": st.width, "length": st.length, "behavior": b.kind,
                               "gain": b.gain, "brake_on_warning": b.brake_on_warning,
                               "reaction_time": b.reaction_time}
        if b.profile is not None:
            row["profile"] = [list(p) for p in b.profile.breakpoints]
        if b.speed is not None:
            row["speed"] = b.speed
        if b.trigger_range is not None:
            row["trigger_range"] = b.trigger_range
        vehicles[str(st.id)] = row
    out["vehicle"] = vehicles
    return out


def dumps_scenario(s: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(s))


def loads_scenario(text: str) -> Scenario:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"parse error: {exc}") from None
    return scenario_from_dict(data)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}") from None
    try:
        return loads_scenario(text)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def fixture_text(name: str) -> str:
    if name not in FIXTURES:
        raise ScenarioError(f"unknown built-in scenario {name!r}; choose from {FIXTURES}")
    return resources.files(__package__).joinpath("fixtures", f"{name}.toml").read_text("utf-8")


def builtin_scenario(name: str) -> Scenario:
    return loads_scenario(fixture_text(name))


def resolve_scenario(name_or_path: str) -> Scenario:
    """Load a scenario file, or a built-in fixture when given its bare name."""
    if name_or_path in FIXTURES and not Path(name_or_path).exists():
        return builtin_scenario(name_or_path)
    return load_scenario(name_or_path)


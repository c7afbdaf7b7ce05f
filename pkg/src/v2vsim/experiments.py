"""Canned experiments: delay sweep, four-car platoon, collision-warning runs."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .scenario import Scenario, builtin_scenario
from .sim import SimLog, run
from .stats import SummaryStats, pooled_std, summarize, velocity_difference_series

DEFAULT_DELAYS = (0.01, 0.1, 0.5, 1.0)
PLATOON_DELAYS = (0.01, 0.333)


@dataclass(frozen=True)
class SweepRow:
    delay: float
    stats: SummaryStats
    max_abs: float


def _leader_follower(s: Scenario) -> tuple[int, int]:
    if s.network.topology != "precedent" or len(s.vehicles) != 2:
        raise ValueError("delay sweep needs a two-vehicle scenario with a precedent topology")
    leader, follower = s.chain_order()
    return leader, follower


def sweep_point(base: Scenario, delay: float) -> SweepRow:
    leader, follower = _leader_follower(base)
    try:
        log = run(base.with_delay(delay))
    except Exception as exc:
        raise RuntimeError(f"delay {delay}: {exc}") from exc
    diff = velocity_difference_series(log, leader, follower)
    return SweepRow(delay=delay, stats=summarize(diff), max_abs=float(np.max(np.abs(diff))))


def sweep_delay(base: Scenario, delays: Sequence[float] = DEFAULT_DELAYS,
                workers: int = 1) -> list[SweepRow]:
    """One independent run per delay; rows come back in the order of ``delays``.

    Statistics are over the signed leader-minus-follower speed series;
    ``max_abs`` is its largest magnitude.
    """
    _leader_follower(base)
    if workers <= 1 or len(delays) <= 1:
        return [sweep_point(base, d) for d in delays]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(sweep_point, [base] * len(delays), delays))


@dataclass(frozen=True)
class PlatoonResult:
    delay: float
    log: SimLog
    gap_correlations: dict[tuple[int, int], float]
    spacing_error_pooled_std: float
    min_gap: float


def platoon(delay: float, base: Scenario | None = None) -> PlatoonResult:
    s = (base or builtin_scenario("platoon4")).with_delay(delay)
    log = run(s)
    followers = s.chain_order()[1:]
    gaps = {vid: log.series(vid, "gap_to_predecessor") for vid in followers}
    corr = np.corrcoef(np.array([gaps[v] for v in followers]))
    pairs = {}
    for i in range(len(followers)):
        for j in range(i + 1, len(followers)):
            pairs[(followers[i], followers[j])] = float(corr[i, j])
    errors = [log.series(vid, "spacing_error") for vid in followers]
    return PlatoonResult(
        delay=delay,
        log=log,
        gap_correlations=pairs,
        spacing_error_pooled_std=pooled_std(errors),
        min_gap=float(min(min(g) for g in gaps.values())),
    )

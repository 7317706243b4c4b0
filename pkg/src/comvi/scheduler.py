"""Select the comment sequence with maximum total score.

Constraints: entries must fit inside the video, one comment may appear
only once, and at most n_user comments may be on screen at any second.
The production path is a weighted-interval DP (states with bounded
concurrency for n_user > 1) plus a repair loop that resolves repeated
comments; the exact problem with the no-repeat constraint is a
job-interval-selection problem, so exhaustive optimality is only
claimed by the small-instance oracle.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Mapping

from .errors import ConfigError, ValidationError
from .mapping import TimedComment
from .scoring import PipelineConfig

__all__ = [
    "ScheduleEntry",
    "Schedule",
    "ORACLE_POOL_LIMIT",
    "overlap_count",
    "solve_base",
    "solve_concurrent",
    "oracle_exact",
    "validate_schedule",
]

# Scores are keyed by (comment_id, t) and readings by comment_id.
Scores = Mapping[tuple[str, int], float]
Readings = Mapping[str, int]


@dataclass(frozen=True, slots=True)
class ScheduleEntry:
    """One selected comment with its display window [start_s, start_s + duration_s)."""

    comment_id: str
    start_s: int
    duration_s: int
    score: float
    corr: float
    likes_norm: float

    def __post_init__(self) -> None:
        if self.start_s < 1:
            raise ValidationError(f"entry start_s must be >= 1, got {self.start_s}")
        if self.duration_s < 1:
            raise ValidationError(
                f"entry duration_s must be >= 1, got {self.duration_s}"
            )
        if self.score < 0.0:
            raise ValidationError(f"entry score must be >= 0, got {self.score}")
        if not 0.0 <= self.corr <= 1.0:
            raise ValidationError(f"entry corr must be in [0, 1], got {self.corr}")
        if not 0.0 <= self.likes_norm <= 1.0:
            raise ValidationError(
                f"entry likes_norm must be in [0, 1], got {self.likes_norm}"
            )

    @property
    def end_s(self) -> int:
        return self.start_s + self.duration_s


@dataclass(frozen=True)
class Schedule:
    """Entries sorted by start time, their score sum, and the run config."""

    entries: tuple[ScheduleEntry, ...]
    total_score: float
    config_snapshot: PipelineConfig

    @property
    def n(self) -> int:
        return len(self.entries)

    def __post_init__(self) -> None:
        total = sum(e.score for e in self.entries)
        if abs(total - self.total_score) > 1e-9:
            raise ValidationError(
                f"total_score {self.total_score} does not match entry sum {total}"
            )


def overlap_count(selected: list[ScheduleEntry], t_prime: int) -> int:
    """Entries still displayed at t_prime: start <= t_prime < start + duration.

    The end comparison is strict, so an entry whose display ends
    exactly at t_prime does not count.
    """
    return sum(
        1 for e in selected
        if e.start_s <= t_prime and e.start_s + e.duration_s > t_prime
    )


def _fit_pool(pool: list[TimedComment], readings: Readings,
              duration_s: int) -> list[TimedComment]:
    # A comment that cannot be fully read before the video ends is
    # never eligible.
    return [tc for tc in pool if tc.t + readings[tc.comment_id] <= duration_s]


def _wis_select(items: list[TimedComment], scores: Scores,
                readings: Readings) -> list[TimedComment]:
    """Weighted interval scheduling over end-sorted items.

    Ties in the DP prefer realizing the optimum with earlier-sorted
    items (earlier end, then earlier start, then smaller comment_id).
    """
    items = sorted(
        items,
        key=lambda tc: (tc.t + readings[tc.comment_id], tc.t, tc.comment_id),
    )
    n = len(items)
    starts = [tc.t for tc in items]
    ends = [tc.t + readings[tc.comment_id] for tc in items]
    weights = [scores[(tc.comment_id, tc.t)] for tc in items]
    # prev[i]: number of items (prefix length) ending no later than
    # item i starts; dp is 1-indexed over prefixes.
    prev = [bisect_right(ends, starts[i]) for i in range(n)]
    dp = [0.0] * (n + 1)
    for i in range(1, n + 1):
        dp[i] = max(dp[i - 1], weights[i - 1] + dp[prev[i - 1]])
    chosen: list[TimedComment] = []
    i = n
    while i > 0:
        if weights[i - 1] + dp[prev[i - 1]] > dp[i - 1]:
            chosen.append(items[i - 1])
            i = prev[i - 1]
        else:
            i -= 1
    chosen.reverse()
    return chosen


def _expire(state: tuple[int, ...], t: int | None) -> tuple[int, ...]:
    if t is None:
        return ()
    return tuple(e for e in state if e > t)


def _concurrent_select(items: list[TimedComment], scores: Scores,
                       readings: Readings, n_user: int) -> list[TimedComment]:
    """DP over start-sorted items; state is the tuple of active end times.

    A state at index i holds the end times (> t_i) of already-selected
    entries, at most n_user of them; an item is eligible while fewer
    than n_user are active. Ties prefer taking the earlier-sorted item.
    """
    items = sorted(
        items,
        key=lambda tc: (tc.t, tc.t + readings[tc.comment_id], tc.comment_id),
    )
    n = len(items)
    starts = [tc.t for tc in items]
    ends = [tc.t + readings[tc.comment_id] for tc in items]
    weights = [scores[(tc.comment_id, tc.t)] for tc in items]

    def next_start(i: int) -> int | None:
        return starts[i + 1] if i + 1 < n else None

    reach: list[set[tuple[int, ...]]] = [set() for _ in range(n + 1)]
    reach[0].add(())
    for i in range(n):
        t_next = next_start(i)
        for state in reach[i]:
            reach[i + 1].add(_expire(state, t_next))
            if len(state) < n_user:
                taken = tuple(sorted(state + (ends[i],)))
                reach[i + 1].add(_expire(taken, t_next))

    dp: list[dict[tuple[int, ...], float]] = [dict() for _ in range(n + 1)]
    for state in reach[n]:
        dp[n][state] = 0.0
    for i in range(n - 1, -1, -1):
        t_next = next_start(i)
        for state in reach[i]:
            best = dp[i + 1][_expire(state, t_next)]
            if len(state) < n_user:
                taken = tuple(sorted(state + (ends[i],)))
                value = weights[i] + dp[i + 1][_expire(taken, t_next)]
                if value > best:
                    best = value
            dp[i][state] = best

    chosen: list[TimedComment] = []
    state: tuple[int, ...] = ()
    for i in range(n):
        t_next = next_start(i)
        skip_value = dp[i + 1][_expire(state, t_next)]
        if len(state) < n_user:
            taken = tuple(sorted(state + (ends[i],)))
            take_value = weights[i] + dp[i + 1][_expire(taken, t_next)]
            if take_value >= skip_value:
                chosen.append(items[i])
                state = _expire(taken, t_next)
                continue
        state = _expire(state, t_next)
    return chosen


# Total relaxed-solver invocations one repair may spend exploring
# alternative keep choices before falling back to the greedy chain.
_REPAIR_NODE_BUDGET = 512


def _repair_duplicates(
    select: Callable[[list[TimedComment]], list[TimedComment]],
    pool: list[TimedComment],
    scores: Scores,
    budget: int = _REPAIR_NODE_BUDGET,
) -> list[TimedComment]:
    """Resolve repeat selections left by the relaxed solver.

    When the chosen set contains one comment several times, each way
    of keeping exactly one of that comment's pool instances (removing
    the rest) is explored depth-first and the best resulting total
    wins. Candidates are ordered highest-scoring selected instance
    first (ties: earliest start), so the first fully explored chain is
    the plain greedy repair; once the node budget is spent only that
    first candidate is followed, which also bounds worst-case cost.
    Ties between branch totals keep the earlier-explored branch,
    making the whole procedure deterministic.
    """
    seen: set[tuple[str, int]] = set()
    unique = [tc for tc in pool
              if (key := (tc.comment_id, tc.t)) not in seen
              and not seen.add(key)]
    best: list[TimedComment] = []
    best_total = -1.0
    remaining = budget

    def rank(tc: TimedComment) -> tuple[float, int]:
        return (-scores[(tc.comment_id, tc.t)], tc.t)

    def visit(active: list[TimedComment]) -> None:
        nonlocal best, best_total, remaining
        remaining -= 1
        chosen = select(active)
        by_id: dict[str, list[TimedComment]] = {}
        for tc in chosen:
            by_id.setdefault(tc.comment_id, []).append(tc)
        violating = sorted(cid for cid, tcs in by_id.items() if len(tcs) > 1)
        if not violating:
            total = sum(scores[(tc.comment_id, tc.t)] for tc in chosen)
            if total > best_total:
                best, best_total = chosen, total
            return
        cid = violating[0]
        selected = sorted(by_id[cid], key=rank)
        selected_ts = {tc.t for tc in selected}
        others = sorted((tc for tc in active
                         if tc.comment_id == cid and tc.t not in selected_ts),
                        key=rank)
        for i, keep in enumerate(selected + others):
            if i > 0 and remaining <= 0:
                break
            visit([tc for tc in active
                   if tc.comment_id != cid or tc.t == keep.t])

    visit(unique)
    return best


def _build_schedule(chosen: list[TimedComment], scores: Scores,
                    readings: Readings, likes_norm: Mapping[str, float] | None,
                    cfg: PipelineConfig) -> Schedule:
    likes = likes_norm or {}
    ordered = sorted(chosen, key=lambda tc: (tc.t, tc.comment_id))
    entries = tuple(
        ScheduleEntry(
            comment_id=tc.comment_id,
            start_s=tc.t,
            duration_s=readings[tc.comment_id],
            score=scores[(tc.comment_id, tc.t)],
            corr=tc.corr,
            likes_norm=likes.get(tc.comment_id, 0.0),
        )
        for tc in ordered
    )
    total = float(sum(e.score for e in entries))
    return Schedule(entries=entries, total_score=total, config_snapshot=cfg)


def solve_base(pool: list[TimedComment], scores: Scores, readings: Readings,
               duration_s: int, *, likes_norm: Mapping[str, float] | None = None,
               cfg: PipelineConfig | None = None) -> Schedule:
    """Non-overlapping selection (one comment on screen at a time)."""
    cfg = replace(cfg or PipelineConfig(), n_user=1)
    fit = _fit_pool(pool, readings, duration_s)
    chosen = _repair_duplicates(
        lambda items: _wis_select(items, scores, readings), fit, scores
    )
    return _build_schedule(chosen, scores, readings, likes_norm, cfg)


def solve_concurrent(pool: list[TimedComment], scores: Scores,
                     readings: Readings, duration_s: int, n_user: int, *,
                     likes_norm: Mapping[str, float] | None = None,
                     cfg: PipelineConfig | None = None) -> Schedule:
    """Selection allowing up to n_user simultaneously visible comments."""
    if n_user < 1:
        raise ConfigError(f"field 'n_user' must be >= 1, got {n_user}")
    cfg = replace(cfg or PipelineConfig(), n_user=n_user)
    fit = _fit_pool(pool, readings, duration_s)
    chosen = _repair_duplicates(
        lambda items: _concurrent_select(items, scores, readings, n_user),
        fit, scores,
    )
    return _build_schedule(chosen, scores, readings, likes_norm, cfg)


# Exhaustive search is exponential in the pool, so the oracle refuses
# anything larger than this.
ORACLE_POOL_LIMIT = 15


def oracle_exact(pool: list[TimedComment], scores: Scores, readings: Readings,
                 duration_s: int, n_user: int = 1, *,
                 likes_norm: Mapping[str, float] | None = None,
                 cfg: PipelineConfig | None = None) -> Schedule:
    """Maximum-total-score feasible schedule by exhaustive search.

    Memoized over (index, active end times, used duplicated ids); the
    no-repeat constraint is enforced directly instead of by repair.
    Ties prefer taking the earlier-sorted item, like the heuristics.
    """
    if len(pool) > ORACLE_POOL_LIMIT:
        raise ValueError(
            f"oracle_exact handles at most {ORACLE_POOL_LIMIT} pool entries, "
            f"got {len(pool)}"
        )
    if n_user < 1:
        raise ConfigError(f"field 'n_user' must be >= 1, got {n_user}")
    cfg = replace(cfg or PipelineConfig(), n_user=n_user)
    items = sorted(
        _fit_pool(pool, readings, duration_s),
        key=lambda tc: (tc.t, tc.t + readings[tc.comment_id], tc.comment_id),
    )
    n = len(items)
    starts = [tc.t for tc in items]
    ends = [tc.t + readings[tc.comment_id] for tc in items]
    weights = [scores[(tc.comment_id, tc.t)] for tc in items]
    counts: dict[str, int] = {}
    for tc in items:
        counts[tc.comment_id] = counts.get(tc.comment_id, 0) + 1
    duplicated = {cid for cid, k in counts.items() if k > 1}

    @lru_cache(maxsize=None)
    def best(i: int, active: tuple[int, ...], used: frozenset[str]) -> float:
        if i == n:
            return 0.0
        active = _expire(active, starts[i])
        value = best(i + 1, active, used)
        cid = items[i].comment_id
        if len(active) < n_user and cid not in used:
            used_next = used | {cid} if cid in duplicated else used
            taken = tuple(sorted(active + (ends[i],)))
            value = max(value, weights[i] + best(i + 1, taken, used_next))
        return value

    chosen: list[TimedComment] = []
    state: tuple[int, ...] = ()
    used: frozenset[str] = frozenset()
    for i in range(n):
        state = _expire(state, starts[i])
        skip_value = best(i + 1, state, used)
        cid = items[i].comment_id
        if len(state) < n_user and cid not in used:
            used_next = used | {cid} if cid in duplicated else used
            taken = tuple(sorted(state + (ends[i],)))
            take_value = weights[i] + best(i + 1, taken, used_next)
            if take_value >= skip_value:
                chosen.append(items[i])
                state = taken
                used = used_next
                continue
    best.cache_clear()
    return _build_schedule(chosen, scores, readings, likes_norm, cfg)


def validate_schedule(schedule: Schedule, duration_s: int) -> None:
    """Raise ValidationError unless every Schedule invariant holds.

    Checks entry ordering, distinct comments, fit inside the video,
    duration bounds from the config snapshot, the concurrency cap, and
    the total-score sum.
    """
    cfg = schedule.config_snapshot
    entries = list(schedule.entries)
    tau_hi = math.ceil(cfg.tau_max)
    seen: set[str] = set()
    prev_start = None
    for e in entries:
        if e.comment_id in seen:
            raise ValidationError(f"comment {e.comment_id!r} appears twice")
        seen.add(e.comment_id)
        if prev_start is not None and e.start_s < prev_start:
            raise ValidationError("entries are not sorted by start_s")
        prev_start = e.start_s
        if e.start_s + e.duration_s > duration_s:
            raise ValidationError(
                f"entry {e.comment_id!r} runs past the video end "
                f"({e.start_s} + {e.duration_s} > {duration_s})"
            )
        if e.duration_s > tau_hi:
            raise ValidationError(
                f"entry {e.comment_id!r} duration {e.duration_s} exceeds "
                f"ceil(tau_max) = {tau_hi}"
            )
    for e in entries:
        active = overlap_count(entries, e.start_s)
        if active > cfg.n_user:
            raise ValidationError(
                f"{active} entries visible at second {e.start_s}, "
                f"limit is {cfg.n_user}"
            )
    total = sum(e.score for e in entries)
    if abs(total - schedule.total_score) > 1e-9:
        raise ValidationError(
            f"total_score {schedule.total_score} does not match entry sum {total}"
        )

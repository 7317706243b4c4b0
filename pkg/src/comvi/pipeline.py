"""End-to-end orchestration: comments in, placed schedule out.

The stages run in a fixed order: query filter, dedupe, per-comment
reading times and normalized likes, correlation mapping, scoring, and
finally interval selection (single-slot or concurrent depending on
n_user). The result object keeps every intermediate the evaluation
and export layers need, so nothing is recomputed downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .curation import filter_by_query
from .ingest import Comment, ShotTrack, SubtitleTrack, VideoMeta, dedupe_comments
from .mapping import CorrelationGrid, TimedComment, correlation_grid, map_comments
from .scheduler import Schedule, solve_base, solve_concurrent
from .scoring import PipelineConfig, normalize_likes, reading_time, score
from .textsim import SimilarityProvider


@dataclass(frozen=True, slots=True)
class PipelineInputs:
    """Everything the pipeline consumes besides config and provider."""

    comments: tuple[Comment, ...]
    subtitles: SubtitleTrack
    shots: ShotTrack
    meta: VideoMeta

    def __post_init__(self) -> None:
        object.__setattr__(self, "comments", tuple(self.comments))


@dataclass(frozen=True, slots=True)
class PipelineResult:
    """A schedule plus the intermediates it was derived from.

    ``working`` is the post-filter, deduplicated comment list the rest
    of the stages operated on; ``pool`` the timed candidates that
    entered selection; ``scores``/``readings``/``likes_norm`` the
    per-candidate and per-comment values behind the schedule.
    """

    schedule: Schedule
    working: tuple[Comment, ...]
    pool: tuple[TimedComment, ...]
    grid: CorrelationGrid
    likes_norm: dict[str, float] = field(repr=False)
    readings: dict[str, int] = field(repr=False)
    scores: dict[tuple[str, int], float] = field(repr=False)


def run_pipeline(inputs: PipelineInputs, cfg: PipelineConfig,
                 provider: SimilarityProvider) -> PipelineResult:
    """Run every stage once and return the schedule with intermediates."""
    working = filter_by_query(list(inputs.comments), cfg.query, provider,
                              cfg.query_threshold)
    working = dedupe_comments(working)
    likes_norm = normalize_likes(working)
    readings = {
        c.id: reading_time(len(c.text), cfg.alpha_user, cfg.tau_max)
        for c in working
    }
    grid = correlation_grid(working, inputs.subtitles, inputs.shots,
                            inputs.meta, provider)
    pool = map_comments(working, inputs.subtitles, inputs.shots, inputs.meta,
                        cfg, provider, grid=grid)
    scores = {
        (tc.comment_id, tc.t): score(tc, likes_norm[tc.comment_id],
                                     readings[tc.comment_id], cfg)
        for tc in pool
    }
    if cfg.n_user == 1:
        schedule = solve_base(pool, scores, readings, inputs.meta.duration_s,
                              likes_norm=likes_norm, cfg=cfg)
    else:
        schedule = solve_concurrent(pool, scores, readings,
                                    inputs.meta.duration_s, cfg.n_user,
                                    likes_norm=likes_norm, cfg=cfg)
    return PipelineResult(
        schedule=schedule,
        working=tuple(working),
        pool=tuple(pool),
        grid=grid,
        likes_norm=likes_norm,
        readings=readings,
        scores=scores,
    )

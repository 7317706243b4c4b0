"""Map comments to the seconds whose audio-visual content they match.

For every (comment, second) pair the audio correlation (subtitle text)
and visual correlation (shot caption) combine as a root mean square,
the whole population is min-max normalized, and pairs above the
threshold become timed candidates. Explicit timestamp references in
comment text bypass the threshold entirely.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ParseError, SchemaError, ValidationError
from .ingest import (
    Comment,
    ShotTrack,
    SubtitleTrack,
    VideoMeta,
    extract_timestamp_refs,
    segment_at,
)
from .scoring import PipelineConfig
from .textsim import SimilarityProvider, cosine, embed_batch

__all__ = [
    "MappingSource",
    "TimedComment",
    "CorrelationGrid",
    "corr_audio",
    "corr_visual",
    "combine_rms",
    "norm_minmax",
    "correlation_grid",
    "map_comments",
    "timed_comments_to_json",
    "timed_comments_from_json",
]


class MappingSource(Enum):
    """How a timed comment earned its place in the pool."""

    THRESHOLD = "Threshold"
    TIMESTAMP_REF = "TimestampRef"


@dataclass(frozen=True, slots=True)
class TimedComment:
    """One comment anchored to one second of the video.

    ``corr`` is the normalized combined correlation; ``corr_audio`` and
    ``corr_visual`` are the raw clamped cosines that fed it.
    """

    comment_id: str
    t: int
    corr: float
    corr_audio: float
    corr_visual: float
    source: MappingSource

    def __post_init__(self) -> None:
        if self.t < 1:
            raise ValidationError(f"timed comment t must be >= 1, got {self.t}")
        for name in ("corr", "corr_audio", "corr_visual"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {value}")


def corr_audio(comment: Comment, subs: SubtitleTrack, t: int,
               provider: SimilarityProvider) -> float:
    """Clamped cosine between the comment and the subtitle at second t.

    Returns 0 when no segment contains t or the cosine is negative.
    """
    seg = segment_at(subs, t)
    if seg is None:
        return 0.0
    vec_c, vec_s = embed_batch(provider, [comment.text, seg.text])
    return max(0.0, cosine(vec_c, vec_s))


def corr_visual(comment: Comment, shots: ShotTrack, t: int,
                provider: SimilarityProvider) -> float:
    """Clamped cosine between the comment and the shot caption at second t."""
    shot = segment_at(shots, t)
    if shot is None:
        return 0.0
    vec_c, vec_s = embed_batch(provider, [comment.text, shot.caption])
    return max(0.0, cosine(vec_c, vec_s))


def combine_rms(a: float, v: float) -> float:
    """Root mean square of the audio and visual correlations."""
    return math.sqrt((a * a + v * v) / 2.0)


def norm_minmax(values: list[float]) -> list[float]:
    """Min-max normalize into [0, 1]; a constant list maps to all 0.5."""
    if not values:
        raise ValueError("norm_minmax requires a non-empty list")
    lo = min(values)
    hi = max(values)
    if hi == lo:
        return [0.5] * len(values)
    span = hi - lo
    return [(v - lo) / span for v in values]


@dataclass(frozen=True)
class CorrelationGrid:
    """Dense per-second correlations for every comment.

    Row i belongs to ``comment_ids[i]``; column j to second j + 1.
    ``corr`` holds normalized combined values, ``corr_audio`` and
    ``corr_visual`` the raw clamped cosines.
    """

    comment_ids: tuple[str, ...]
    duration_s: int
    corr: np.ndarray
    corr_audio: np.ndarray
    corr_visual: np.ndarray

    def row(self, comment_id: str) -> int:
        return self.comment_ids.index(comment_id)

    def value(self, comment_id: str, t: int) -> float:
        return float(self.corr[self.row(comment_id), t - 1])


def _interval_index(intervals, duration_s: int) -> np.ndarray:
    """Index of the first interval containing each second, -1 for none.

    Slot t of the result corresponds to second t; slot 0 is unused.
    """
    idx = np.full(duration_s + 1, -1, dtype=np.int64)
    # Write in reverse so the first interval in track order wins where
    # intervals overlap.
    for i in range(len(intervals) - 1, -1, -1):
        lo = max(1, math.ceil(intervals[i].start_s))
        hi = min(duration_s, math.ceil(intervals[i].end_s) - 1)
        if lo <= hi:
            idx[lo:hi + 1] = i
    return idx


def _normalized_rows(texts: list[str], provider: SimilarityProvider,
                     vectors: dict[str, np.ndarray]) -> np.ndarray:
    rows = np.stack([vectors[t] for t in texts]) if texts else \
        np.zeros((0, provider.dim))
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return rows / norms


def correlation_grid(comments: list[Comment], subs: SubtitleTrack,
                     shots: ShotTrack, meta: VideoMeta,
                     provider: SimilarityProvider) -> CorrelationGrid:
    """Compute the full (comment, second) correlation population.

    Exploits that the audio correlation is constant within one subtitle
    segment and the visual one within one shot: cosines are evaluated
    per (comment, interval) and expanded to seconds.
    """
    duration_s = meta.duration_s
    n_comments = len(comments)
    comment_texts = [c.text for c in comments]
    seg_texts = [s.text for s in subs.segments]
    shot_texts = [s.caption for s in shots.shots]
    unique = list(dict.fromkeys(comment_texts + seg_texts + shot_texts))
    vectors = {
        text: vec.values
        for text, vec in zip(unique, embed_batch(provider, unique))
    }

    comment_rows = _normalized_rows(comment_texts, provider, vectors)
    audio = np.zeros((n_comments, duration_s))
    if seg_texts and n_comments:
        seg_rows = _normalized_rows(seg_texts, provider, vectors)
        sim = np.clip(comment_rows @ seg_rows.T, 0.0, 1.0)
        seg_idx = _interval_index(subs.segments, duration_s)[1:]
        mask = seg_idx >= 0
        audio[:, mask] = sim[:, seg_idx[mask]]

    visual = np.zeros((n_comments, duration_s))
    if shot_texts and n_comments:
        shot_rows = _normalized_rows(shot_texts, provider, vectors)
        sim = np.clip(comment_rows @ shot_rows.T, 0.0, 1.0)
        shot_idx = _interval_index(shots.shots, duration_s)[1:]
        mask = shot_idx >= 0
        visual[:, mask] = sim[:, shot_idx[mask]]

    rms = np.sqrt((audio * audio + visual * visual) / 2.0)
    if rms.size == 0:
        normalized = rms
    else:
        lo = float(rms.min())
        hi = float(rms.max())
        if hi == lo:
            normalized = np.full_like(rms, 0.5)
        else:
            normalized = (rms - lo) / (hi - lo)

    for arr in (audio, visual, rms, normalized):
        arr.setflags(write=False)
    return CorrelationGrid(
        comment_ids=tuple(c.id for c in comments),
        duration_s=duration_s,
        corr=normalized,
        corr_audio=audio,
        corr_visual=visual,
    )


def map_comments(comments: list[Comment], subs: SubtitleTrack,
                 shots: ShotTrack, meta: VideoMeta, cfg: PipelineConfig,
                 provider: SimilarityProvider,
                 grid: CorrelationGrid | None = None) -> list[TimedComment]:
    """Emit the pool of timed candidates for already-deduped comments.

    A (comment, second) pair appears at most once: seconds named by a
    timestamp reference carry source TimestampRef and skip the
    threshold test; all other pairs need normalized corr strictly above
    cfg.corr_threshold. Pass a precomputed ``grid`` for these inputs to
    skip recomputing it.
    """
    if meta.duration_s < 1:
        raise ValidationError("video duration must be >= 1 second")
    if grid is None:
        grid = correlation_grid(comments, subs, shots, meta, provider)
    elif (grid.comment_ids != tuple(c.id for c in comments)
          or grid.duration_s != meta.duration_s):
        raise ValueError("precomputed grid does not match these inputs")
    out: list[TimedComment] = []
    for i, comment in enumerate(comments):
        refs = set(extract_timestamp_refs(comment.text, meta.duration_s))
        above = np.nonzero(grid.corr[i] > cfg.corr_threshold)[0] + 1
        for t in sorted(refs.union(above.tolist())):
            out.append(TimedComment(
                comment_id=comment.id,
                t=int(t),
                corr=float(grid.corr[i, t - 1]),
                corr_audio=float(grid.corr_audio[i, t - 1]),
                corr_visual=float(grid.corr_visual[i, t - 1]),
                source=(MappingSource.TIMESTAMP_REF if t in refs
                        else MappingSource.THRESHOLD),
            ))
    return out


def timed_comments_to_json(timed: list[TimedComment]) -> bytes:
    """Serialize a timed-comment pool for caching between stages."""
    records = [
        {
            "comment_id": tc.comment_id,
            "t": tc.t,
            "corr": tc.corr,
            "corr_audio": tc.corr_audio,
            "corr_visual": tc.corr_visual,
            "source": tc.source.value,
        }
        for tc in timed
    ]
    return (json.dumps(records, indent=2) + "\n").encode("utf-8")


def timed_comments_from_json(raw: bytes) -> list[TimedComment]:
    """Parse a pool dumped by :func:`timed_comments_to_json`."""
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"invalid timed-comment dump: {exc}") from None
    if not isinstance(data, list):
        raise SchemaError("timed-comment dump must be a JSON array")
    out: list[TimedComment] = []
    sources = {s.value: s for s in MappingSource}
    for i, item in enumerate(data):
        if not isinstance(item, dict):
            raise SchemaError(f"timed-comment record {i}: must be an object")
        try:
            source = sources[item["source"]]
            out.append(TimedComment(
                comment_id=item["comment_id"],
                t=item["t"],
                corr=item["corr"],
                corr_audio=item["corr_audio"],
                corr_visual=item["corr_visual"],
                source=source,
            ))
        except KeyError as exc:
            raise SchemaError(
                f"timed-comment record {i}: missing or unknown key {exc}"
            ) from None
    return out

"""Schedule serialization and condition-comparison evaluation.

Exports are canonical byte streams: the JSON export round-trips
through parse_schedule_json bit for bit, and the WebVTT export
re-parses with the subtitle reader reproducing every cue timing.
The evaluation half reruns the pipeline under ablated and baseline
conditions and reports correlation and like statistics per condition.
"""

from __future__ import annotations

import csv
import io
import json
import random
import re
from dataclasses import dataclass, replace

import numpy as np

from .errors import SchemaError, ParseError, ValidationError
from .ingest import Comment, extract_timestamp_refs
from .ingest import _fmt_vtt_time as fmt_vtt_time
from .pipeline import PipelineInputs, PipelineResult, run_pipeline
from .scheduler import Schedule, ScheduleEntry
from .scoring import PipelineConfig
from .textsim import SimilarityProvider

_ENTRY_KEYS = ("comment_id", "start_s", "duration_s", "score", "corr",
               "likes_norm", "text", "author_name", "like_count")
_NEWLINES_RE = re.compile(r"[\r\n]+")

CONDITION_NAMES = ("ComVi", "LikesAblated", "Random", "GroundTruth")


def _comment_index(comments) -> dict[str, Comment]:
    return {c.id: c for c in comments}


def _resolve(index: dict[str, Comment], comment_id: str) -> Comment:
    try:
        return index[comment_id]
    except KeyError:
        raise ValidationError(
            f"schedule entry references unknown comment id {comment_id!r}"
        ) from None


def export_json(schedule: Schedule, comments, duration_s: int) -> bytes:
    """Serialize a schedule with its comment payloads as canonical JSON.

    ``comments`` must cover every scheduled comment_id; extra comments
    are ignored. The output is byte-stable: exporting the result of
    parse_schedule_json reproduces the input exactly.
    """
    index = _comment_index(comments)
    entries = []
    for e in schedule.entries:
        c = _resolve(index, e.comment_id)
        entries.append({
            "comment_id": e.comment_id,
            "start_s": int(e.start_s),
            "duration_s": int(e.duration_s),
            "score": float(e.score),
            "corr": float(e.corr),
            "likes_norm": float(e.likes_norm),
            "text": c.text,
            "author_name": c.author_name,
            "like_count": int(c.like_count),
        })
    obj = {
        "version": 1,
        "video": {"duration_s": int(duration_s)},
        "config": schedule.config_snapshot.to_dict(),
        "entries": entries,
    }
    return (json.dumps(obj, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


@dataclass(frozen=True, slots=True)
class ParsedExport:
    """A schedule JSON document reconstructed into live objects."""

    schedule: Schedule
    comments: tuple[Comment, ...]
    duration_s: int


def _require(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise SchemaError(f"{where}: missing key {key!r}")
    value = obj[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"{where}: key {key!r} must be a number")
        return float(value)
    if kind is int and isinstance(value, bool):
        raise SchemaError(f"{where}: key {key!r} must be an integer")
    if not isinstance(value, kind):
        raise SchemaError(f"{where}: key {key!r} has wrong type")
    return value


def parse_schedule_json(raw: bytes) -> ParsedExport:
    """Parse bytes produced by export_json back into objects."""
    try:
        data = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"invalid schedule document: {exc}") from None
    if not isinstance(data, dict):
        raise SchemaError("schedule document must be a JSON object")
    if _require(data, "version", int, "document") != 1:
        raise SchemaError("unsupported schedule document version")
    video = _require(data, "video", dict, "document")
    duration_s = _require(video, "duration_s", int, "video")
    config = PipelineConfig.from_dict(_require(data, "config", dict,
                                               "document"))
    raw_entries = _require(data, "entries", list, "document")
    entries: list[ScheduleEntry] = []
    comments: list[Comment] = []
    total = 0.0
    for i, item in enumerate(raw_entries):
        where = f"entry {i}"
        if not isinstance(item, dict):
            raise SchemaError(f"{where}: must be an object")
        extra = sorted(set(item) - set(_ENTRY_KEYS))
        if extra:
            raise SchemaError(f"{where}: unexpected key {extra[0]!r}")
        entry = ScheduleEntry(
            comment_id=_require(item, "comment_id", str, where),
            start_s=_require(item, "start_s", int, where),
            duration_s=_require(item, "duration_s", int, where),
            score=_require(item, "score", float, where),
            corr=_require(item, "corr", float, where),
            likes_norm=_require(item, "likes_norm", float, where),
        )
        entries.append(entry)
        total += entry.score
        comments.append(Comment(
            id=entry.comment_id,
            text=_require(item, "text", str, where),
            like_count=_require(item, "like_count", int, where),
            author_name=_require(item, "author_name", str, where),
        ))
    schedule = Schedule(entries=tuple(entries), total_score=total,
                        config_snapshot=config)
    return ParsedExport(schedule=schedule, comments=tuple(comments),
                        duration_s=duration_s)


def export_webvtt(schedule: Schedule, comments) -> bytes:
    """Render the schedule as WebVTT overlay cues.

    Each entry becomes one cue: identifier line = comment_id, timing
    from start and start + duration at whole seconds, payload line 1
    the author credit with like count, line 2 the comment text with
    newlines flattened to spaces.
    """
    index = _comment_index(comments)
    lines = ["WEBVTT"]
    for e in schedule.entries:
        c = _resolve(index, e.comment_id)
        text = _NEWLINES_RE.sub(" ", c.text)
        lines.append("")
        lines.append(e.comment_id)
        lines.append(f"{fmt_vtt_time(float(e.start_s))} --> "
                     f"{fmt_vtt_time(float(e.end_s))}")
        lines.append(f"{_NEWLINES_RE.sub(' ', c.author_name)} "
                     f"(+{c.like_count})")
        if text.strip():
            lines.append(text)
    return ("\n".join(lines) + "\n").encode("utf-8")


def export_timeline_csv(schedule: Schedule) -> bytes:
    """Render the schedule as an RFC-4180 CSV timeline."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["comment_id", "start_s", "duration_s", "score", "corr",
                     "likes_norm"])
    for e in schedule.entries:
        writer.writerow([e.comment_id, e.start_s, e.duration_s,
                         f"{e.score:.6f}", f"{e.corr:.6f}",
                         f"{e.likes_norm:.6f}"])
    return buf.getvalue().encode("utf-8")


@dataclass(frozen=True, slots=True)
class EvalRow:
    """One placed comment inside an evaluation condition."""

    comment_id: str
    t: int
    corr: float
    likes_norm: float


@dataclass(frozen=True, slots=True)
class EvalCondition:
    """Per-condition placement rows plus their summary statistics."""

    name: str
    n: int
    corr_mean: float
    corr_sd: float
    likes_mean: float
    likes_sd: float
    rows: tuple[EvalRow, ...]

    def __post_init__(self) -> None:
        if self.name not in CONDITION_NAMES:
            raise ValidationError(f"unknown condition name {self.name!r}")
        if self.n != len(self.rows):
            raise ValidationError("condition n must match its row count")
        if self.corr_sd < 0.0 or self.likes_sd < 0.0:
            raise ValidationError("standard deviations must be >= 0")


@dataclass(frozen=True, slots=True)
class EvalReport:
    """All computed conditions for one corpus and config."""

    seed: int
    conditions: tuple[EvalCondition, ...]
    notes: tuple[str, ...] = ()

    def condition(self, name: str) -> EvalCondition | None:
        for cond in self.conditions:
            if cond.name == name:
                return cond
        return None


def _make_condition(name: str, rows: list[EvalRow]) -> EvalCondition:
    rows = sorted(rows, key=lambda r: (r.t, r.comment_id))
    corr = [r.corr for r in rows]
    likes = [r.likes_norm for r in rows]

    def mean(xs):
        return float(np.mean(xs)) if xs else 0.0

    def sd(xs):
        return float(np.std(xs)) if xs else 0.0

    return EvalCondition(name=name, n=len(rows), corr_mean=mean(corr),
                         corr_sd=sd(corr), likes_mean=mean(likes),
                         likes_sd=sd(likes), rows=tuple(rows))


def _schedule_rows(result: PipelineResult) -> list[EvalRow]:
    return [
        EvalRow(comment_id=e.comment_id, t=e.start_s, corr=e.corr,
                likes_norm=e.likes_norm)
        for e in result.schedule.entries
    ]


def eval_conditions(inputs: PipelineInputs, cfg: PipelineConfig,
                    provider: SimilarityProvider) -> EvalReport:
    """Compare the full pipeline against its reference conditions.

    ComVi is the pipeline as configured; LikesAblated reruns it with
    w_likes forced to 0; Random places a seeded uniform sample of the
    deduped comments at ComVi's exact timestamps; GroundTruth takes
    the timestamp-referenced comments with the highest correlation at
    their referenced seconds. Random and GroundTruth match ComVi's
    entry count when enough comments exist; shortfalls are noted.
    """
    comvi = run_pipeline(inputs, cfg, provider)
    ablated = run_pipeline(inputs, replace(cfg, w_likes=0.0), provider)
    n = comvi.schedule.n
    notes: list[str] = []
    conditions = [
        _make_condition("ComVi", _schedule_rows(comvi)),
        _make_condition("LikesAblated", _schedule_rows(ablated)),
    ]

    pool = list(comvi.working)
    k = min(n, len(pool))
    if k < n:
        notes.append(f"Random: only {k} of {n} comments available")
    rng = random.Random(cfg.seed)
    chosen = rng.sample(pool, k)
    timestamps = [e.start_s for e in comvi.schedule.entries[:k]]
    random_rows = [
        EvalRow(comment_id=c.id, t=t, corr=comvi.grid.value(c.id, t),
                likes_norm=comvi.likes_norm[c.id])
        for c, t in zip(chosen, timestamps)
    ]
    conditions.append(_make_condition("Random", random_rows))

    referenced: list[tuple[float, str, int]] = []
    for c in comvi.working:
        refs = extract_timestamp_refs(c.text, inputs.meta.duration_s)
        if not refs:
            continue
        values = [(comvi.grid.value(c.id, t), t) for t in refs]
        best_value = max(v for v, _ in values)
        best_t = min(t for v, t in values if v == best_value)
        referenced.append((best_value, c.id, best_t))
    if referenced:
        referenced.sort(key=lambda item: (-item[0], item[1]))
        k_gt = min(n, len(referenced))
        if k_gt < n:
            notes.append(
                f"GroundTruth: only {k_gt} of {n} referenced comments "
                f"available")
        gt_rows = [
            EvalRow(comment_id=cid, t=t, corr=value,
                    likes_norm=comvi.likes_norm[cid])
            for value, cid, t in referenced[:k_gt]
        ]
        conditions.append(_make_condition("GroundTruth", gt_rows))
    else:
        notes.append("GroundTruth: no timestamp-referenced comments")

    return EvalReport(seed=cfg.seed, conditions=tuple(conditions),
                      notes=tuple(notes))


def render_report(report: EvalReport) -> dict[str, bytes]:
    """Render a report as named files: one CSV per condition, one summary.

    The mapping keys are file names; an absent GroundTruth condition
    produces no CSV and a null summary entry. Output bytes depend only
    on the report contents.
    """
    files: dict[str, bytes] = {}
    summary_conditions: dict[str, object] = {}
    for name in CONDITION_NAMES:
        cond = report.condition(name)
        if cond is None:
            summary_conditions[name] = None
            continue
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["comment_id", "t", "corr", "likes_norm"])
        for row in cond.rows:
            writer.writerow([row.comment_id, row.t, f"{row.corr:.6f}",
                             f"{row.likes_norm:.6f}"])
        files[f"{name}.csv"] = buf.getvalue().encode("utf-8")
        summary_conditions[name] = {
            "n": cond.n,
            "corr_mean": cond.corr_mean,
            "corr_sd": cond.corr_sd,
            "likes_mean": cond.likes_mean,
            "likes_sd": cond.likes_sd,
        }
    summary = {
        "seed": report.seed,
        "conditions": summary_conditions,
        "notes": list(report.notes),
    }
    files["summary.json"] = (json.dumps(summary, indent=2,
                                        ensure_ascii=False) + "\n"
                             ).encode("utf-8")
    return files

"""Input types and parsers: comments, subtitles, shot captions, timestamps.

Comments arrive as JSON, subtitles as SRT or WebVTT, shot captions as
JSON. Parsers validate as they go and report failures with a 1-based
line number (subtitle dialects) or byte offset (JSON) so a bad file can
be fixed without guesswork.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import ParseError, SchemaError, ValidationError

__all__ = [
    "Comment",
    "SubtitleSegment",
    "SubtitleTrack",
    "Shot",
    "ShotTrack",
    "VideoMeta",
    "parse_comments",
    "dedupe_comments",
    "parse_subtitles",
    "parse_shots",
    "extract_timestamp_refs",
    "segment_at",
    "track_to_webvtt",
]


@dataclass(frozen=True, slots=True)
class Comment:
    """A single viewer comment.

    ``id`` must be non-empty and unique within a video (uniqueness is
    enforced by :func:`parse_comments`), ``text`` non-empty after
    trimming, ``like_count`` non-negative.
    """

    id: str
    text: str
    like_count: int
    author_name: str
    avatar_ref: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("comment id must be non-empty")
        if not self.text.strip():
            raise ValidationError(f"comment {self.id!r}: text is empty after trimming")
        if self.like_count < 0:
            raise ValidationError(
                f"comment {self.id!r}: like_count {self.like_count} is negative"
            )


@dataclass(frozen=True, slots=True)
class SubtitleSegment:
    """One subtitle cue. Times are seconds; start must precede end."""

    start_s: float
    end_s: float
    text: str

    def __post_init__(self) -> None:
        if self.start_s < 0:
            raise ValidationError(f"segment start {self.start_s} is negative")
        if self.end_s <= self.start_s:
            raise ValidationError(
                f"segment end {self.end_s} does not follow start {self.start_s}"
            )


@dataclass(frozen=True, slots=True)
class SubtitleTrack:
    """Subtitle segments sorted ascending by start; overlaps are allowed."""

    segments: tuple[SubtitleSegment, ...] = field(default=())

    def __post_init__(self) -> None:
        starts = [s.start_s for s in self.segments]
        if starts != sorted(starts):
            raise ValidationError("subtitle segments are not sorted by start_s")


@dataclass(frozen=True, slots=True)
class Shot:
    """One shot with its caption text. Times are seconds."""

    start_s: float
    end_s: float
    caption: str

    def __post_init__(self) -> None:
        if self.start_s < 0:
            raise ValidationError(f"shot start {self.start_s} is negative")
        if self.end_s <= self.start_s:
            raise ValidationError(
                f"shot end {self.end_s} does not follow start {self.start_s}"
            )


@dataclass(frozen=True, slots=True)
class ShotTrack:
    """Shots sorted ascending by start; shots must not overlap."""

    shots: tuple[Shot, ...] = field(default=())

    def __post_init__(self) -> None:
        prev: Shot | None = None
        for shot in self.shots:
            if prev is not None:
                if shot.start_s < prev.start_s:
                    raise ValidationError("shots are not sorted by start_s")
                if shot.start_s < prev.end_s:
                    raise ValidationError(
                        f"shot starting at {shot.start_s} overlaps the one "
                        f"ending at {prev.end_s}"
                    )
            prev = shot


@dataclass(frozen=True, slots=True)
class VideoMeta:
    """Video metadata. ``duration_s`` is whole seconds, at least 1."""

    duration_s: int
    title: str | None = None
    source_uri: str | None = None

    def __post_init__(self) -> None:
        if self.duration_s < 1:
            raise ValidationError(
                f"video duration_s must be >= 1, got {self.duration_s}"
            )


def _decode_utf8(raw: bytes) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError("invalid UTF-8", offset=exc.start) from None


def _load_json(raw: bytes) -> object:
    text = _decode_utf8(raw)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        # exc.pos counts characters; report the byte position instead.
        byte_pos = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(exc.msg, offset=byte_pos) from None


def _require_key(item: dict, key: str, where: str) -> object:
    if key not in item:
        raise SchemaError(f"{where}: missing required key {key!r}")
    return item[key]


def _require_str(value: object, key: str, where: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"{where}: key {key!r} must be a string")
    return value


def parse_comments(raw: bytes) -> list[Comment]:
    """Parse a JSON array of comment records, preserving input order.

    Each record needs ``id``, ``text``, ``like_count`` and
    ``author_name``; ``avatar_ref`` is optional. Unknown keys are
    ignored. Raises ParseError for bad bytes, SchemaError for missing
    or mistyped keys, ValidationError for negative like counts, empty
    text, or duplicate ids.
    """
    data = _load_json(raw)
    if not isinstance(data, list):
        raise SchemaError("top-level value must be an array of comment records")
    comments: list[Comment] = []
    seen_ids: set[str] = set()
    for i, item in enumerate(data):
        where = f"comment record {i}"
        if not isinstance(item, dict):
            raise SchemaError(f"{where}: must be an object")
        cid = _require_str(_require_key(item, "id", where), "id", where)
        text = _require_str(_require_key(item, "text", where), "text", where)
        likes = _require_key(item, "like_count", where)
        if isinstance(likes, bool) or not isinstance(likes, int):
            raise SchemaError(f"{where}: key 'like_count' must be an integer")
        author = _require_str(
            _require_key(item, "author_name", where), "author_name", where
        )
        avatar = item.get("avatar_ref")
        if avatar is not None and not isinstance(avatar, str):
            raise SchemaError(f"{where}: key 'avatar_ref' must be a string or null")
        if cid in seen_ids:
            raise ValidationError(f"duplicate comment id {cid!r}")
        seen_ids.add(cid)
        comments.append(
            Comment(id=cid, text=text, like_count=likes, author_name=author,
                    avatar_ref=avatar)
        )
    return comments


def dedupe_comments(comments: list[Comment]) -> list[Comment]:
    """Collapse byte-identical texts down to one comment each.

    The survivor is the instance with the most likes; on a tie the
    earliest one in input order wins. Survivors keep their relative
    input order. Texts are compared exactly, with no case folding or
    whitespace normalization.
    """
    best: dict[str, int] = {}
    for i, c in enumerate(comments):
        j = best.get(c.text)
        if j is None or c.like_count > comments[j].like_count:
            best[c.text] = i
    return [c for i, c in enumerate(comments) if best[c.text] == i]


# Refs inside comment text: H+:MM:SS or M+:SS, seconds always two
# digits 00-59, minutes capped at 59 only when hours are present. The
# lookarounds reject digits or colons butting against either end, so
# "1:02:03:04" and "12:345" match nothing at all.
_TIMESTAMP_REF_RE = re.compile(
    r"(?<![0-9:])(?:([0-9]+):([0-5][0-9]):([0-5][0-9])|([0-9]+):([0-5][0-9]))(?![0-9:])"
)


def extract_timestamp_refs(text: str, duration_s: int) -> list[int]:
    """Extract explicit playback timestamps from comment text.

    Returns whole seconds in first-occurrence order, deduplicated, and
    restricted to [1, duration_s]; anything outside that range is
    dropped.
    """
    refs: list[int] = []
    seen: set[int] = set()
    for m in _TIMESTAMP_REF_RE.finditer(text):
        if m.group(1) is not None:
            t = int(m.group(1)) * 3600 + int(m.group(2)) * 60 + int(m.group(3))
        else:
            t = int(m.group(4)) * 60 + int(m.group(5))
        if 1 <= t <= duration_s and t not in seen:
            seen.add(t)
            refs.append(t)
    return refs


_SRT_TIME_RE = re.compile(r"^(\d{2,}):([0-5]\d):([0-5]\d),(\d{3})$")
_VTT_TIME_RE = re.compile(r"^(\d{2,}):([0-5]\d):([0-5]\d)\.(\d{3})$")
_TAG_RE = re.compile(r"<[^>]*>")


def _parse_time(token: str, pattern: re.Pattern[str], line_no: int) -> float:
    m = pattern.match(token)
    if m is None:
        raise ParseError(f"malformed timestamp {token!r}", line=line_no)
    h, mi, s, ms = (int(g) for g in m.groups())
    return h * 3600 + mi * 60 + s + ms / 1000.0


def _clean_cue_text(lines: list[str]) -> str:
    cleaned = [_TAG_RE.sub("", ln).strip() for ln in lines]
    return " ".join(part for part in cleaned if part)


def _iter_blocks(text: str) -> list[tuple[int, list[str]]]:
    """Split into blank-line-separated blocks, keeping 1-based line numbers."""
    blocks: list[tuple[int, list[str]]] = []
    current: list[str] = []
    start = 1
    for i, line in enumerate(text.split("\n"), start=1):
        if line.strip() == "":
            if current:
                blocks.append((start, current))
                current = []
        else:
            if not current:
                start = i
            current.append(line)
    if current:
        blocks.append((start, current))
    return blocks


def _parse_timing_line(line: str, line_no: int, pattern: re.Pattern[str],
                       allow_settings: bool) -> tuple[float, float]:
    if "-->" not in line:
        raise ParseError("expected cue timing line with '-->'", line=line_no)
    left, _, right = line.partition("-->")
    start_tok = left.strip()
    right = right.strip()
    if allow_settings:
        # WebVTT permits cue settings after the end timestamp.
        end_tok = right.split()[0] if right else ""
    else:
        end_tok = right
    start_s = _parse_time(start_tok, pattern, line_no)
    end_s = _parse_time(end_tok, pattern, line_no)
    if end_s <= start_s:
        raise ValidationError(
            f"line {line_no}: cue end {end_tok} does not follow start {start_tok}"
        )
    return start_s, end_s


def _parse_srt(text: str) -> list[SubtitleSegment]:
    segments: list[SubtitleSegment] = []
    for start_line, lines in _iter_blocks(text):
        if not lines[0].strip().isdigit():
            raise ParseError("expected numeric cue index", line=start_line)
        if len(lines) < 2:
            raise ParseError("cue is missing its timing line", line=start_line)
        start_s, end_s = _parse_timing_line(
            lines[1].strip(), start_line + 1, _SRT_TIME_RE, allow_settings=False
        )
        segments.append(
            SubtitleSegment(start_s=start_s, end_s=end_s,
                            text=_clean_cue_text(lines[2:]))
        )
    return segments


def _parse_vtt(text: str) -> list[SubtitleSegment]:
    blocks = _iter_blocks(text)
    if not blocks or blocks[0][0] != 1 or not blocks[0][1][0].startswith("WEBVTT"):
        raise ParseError("missing WEBVTT header", line=1)
    segments: list[SubtitleSegment] = []
    for start_line, lines in blocks[1:]:
        if lines[0].split(None, 1)[0] in ("NOTE", "STYLE", "REGION"):
            continue
        idx = 0
        if "-->" not in lines[0]:
            idx = 1  # first line is a cue identifier
            if len(lines) < 2:
                raise ParseError("expected cue timing line with '-->'",
                                 line=start_line)
        start_s, end_s = _parse_timing_line(
            lines[idx].strip(), start_line + idx, _VTT_TIME_RE, allow_settings=True
        )
        segments.append(
            SubtitleSegment(start_s=start_s, end_s=end_s,
                            text=_clean_cue_text(lines[idx + 1:]))
        )
    return segments


def parse_subtitles(raw: bytes, format: str) -> SubtitleTrack:
    """Parse SRT or WebVTT bytes into a track sorted by start time.

    ``format`` selects the dialect, "srt" or "webvtt"; each accepts
    only its own millisecond separator (comma vs dot). Styling tags are
    stripped and multi-line cue text is joined with single spaces.
    Parse failures carry the offending line number.
    """
    if format not in ("srt", "webvtt"):
        raise ValueError(f"unknown subtitle format {format!r}")
    text = _decode_utf8(raw)
    if text.startswith("﻿"):
        text = text[1:]
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    segments = _parse_srt(text) if format == "srt" else _parse_vtt(text)
    segments.sort(key=lambda s: s.start_s)
    return SubtitleTrack(segments=tuple(segments))


def parse_shots(raw: bytes) -> ShotTrack:
    """Parse a JSON array of shot records into a sorted ShotTrack.

    Each record needs numeric ``start_s`` and ``end_s`` plus a string
    ``caption``. Shots are sorted by start and must not overlap.
    """
    data = _load_json(raw)
    if not isinstance(data, list):
        raise SchemaError("top-level value must be an array of shot records")
    shots: list[Shot] = []
    for i, item in enumerate(data):
        where = f"shot record {i}"
        if not isinstance(item, dict):
            raise SchemaError(f"{where}: must be an object")
        bounds: dict[str, float] = {}
        for key in ("start_s", "end_s"):
            value = _require_key(item, key, where)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise SchemaError(f"{where}: key {key!r} must be a number")
            bounds[key] = float(value)
        caption = _require_str(_require_key(item, "caption", where), "caption", where)
        shots.append(Shot(start_s=bounds["start_s"], end_s=bounds["end_s"],
                          caption=caption))
    shots.sort(key=lambda s: s.start_s)
    return ShotTrack(shots=tuple(shots))


def segment_at(track: SubtitleTrack | ShotTrack, t: float):
    """Return the first interval of ``track`` containing time ``t``.

    Containment is half-open: start_s <= t < end_s. Returns None when
    no interval contains ``t``. With overlapping subtitle segments the
    earliest one in track order wins.
    """
    intervals = track.segments if isinstance(track, SubtitleTrack) else track.shots
    for seg in intervals:
        if seg.start_s > t:
            break
        if t < seg.end_s:
            return seg
    return None


def _fmt_vtt_time(seconds: float) -> str:
    ms = int(round(seconds * 1000))
    h, rem = divmod(ms, 3_600_000)
    mi, rem = divmod(rem, 60_000)
    s, ms = divmod(rem, 1000)
    return f"{h:02d}:{mi:02d}:{s:02d}.{ms:03d}"


def track_to_webvtt(track: SubtitleTrack) -> bytes:
    """Serialize a subtitle track as WebVTT.

    Re-parsing the output reproduces the segment boundaries to
    millisecond precision.
    """
    parts = ["WEBVTT", ""]
    for seg in track.segments:
        parts.append(f"{_fmt_vtt_time(seg.start_s)} --> {_fmt_vtt_time(seg.end_s)}")
        text = " ".join(seg.text.split())
        if text:
            parts.append(text)
        parts.append("")
    return "\n".join(parts).encode("utf-8")

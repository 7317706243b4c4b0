"""Schedule viewer comments onto video playback timestamps.

The package ingests a video's comments, subtitles, and shot captions,
maps each comment to the seconds where its text correlates with what
is on screen, scores the mapped candidates, and solves a scheduling
problem so the selected comments can be displayed without repeats and
within a bounded number of concurrent slots.
"""

from .errors import (
    ComviError,
    ConfigError,
    ParseError,
    ProviderError,
    SchemaError,
    TransportError,
    ValidationError,
)
from .ingest import (
    Comment,
    Shot,
    ShotTrack,
    SubtitleSegment,
    SubtitleTrack,
    VideoMeta,
    dedupe_comments,
    extract_timestamp_refs,
    parse_comments,
    parse_shots,
    parse_subtitles,
)
from .textsim import LocalHashingProvider, RemoteProvider, cosine, local_embed
from .scoring import PipelineConfig, fit_boxcox_lambda, normalize_likes, reading_time
from .mapping import CorrelationGrid, MappingSource, TimedComment, map_comments
from .scheduler import (
    Schedule,
    ScheduleEntry,
    solve_base,
    solve_concurrent,
    validate_schedule,
)
from .curation import filter_by_query, resolve_config
from .pipeline import PipelineInputs, PipelineResult, run_pipeline
from .export_eval import (
    EvalCondition,
    EvalReport,
    eval_conditions,
    export_json,
    export_timeline_csv,
    export_webvtt,
    parse_schedule_json,
    render_report,
)

__version__ = "0.1.0"

__all__ = [
    "ComviError", "ConfigError", "ParseError", "ProviderError",
    "SchemaError", "TransportError", "ValidationError",
    "Comment", "Shot", "ShotTrack", "SubtitleSegment", "SubtitleTrack",
    "VideoMeta", "dedupe_comments", "extract_timestamp_refs",
    "parse_comments", "parse_shots", "parse_subtitles",
    "LocalHashingProvider", "RemoteProvider", "cosine", "local_embed",
    "PipelineConfig", "fit_boxcox_lambda", "normalize_likes", "reading_time",
    "CorrelationGrid", "MappingSource", "TimedComment", "map_comments",
    "Schedule", "ScheduleEntry", "solve_base", "solve_concurrent",
    "validate_schedule",
    "filter_by_query", "resolve_config",
    "PipelineInputs", "PipelineResult", "run_pipeline",
    "EvalCondition", "EvalReport", "eval_conditions", "export_json",
    "export_timeline_csv", "export_webvtt", "parse_schedule_json",
    "render_report",
    "__version__",
]

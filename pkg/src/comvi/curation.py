"""Query-driven comment filtering and layered config resolution.

Both steps run before mapping: the filter narrows the working set of
comments, and config resolution merges defaults, an optional JSON
config file, and command-line overrides into one validated
PipelineConfig.
"""

from __future__ import annotations

import json
from typing import Mapping

from .errors import ConfigError
from .ingest import Comment
from .scoring import PipelineConfig
from .textsim import SimilarityProvider, cosine, embed_batch


def filter_by_query(comments: list[Comment], query: str | None,
                    provider: SimilarityProvider,
                    threshold: float) -> list[Comment]:
    """Keep the comments semantically close to a free-text query.

    A comment survives when cosine(embed(query), embed(text)) >=
    threshold; the comparison is inclusive so a comment identical to
    the query always passes. Order is preserved. A None query disables
    filtering and returns a copy of the input list.
    """
    if query is None:
        return list(comments)
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError("field 'query_threshold' must be in [0, 1]")
    vectors = embed_batch(provider, [query] + [c.text for c in comments])
    query_vec = vectors[0]
    return [
        c for c, vec in zip(comments, vectors[1:])
        if cosine(query_vec, vec) >= threshold
    ]


def resolve_config(file: bytes | None,
                   flags: Mapping[str, object]) -> PipelineConfig:
    """Merge config layers into a validated PipelineConfig.

    Precedence is defaults, then the JSON config file, then flags;
    later layers win per field. ``flags`` entries whose value is None
    are treated as "not given" so CLI code can pass its argparse
    namespace through unfiltered. Unknown field names and invalid
    values raise ConfigError naming the offender.
    """
    merged: dict[str, object] = {}
    if file is not None:
        try:
            data = json.loads(file.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must be a JSON object")
        merged.update(data)
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    return PipelineConfig.from_dict(merged)

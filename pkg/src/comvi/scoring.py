"""Reading times, Box-Cox-normalized like values, and candidate scores.

Like counts follow a long-tailed distribution, so raw counts are
Box-Cox transformed with a fitted exponent before min-max
normalization; zero-like comments sit outside the transform (it is
defined on positive values only) and are pinned to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import TYPE_CHECKING, Mapping

import numpy as np

from .errors import ConfigError

if TYPE_CHECKING:
    from .ingest import Comment
    from .mapping import TimedComment

__all__ = [
    "PipelineConfig",
    "BoxCoxFit",
    "reading_time",
    "boxcox",
    "fit_boxcox_lambda",
    "normalize_likes",
    "score",
]


@dataclass(frozen=True, slots=True)
class PipelineConfig:
    """Tunable parameters for one pipeline run.

    ``alpha_user`` is reading speed in seconds per character,
    ``tau_max`` the display-duration cap, ``w_corr``/``w_likes`` the
    score weights, ``n_user`` the number of comments allowed on screen
    at once, and ``query``/``query_threshold`` the optional semantic
    comment filter. ``seed`` feeds every randomized procedure.
    Validation happens at construction, so replace()-derived copies are
    checked too.
    """

    alpha_user: float = 0.068
    tau_max: float = 6.0
    w_corr: float = 2.0
    w_likes: float = 1.0
    n_user: int = 1
    corr_threshold: float = 0.3
    query_threshold: float = 0.6
    query: str | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        def _number(name: str, value: object) -> float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"field {name!r} must be a number")
            if not math.isfinite(value):
                raise ConfigError(f"field {name!r} must be finite")
            return float(value)

        if _number("alpha_user", self.alpha_user) <= 0.0:
            raise ConfigError("field 'alpha_user' must be > 0")
        if _number("tau_max", self.tau_max) < 1.0:
            raise ConfigError("field 'tau_max' must be >= 1")
        if _number("w_corr", self.w_corr) < 0.0:
            raise ConfigError("field 'w_corr' must be >= 0")
        if _number("w_likes", self.w_likes) < 0.0:
            raise ConfigError("field 'w_likes' must be >= 0")
        if isinstance(self.n_user, bool) or not isinstance(self.n_user, int):
            raise ConfigError("field 'n_user' must be an integer")
        if self.n_user < 1:
            raise ConfigError("field 'n_user' must be >= 1")
        threshold = _number("corr_threshold", self.corr_threshold)
        if not 0.0 <= threshold < 1.0:
            raise ConfigError("field 'corr_threshold' must be in [0, 1)")
        if not 0.0 <= _number("query_threshold", self.query_threshold) <= 1.0:
            raise ConfigError("field 'query_threshold' must be in [0, 1]")
        if self.query is not None and not isinstance(self.query, str):
            raise ConfigError("field 'query' must be a string or null")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ConfigError("field 'seed' must be an integer")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("field 'seed' must fit in 64 bits")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown config field {key!r}")
        return cls(**dict(data))


@dataclass(frozen=True, slots=True)
class BoxCoxFit:
    """Result of the profile-likelihood search for the transform exponent."""

    lam: float
    log_likelihood: float
    search_lo: float
    search_hi: float

    def __post_init__(self) -> None:
        if not self.search_lo <= self.lam <= self.search_hi:
            raise ConfigError(
                f"fitted lam {self.lam} outside [{self.search_lo}, {self.search_hi}]"
            )
        if not math.isfinite(self.log_likelihood):
            raise ConfigError("log_likelihood must be finite")


def reading_time(char_len: int, alpha: float, tau_max: float) -> int:
    """Seconds needed to read char_len characters at alpha s/char.

    ceil(min(alpha * char_len, tau_max)), never below one second.
    """
    raw = min(alpha * char_len, tau_max)
    # Round away float artifacts (0.05 * 40 = 2.0000000000000004)
    # before the ceiling so exact products stay exact.
    seconds = math.ceil(round(raw, 9))
    return max(1, seconds)


def boxcox(l: float, lam: float) -> float:
    """Box-Cox transform of a positive value: (l^lam - 1)/lam, ln at 0."""
    if l <= 0.0:
        raise ValueError(f"boxcox requires l > 0, got {l}")
    if lam == 0.0:
        return math.log(l)
    return (l ** lam - 1.0) / lam


def _boxcox_log_likelihood(values: np.ndarray, log_values: np.ndarray,
                           lam: float) -> float:
    if lam == 0.0:
        transformed = log_values
    else:
        transformed = (np.power(values, lam) - 1.0) / lam
    variance = float(np.var(transformed))
    if variance <= 0.0 or not np.isfinite(variance):
        return -math.inf
    n = values.shape[0]
    return -0.5 * n * math.log(variance) + (lam - 1.0) * float(log_values.sum())


def fit_boxcox_lambda(values: list[float], lo: float = -5.0,
                      hi: float = 5.0) -> BoxCoxFit:
    """Maximize the Box-Cox profile log-likelihood over [lo, hi].

    LL(lam) = -(n/2) ln(var of transformed values) + (lam - 1) sum(ln l).
    A coarse scan brackets the maximum, then golden-section refines it
    to a tolerance of 1e-4 in lam.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0 or np.any(arr <= 0.0):
        raise ValueError("fit_boxcox_lambda requires positive values")
    if np.unique(arr).size < 2:
        raise ValueError(
            "fit_boxcox_lambda requires at least 2 distinct values "
            "(variance would be 0)"
        )
    log_arr = np.log(arr)

    def ll(lam: float) -> float:
        return _boxcox_log_likelihood(arr, log_arr, lam)

    grid = np.linspace(lo, hi, 201)
    scores = [ll(float(g)) for g in grid]
    k = int(np.argmax(scores))
    a = float(grid[max(0, k - 1)])
    b = float(grid[min(len(grid) - 1, k + 1)])

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    while b - a > 1e-4:
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        if ll(c) >= ll(d):
            b = d
        else:
            a = c
    lam = (a + b) / 2.0
    return BoxCoxFit(lam=lam, log_likelihood=ll(lam), search_lo=lo, search_hi=hi)


def normalize_likes(comments: "list[Comment]") -> dict[str, float]:
    """Map comment ids to like values normalized into [0, 1].

    Zero-like comments map to 0. Positive counts are Box-Cox
    transformed with the fitted exponent, then min-max normalized over
    the transformed positive set. With fewer than two distinct positive
    counts the fit is undefined, so every positive count maps to 1.0.
    """
    out = {c.id: 0.0 for c in comments}
    positive = [(c.id, float(c.like_count)) for c in comments if c.like_count > 0]
    if not positive:
        return out
    raw = [v for _, v in positive]
    if len(set(raw)) < 2:
        for cid, _ in positive:
            out[cid] = 1.0
        return out
    fit = fit_boxcox_lambda(raw)
    transformed = [boxcox(v, fit.lam) for v in raw]
    t_min = min(transformed)
    t_max = max(transformed)
    for (cid, _), tv in zip(positive, transformed):
        out[cid] = (tv - t_min) / (t_max - t_min)
    return out


def score(tc: "TimedComment", likes_norm: float, reading: int,
          cfg: PipelineConfig) -> float:
    """Selection score: (w_corr * corr + w_likes * likes_norm) * reading."""
    return (cfg.w_corr * tc.corr + cfg.w_likes * likes_norm) * reading

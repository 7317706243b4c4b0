"""Tests for query filtering and layered config resolution."""

import json

import numpy as np
import pytest

from comvi.curation import filter_by_query, resolve_config
from comvi.errors import ConfigError
from comvi.ingest import Comment
from comvi.scoring import PipelineConfig
from comvi.textsim import LocalHashingProvider


def make_comment(cid, text, likes=0):
    return Comment(id=cid, text=text, like_count=likes, author_name="a")


def buckets(provider, text):
    """Nonzero feature indices of the provider's embedding of text."""
    return set(np.nonzero(provider.embed(text).values)[0].tolist())


class TestFilterByQuery:
    def test_identical_text_kept(self):
        provider = LocalHashingProvider()
        comments = [make_comment("c1", "the goal at minute ninety")]
        kept = filter_by_query(comments, "the goal at minute ninety",
                               provider, 0.6)
        assert kept == comments

    def test_disjoint_tokens_removed(self):
        provider = LocalHashingProvider()
        query = "orchestra rehearsal tonight"
        other = "quarterly budget spreadsheet"
        # The removal claim only holds if no feature-hash bucket is
        # shared, so establish that before asserting.
        assert buckets(provider, query).isdisjoint(buckets(provider, other))
        kept = filter_by_query([make_comment("c1", other)], query,
                               provider, 0.6)
        assert kept == []

    def test_none_query_is_passthrough(self):
        provider = LocalHashingProvider()
        comments = [make_comment("c1", "anything"), make_comment("c2", "else")]
        out = filter_by_query(comments, None, provider, 0.6)
        assert out == comments
        assert out is not comments

    def test_subset_and_order_preserved(self):
        provider = LocalHashingProvider()
        comments = [
            make_comment("c1", "violin solo in the concert hall"),
            make_comment("c2", "tax return deadline"),
            make_comment("c3", "concert hall acoustics are great"),
            make_comment("c4", "concert tonight"),
        ]
        kept = filter_by_query(comments, "concert hall", provider, 0.3)
        kept_ids = [c.id for c in kept]
        assert set(kept_ids) <= {c.id for c in comments}
        positions = {c.id: i for i, c in enumerate(comments)}
        assert kept_ids == sorted(kept_ids, key=positions.__getitem__)
        assert "c2" not in kept_ids

    def test_threshold_zero_keeps_everything(self):
        provider = LocalHashingProvider()
        comments = [make_comment(f"c{i}", t) for i, t in enumerate(
            ["apples", "barnacles on the hull", "unrelated words entirely"])]
        assert filter_by_query(comments, "zebra", provider, 0.0) == comments

    def test_empty_input(self):
        provider = LocalHashingProvider()
        assert filter_by_query([], "anything", provider, 0.6) == []

    @pytest.mark.parametrize("bad", [-0.1, 1.5])
    def test_threshold_out_of_range(self, bad):
        provider = LocalHashingProvider()
        with pytest.raises(ConfigError, match="query_threshold"):
            filter_by_query([make_comment("c1", "x")], "x", provider, bad)

    def _random_corpus(self, rng, n):
        vocab = [f"word{k}" for k in range(12)]
        out = []
        for i in range(n):
            words = [vocab[rng.integers(0, len(vocab))]
                     for _ in range(int(rng.integers(1, 6)))]
            out.append(make_comment(f"c{i}", " ".join(words)))
        return out

    def test_idempotent(self):
        provider = LocalHashingProvider()
        rng = np.random.default_rng(7)
        for _ in range(20):
            comments = self._random_corpus(rng, 8)
            query = "word0 word3 word7"
            once = filter_by_query(comments, query, provider, 0.3)
            twice = filter_by_query(once, query, provider, 0.3)
            assert twice == once

    def test_antitone_in_threshold(self):
        provider = LocalHashingProvider()
        rng = np.random.default_rng(11)
        for _ in range(20):
            comments = self._random_corpus(rng, 10)
            query = "word1 word4"
            loose = {c.id for c in
                     filter_by_query(comments, query, provider, 0.2)}
            tight = {c.id for c in
                     filter_by_query(comments, query, provider, 0.7)}
            assert tight <= loose


class TestResolveConfig:
    def test_no_file_no_flags_gives_defaults(self):
        cfg = resolve_config(None, {})
        assert cfg == PipelineConfig()
        assert cfg.alpha_user == 0.068
        assert cfg.tau_max == 6.0
        assert cfg.w_corr == 2.0
        assert cfg.w_likes == 1.0
        assert cfg.n_user == 1
        assert cfg.corr_threshold == 0.3
        assert cfg.query_threshold == 0.6

    def test_file_overrides_defaults(self):
        raw = json.dumps({"alpha_user": 0.088, "n_user": 2}).encode()
        cfg = resolve_config(raw, {})
        assert cfg.alpha_user == 0.088
        assert cfg.n_user == 2
        assert cfg.tau_max == 6.0

    def test_flags_override_file(self):
        raw = json.dumps({"alpha_user": 0.088}).encode()
        cfg = resolve_config(raw, {"alpha_user": 0.048})
        assert cfg.alpha_user == 0.048

    def test_none_valued_flags_are_skipped(self):
        raw = json.dumps({"w_likes": 3.0}).encode()
        cfg = resolve_config(raw, {"w_likes": None, "w_corr": None})
        assert cfg.w_likes == 3.0
        assert cfg.w_corr == 2.0

    def test_invalid_value_names_field(self):
        with pytest.raises(ConfigError, match="n_user"):
            resolve_config(None, {"n_user": 0})

    def test_unknown_file_key_rejected(self):
        raw = json.dumps({"alphauser": 0.05}).encode()
        with pytest.raises(ConfigError, match="alphauser"):
            resolve_config(raw, {})

    def test_unknown_flag_key_rejected(self):
        with pytest.raises(ConfigError, match="speed"):
            resolve_config(None, {"speed": 2.0})

    def test_malformed_json_rejected(self):
        with pytest.raises(ConfigError, match="JSON"):
            resolve_config(b"{not json", {})

    def test_non_object_json_rejected(self):
        with pytest.raises(ConfigError, match="object"):
            resolve_config(b"[1, 2]", {})

    def test_deterministic(self):
        raw = json.dumps({"alpha_user": 0.05, "seed": 3}).encode()
        flags = {"w_corr": 1.5}
        assert resolve_config(raw, flags) == resolve_config(raw, flags)

import csv
import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emoxgen.corpus import (
    EKMAN_GROUPS,
    GO_EMOTIONS,
    DatasetSpec,
    LabeledExample,
    clean_text,
    load_dataset,
    map_to_ekman,
    parse_predicate,
    read_jsonl,
    reduce_single_label,
    split,
    synth_generate,
    write_benchmark,
    write_jsonl,
)
from emoxgen.corpus.synth import ANGER_FAMILY
from emoxgen.errors import ConfigError, DataError, SchemaError, TaxonomyError


class TestCleanText:
    def test_mention_and_url(self):
        assert clean_text("@bob you suck http://t.co/x") == "you suck"

    def test_identity_on_clean_input(self):
        assert clean_text("plain text") == "plain text"

    def test_hashtag_emoji_www(self):
        assert clean_text("#hate 😀 see www.x.com now") == "see now"

    def test_hashtag_symbol_only(self):
        assert clean_text("#hate speech", strip_hashtag_symbol_only=True) == "hate speech"

    def test_email_is_not_a_mention(self):
        assert clean_text("mail a@b.com") == "mail a@b.com"

    def test_chained_mentions(self):
        assert clean_text("@a@b hi") == "hi"

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.sampled_from(list("ab @#:/.w\n😀\u200d") + ["http://", "www."]), max_size=30))
    def test_idempotent(self, pieces):
        once = clean_text("".join(pieces))
        assert clean_text(once) == once


def _write_csv(path, n_pos, n_neg):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["tweet", "class"])
        for i in range(n_pos):
            w.writerow([f"hateful text {i}", "hateful"])
        for i in range(n_neg):
            w.writerow([f"normal text {i}", "normal"])


class TestLoadDataset:
    def test_cap_policy(self, tmp_path):
        path = tmp_path / "d.csv"
        _write_csv(path, 12_000, 9_000)
        spec = DatasetSpec("big", text_field="tweet", label_field="class", positive="== hateful", cap=5000)
        rows = load_dataset(str(path), spec)
        assert Counter(r.hs_label for r in rows) == {1: 5000, 0: 5000}

    def test_downsample_policy(self, tmp_path):
        path = tmp_path / "d.csv"
        _write_csv(path, 482, 1043)
        spec = DatasetSpec("small", text_field="tweet", label_field="class", positive="== hateful", policy="downsample")
        rows = load_dataset(str(path), spec)
        assert Counter(r.hs_label for r in rows) == {1: 482, 0: 482}

    def test_deterministic(self, tmp_path):
        path = tmp_path / "d.csv"
        _write_csv(path, 60, 80)
        spec = DatasetSpec("d", text_field="tweet", label_field="class", positive="== hateful")
        assert load_dataset(str(path), spec, seed=4) == load_dataset(str(path), spec, seed=4)

    def test_missing_column(self, tmp_path):
        path = tmp_path / "d.csv"
        _write_csv(path, 5, 5)
        with pytest.raises(SchemaError):
            load_dataset(str(path), DatasetSpec("d"))

    def test_empty_class(self, tmp_path):
        path = tmp_path / "d.csv"
        _write_csv(path, 5, 0)
        with pytest.raises(DataError):
            load_dataset(str(path), DatasetSpec("d", text_field="tweet", label_field="class", positive="== hateful"))

    def test_bad_policy(self):
        with pytest.raises(ConfigError):
            DatasetSpec("d", policy="oversample")

    def test_predicates(self):
        assert parse_predicate(">= 2")(3) and not parse_predicate(">= 2")("1")
        assert parse_predicate("in hateful,abusive")("abusive")
        assert parse_predicate("== 1")("1")


class TestTaxonomy:
    def test_examples(self):
        assert map_to_ekman({"annoyance"}) == {"anger"}
        assert map_to_ekman({"admiration", "grief"}) == {"joy", "sadness"}
        assert map_to_ekman({"neutral"}) == {"neutral"}

    def test_partition(self):
        members = [m for group in EKMAN_GROUPS.values() for m in group]
        assert sorted(members) == sorted(e for e in GO_EMOTIONS if e != "neutral")

    def test_unknown_label(self):
        with pytest.raises(TaxonomyError):
            map_to_ekman({"rage"})

    @settings(max_examples=300, deadline=None)
    @given(st.sets(st.sampled_from(GO_EMOTIONS)), st.sets(st.sampled_from(GO_EMOTIONS)))
    def test_union_distributes(self, a, b):
        assert map_to_ekman(a | b) == map_to_ekman(a) | map_to_ekman(b)

    def test_single_label_reduction(self):
        assert reduce_single_label(LabeledExample("x", emotions={"fear", "nervousness"})).emotions == {"fear"}
        assert reduce_single_label(LabeledExample("x", emotions={"amusement", "disgust"})) is None
        assert reduce_single_label(LabeledExample("x", emotions={"neutral"})).emotions == {"neutral"}


class TestSplit:
    def _data(self):
        return [LabeledExample(f"t{i}", i % 2) for i in range(100)]

    def test_sizes(self):
        parts = split(self._data(), (0.8, 0.1, 0.1), seed=0)
        assert [len(p) for p in parts] == [80, 10, 10]
        assert [sum(e.hs_label for e in p) for p in parts] == [40, 5, 5]

    def test_union_is_input(self):
        data = self._data()
        parts = split(data, seed=2)
        assert Counter(parts.train + parts.val + parts.test) == Counter(data)

    def test_deterministic(self):
        assert split(self._data(), seed=5) == split(self._data(), seed=5)

    def test_bad_ratios(self):
        with pytest.raises(ConfigError):
            split(self._data(), (0.5, 0.5, 0.5))


class TestJsonl:
    def test_round_trip(self, tmp_path):
        rows = [LabeledExample("a b", 1), LabeledExample("c", None, {"joy", "anger"})]
        write_jsonl(tmp_path / "x.jsonl", rows)
        assert read_jsonl(tmp_path / "x.jsonl") == rows
        first = json.loads((tmp_path / "x.jsonl").read_text().splitlines()[1])
        assert first["emotions"] == ["anger", "joy"]


class TestSynth:
    def test_shapes(self):
        bench = synth_generate(domains=2, n=200, seed=0)
        assert sorted(bench.domains) == ["domain0", "domain1"]
        for rows in bench.domains.values():
            assert Counter(r.hs_label for r in rows) == {1: 100, 0: 100}
        assert len(bench.emotions) == 200

    def test_degenerate_config(self):
        with pytest.raises(ConfigError):
            synth_generate(domains=1)
        with pytest.raises(ConfigError):
            synth_generate(overlap=1.5)

    def test_files_byte_identical(self, tmp_path):
        for d in ("a", "b"):
            write_benchmark(synth_generate(domains=2, n=200, seed=3), tmp_path / d)
        for name in ("domain0.jsonl", "domain1.jsonl", "emotions.jsonl", "synth_config.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_emotion_file_hides_hs_label(self, tmp_path):
        paths = write_benchmark(synth_generate(domains=2, n=200, seed=0), tmp_path)
        assert all("label" not in json.loads(line) for line in open(paths["emotions"]))

    def test_overlap_controls_shared_vocabulary(self):
        full = synth_generate(domains=2, n=100, overlap=1.0).vocab
        none = synth_generate(domains=2, n=100, overlap=0.0).vocab
        assert full["domain0"].filler == full["domain1"].filler
        assert not set(none["domain0"].filler) & set(none["domain1"].filler)

    @staticmethod
    def _skew_correlation(kappa):
        bench = synth_generate(domains=2, n=2000, emotion_corr=kappa, seed=0)
        skew = np.array([np.mean([e in ANGER_FAMILY for e in ex.emotions]) for ex in bench.emotions])
        hs = np.array([ex.hs_label for ex in bench.emotions], dtype=float)
        return np.corrcoef(skew, hs)[0, 1]

    def test_no_correlation_at_zero_kappa(self):
        assert abs(self._skew_correlation(0.0)) < 0.05

    def test_correlation_at_high_kappa(self):
        assert self._skew_correlation(0.8) > 0.5

"""Synthetic multi-domain hate-speech benchmark.

Every domain draws sentences from its own filler vocabulary and its own set
of implicit "cue" adjectives. A fraction ``overlap`` of both vocabularies is
shared by all domains; the rest is private to the domain. Positives are either
explicit (a word from one hateful lexicon shared by every domain, with
probability ``explicit_rate``) or implicit (the template
``those <group> are <cue>``). Negatives are filler, half of them carrying the
same template with a benign adjective, so group words alone carry no signal.

The emotion corpus mixes hateful-style and benign sentences from all domains.
With probability ``emotion_corr`` a hateful-style sentence is labeled from the
anger/disgust family (anger, annoyance, disapproval, disgust); otherwise, and
for every benign sentence, labels are drawn uniformly from the 28 GoEmotions
classes. The hidden ``hs_label`` of each emotion example is kept in memory for
analysis but not written to ``emotions.jsonl``.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

from ..errors import ConfigError
from ..numerics.rng import seeded_rng
from .datasets import LabeledExample, write_jsonl
from .taxonomy import GO_EMOTIONS

ANGER_FAMILY = ("anger", "annoyance", "disapproval", "disgust")
_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


@dataclass
class SynthConfig:
    domains: int = 3
    n: int = 1000
    overlap: float = 0.5
    explicit_rate: float = 0.5
    emotion_corr: float = 0.8
    seed: int = 0
    n_emotion: int | None = None
    filler_size: int = 60
    cue_size: int = 8
    lexicon_size: int = 10
    min_words: int = 4
    max_words: int = 9

    def validate(self):
        if self.domains < 2:
            raise ConfigError("synthetic benchmark needs at least 2 domains")
        if self.n < 100:
            raise ConfigError("need at least 100 examples per domain")
        for name in ("overlap", "explicit_rate", "emotion_corr"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.n_emotion is not None and self.n_emotion < 2:
            raise ConfigError("n_emotion must be at least 2")
        if not 1 <= self.min_words <= self.max_words:
            raise ConfigError("need 1 <= min_words <= max_words")
        if min(self.filler_size, self.cue_size, self.lexicon_size) < 1:
            raise ConfigError("vocabulary sizes must be positive")


@dataclass
class DomainVocab:
    filler: list
    cues: list


@dataclass
class SynthBenchmark:
    config: SynthConfig
    domains: dict = field(default_factory=dict)
    emotions: list = field(default_factory=list)
    lexicon: list = field(default_factory=list)
    vocab: dict = field(default_factory=dict)


class _WordFactory:
    def __init__(self, rng):
        self.rng = rng
        self.used = {"those", "are"}

    def word(self):
        while True:
            n = int(self.rng.integers(2, 4))
            w = "".join(
                _CONSONANTS[self.rng.integers(len(_CONSONANTS))] + _VOWELS[self.rng.integers(len(_VOWELS))]
                for _ in range(n)
            )
            if w not in self.used:
                self.used.add(w)
                return w

    def words(self, k):
        return [self.word() for _ in range(k)]


def _mix(shared, factory, overlap):
    k = int(round(overlap * len(shared)))
    return shared[:k] + factory.words(len(shared) - k)


class _Writer:
    def __init__(self, cfg, rng, lexicon, groups, benign):
        self.cfg, self.rng = cfg, rng
        self.lexicon, self.groups, self.benign = lexicon, groups, benign

    def _filler(self, vocab):
        n = int(self.rng.integers(self.cfg.min_words, self.cfg.max_words + 1))
        return [vocab.filler[i] for i in self.rng.integers(len(vocab.filler), size=n)]

    def _insert(self, words, phrase):
        at = int(self.rng.integers(len(words) + 1))
        return words[:at] + phrase + words[at:]

    def _pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def positive(self, vocab):
        words = self._filler(vocab)
        if self.rng.random() < self.cfg.explicit_rate:
            phrase = [self._pick(self.lexicon)]
        else:
            phrase = ["those", self._pick(self.groups), "are", self._pick(vocab.cues)]
        return " ".join(self._insert(words, phrase))

    def negative(self, vocab):
        words = self._filler(vocab)
        if self.rng.random() < 0.5:
            words = self._insert(words, ["those", self._pick(self.groups), "are", self._pick(self.benign)])
        return " ".join(words)


def _emotion_labels(rng, hateful, kappa):
    k = 2 if rng.random() < 0.15 else 1
    pool = ANGER_FAMILY if hateful and rng.random() < kappa else GO_EMOTIONS
    picks = rng.choice(len(pool), size=k, replace=False)
    return frozenset(pool[i] for i in picks)


def synth_generate(config=None, **overrides):
    """Build the benchmark described by ``config`` (a :class:`SynthConfig`)."""
    cfg = config or SynthConfig()
    if overrides:
        cfg = SynthConfig(**{**asdict(cfg), **overrides})
    cfg.validate()
    rng = seeded_rng(cfg.seed, stream=11)
    factory = _WordFactory(rng)
    lexicon = factory.words(cfg.lexicon_size)
    groups = factory.words(6)
    benign = factory.words(8)
    shared_filler = factory.words(cfg.filler_size)
    shared_cues = factory.words(cfg.cue_size)

    vocabs = {}
    for i in range(cfg.domains):
        vocabs[f"domain{i}"] = DomainVocab(
            filler=_mix(shared_filler, factory, cfg.overlap),
            cues=_mix(shared_cues, factory, cfg.overlap),
        )
    writer = _Writer(cfg, rng, lexicon, groups, benign)

    bench = SynthBenchmark(cfg, lexicon=lexicon, vocab=vocabs)
    n_pos = cfg.n // 2
    for name, vocab in vocabs.items():
        rows = [LabeledExample(writer.positive(vocab), 1) for _ in range(n_pos)]
        rows += [LabeledExample(writer.negative(vocab), 0) for _ in range(cfg.n - n_pos)]
        bench.domains[name] = [rows[i] for i in rng.permutation(len(rows))]

    names = list(vocabs)
    n_emo = cfg.n if cfg.n_emotion is None else cfg.n_emotion
    emos = []
    for j in range(n_emo):
        hateful = j < n_emo // 2
        vocab = vocabs[names[int(rng.integers(len(names)))]]
        text = writer.positive(vocab) if hateful else writer.negative(vocab)
        emos.append(LabeledExample(text, int(hateful), _emotion_labels(rng, hateful, cfg.emotion_corr)))
    bench.emotions = [emos[i] for i in rng.permutation(len(emos))]
    return bench


def write_benchmark(bench, out_dir):
    """Write ``domain<i>.jsonl``, ``emotions.jsonl`` and ``synth_config.json``."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    for name, rows in bench.domains.items():
        paths[name] = os.path.join(out_dir, f"{name}.jsonl")
        write_jsonl(paths[name], rows)
    paths["emotions"] = os.path.join(out_dir, "emotions.jsonl")
    write_jsonl(paths["emotions"], [LabeledExample(e.text, None, e.emotions) for e in bench.emotions])
    with open(os.path.join(out_dir, "synth_config.json"), "w", encoding="utf-8") as fh:
        json.dump(asdict(bench.config), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths

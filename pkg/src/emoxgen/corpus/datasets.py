"""Labeled examples, dataset ingestion, class balancing and stratified splits."""

from __future__ import annotations

import csv
import json
import math
import operator
import os
import re
from dataclasses import asdict, dataclass, field

from ..errors import ConfigError, DataError, SchemaError, TaxonomyError
from ..numerics.rng import seeded_rng
from .cleaning import clean_text
from .taxonomy import GO_EMOTIONS


@dataclass(frozen=True)
class LabeledExample:
    """One cleaned text with a binary HS label, an emotion label set, or both."""

    text: str
    hs_label: int | None = None
    emotions: frozenset | None = None

    def __post_init__(self):
        if self.hs_label is None and self.emotions is None:
            raise DataError("an example needs an hs_label or emotions")
        if self.hs_label is not None and self.hs_label not in (0, 1):
            raise DataError(f"hs_label must be 0 or 1, got {self.hs_label!r}")
        if self.emotions is not None:
            emos = frozenset(self.emotions)
            bad = sorted(emos.difference(GO_EMOTIONS))
            if bad:
                raise TaxonomyError(f"unknown emotion labels {bad}")
            object.__setattr__(self, "emotions", emos)

    def with_emotions(self, emotions):
        return LabeledExample(self.text, self.hs_label, frozenset(emotions))

    def to_record(self):
        """JSONL record: ``{"text", "label"}`` for HS, ``{"text", "emotions"}`` for emotion data."""
        rec = {"text": self.text}
        if self.hs_label is not None:
            rec["label"] = self.hs_label
        if self.emotions is not None:
            rec["emotions"] = sorted(self.emotions, key=GO_EMOTIONS.index)
        return rec

    @classmethod
    def from_record(cls, rec):
        if "text" not in rec:
            raise SchemaError("record has no 'text' field")
        label = rec.get("label")
        emos = rec.get("emotions")
        return cls(
            str(rec["text"]),
            None if label is None else int(label),
            None if emos is None else frozenset(emos),
        )


def read_jsonl(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            out.append(LabeledExample.from_record(rec))
    return out


def write_jsonl(path, examples):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ex in examples:
            fh.write(json.dumps(ex.to_record(), ensure_ascii=False, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# label predicates
# ---------------------------------------------------------------------------

_CMP = {"==": operator.eq, "!=": operator.ne, ">=": operator.ge, "<=": operator.le, ">": operator.gt, "<": operator.lt}
_PRED_RE = re.compile(r"^\s*(==|!=|>=|<=|>|<|in)\s*(.*?)\s*$")


def _number(x):
    try:
        return float(x)
    except (TypeError, ValueError):
        return None


def parse_predicate(expr):
    """Compile a label predicate such as ``"== 1"``, ``">= 0.5"`` or ``"in hateful,abusive"``.

    Comparisons are numeric when both sides parse as numbers, string
    comparisons otherwise.
    """
    m = _PRED_RE.match(expr or "")
    if not m or not m.group(2):
        raise ConfigError(f"cannot parse label predicate {expr!r}")
    op, rhs = m.groups()
    if op == "in":
        allowed = {v.strip() for v in rhs.split(",") if v.strip()}
        nums = {_number(v) for v in allowed} - {None}

        def pred(value):
            s = str(value).strip()
            return s in allowed or (_number(s) is not None and _number(s) in nums)

        return pred
    fn, rnum = _CMP[op], _number(rhs)
    rhs = rhs.strip("'\"")

    def pred(value):
        lnum = _number(value)
        if lnum is not None and rnum is not None:
            return fn(lnum, rnum)
        if op in ("==", "!="):
            return fn(str(value).strip(), rhs)
        return False

    return pred


@dataclass
class DatasetSpec:
    """How to read and balance one HS dataset file.

    ``policy`` is ``"cap"`` (sample at most ``cap`` examples per class) or
    ``"downsample"`` (reduce the larger class to the size of the smaller,
    which for HS corpora means downsampling negatives). Both keep the classes
    exactly balanced.
    """

    name: str
    domain: str = ""
    text_field: str = "text"
    label_field: str = "label"
    positive: str = "== 1"
    policy: str = "cap"
    cap: int = 5000
    delimiter: str | None = None
    strip_hashtag_symbol_only: bool = False

    def __post_init__(self):
        if self.policy not in ("cap", "downsample"):
            raise ConfigError(f"unknown sampling policy {self.policy!r}")
        if self.policy == "cap" and self.cap < 1:
            raise ConfigError("cap must be positive")
        parse_predicate(self.positive)

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad dataset spec: {exc}") from None

    def to_dict(self):
        return asdict(self)


def _read_rows(path, spec):
    ext = os.path.splitext(path)[1].lower()
    if ext in (".jsonl", ".json") and spec.delimiter is None:
        rows = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rows.append(json.loads(line))
        fields = set().union(*(r.keys() for r in rows)) if rows else set()
        return rows, fields
    delim = spec.delimiter or ("\t" if ext == ".tsv" else ",")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh, delimiter=delim)
        rows = list(reader)
        return rows, set(reader.fieldnames or ())


def load_dataset(path, spec, seed=0):
    """Read, clean and class-balance an HS dataset file.

    Rows whose text is empty after cleaning are dropped. The result is
    shuffled deterministically under ``seed``.
    """
    rows, fields = _read_rows(path, spec)
    missing = [f for f in (spec.text_field, spec.label_field) if f not in fields]
    if missing:
        raise SchemaError(f"{path}: columns {missing} not found (have {sorted(fields)})")
    pred = parse_predicate(spec.positive)
    pos, neg = [], []
    for row in rows:
        text = clean_text(str(row.get(spec.text_field) or ""), spec.strip_hashtag_symbol_only)
        if not text:
            continue
        label = 1 if pred(row.get(spec.label_field)) else 0
        (pos if label else neg).append(LabeledExample(text, label))
    if not pos or not neg:
        raise DataError(f"{spec.name}: class empty after filtering ({len(pos)} positive, {len(neg)} negative)")
    k = min(len(pos), len(neg))
    if spec.policy == "cap":
        k = min(k, spec.cap)
    rng = seeded_rng(seed)
    chosen = [pos[i] for i in sorted(rng.choice(len(pos), k, replace=False))]
    chosen += [neg[i] for i in sorted(rng.choice(len(neg), k, replace=False))]
    return [chosen[i] for i in rng.permutation(len(chosen))]


@dataclass
class Splits:
    train: list = field(default_factory=list)
    val: list = field(default_factory=list)
    test: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.train, self.val, self.test))


def split(data, ratios=(0.8, 0.1, 0.1), seed=0):
    """Stratified, seed-deterministic train/val/test partition.

    Each class is shuffled and cut at ``round(n * r_train)`` and
    ``round(n * r_val)``; the remainder is the test share.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise ConfigError(f"split ratios must be three positive numbers summing to 1, got {ratios}")
    groups = {}
    for ex in data:
        groups.setdefault(ex.hs_label, []).append(ex)
    rng = seeded_rng(seed, stream=1)
    parts = ([], [], [])
    for key in sorted(groups, key=lambda k: (k is None, k)):
        members = groups[key]
        order = rng.permutation(len(members))
        n = len(members)
        n_train = math.floor(n * ratios[0] + 0.5)
        n_val = math.floor(n * ratios[1] + 0.5)
        cuts = (0, n_train, n_train + n_val, n)
        for j in range(3):
            chunk = [members[i] for i in order[cuts[j] : cuts[j + 1]]]
            if not chunk:
                raise DataError(f"split {('train', 'val', 'test')[j]} has no examples of class {key!r} (n={n})")
            parts[j].extend(chunk)
    return Splits(*([p[i] for i in rng.permutation(len(p))] for p in parts))

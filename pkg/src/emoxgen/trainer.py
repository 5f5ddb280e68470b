"""Multitask training loop with early stopping and seed-averaged runs.

One epoch is one pass over the HS training split. Under the ``roundrobin``
schedule every HS step is followed by one auxiliary step; auxiliary batches
come from a cycling, reshuffled stream. Under ``proportional`` each step picks
the auxiliary task with probability ``|aux| / (|aux| + |hs|)`` until the HS
batches of the epoch are used up. Each step only touches the shared encoder
and the decoder of the task being trained.

Run directory layout written by :func:`save_run`::

    config.json        train + encoder config
    vocab.txt          tokenizer vocabulary
    result.json        aggregated RunResult
    weights.emow       copy of the first seed's weights
    log.csv            seed, epoch, task, mean_loss, val_f1
    seed<k>/weights.emow, seed<k>/log.csv, seed<k>/result.json
"""

from __future__ import annotations

import csv
import json
import math
import os
import shutil
from dataclasses import asdict, dataclass, field

import numpy as np

from . import numerics as nx
from .corpus.taxonomy import EKMAN_EMOTIONS, GO_EMOTIONS, reduce_single_label
from .errors import ConfigError, DataError
from .evalkit.metrics import binary_f1
from .losses import bce_loss, nll_loss
from .model import AUX_TASKS, HS_TASK, EncoderConfig, ModelBundle, tasks_in_weights
from .tokenizer import PAD, Vocab, encode

AUX_SCHEMES = ("none", "go", "ekman")


@dataclass
class TrainConfig:
    epochs: int = 5
    batch_size: int = 8
    lr: float = 1e-4
    seeds: list = field(default_factory=lambda: [0, 1, 3])
    early_stop_patience: int = 2
    aux_scheme: str = "none"
    task_mix: str = "roundrobin"
    max_len: int = 128
    normalize_nll: bool = False
    eval_batch_size: int = 64

    def __post_init__(self):
        self.seeds = [int(s) for s in self.seeds]
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.aux_scheme not in AUX_SCHEMES:
            raise ConfigError(f"aux_scheme must be one of {AUX_SCHEMES}")
        if self.task_mix not in ("roundrobin", "proportional"):
            raise ConfigError("task_mix must be 'roundrobin' or 'proportional'")
        if self.max_len < 2:
            raise ConfigError("max_len must be >= 2")
        if self.early_stop_patience < 1:
            raise ConfigError("early_stop_patience must be >= 1")

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad train config: {exc}") from None

    def to_dict(self):
        return asdict(self)


@dataclass
class RunResult:
    seeds: list
    val_f1: dict
    best_epoch: dict
    test_f1: dict
    mean_test_f1: dict
    log: list = field(default_factory=list)
    weights: dict = field(default_factory=dict)
    steps: dict = field(default_factory=dict)

    @property
    def mean_val_f1(self):
        return float(np.mean([self.val_f1[str(s)] for s in self.seeds]))

    def to_dict(self):
        d = asdict(self)
        d["mean_val_f1"] = self.mean_val_f1
        return d

    @classmethod
    def from_dict(cls, d):
        d = {k: v for k, v in d.items() if k != "mean_val_f1"}
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# data preparation
# ---------------------------------------------------------------------------


@dataclass
class Encoded:
    ids: list
    targets: np.ndarray

    def __len__(self):
        return len(self.ids)


def encode_hs(examples, vocab, max_len):
    missing = sum(ex.hs_label is None for ex in examples)
    if missing:
        raise DataError(f"{missing} HS examples have no label")
    return Encoded([encode(ex.text, vocab, max_len) for ex in examples], np.array([ex.hs_label for ex in examples]))


def encode_aux(examples, scheme, vocab, max_len):
    """Targets for the auxiliary head: class indices (ekman) or multi-hot rows (go)."""
    ids, targets = [], []
    for ex in examples:
        if not ex.emotions:
            continue
        if scheme == "ekman":
            reduced = reduce_single_label(ex)
            if reduced is None:
                continue
            (name,) = reduced.emotions
            targets.append(EKMAN_EMOTIONS.index(name))
        elif scheme == "go":
            row = np.zeros(len(GO_EMOTIONS))
            row[[GO_EMOTIONS.index(e) for e in ex.emotions]] = 1.0
            targets.append(row)
        else:
            raise ConfigError(f"no auxiliary targets for scheme {scheme!r}")
        ids.append(encode(ex.text, vocab, max_len))
    if not ids:
        raise DataError(f"no usable auxiliary examples for scheme {scheme!r}")
    return Encoded(ids, np.array(targets))


def collate(seqs):
    """Right-pad to the longest sequence; returns (ids, mask)."""
    length = max(len(s) for s in seqs)
    ids = np.full((len(seqs), length), PAD, dtype=np.int64)
    for i, s in enumerate(seqs):
        ids[i, : len(s)] = s
    return ids, ids != PAD


def predict_proba(bundle, seqs, task=HS_TASK, batch_size=64):
    out = []
    with nx.no_grad():
        for start in range(0, len(seqs), batch_size):
            ids, mask = collate(seqs[start : start + batch_size])
            out.append(bundle.forward(ids, task, mask).data)
    return np.concatenate(out) if out else np.zeros(0)


def evaluate_f1(bundle, encoded, batch_size=64, threshold=0.5):
    probs = predict_proba(bundle, encoded.ids, HS_TASK, batch_size)
    return binary_f1((probs > threshold).astype(int), encoded.targets)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------


def _task_loss(task, probs, targets, config):
    if task.loss == "bce":
        return bce_loss(probs, targets)
    return nll_loss(probs, targets, normalize=config.normalize_nll)


class _Cycler:
    """Endless batches over a dataset, reshuffled after each pass."""

    def __init__(self, data, batch_size, rng):
        self.data, self.batch_size, self.rng = data, batch_size, rng
        self._batches = []

    def next(self):
        if not self._batches:
            order = self.rng.permutation(len(self.data))
            self._batches = [order[i : i + self.batch_size] for i in range(0, len(order), self.batch_size)][::-1]
        return self._batches.pop()


def train_step(bundle, task, data, idx, state, config, rng):
    """One optimizer step on ``task`` over rows ``idx`` of ``data``; returns the loss.

    Only the shared encoder and the head of ``task`` are passed to Adam, so
    every other head is left untouched.
    """
    params = bundle.task_parameters(task)
    for p in params.values():
        p.grad = None
    ids, mask = collate([data.ids[i] for i in idx])
    probs = bundle.forward(ids, task, mask, training=True, rng=rng)
    loss = _task_loss(task, probs, data.targets[idx], config)
    nx.backward(loss.value)
    nx.adam_step(state, params, {k: p.grad for k, p in params.items()})
    return float(loss)


def train_multitask(hs_splits, aux_data, bundle, config, vocab, seed=0, test_sets=None):
    """Train one seed; returns a single-seed :class:`RunResult`.

    ``hs_splits`` is a (train, val, test) triple of HS examples; its test split
    is reported as ``"in-domain"`` next to any extra ``test_sets``
    (name -> examples). The bundle ends holding the best-validation weights.
    """
    train, val, test = hs_splits
    if not train:
        raise DataError("empty HS training split")
    if not val:
        raise DataError("empty HS validation split")
    aux_task = None
    if config.aux_scheme != "none":
        if not aux_data:
            raise ConfigError(f"aux_scheme={config.aux_scheme!r} but no auxiliary data given")
        aux_task = AUX_TASKS[config.aux_scheme]
        if aux_task.id not in bundle.heads:
            bundle.add_task(aux_task, nx.seeded_rng(seed, stream=4))
    max_len = min(config.max_len, bundle.config.max_len)

    hs_train = encode_hs(train, vocab, max_len)
    hs_val = encode_hs(val, vocab, max_len)
    aux = encode_aux(aux_data, config.aux_scheme, vocab, max_len) if aux_task else None

    order_rng = nx.seeded_rng(seed, stream=5)
    drop_rng = nx.seeded_rng(seed, stream=7)
    mix_rng = nx.seeded_rng(seed, stream=8)
    aux_stream = _Cycler(aux, config.batch_size, nx.seeded_rng(seed, stream=6)) if aux else None
    aux_share = len(aux) / (len(aux) + len(hs_train)) if aux else 0.0

    state = nx.AdamState(lr=config.lr)
    best_f1, best_epoch, best_state, wait = -1.0, 0, None, 0
    log = []
    for epoch in range(1, config.epochs + 1):
        order = order_rng.permutation(len(hs_train))
        hs_batches = [order[i : i + config.batch_size] for i in range(0, len(order), config.batch_size)]
        losses = {HS_TASK.id: [], **({aux_task.id: []} if aux_task else {})}
        pending = list(reversed(hs_batches))
        while pending:
            if aux_task and config.task_mix == "proportional" and mix_rng.random() < aux_share:
                losses[aux_task.id].append(train_step(bundle, aux_task, aux, aux_stream.next(), state, config, drop_rng))
                continue
            losses[HS_TASK.id].append(train_step(bundle, HS_TASK, hs_train, pending.pop(), state, config, drop_rng))
            if aux_task and config.task_mix == "roundrobin":
                losses[aux_task.id].append(train_step(bundle, aux_task, aux, aux_stream.next(), state, config, drop_rng))
        val_f1 = evaluate_f1(bundle, hs_val, config.eval_batch_size)
        for task_id, vals in losses.items():
            log.append(
                {
                    "seed": seed,
                    "epoch": epoch,
                    "task": task_id,
                    "mean_loss": float(np.mean(vals)) if vals else None,
                    "val_f1": val_f1,
                    "steps": len(vals),
                }
            )
        if val_f1 > best_f1:
            best_f1, best_epoch, best_state, wait = val_f1, epoch, bundle.state_dict(), 0
        else:
            wait += 1
            if wait >= config.early_stop_patience:
                break
    bundle.load_state_dict(best_state)

    tests = {"in-domain": test} if test else {}
    tests.update(test_sets or {})
    test_f1 = {name: evaluate_f1(bundle, encode_hs(rows, vocab, max_len), config.eval_batch_size) for name, rows in tests.items()}
    key = str(seed)
    return RunResult(
        seeds=[seed],
        val_f1={key: best_f1},
        best_epoch={key: best_epoch},
        test_f1={key: test_f1},
        mean_test_f1=dict(test_f1),
        log=log,
        steps={key: state.step_count},
    )


def merge_results(results):
    """Aggregate single-seed results; means are plain arithmetic means over seeds."""
    seeds, merged = [], RunResult([], {}, {}, {}, {})
    for r in results:
        for s in r.seeds:
            key = str(s)
            seeds.append(s)
            merged.val_f1[key] = r.val_f1[key]
            merged.best_epoch[key] = r.best_epoch[key]
            merged.test_f1[key] = r.test_f1[key]
            merged.steps[key] = r.steps[key]
            if key in r.weights:
                merged.weights[key] = r.weights[key]
        merged.log.extend(r.log)
    merged.seeds = seeds
    names = list(merged.test_f1[str(seeds[0])]) if seeds else []
    merged.mean_test_f1 = {n: float(np.mean([merged.test_f1[str(s)][n] for s in seeds])) for n in names}
    return merged


def new_bundle(encoder_config, config, seed, init_weights=None):
    """Fresh bundle for one seed, optionally starting from an ``EMOW1`` file.

    Heads present in the weight file are loaded too; missing heads keep their
    seeded initialization.
    """
    tasks = [HS_TASK] + ([AUX_TASKS[config.aux_scheme]] if config.aux_scheme != "none" else [])
    bundle = ModelBundle(encoder_config, tasks, seed=seed)
    if init_weights is not None:
        arrays = nx.load_weights(init_weights) if isinstance(init_weights, (str, os.PathLike)) else init_weights
        for t in tasks_in_weights(arrays):
            if t.id not in bundle.heads:
                bundle.add_task(t)
        bundle.load_state_dict(arrays, strict=False)
    return bundle


def run_seeds(hs_splits, aux_data, config, encoder_config, vocab, test_sets=None, out_dir=None, init_weights=None):
    """Train once per seed in ``config.seeds`` from a fresh bundle and aggregate."""
    results = []
    for seed in config.seeds:
        bundle = new_bundle(encoder_config, config, seed, init_weights)
        result = train_multitask(hs_splits, aux_data, bundle, config, vocab, seed, test_sets)
        if out_dir is not None:
            rel = os.path.join(f"seed{seed}", "weights.emow")
            os.makedirs(os.path.join(out_dir, f"seed{seed}"), exist_ok=True)
            bundle.save(os.path.join(out_dir, rel))
            result.weights[str(seed)] = rel
            _write_seed_dir(os.path.join(out_dir, f"seed{seed}"), result)
        results.append(result)
    merged = merge_results(results)
    if out_dir is not None:
        save_run(out_dir, merged, config, encoder_config, vocab)
        # top-level weights.emow is the first seed's model
        shutil.copyfile(os.path.join(out_dir, merged.weights[str(config.seeds[0])]), os.path.join(out_dir, "weights.emow"))
    return merged


# ---------------------------------------------------------------------------
# run directories
# ---------------------------------------------------------------------------

_LOG_FIELDS = ("seed", "epoch", "task", "mean_loss", "val_f1", "steps")


def _write_log(path, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=_LOG_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def _write_seed_dir(path, result):
    _write_log(os.path.join(path, "log.csv"), result.log)
    with open(os.path.join(path, "result.json"), "w", encoding="utf-8") as fh:
        fh.write(result.to_json())


def save_run(out_dir, result, config, encoder_config, vocab):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fh:
        json.dump({"train": config.to_dict(), "encoder": encoder_config.to_dict()}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    vocab.save(os.path.join(out_dir, "vocab.txt"))
    _write_log(os.path.join(out_dir, "log.csv"), result.log)
    with open(os.path.join(out_dir, "result.json"), "w", encoding="utf-8") as fh:
        fh.write(result.to_json())


@dataclass
class LoadedRun:
    path: str
    config: TrainConfig
    encoder: EncoderConfig
    vocab: Vocab
    result: RunResult

    def bundles(self):
        """Yield ``(seed, bundle)`` for every seed's exported weights."""
        for key, rel in sorted(self.result.weights.items(), key=lambda kv: int(kv[0])):
            arrays = nx.load_weights(os.path.join(self.path, rel))
            bundle = ModelBundle(self.encoder, tasks_in_weights(arrays) or [HS_TASK])
            bundle.load_state_dict(arrays)
            yield int(key), bundle


def load_run(path):
    with open(os.path.join(path, "config.json"), encoding="utf-8") as fh:
        cfg = json.load(fh)
    with open(os.path.join(path, "result.json"), encoding="utf-8") as fh:
        result = RunResult.from_dict(json.load(fh))
    return LoadedRun(
        path,
        TrainConfig.from_dict(cfg["train"]),
        EncoderConfig(**cfg["encoder"]),
        Vocab.load(os.path.join(path, "vocab.txt")),
        result,
    )


def steps_per_epoch(n_train, config):
    """Expected optimizer steps per full epoch under the round-robin schedule."""
    per = math.ceil(n_train / config.batch_size)
    return per * (2 if config.aux_scheme != "none" and config.task_mix == "roundrobin" else 1)

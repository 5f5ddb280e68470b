"""Shared transformer encoder with per-task MLP decoders (hard parameter sharing).

Parameter names, also used as ``EMOW1`` entry names::

    emb.tok                           (vocab, d)
    emb.pos                           (max_len, d)
    enc.layer{i}.norm1.{gamma,beta}   (d,)
    enc.layer{i}.attn.{q,k,v,o}.w     (d, d)
    enc.layer{i}.attn.{q,k,v,o}.b     (d,)
    enc.layer{i}.norm2.{gamma,beta}   (d,)
    enc.layer{i}.ffn.in.{w,b}         (d, ffn), (ffn,)
    enc.layer{i}.ffn.out.{w,b}        (ffn, d), (d,)
    head.{task}.hidden.{w,b}          (d, d), (d,)
    head.{task}.out.{w,b}             (d, arity), (arity,)

Layers are pre-norm: ``x + Attn(LN(x))`` then ``x + FFN(LN(x))``, with GELU in
the feed-forward block and no final norm. Decoders read the hidden state at
the [CLS] position.
"""

from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass

import numpy as np

from . import numerics as nx
from .errors import ConfigError, ContractError, NumericError, WeightFormatError
from .numerics import Tensor


@dataclass
class EncoderConfig:
    layers: int = 2
    dim: int = 64
    heads: int = 2
    ffn_dim: int = 256
    dropout: float = 0.1
    max_len: int = 128
    vocab_size: int = 8000

    def __post_init__(self):
        for name in ("layers", "dim", "heads", "ffn_dim", "max_len", "vocab_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.dim % self.heads:
            raise ConfigError(f"dim {self.dim} is not divisible by heads {self.heads}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TaskSpec:
    id: str
    arity: int
    mode: str
    loss: str


HS_TASK = TaskSpec("hs", 1, "sigmoid-binary", "nll")
EKMAN_TASK = TaskSpec("emotion-ekman", 7, "softmax-single", "nll")
GO_TASK = TaskSpec("emotion-go", 28, "sigmoid-multilabel", "bce")
TASKS = {t.id: t for t in (HS_TASK, EKMAN_TASK, GO_TASK)}
AUX_TASKS = {"go": GO_TASK, "ekman": EKMAN_TASK}


def _task(task):
    if isinstance(task, TaskSpec):
        return task
    if task not in TASKS:
        raise ContractError(f"unknown task {task!r}")
    return TASKS[task]


def _encoder_shapes(cfg):
    d, f = cfg.dim, cfg.ffn_dim
    shapes = {"emb.tok": (cfg.vocab_size, d), "emb.pos": (cfg.max_len, d)}
    for i in range(cfg.layers):
        p = f"enc.layer{i}"
        shapes[f"{p}.norm1.gamma"] = (d,)
        shapes[f"{p}.norm1.beta"] = (d,)
        for proj in "qkvo":
            shapes[f"{p}.attn.{proj}.w"] = (d, d)
            shapes[f"{p}.attn.{proj}.b"] = (d,)
        shapes[f"{p}.norm2.gamma"] = (d,)
        shapes[f"{p}.norm2.beta"] = (d,)
        shapes[f"{p}.ffn.in.w"] = (d, f)
        shapes[f"{p}.ffn.in.b"] = (f,)
        shapes[f"{p}.ffn.out.w"] = (f, d)
        shapes[f"{p}.ffn.out.b"] = (d,)
    return shapes


def _head_shapes(cfg, task):
    p = f"head.{task.id}"
    return {
        f"{p}.hidden.w": (cfg.dim, cfg.dim),
        f"{p}.hidden.b": (cfg.dim,),
        f"{p}.out.w": (cfg.dim, task.arity),
        f"{p}.out.b": (task.arity,),
    }


def _init(name, shape, rng):
    # embeddings N(0, 0.02); linear weights N(0, 1/fan_in) so the [CLS] state
    # depends on the input from the first step
    if name.endswith(".gamma"):
        return np.ones(shape)
    if name.endswith((".b", ".beta")):
        return np.zeros(shape)
    if name.startswith("emb."):
        return rng.normal(0.0, 0.02, size=shape)
    return rng.normal(0.0, 1.0 / math.sqrt(shape[0]), size=shape)


class ModelBundle:
    """Embedding + shared encoder parameters plus one decoder per task.

    The encoder parameters live in a single dict that every task's forward
    pass reads, so tasks cannot hold diverging encoder copies. Decoders live
    in ``heads[task_id]`` and share nothing with each other.
    """

    def __init__(self, config, tasks=(HS_TASK,), seed=0):
        self.config = config
        self.tasks = {}
        rng = nx.seeded_rng(seed, stream=3)
        self.encoder = {
            name: Tensor(_init(name, shape, rng), requires_grad=True, name=name)
            for name, shape in _encoder_shapes(config).items()
        }
        self.heads = {}
        for t in tasks:
            self.add_task(t, rng)

    def add_task(self, task, rng=None):
        task = _task(task)
        rng = rng or nx.seeded_rng(0, stream=4)
        self.tasks[task.id] = task
        self.heads[task.id] = {
            name: Tensor(_init(name, shape, rng), requires_grad=True, name=name)
            for name, shape in _head_shapes(self.config, task).items()
        }

    # -- parameter access ---------------------------------------------------

    def parameters(self):
        out = dict(self.encoder)
        for head in self.heads.values():
            out.update(head)
        return out

    def task_parameters(self, task):
        task = self._registered(task)
        out = dict(self.encoder)
        out.update(self.heads[task.id])
        return out

    def head_parameters(self, task):
        return dict(self.heads[self._registered(task).id])

    def zero_grad(self):
        for p in self.parameters().values():
            p.grad = None

    def state_dict(self):
        return {k: v.data.copy() for k, v in self.parameters().items()}

    def load_state_dict(self, arrays, strict=True):
        params = self.parameters()
        if strict:
            extra = sorted(set(arrays) - set(params))
            missing = sorted(set(params) - set(arrays))
            if extra or missing:
                raise WeightFormatError(f"weight names differ: missing {missing[:5]}, unexpected {extra[:5]}")
        for name, arr in arrays.items():
            if name not in params:
                continue
            if params[name].data.shape != tuple(arr.shape):
                raise WeightFormatError(f"{name}: shape {tuple(arr.shape)} != expected {params[name].data.shape}")
            params[name].data[...] = arr

    def save(self, path):
        nx.save_weights(path, self.state_dict())

    @classmethod
    def load(cls, path, config, tasks=(HS_TASK,), strict=True):
        bundle = cls(config, tasks)
        bundle.load_state_dict(nx.load_weights(path), strict=strict)
        return bundle

    def _registered(self, task):
        task = _task(task)
        if task.id not in self.heads:
            raise ContractError(f"task {task.id!r} has no decoder in this bundle")
        return task

    # -- forward ------------------------------------------------------------

    def embed(self, ids):
        """Token plus learned positional embedding for ids shaped (T,) or (B, T)."""
        ids = np.asarray(ids, dtype=np.int64)
        if ids.ndim not in (1, 2):
            raise ContractError("token ids must be a sequence or a batch of sequences")
        length = ids.shape[-1]
        if length > self.config.max_len:
            raise ContractError(f"sequence length {length} exceeds max_len {self.config.max_len}")
        tok = nx.embedding(self.encoder["emb.tok"], ids)
        pos = self.encoder["emb.pos"][:length]
        return tok + pos

    def encode(self, x, mask=None, training=False, rng=None):
        """Run the encoder stack; ``mask`` marks real (non-pad) positions."""
        cfg = self.config
        single = x.ndim == 2
        if single:
            x = x.reshape(1, *x.shape)
            if mask is not None:
                mask = np.asarray(mask)[None]
        if x.ndim != 3 or x.shape[-1] != cfg.dim:
            raise ContractError(f"encoder expects (B, T, {cfg.dim}) input, got {x.shape}")
        if training and cfg.dropout > 0 and rng is None:
            raise ContractError("training mode with dropout needs an rng")
        bsz, length, _ = x.shape
        bias = None
        if mask is not None:
            mask = np.asarray(mask, dtype=bool)
            bias = np.where(mask, 0.0, -1e9).reshape(bsz, 1, 1, length)
        x = nx.dropout(x, cfg.dropout, rng, training)
        for i in range(cfg.layers):
            p = f"enc.layer{i}"
            h = self._norm(x, f"{p}.norm1")
            x = x + nx.dropout(self._attention(h, p, bias), cfg.dropout, rng, training)
            h = self._norm(x, f"{p}.norm2")
            x = x + nx.dropout(self._ffn(h, p), cfg.dropout, rng, training)
        if single:
            x = x.reshape(length, cfg.dim)
        if not np.isfinite(x.data).all():
            raise NumericError("encoder produced non-finite hidden states")
        return x

    def _norm(self, x, prefix):
        return nx.layer_norm(x, self.encoder[f"{prefix}.gamma"], self.encoder[f"{prefix}.beta"])

    def _linear(self, x, prefix, params):
        return x @ params[f"{prefix}.w"] + params[f"{prefix}.b"]

    def _attention(self, h, prefix, bias):
        cfg, enc = self.config, self.encoder
        bsz, length, d = h.shape
        nh, dh = cfg.heads, d // cfg.heads

        def split_heads(t):
            return t.reshape(bsz, length, nh, dh).transpose(0, 2, 1, 3)

        q = split_heads(self._linear(h, f"{prefix}.attn.q", enc))
        k = split_heads(self._linear(h, f"{prefix}.attn.k", enc))
        v = split_heads(self._linear(h, f"{prefix}.attn.v", enc))
        scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / math.sqrt(dh))
        if bias is not None:
            scores = scores + bias
        ctx = nx.softmax(scores, axis=-1) @ v
        ctx = ctx.transpose(0, 2, 1, 3).reshape(bsz, length, d)
        return self._linear(ctx, f"{prefix}.attn.o", enc)

    def _ffn(self, h, prefix):
        inner = nx.gelu(self._linear(h, f"{prefix}.ffn.in", self.encoder))
        return self._linear(inner, f"{prefix}.ffn.out", self.encoder)

    def logits(self, h, task):
        task = self._registered(task)
        head = self.heads[task.id]
        single = h.ndim == 2
        cls = h[0:1] if single else h[:, 0]
        hidden = nx.tanh(self._linear(cls, f"head.{task.id}.hidden", head))
        z = self._linear(hidden, f"head.{task.id}.out", head)
        return z.reshape(z.shape[1:]) if single else z

    def pool_and_decode(self, h, task):
        """Class probabilities from the [CLS] hidden state.

        Shapes: ``hs`` -> (B,) (scalar for a single sequence); ``emotion-ekman``
        -> (B, 7) rows summing to 1; ``emotion-go`` -> (B, 28).
        """
        task = self._registered(task)
        z = self.logits(h, task)
        if task.mode == "softmax-single":
            return nx.softmax(z, axis=-1)
        probs = nx.sigmoid(z)
        if task.arity == 1:
            probs = probs.reshape(probs.shape[:-1])
        return probs

    def forward(self, ids, task, mask=None, training=False, rng=None):
        return self.pool_and_decode(self.encode(self.embed(ids), mask, training, rng), task)


_LAYER_RE = re.compile(r"^enc\.layer(\d+)\.")


def config_from_weights(arrays, heads=2, dropout=0.1):
    """Infer an :class:`EncoderConfig` from ``EMOW1`` tensor shapes.

    Attention head count is not recoverable from shapes and must be given.
    """
    try:
        vocab_size, dim = arrays["emb.tok"].shape
        max_len = arrays["emb.pos"].shape[0]
        ffn_dim = arrays["enc.layer0.ffn.in.w"].shape[1]
    except KeyError as exc:
        raise WeightFormatError(f"weights lack {exc.args[0]}") from None
    layers = 1 + max(int(m.group(1)) for m in map(_LAYER_RE.match, arrays) if m)
    return EncoderConfig(layers, dim, heads, ffn_dim, dropout, max_len, vocab_size)


def tasks_in_weights(arrays):
    ids = {name.split(".")[1] for name in arrays if name.startswith("head.")}
    return [TASKS[i] for i in TASKS if i in ids]

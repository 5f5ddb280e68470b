"""WordPiece-style subword vocabulary and greedy longest-match encoding.

Training starts from the character alphabet of the corpus (word-initial
characters plus ``##``-prefixed continuation characters) and repeatedly merges
the most frequent adjacent symbol pair, weighted by word frequency, until the
vocabulary is full or no pair occurs at least ``min_pair_count`` times. Ties
break on the lexicographically smallest pair so training is deterministic.

Vocab files are plain UTF-8 text, one token per line; the line number
(starting at 0) is the token id.
"""

from __future__ import annotations

import heapq
import re
from collections import Counter
from dataclasses import dataclass, field

from .errors import ContractError, DataError

PAD, UNK, CLS, SEP = 0, 1, 2, 3
SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]")
MIN_VOCAB = 260
_WORD_RE = re.compile(r"\w+|[^\w\s]")
_MAX_WORD_CHARS = 100


def pre_tokenize(text):
    """Lowercase and split into words and single punctuation marks."""
    return _WORD_RE.findall(text.lower())


@dataclass
class Vocab:
    tokens: list
    ids: dict = field(default_factory=dict)

    def __post_init__(self):
        if tuple(self.tokens[:4]) != SPECIALS:
            raise ContractError("vocab must start with [PAD], [UNK], [CLS], [SEP]")
        self.ids = {t: i for i, t in enumerate(self.tokens)}
        if len(self.ids) != len(self.tokens):
            raise ContractError("vocab tokens must be unique")
        self.max_token_chars = max(len(t) for t in self.tokens)

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.ids

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for tok in self.tokens:
                fh.write(tok + "\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls([line.rstrip("\n") for line in fh])


def _split_word(word):
    return [word[0]] + ["##" + c for c in word[1:]]


def _merge_symbol(a, b):
    return a + b[2:]


def train_vocab(corpus, size=8000, min_pair_count=2):
    """Learn a subword vocabulary of at most ``size`` tokens from ``corpus``."""
    if size < MIN_VOCAB:
        raise ContractError(f"vocab size must be >= {MIN_VOCAB}, got {size}")
    counts = Counter()
    for text in corpus:
        counts.update(w for w in pre_tokenize(text) if len(w) <= _MAX_WORD_CHARS)
    if not counts:
        raise DataError("cannot train a vocabulary on an empty corpus")

    words = [_split_word(w) for w in counts]
    freqs = list(counts.values())

    alphabet = Counter()
    for syms, n in zip(words, freqs):
        for s in syms:
            alphabet[s] += n
    budget = size - len(SPECIALS)
    ranked = sorted(alphabet, key=lambda s: (-alphabet[s], s))
    tokens = list(SPECIALS) + ranked[:budget]
    known = set(tokens)

    pair_counts = Counter()
    where = {}
    for idx, (syms, n) in enumerate(zip(words, freqs)):
        for pair in zip(syms, syms[1:]):
            pair_counts[pair] += n
            where.setdefault(pair, set()).add(idx)
    heap = [(-c, pair) for pair, c in pair_counts.items()]
    heapq.heapify(heap)

    while len(tokens) < size and heap:
        negc, pair = heapq.heappop(heap)
        if pair_counts.get(pair, 0) != -negc:
            continue
        if -negc < min_pair_count:
            break
        a, b = pair
        merged = _merge_symbol(a, b)
        if a not in known or b not in known:
            # a pruned alphabet symbol cannot seed a merge
            del pair_counts[pair]
            continue
        if merged not in known:
            tokens.append(merged)
            known.add(merged)
        touched = set()
        for idx in sorted(where.pop(pair, ())):
            syms, n = words[idx], freqs[idx]
            for p in zip(syms, syms[1:]):
                pair_counts[p] -= n
                touched.add(p)
                if p in where:
                    where[p].discard(idx)
            out, i = [], 0
            while i < len(syms):
                if i + 1 < len(syms) and syms[i] == a and syms[i + 1] == b:
                    out.append(merged)
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            words[idx] = out
            for p in zip(out, out[1:]):
                pair_counts[p] += n
                touched.add(p)
                where.setdefault(p, set()).add(idx)
        for p in touched:
            c = pair_counts.get(p, 0)
            if c <= 0:
                pair_counts.pop(p, None)
            else:
                heapq.heappush(heap, (-c, p))
    return Vocab(tokens)


def _wordpiece(word, vocab):
    ids = vocab.ids
    if len(word) > _MAX_WORD_CHARS:
        return [UNK]
    out, start, n = [], 0, len(word)
    while start < n:
        prefix = "##" if start else ""
        end = min(n, start + vocab.max_token_chars)
        piece = None
        while end > start:
            cand = prefix + word[start:end]
            if cand in ids:
                piece = ids[cand]
                break
            end -= 1
        if piece is None:
            out.append(UNK)
            start += 1
        else:
            out.append(piece)
            start = end
    return out


def encode(text, vocab, max_len=128):
    """``[CLS] pieces... [SEP]``, right-truncated to at most ``max_len`` ids."""
    if max_len < 2:
        raise ContractError("max_len must leave room for [CLS] and [SEP]")
    body = []
    limit = max_len - 2
    for word in pre_tokenize(text):
        body.extend(_wordpiece(word, vocab))
        if len(body) >= limit:
            break
    return [CLS] + body[:limit] + [SEP]


def decode(ids, vocab):
    """Inverse of :func:`encode` up to [UNK] and whitespace normalization."""
    words = []
    for i in ids:
        if i in (PAD, CLS, SEP):
            continue
        tok = vocab.tokens[i]
        if tok.startswith("##") and words:
            words[-1] += tok[2:]
        else:
            words.append(tok)
    return " ".join(words)

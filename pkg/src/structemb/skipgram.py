"""Skip-Gram over walk corpora, with hierarchical softmax or negative sampling.

The center token's input vector predicts each context token inside a
(by default dynamically shrunk) window. Hierarchical softmax scores the
context token's root-to-leaf path in a Huffman tree as a product of sigmoid
branch classifiers; negative sampling contrasts the true context with draws
from the unigram^0.75 noise distribution.

Training runs in a numba kernel on float32 storage. ``pair_loss_grad_hs`` and
``pair_loss_grad_ns`` are float64 reference versions of one pair's loss and
gradients, used by the gradient checks.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numba
import numpy as np

from .walk import WalkCorpus

log = logging.getLogger(__name__)

Objective = Literal["hs", "ns"]
MIN_LR_FRACTION = 1e-4


@dataclass(frozen=True)
class TrainConfig:
    dimensions: int = 2
    window: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    objective: Objective = "hs"
    negative: int = 5
    seed: int = 0
    dynamic_window: bool = True
    threads: int = 1

    def __post_init__(self):
        if self.dimensions < 1 or self.window < 1 or self.epochs < 1:
            raise ValueError("dimensions, window and epochs must be positive")
        if self.objective not in ("hs", "ns"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.objective == "ns" and self.negative < 1:
            raise ValueError("negative sampling needs negative >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class HSTree:
    """Huffman tree over the vocabulary.

    Leaf ``v`` has a path of ``lengths[v]`` internal nodes ``points[v, :len]``
    (rows of ``classifiers``) with branch codes ``codes[v, :len]``; code 0
    means the branch taken with probability ``sigmoid(x . theta)``.
    """

    points: np.ndarray
    codes: np.ndarray
    lengths: np.ndarray
    classifiers: np.ndarray

    @property
    def vocab_size(self) -> int:
        return len(self.lengths)

    def path(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        h = self.lengths[v]
        return self.points[v, :h], self.codes[v, :h]


def token_counts(corpus: WalkCorpus, vocab_size: int | None = None) -> np.ndarray:
    if len(corpus.tokens) == 0:
        raise ValueError("empty corpus")
    if corpus.tokens.min() < 0:
        raise ValueError("negative token id")
    size = int(corpus.tokens.max()) + 1 if vocab_size is None else vocab_size
    if corpus.tokens.max() >= size:
        raise ValueError(f"token {int(corpus.tokens.max())} outside vocabulary of size {size}")
    return np.bincount(corpus.tokens, minlength=size)


def huffman_tree(counts: np.ndarray, dimensions: int = 1) -> HSTree:
    """Huffman tree from token counts; ties resolve by insertion order."""
    V = len(counts)
    heap = [(int(c), i, i) for i, c in enumerate(counts)]
    heapq.heapify(heap)
    parent = np.full(2 * V - 1, -1, dtype=np.int64)
    code = np.zeros(2 * V - 1, dtype=np.int8)
    nxt = V
    while len(heap) > 1:
        c1, _, a = heapq.heappop(heap)
        c2, _, b = heapq.heappop(heap)
        parent[a] = parent[b] = nxt
        code[b] = 1
        heapq.heappush(heap, (c1 + c2, nxt, nxt))
        nxt += 1
    root = nxt - 1
    paths = []
    for v in range(V):
        pts, cds = [], []
        node = v
        while node != root:
            pts.append(parent[node] - V)
            cds.append(code[node])
            node = parent[node]
        paths.append((pts[::-1], cds[::-1]))
    maxlen = max(1, max(len(p) for p, _ in paths))
    points = np.zeros((V, maxlen), dtype=np.int64)
    codes = np.zeros((V, maxlen), dtype=np.int8)
    lengths = np.zeros(V, dtype=np.int64)
    for v, (pts, cds) in enumerate(paths):
        lengths[v] = len(pts)
        points[v, : len(pts)] = pts
        codes[v, : len(cds)] = cds
    return HSTree(points, codes, lengths, np.zeros((max(V - 1, 1), dimensions), dtype=np.float32))


def build_hs_tree(corpus: WalkCorpus, dimensions: int = 1, vocab_size: int | None = None) -> HSTree:
    return huffman_tree(token_counts(corpus, vocab_size), dimensions)


def _log_sigmoid(z: np.ndarray | float) -> np.ndarray | float:
    return -np.logaddexp(0.0, -z)


def hs_probability(tree: HSTree, center_vector: np.ndarray, target: int) -> float:
    if not 0 <= target < tree.vocab_size:
        raise ValueError(f"unknown target {target}")
    pts, cds = tree.path(target)
    x = np.asarray(center_vector, dtype=np.float64)
    z = tree.classifiers[pts].astype(np.float64) @ x
    sign = np.where(cds == 0, 1.0, -1.0)
    return float(np.exp(np.sum(_log_sigmoid(sign * z))))


def pair_loss_grad_hs(x: np.ndarray, thetas: np.ndarray, codes: np.ndarray):
    """Negative log-probability of one path and its gradients.

    ``thetas`` holds the classifier rows along the path. Returns
    ``(loss, d_loss/d_x, d_loss/d_thetas)``.
    """
    z = thetas @ x
    sign = np.where(np.asarray(codes) == 0, 1.0, -1.0)
    loss = -np.sum(_log_sigmoid(sign * z))
    # d/dz of -log sigmoid(sign*z) = sigmoid(z) - label, label = 1 for code 0
    coef = 1.0 / (1.0 + np.exp(-z)) - (sign > 0)
    return loss, coef @ thetas, np.outer(coef, x)


def pair_loss_grad_ns(x: np.ndarray, positive: np.ndarray, negatives: np.ndarray):
    """Negative-sampling loss ``-log s(x.u_o) - sum log s(-x.u_neg)`` and gradients.

    Returns ``(loss, d/dx, d/dpositive, d/dnegatives)``.
    """
    zp = positive @ x
    zn = negatives @ x
    loss = -_log_sigmoid(zp) - np.sum(_log_sigmoid(-zn))
    cp = 1.0 / (1.0 + np.exp(-zp)) - 1.0
    cn = 1.0 / (1.0 + np.exp(-zn))
    grad_x = cp * positive + cn @ negatives
    return loss, grad_x, cp * x, np.outer(cn, x)


@numba.njit(cache=True, inline="always")
def _sigmoid(z):
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


@numba.njit(cache=True, inline="always")
def _neg_log_sigmoid(z):
    if z > 0:
        return np.log1p(np.exp(-z))
    return -z + np.log1p(np.exp(z))


@numba.njit(cache=True, fastmath=True)
def _branch(syn0, syn1, c, row, label, lr, neu1e, update):
    """One binary logistic unit: input ``syn0[c]``, weights ``syn1[row]``."""
    d = syn0.shape[1]
    f = 0.0
    for i in range(d):
        f += syn0[c, i] * syn1[row, i]
    if not update:
        return _neg_log_sigmoid(f if label == 1 else -f)
    g = lr * (label - _sigmoid(f))
    for i in range(d):
        neu1e[i] += g * syn1[row, i]
        syn1[row, i] += g * syn0[c, i]
    return 0.0


@numba.njit(cache=True)
def _train_sequence(seq, syn0, syn1, points, codes, lengths, noise_cum, hs, negative,
                    window, dynamic, lr, update, neu1e):
    d = syn0.shape[1]
    n = len(seq)
    loss = 0.0
    pairs = 0
    for i in range(n):
        c = seq[i]
        eff = window - np.random.randint(0, window) if dynamic else window
        for j in range(max(0, i - eff), min(n, i + eff + 1)):
            if j == i:
                continue
            o = seq[j]
            for t in range(d):
                neu1e[t] = 0.0
            if hs:
                for t in range(lengths[o]):
                    loss += _branch(syn0, syn1, c, points[o, t], 1 - codes[o, t], lr, neu1e, update)
            else:
                loss += _branch(syn0, syn1, c, o, 1, lr, neu1e, update)
                total = noise_cum[-1]
                for _ in range(negative):
                    r = np.random.random() * total
                    neg = np.searchsorted(noise_cum, r, side="right")
                    if neg >= len(noise_cum):
                        neg = len(noise_cum) - 1
                    if neg == o:
                        continue
                    loss += _branch(syn0, syn1, c, neg, 0, lr, neu1e, update)
            if update:
                for t in range(d):
                    syn0[c, t] += neu1e[t]
            pairs += 1
    return loss, pairs


@numba.njit(cache=True)
def _train_serial(tokens, offsets, syn0, syn1, points, codes, lengths, noise_cum, hs, negative,
                  window, dynamic, epochs, lr0, seed, update):
    np.random.seed(seed)
    neu1e = np.zeros(syn0.shape[1], dtype=np.float64)
    nseq = len(offsets) - 1
    total = epochs * len(tokens)
    done = 0
    loss = 0.0
    pairs = 0
    for ep in range(epochs):
        for s in range(nseq):
            lr = lr0 * (1.0 - (1.0 - 1e-4) * done / total)
            seq = tokens[offsets[s] : offsets[s + 1]]
            sl, sp = _train_sequence(seq, syn0, syn1, points, codes, lengths, noise_cum, hs,
                                     negative, window, dynamic, lr, update, neu1e)
            loss += sl
            pairs += sp
            done += len(seq)
    return loss, pairs


@numba.njit(cache=True, parallel=True)
def _train_parallel(tokens, offsets, syn0, syn1, points, codes, lengths, noise_cum, hs, negative,
                    window, dynamic, epochs, lr0, seeds, chunk):
    # unsynchronized shared updates; chunks seed their own streams
    nseq = len(offsets) - 1
    nchunks = (nseq + chunk - 1) // chunk
    total = epochs * nchunks
    for ep in range(epochs):
        for c in numba.prange(nchunks):
            np.random.seed(seeds[ep * nchunks + c])
            neu1e = np.zeros(syn0.shape[1], dtype=np.float64)
            lr = lr0 * (1.0 - (1.0 - 1e-4) * (ep * nchunks + c) / total)
            for s in range(c * chunk, min(nseq, (c + 1) * chunk)):
                seq = tokens[offsets[s] : offsets[s + 1]]
                _train_sequence(seq, syn0, syn1, points, codes, lengths, noise_cum, hs, negative,
                                window, dynamic, lr, True, neu1e)


class SkipGram:
    """Skip-Gram model state: input vectors, output/classifier vectors and the sampler."""

    def __init__(self, counts: np.ndarray, cfg: TrainConfig):
        self.cfg = cfg
        self.counts = np.asarray(counts, dtype=np.int64)
        V, d = len(counts), cfg.dimensions
        rng = np.random.default_rng(cfg.seed)
        self.syn0 = rng.uniform(-0.5 / d, 0.5 / d, size=(V, d)).astype(np.float32)
        if cfg.objective == "hs":
            self.tree = huffman_tree(self.counts, d)
            self.syn1 = self.tree.classifiers
            self.noise_cum = np.ones(1)
        else:
            self.tree = None
            self.syn1 = np.zeros((V, d), dtype=np.float32)
            self.noise_cum = np.cumsum(self.counts.astype(np.float64) ** 0.75)
        self._seed_stream = np.random.SeedSequence(cfg.seed)

    @property
    def vocab_size(self) -> int:
        return len(self.counts)

    def _tree_arrays(self):
        if self.tree is not None:
            return self.tree.points, self.tree.codes, self.tree.lengths
        return np.zeros((1, 1), np.int64), np.zeros((1, 1), np.int8), np.zeros(1, np.int64)

    def _check(self, corpus: WalkCorpus) -> None:
        if len(corpus.tokens) == 0:
            raise ValueError("empty corpus")
        if corpus.tokens.min() < 0 or corpus.tokens.max() >= self.vocab_size:
            raise ValueError("corpus contains a token outside the vocabulary")

    def train(self, corpus: WalkCorpus, epochs: int | None = None) -> None:
        self._check(corpus)
        cfg = self.cfg
        epochs = cfg.epochs if epochs is None else epochs
        points, codes, lengths = self._tree_arrays()
        args = (corpus.tokens, corpus.offsets, self.syn0, self.syn1, points, codes, lengths,
                self.noise_cum, cfg.objective == "hs", cfg.negative, cfg.window, cfg.dynamic_window,
                epochs, cfg.learning_rate)
        if cfg.threads <= 1:
            seed = int(self._seed_stream.spawn(1)[0].generate_state(1)[0])
            _train_serial(*args, seed, True)
        else:
            numba.set_num_threads(min(cfg.threads, numba.config.NUMBA_NUM_THREADS))
            chunk = max(1, len(corpus) // (8 * cfg.threads))
            nchunks = (len(corpus) + chunk - 1) // chunk
            seeds = self._seed_stream.spawn(1)[0].generate_state(epochs * nchunks).astype(np.int64)
            _train_parallel(*args, seeds, chunk)
        if not (np.isfinite(self.syn0).all() and np.isfinite(self.syn1).all()):
            raise FloatingPointError("non-finite parameters after training (diverging gradients)")

    def average_loss(self, corpus: WalkCorpus, seed: int = 12345) -> float:
        """Mean per-pair loss over all full-window pairs, without updating."""
        self._check(corpus)
        cfg = self.cfg
        points, codes, lengths = self._tree_arrays()
        loss, pairs = _train_serial(
            corpus.tokens, corpus.offsets, self.syn0, self.syn1, points, codes, lengths,
            self.noise_cum, cfg.objective == "hs", cfg.negative, cfg.window, False, 1,
            cfg.learning_rate, seed, False,
        )
        return loss / max(pairs, 1)


@dataclass
class EmbeddingMatrix:
    vectors: np.ndarray
    config: TrainConfig = field(default_factory=TrainConfig)
    labels: list[str] | None = None

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dimensions(self) -> int:
        return self.vectors.shape[1]

    def save(self, path: str | Path, labels: list[str] | None = None) -> None:
        labels = labels or self.labels or [str(i) for i in range(self.n)]
        with open(path, "w") as fh:
            fh.write(f"{self.n} {self.dimensions}\n")
            for lab, row in zip(labels, self.vectors.tolist()):
                fh.write(lab + " " + " ".join(f"{x:.6g}" for x in row) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingMatrix":
        with open(path) as fh:
            header = fh.readline().split()
            if len(header) != 2:
                raise ValueError(f"{path}: expected 'n d' header")
            n, d = int(header[0]), int(header[1])
            labels, rows = [], []
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != d + 1:
                    raise ValueError(f"{path}: row {len(rows) + 1} has {len(parts) - 1} values, expected {d}")
                labels.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
        if len(rows) != n:
            raise ValueError(f"{path}: header says {n} rows, found {len(rows)}")
        return cls(np.array(rows, dtype=np.float32).reshape(n, d), labels=labels)


def train(corpus: WalkCorpus, cfg: TrainConfig, vocab_size: int | None = None) -> EmbeddingMatrix:
    model = SkipGram(token_counts(corpus, vocab_size), cfg)
    model.train(corpus)
    return EmbeddingMatrix(model.syn0.copy(), cfg)

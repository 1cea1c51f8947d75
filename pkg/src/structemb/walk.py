"""Random-walk context generation.

Biased walks move over the multilayer graph: with the stay probability they
step inside the current layer (picking a neighbor proportionally to its weight and
emitting it as a token), otherwise they silently move one layer up or down.
Plain walks are uniform walks on the input graph, used as a proximity baseline.

Every walk draws from its own random stream seeded from
``(seed, start, walk index)``, so corpora do not depend on thread count.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numba
import numpy as np

from .graph import Graph
from .multilayer import MultilayerGraph

DEFAULT_STAY_PROBABILITY = 0.3


@dataclass(frozen=True)
class WalkConfig:
    stay_probability: float = DEFAULT_STAY_PROBABILITY
    walks_per_node: int = 10
    walk_length: int = 80
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.stay_probability <= 1.0:
            raise ValueError("stay_probability must lie in (0, 1]")
        if self.walks_per_node < 1 or self.walk_length < 1:
            raise ValueError("walks_per_node and walk_length must be positive")


@dataclass
class WalkCorpus:
    """Token sequences in CSR form: sequence ``i`` is ``tokens[offsets[i]:offsets[i+1]]``."""

    tokens: np.ndarray
    offsets: np.ndarray

    @classmethod
    def from_sequences(cls, seqs: Iterable[Sequence[int]]) -> "WalkCorpus":
        seqs = [np.asarray(s, dtype=np.int64) for s in seqs]
        offsets = np.zeros(len(seqs) + 1, dtype=np.int64)
        np.cumsum([len(s) for s in seqs], out=offsets[1:])
        tokens = np.concatenate(seqs) if seqs else np.empty(0, dtype=np.int64)
        return cls(tokens.astype(np.int64), offsets)

    @classmethod
    def from_matrix(cls, walks: np.ndarray) -> "WalkCorpus":
        num, length = walks.shape
        return cls(walks.reshape(-1).astype(np.int64), np.arange(num + 1, dtype=np.int64) * length)

    def __len__(self) -> int:
        return len(self.offsets) - 1

    def __getitem__(self, i: int) -> list[int]:
        return self.tokens[self.offsets[i] : self.offsets[i + 1]].tolist()

    @property
    def sequences(self) -> list[list[int]]:
        return [self[i] for i in range(len(self))]

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for i in range(len(self)):
                fh.write(" ".join(map(str, self[i])) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "WalkCorpus":
        with open(path) as fh:
            return cls.from_sequences([int(t) for t in line.split()] for line in fh if line.strip())


def walk_seeds(seed: int, starts: np.ndarray, index: np.ndarray) -> np.ndarray:
    """32-bit per-walk seeds from a splitmix64 mix of ``(seed, start, index)``."""
    with np.errstate(over="ignore"):
        x = (
            np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
            + starts.astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15)
            + index.astype(np.uint64) * np.uint64(0xD1B54A32D192ED03)
        )
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x = x ^ (x >> np.uint64(31))
    return (x >> np.uint64(32)).astype(np.int64)


@numba.njit(cache=True)
def _segment_cumsum(indptr, weights):
    cum = np.empty_like(weights)
    for k in range(indptr.shape[0]):
        for u in range(indptr.shape[1] - 1):
            s = 0.0
            for j in range(indptr[k, u], indptr[k, u + 1]):
                s += weights[j]
                cum[j] = s
    return cum


@numba.njit(cache=True)
def _walk(indptr, indices, cum, up_weight, start, length, q, seed, out):
    """One walk from ``start`` at layer 0; writes ``length`` tokens into ``out``."""
    np.random.seed(seed)
    num_layers = indptr.shape[0]
    u = start
    k = 0
    out[0] = u
    emitted = 1
    while emitted < length:
        lo = indptr[k, u]
        hi = indptr[k, u + 1]
        if num_layers == 1:
            stay = True
        else:
            stay = np.random.random() < q
        if stay and hi > lo:
            r = np.random.random() * cum[hi - 1]
            j = lo + np.searchsorted(cum[lo:hi], r, side="right")
            if j >= hi:
                j = hi - 1
            u = indices[j]
            out[emitted] = u
            emitted += 1
        elif num_layers == 1:
            break
        elif k == 0:
            k = 1
        elif k == num_layers - 1:
            k -= 1
        else:
            up = up_weight[u, k]
            if np.random.random() * (up + 1.0) < up:
                k += 1
            else:
                k -= 1
    return emitted


@numba.njit(cache=True, parallel=True)
def _walk_many(indptr, indices, cum, up_weight, starts, seeds, length, q):
    nwalks = len(starts)
    out = np.empty((nwalks, length), dtype=np.int64)
    for i in numba.prange(nwalks):
        _walk(indptr, indices, cum, up_weight, starts[i], length, q, seeds[i], out[i])
    return out


def _multilayer_arrays(m: MultilayerGraph):
    indptr, indices, weights = m.flat
    return indptr, indices, _segment_cumsum(indptr, weights), m.up_weight


def _graph_arrays(g: Graph):
    indptr = g.indptr.reshape(1, -1)
    cum = _segment_cumsum(indptr, np.ones(len(g.indices)))
    return indptr, g.indices, cum, np.zeros((g.n, 1))


def _arrays(source: MultilayerGraph | Graph):
    if isinstance(source, MultilayerGraph):
        return _multilayer_arrays(source)
    return _graph_arrays(source)


def _single(source, start: int, cfg: WalkConfig, rng: np.random.Generator) -> list[int]:
    if not 0 <= start < source.n:
        raise ValueError(f"invalid start node {start}")
    indptr, indices, cum, up = _arrays(source)
    out = np.empty(cfg.walk_length, dtype=np.int64)
    seed = int(rng.integers(0, 2**32))
    count = _walk(indptr, indices, cum, up, start, cfg.walk_length, cfg.stay_probability, seed, out)
    return out[:count].tolist()


def biased_walk(m: MultilayerGraph, start: int, cfg: WalkConfig, rng: np.random.Generator) -> list[int]:
    return _single(m, start, cfg, rng)


def plain_walk(g: Graph, start: int, cfg: WalkConfig, rng: np.random.Generator) -> list[int]:
    return _single(g, start, cfg, rng)


def generate_corpus(source: MultilayerGraph | Graph, cfg: WalkConfig) -> WalkCorpus:
    """``walks_per_node`` walks from every node; sequence ``r * n + u`` is walk ``r`` of ``u``.

    A :class:`MultilayerGraph` source gives biased walks, a :class:`Graph`
    plain uniform walks.
    """
    indptr, indices, cum, up = _arrays(source)
    n = source.n
    starts = np.tile(np.arange(n, dtype=np.int64), cfg.walks_per_node)
    index = np.repeat(np.arange(cfg.walks_per_node, dtype=np.int64), n)
    seeds = walk_seeds(cfg.seed, starts, index)
    walks = _walk_many(indptr, indices, cum, up, starts, seeds, cfg.walk_length, cfg.stay_probability)
    return WalkCorpus.from_matrix(walks)

"""Hierarchical structural distance between nodes.

``f_k(u, v)`` accumulates, for ``k = 0, 1, ...``, the DTW distance between the
ordered degree sequences of the rings at hop distance ``k`` around ``u`` and
``v``. A pair stops accumulating at the first ``k`` where either ring is empty.

Three optional reductions are supported through :class:`SimilarityConfig`:
run-length compression of the degree sequences (``compression``), restricting
candidate pairs to nodes of similar degree (``neighbor_limit``) and a cap on the
number of layers (``k_max``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence, TypeVar

import numba
import numpy as np

from .graph import DegreeSequence, Graph, GraphError

T = TypeVar("T")
CompressedDegreeSequence = list[tuple[int, int]]

DEFAULT_LAYER_CAP = 6


@dataclass(frozen=True)
class SimilarityConfig:
    k_max: int | None = None
    neighbor_limit: bool = False
    compression: bool = False

    def __post_init__(self):
        if self.k_max is not None and self.k_max < 0:
            raise ValueError("k_max must be >= 0")


def degree_cost(a: int, b: int) -> float:
    if a < 1 or b < 1:
        raise ValueError(f"degrees must be positive, got {a}, {b}")
    return max(a, b) / min(a, b) - 1.0


def compressed_cost(a: tuple[int, int], b: tuple[int, int]) -> float:
    """Cost between two (degree, count) runs: degree ratio cost scaled by the larger count."""
    if a[1] < 1 or b[1] < 1:
        raise ValueError("counts must be positive")
    return degree_cost(a[0], b[0]) * max(a[1], b[1])


def dtw(seq_a: Sequence[T], seq_b: Sequence[T], cost: Callable[[T, T], float]) -> float:
    """Exact dynamic time warping distance with unit steps (left, up, diagonal)."""
    if len(seq_a) == 0 or len(seq_b) == 0:
        raise ValueError("dtw needs two nonempty sequences")
    m = len(seq_b)
    prev = [0.0] + [math.inf] * m
    for a in seq_a:
        cur = [math.inf] * (m + 1)
        for j in range(1, m + 1):
            cur[j] = cost(a, seq_b[j - 1]) + min(prev[j], cur[j - 1], prev[j - 1])
        prev = cur
    return prev[m]


def compress(seq: DegreeSequence) -> CompressedDegreeSequence:
    out: CompressedDegreeSequence = []
    for d in seq:
        if out and out[-1][0] == d:
            out[-1] = (d, out[-1][1] + 1)
        else:
            out.append((d, 1))
    return out


def expand(cseq: CompressedDegreeSequence) -> DegreeSequence:
    return [d for d, c in cseq for _ in range(c)]


def neighbor_window(n: int) -> int:
    return math.ceil(math.log2(n)) if n > 1 else 0


def degree_order(g: Graph) -> np.ndarray:
    """Nodes sorted by ascending degree, ties by node id."""
    return np.lexsort((np.arange(g.n), g.degrees))


def select_neighbors(g: Graph, u: int, order: np.ndarray | None = None) -> set[int]:
    """Nodes adjacent to ``u`` in the degree-sorted node list.

    Binary search locates ``u`` by its (degree, id) key, then up to
    ``ceil(log2 n)`` consecutive positions are taken on each side.
    """
    g._check(u)
    if order is None:
        order = degree_order(g)
    deg = g.degrees
    keys = deg[order] * np.int64(g.n) + order
    pos = int(np.searchsorted(keys, deg[u] * np.int64(g.n) + u))
    window = neighbor_window(g.n)
    left = order[max(0, pos - window) : pos]
    right = order[pos + 1 : pos + 1 + window]
    return {int(x) for x in np.concatenate([left, right])}


def candidate_pairs(g: Graph, neighbor_limit: bool) -> np.ndarray:
    """Unordered candidate pairs ``(u, v)`` with ``u < v``, lexicographically sorted.

    With ``neighbor_limit`` the pair set is ``{(u, v): v in J_u or u in J_v}``;
    since membership is positional distance in the degree order, that is every
    pair at most ``ceil(log2 n)`` positions apart.
    """
    n = g.n
    if not neighbor_limit:
        us, vs = np.triu_indices(n, k=1)
        return np.stack([us, vs], axis=1).astype(np.int64)
    order = degree_order(g)
    parts = []
    for off in range(1, min(neighbor_window(n), n - 1) + 1):
        a, b = order[:-off], order[off:]
        parts.append(np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1))
    if not parts:
        return np.empty((0, 2), dtype=np.int64)
    pairs = np.concatenate(parts).astype(np.int64)
    return pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]


@dataclass
class RingProfiles:
    """Compressed ring degree sequences for every node, stored CSR-of-CSR.

    Node ``u`` owns rings ``node_ptr[u]..node_ptr[u+1]-1`` (ring ``k`` is
    ``node_ptr[u] + k``); ring ``r`` owns run entries
    ``ring_ptr[r]..ring_ptr[r+1]-1`` in ``degrees`` / ``counts``.
    """

    node_ptr: np.ndarray
    ring_ptr: np.ndarray
    degrees: np.ndarray
    counts: np.ndarray

    def num_rings(self, u: int) -> int:
        return int(self.node_ptr[u + 1] - self.node_ptr[u])

    def compressed(self, u: int, k: int) -> CompressedDegreeSequence:
        r = self.node_ptr[u] + k
        lo, hi = self.ring_ptr[r], self.ring_ptr[r + 1]
        return [(int(d), int(c)) for d, c in zip(self.degrees[lo:hi], self.counts[lo:hi])]


@numba.njit(cache=True)
def _ring_profiles(indptr, indices, k_max):
    n = len(indptr) - 1
    deg = indptr[1:] - indptr[:-1]
    dist = -np.ones(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    buf = np.empty(n, dtype=np.int64)
    node_ptr = np.zeros(n + 1, dtype=np.int64)
    ring_ptr_l = [0]
    degs_l = [0]
    counts_l = [0]
    degs_l.pop()
    counts_l.pop()
    for s in range(n):
        dist[s] = 0
        queue[0] = s
        head, tail = 0, 1
        level_start, level_end = 0, 1
        nrings = 0
        while level_start < level_end:
            # expand the current level, then histogram its degrees
            while head < level_end:
                u = queue[head]
                head += 1
                if k_max >= 0 and dist[u] >= k_max:
                    continue
                for j in range(indptr[u], indptr[u + 1]):
                    v = indices[j]
                    if dist[v] < 0:
                        dist[v] = dist[u] + 1
                        queue[tail] = v
                        tail += 1
            m = level_end - level_start
            for i in range(m):
                buf[i] = deg[queue[level_start + i]]
            srt = np.sort(buf[:m])
            cur = srt[0]
            cnt = 1
            for i in range(1, m):
                if srt[i] == cur:
                    cnt += 1
                else:
                    degs_l.append(cur)
                    counts_l.append(cnt)
                    cur = srt[i]
                    cnt = 1
            degs_l.append(cur)
            counts_l.append(cnt)
            ring_ptr_l.append(len(degs_l))
            nrings += 1
            level_start, level_end = level_end, tail
        node_ptr[s + 1] = node_ptr[s] + nrings
        for i in range(tail):
            dist[queue[i]] = -1
    ring_ptr = np.array(ring_ptr_l, dtype=np.int64)
    degs = np.empty(len(degs_l), dtype=np.int64)
    counts = np.empty(len(counts_l), dtype=np.int64)
    for i in range(len(degs_l)):
        degs[i] = degs_l[i]
        counts[i] = counts_l[i]
    return node_ptr, ring_ptr, degs, counts


def ring_profiles(g: Graph, k_max: int | None = None) -> RingProfiles:
    return RingProfiles(*_ring_profiles(g.indptr, g.indices, -1 if k_max is None else k_max))


@numba.njit(cache=True, inline="always")
def _ratio_cost(a, b):
    if a > b:
        return a / b - 1.0
    return b / a - 1.0


@numba.njit(cache=True)
def _dtw_runs(da, ca, db, cb, prev, cur, compressed):
    """DTW over run-length encoded sequences.

    With ``compressed`` the runs themselves are the elements (cost scaled by
    the larger count); otherwise runs are expanded into plain degree elements.
    """
    if compressed:
        la, lb = len(da), len(db)
    else:
        la, lb = 0, 0
        for i in range(len(ca)):
            la += ca[i]
        for i in range(len(cb)):
            lb += cb[i]
    prev[0] = 0.0
    for j in range(1, lb + 1):
        prev[j] = np.inf
    ia, left_a = 0, 0
    if not compressed:
        left_a = ca[0]
    for i in range(la):
        cur[0] = np.inf
        if compressed:
            a_deg = da[i]
            a_cnt = ca[i]
        else:
            a_deg = da[ia]
            a_cnt = 1
        jb = 0
        left_b = cb[0]
        for j in range(1, lb + 1):
            if compressed:
                c = _ratio_cost(a_deg, db[j - 1])
                if c != 0.0:
                    c *= max(a_cnt, cb[j - 1])
            else:
                c = _ratio_cost(a_deg, db[jb])
                left_b -= 1
                if left_b == 0 and jb + 1 < len(cb):
                    jb += 1
                    left_b = cb[jb]
            best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            if prev[j - 1] < best:
                best = prev[j - 1]
            cur[j] = c + best
        for j in range(lb + 1):
            prev[j] = cur[j]
        if not compressed:
            left_a -= 1
            if left_a == 0 and ia + 1 < len(ca):
                ia += 1
                left_a = ca[ia]
    return prev[lb]


@numba.njit(cache=True, parallel=True)
def _pair_distances(us, vs, node_ptr, ring_ptr, degs, counts, n_layers, compressed, buflen):
    npairs = len(us)
    values = np.full((npairs, n_layers), np.nan)
    depth = np.zeros(npairs, dtype=np.int64)
    chunk = 1024
    nchunks = (npairs + chunk - 1) // chunk
    for c in numba.prange(nchunks):
        prev = np.empty(buflen + 1)
        cur = np.empty(buflen + 1)
        for p in range(c * chunk, min(npairs, (c + 1) * chunk)):
            u, v = us[p], vs[p]
            ru = node_ptr[u + 1] - node_ptr[u]
            rv = node_ptr[v + 1] - node_ptr[v]
            top = min(ru, rv, n_layers)
            acc = 0.0
            for k in range(top):
                a = node_ptr[u] + k
                b = node_ptr[v] + k
                a0, a1 = ring_ptr[a], ring_ptr[a + 1]
                b0, b1 = ring_ptr[b], ring_ptr[b + 1]
                acc += _dtw_runs(
                    degs[a0:a1], counts[a0:a1], degs[b0:b1], counts[b0:b1], prev, cur, compressed
                )
                values[p, k] = acc
            depth[p] = top
    return values, depth


@dataclass
class DistanceTable:
    """Structural distances per candidate pair and layer.

    ``values[p, k]`` holds ``f_k`` for ``pairs[p]`` when ``k < depth[p]``; the
    remaining cells are NaN and never exposed as distances.
    """

    n: int
    pairs: np.ndarray
    values: np.ndarray
    depth: np.ndarray

    @property
    def num_layers(self) -> int:
        return self.values.shape[1]

    def layer(self, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(us, vs, f_k)`` over pairs defined at layer ``k``."""
        if not 0 <= k < self.num_layers:
            raise IndexError(f"layer {k} out of range 0..{self.num_layers - 1}")
        mask = self.depth > k
        return self.pairs[mask, 0], self.pairs[mask, 1], self.values[mask, k]

    def get(self, k: int, u: int, v: int) -> float | None:
        if u == v:
            return 0.0
        if u > v:
            u, v = v, u
        key = np.array([u, v])
        p = np.searchsorted(self.pairs[:, 0] * self.n + self.pairs[:, 1], key[0] * self.n + key[1])
        if p >= len(self.pairs) or self.pairs[p, 0] != u or self.pairs[p, 1] != v:
            return None
        if k >= self.depth[p]:
            return None
        return float(self.values[p, k])

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# n={self.n} layers={self.num_layers}\n")
            for k in range(self.num_layers):
                us, vs, fs = self.layer(k)
                for u, v, f in zip(us.tolist(), vs.tolist(), fs.tolist()):
                    fh.write(f"{k} {u} {v} {f:.17g}\n")

    @classmethod
    def load(cls, path: str | Path) -> "DistanceTable":
        n = None
        rows = []
        with open(path) as fh:
            for line in fh:
                if line.startswith("#"):
                    for tok in line[1:].split():
                        key, _, val = tok.partition("=")
                        if key == "n":
                            n = int(val)
                    continue
                if line.strip():
                    k, u, v, f = line.split()
                    rows.append((int(k), int(u), int(v), float(f)))
        if not rows:
            raise ValueError(f"{path}: empty distance table")
        arr = np.array(rows, dtype=float)
        ks = arr[:, 0].astype(np.int64)
        uv = arr[:, 1:3].astype(np.int64)
        if n is None:
            n = int(uv.max()) + 1
        pairs, inv = np.unique(uv, axis=0, return_inverse=True)
        inv = inv.reshape(-1)
        values = np.full((len(pairs), int(ks.max()) + 1), np.nan)
        values[inv, ks] = arr[:, 3]
        depth = np.zeros(len(pairs), dtype=np.int64)
        np.maximum.at(depth, inv, ks + 1)
        return cls(n, pairs, values, depth)


def structural_distances(g: Graph, cfg: SimilarityConfig = SimilarityConfig()) -> DistanceTable:
    """Compute ``f_k`` for every candidate pair and layer ``0..k'``.

    ``k'`` is ``cfg.k_max`` clamped to the largest eccentricity, or that
    eccentricity when no cap is set.
    """
    prof = ring_profiles(g, cfg.k_max)
    max_rings = int(np.diff(prof.node_ptr).max())
    n_layers = max_rings if cfg.k_max is None else min(cfg.k_max + 1, max_rings)
    pairs = candidate_pairs(g, cfg.neighbor_limit)
    if len(pairs) == 0:
        raise GraphError("graph needs at least two nodes")
    ring_len = np.diff(prof.ring_ptr) if cfg.compression else np.add.reduceat(
        prof.counts, prof.ring_ptr[:-1]
    )
    values, depth = _pair_distances(
        pairs[:, 0].copy(),
        pairs[:, 1].copy(),
        prof.node_ptr,
        prof.ring_ptr,
        prof.degrees,
        prof.counts,
        n_layers,
        cfg.compression,
        int(ring_len.max()),
    )
    top = int(depth.max())
    return DistanceTable(g.n, pairs, values[:, :top], depth)

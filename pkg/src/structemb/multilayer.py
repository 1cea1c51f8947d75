"""Weighted multilayer context graph built from a distance table.

Layer ``k`` links every pair whose ``f_k`` is defined, with weight
``exp(-f_k)``. Each node also has an upward weight ``log(heavy + e)``, where
``heavy`` counts its layer-``k`` edges heavier than the layer mean, and a unit
downward weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .distance import DistanceTable


class Layer(NamedTuple):
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray


class LayerStats(NamedTuple):
    edges: int
    avg_weight: float
    min_weight: float
    max_weight: float


@dataclass(frozen=True)
class MultilayerGraph:
    n: int
    layers: list[Layer]
    avg_weight: np.ndarray
    heavy_edges: np.ndarray
    up_weight: np.ndarray

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def down_weight(self, u: int, k: int) -> float:
        return 1.0 if k > 0 else 0.0

    def neighbors(self, u: int, k: int) -> tuple[np.ndarray, np.ndarray]:
        lay = self.layers[k]
        lo, hi = lay.indptr[u], lay.indptr[u + 1]
        return lay.indices[lo:hi], lay.weights[lo:hi]

    def transition_probabilities(self, u: int, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Intra-layer step distribution of ``u`` at layer ``k`` (empty if isolated there)."""
        nbrs, w = self.neighbors(u, k)
        if len(w) == 0:
            return nbrs, w
        return nbrs, w / w.sum()

    def layer_change_probabilities(self, u: int, k: int) -> tuple[float, float]:
        """``(p_up, p_down)`` for a layer change at ``(u, k)``."""
        if self.num_layers == 1:
            return 0.0, 0.0
        if k == 0:
            return 1.0, 0.0
        if k == self.num_layers - 1:
            return 0.0, 1.0
        up = self.up_weight[u, k]
        p_up = up / (up + self.down_weight(u, k))
        return p_up, 1.0 - p_up

    @cached_property
    def flat(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All layers packed for the walk kernel.

        Returns ``(indptr, indices, weights)`` with ``indptr`` of shape
        ``(L, n+1)`` indexing into the concatenated per-layer neighbor arrays.
        """
        indptr = np.empty((self.num_layers, self.n + 1), dtype=np.int64)
        offset = 0
        for k, lay in enumerate(self.layers):
            indptr[k] = lay.indptr + offset
            offset += len(lay.indices)
        indices = np.concatenate([lay.indices for lay in self.layers])
        weights = np.concatenate([lay.weights for lay in self.layers])
        return indptr, indices, weights


def build_multilayer(table: DistanceTable) -> MultilayerGraph:
    n = table.n
    L = table.num_layers
    layers = []
    avg = np.zeros(L)
    heavy = np.zeros((n, L), dtype=np.int64)
    for k in range(L):
        us, vs, fs = table.layer(k)
        if k == 0 and len(us) == 0:
            raise ValueError("layer 0 has no edges")
        w = np.exp(-fs)
        src = np.concatenate([us, vs])
        dst = np.concatenate([vs, us])
        ww = np.concatenate([w, w])
        order = np.lexsort((dst, src))
        src, dst, ww = src[order], dst[order], ww[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        layers.append(Layer(indptr, dst.astype(np.int64), ww))
        avg[k] = w.mean() if len(w) else 0.0
        heavy[:, k] = np.bincount(src[ww > avg[k]], minlength=n)
    up = np.log(heavy + math.e)
    up[:, L - 1] = 0.0
    return MultilayerGraph(n, layers, avg, heavy, up)


def layer_stats(m: MultilayerGraph, k: int) -> LayerStats:
    if not 0 <= k < m.num_layers:
        raise IndexError(f"layer {k} out of range 0..{m.num_layers - 1}")
    lay = m.layers[k]
    # each undirected edge appears twice in the CSR
    w = lay.weights
    if len(w) == 0:
        return LayerStats(0, 0.0, 0.0, 0.0)
    return LayerStats(len(w) // 2, float(w.mean()), float(w.min()), float(w.max()))


def write_layer_stats_csv(m: MultilayerGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write("layer,edges,avg_weight,min_weight,max_weight\n")
        for k in range(m.num_layers):
            s = layer_stats(m, k)
            fh.write(f"{k},{s.edges},{s.avg_weight:.10g},{s.min_weight:.10g},{s.max_weight:.10g}\n")

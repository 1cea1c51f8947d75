"""Experiment harness: benchmark graphs, embedding-distance reports and classifiers."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats

from .distance import DistanceTable
from .graph import Graph, GraphError

log = logging.getLogger(__name__)


# -- generators ---------------------------------------------------------------


def gen_barbell(h: int, k: int) -> tuple[Graph, list[list[int]]]:
    """Two ``K_h`` cliques joined through a ``k``-node path.

    Node labels are ``0..2h+k-1``: clique one is ``0..h-1`` with bridge ``h-1``,
    the path is ``h..h+k-1`` and clique two starts at bridge ``h+k``. Returns
    the graph and its ground-truth equivalence classes as dense id lists.
    """
    if h < 3 or k < 1:
        raise ValueError("barbell needs h >= 3 and k >= 1")
    edges = []
    c1 = list(range(h))
    path = list(range(h, h + k))
    c2 = list(range(h + k, 2 * h + k))
    for clique in (c1, c2):
        edges += [(a, b) for i, a in enumerate(clique) for b in clique[i + 1 :]]
    b1, b2 = c1[-1], c2[0]
    chain = [b1] + path + [b2]
    edges += list(zip(chain[:-1], chain[1:]))
    g = Graph.from_edges(edges)
    idx = {int(lab): i for i, lab in enumerate(g.labels)}
    classes = [[idx[x] for x in c1[:-1] + c2[1:]], [idx[b1], idx[b2]]]
    for i in range((k + 1) // 2):
        a, b = path[i], path[k - 1 - i]
        classes.append([idx[a]] if a == b else [idx[a], idx[b]])
    return g, classes


def _mirror_label(label: str, offset: int | None) -> str:
    return str(int(label) + offset) if offset is not None else label + "'"


def gen_mirrored(g: Graph, bridge: object | tuple[object, object] | None = None) -> tuple[Graph, dict[int, int]]:
    """Disjoint union of ``g`` with a relabelled copy, optionally bridged.

    ``bridge`` names a base node whose two copies get joined, or a pair
    ``(a, b)`` joining ``a`` in the first copy with ``b``'s mirror. Numeric
    labels are mirrored by adding the largest label; others get a ``'`` suffix.
    Returns the graph and the mirror involution on dense ids.
    """
    try:
        offset = max(int(x) for x in g.labels)
    except ValueError:
        offset = None
    base = [(g.labels[u], g.labels[v]) for u, v in g.edges()]
    edges = base + [(_mirror_label(a, offset), _mirror_label(b, offset)) for a, b in base]
    if bridge is not None:
        a, b = bridge if isinstance(bridge, tuple) else (bridge, bridge)
        a, b = str(a), str(b)
        if a not in g.labels or b not in g.labels:
            raise GraphError(f"invalid bridge node {bridge!r}")
        edges.append((a, _mirror_label(b, offset)))
    mg = Graph.from_edges(edges)
    index = {lab: i for i, lab in enumerate(mg.labels)}
    mirror = {}
    for lab in g.labels:
        u, v = index[lab], index[_mirror_label(lab, offset)]
        mirror[u], mirror[v] = v, u
    return mg, mirror


def edge_sample(g: Graph, s: float, rng: np.random.Generator) -> Graph:
    """Keep each edge independently with probability ``s``; nodes left isolated are dropped."""
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    edges = g.edges()
    keep = rng.random(len(edges)) < s
    kept = [(g.labels[u], g.labels[v]) for (u, v), k in zip(edges, keep) if k]
    if not kept:
        raise GraphError("edge sample is empty")
    return Graph.from_edges(kept, nodes=g.labels)


def edge_sampled_pair(g: Graph, s: float, rng: np.random.Generator) -> tuple[Graph, list[tuple[int, int]]]:
    """Union of two independent edge samples of ``g`` plus corresponding node pairs.

    Labels become ``a:<label>`` and ``b:<label>``; pairs where either copy lost
    all edges are omitted.
    """
    g1 = edge_sample(g, s, rng)
    g2 = edge_sample(g, s, rng)
    edges = [("a:" + g1.labels[u], "a:" + g1.labels[v]) for u, v in g1.edges()]
    edges += [("b:" + g2.labels[u], "b:" + g2.labels[v]) for u, v in g2.edges()]
    union = Graph.from_edges(edges)
    index = {lab: i for i, lab in enumerate(union.labels)}
    pairs = [
        (index["a:" + lab], index["b:" + lab])
        for lab in g.labels
        if "a:" + lab in index and "b:" + lab in index
    ]
    return union, pairs


def gen_er(n: int, avg_degree: float, rng: np.random.Generator) -> Graph:
    """G(n, p) with ``p = avg_degree / (n - 1)``; isolated nodes are dropped."""
    if n < 2:
        raise ValueError("need n >= 2")
    p = min(1.0, avg_degree / (n - 1))
    edges = []
    for u in range(n - 1):
        m = rng.binomial(n - 1 - u, p)
        if m:
            vs = u + 1 + rng.choice(n - 1 - u, size=m, replace=False)
            edges.extend((u, int(v)) for v in vs)
    return Graph.from_edges(edges, nodes=range(n))


def gen_chung_lu(weights: Sequence[float], rng: np.random.Generator) -> Graph:
    """Random graph with edge probabilities ``min(1, w_u w_v / sum(w))``.

    Nodes that come out isolated are attached to one partner drawn
    proportionally to ``weights``, so every node is kept.
    """
    w = np.asarray(weights, dtype=float)
    n = len(w)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < np.minimum(1.0, w[iu] * w[ju] / w.sum())
    edges = list(zip(iu[keep].tolist(), ju[keep].tolist()))
    deg = np.bincount(np.concatenate([iu[keep], ju[keep]]), minlength=n)
    for u in np.flatnonzero(deg == 0):
        p = w.copy()
        p[u] = 0.0
        edges.append((int(u), int(rng.choice(n, p=p / p.sum()))))
    return Graph.from_edges(edges, nodes=range(n))


def gen_egonet_substitute(
    rng: np.random.Generator, n: int = 224, avg_degree: float = 28.5, max_degree: int = 99
) -> Graph:
    """Heterogeneous social-network stand-in: Chung-Lu graph with skewed expected degrees.

    Expected degrees are ``1 + (max_degree - 1) * U^a`` with ``a`` chosen so
    their mean is ``avg_degree``; the defaults mimic a 224-node ego network
    with about 3200 edges and degrees between 1 and 99.
    """
    a = (max_degree - 1) / (avg_degree - 1) - 1.0
    w = 1.0 + (max_degree - 1) * rng.random(n) ** a
    return gen_chung_lu(w * (avg_degree / w.mean()), rng)


ROLE_NAMES = ("clique", "hub", "leaf", "path")


def gen_roles(rng: np.random.Generator, n: int = 200) -> tuple[Graph, np.ndarray]:
    """Connected graph assembled from four structural templates, labelled by template.

    Small cliques (3 or 4 members), stars (hub with 2 or 3 leaves) and chains
    of 1 or 2 path nodes are strung on a ring: each chain links one attachment
    node of the previous unit (a clique member or a hub) to the next. Degrees
    of the templates overlap (triangle members and path nodes both have degree
    2, hubs and clique members 3 to 5), so degree alone cannot tell them apart. Returns the
    graph and role ids (indices into ``ROLE_NAMES``) per dense node id.
    """
    role: list[int] = []
    edges: list[tuple[int, int]] = []
    anchors: list[int] = []

    def new(r: int) -> int:
        role.append(r)
        return len(role) - 1

    budget = n
    units = []
    while budget > 0:
        kind = len(units) % 2
        size = int(rng.integers(3, 5)) if kind == 0 else 1 + int(rng.integers(2, 4))
        chain = int(rng.integers(1, 3))
        if size + chain > budget:
            break
        units.append((kind, size, chain))
        budget -= size + chain
    # leftover nodes lengthen the chains
    i = 0
    while budget > 0:
        kind, size, chain = units[i % len(units)]
        units[i % len(units)] = (kind, size, chain + 1)
        budget -= 1
        i += 1
    chains = []
    for kind, size, chain in units:
        if kind == 0:
            members = [new(0) for _ in range(size)]
            edges += [(a, b) for j, a in enumerate(members) for b in members[j + 1 :]]
            anchors.append(members[0])
        else:
            hub = new(1)
            edges += [(hub, new(2)) for _ in range(size - 1)]
            anchors.append(hub)
        chains.append([new(3) for _ in range(chain)])
    for j, chain in enumerate(chains):
        nodes = [anchors[j]] + chain + [anchors[(j + 1) % len(anchors)]]
        edges += list(zip(nodes[:-1], nodes[1:]))
    g = Graph.from_edges(edges)
    labels = np.array([role[int(lab)] for lab in g.labels])
    return g, labels


# -- embedding distance reports --------------------------------------------------


def _pairwise(vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x = np.asarray(vectors, dtype=np.float64)
    us, vs = np.triu_indices(len(x), k=1)
    return us, vs, np.linalg.norm(x[us] - x[vs], axis=1)


@dataclass
class PairDistanceReport:
    special: np.ndarray
    all_pairs: np.ndarray
    special_mean: float
    special_std: float
    all_mean: float
    all_std: float
    ratio: float

    def fraction_special_below(self, threshold: float) -> float:
        return float(np.mean(self.special < threshold))

    def fraction_all_above(self, threshold: float) -> float:
        return float(np.mean(self.all_pairs > threshold))

    def ccdf(self, which: str = "special", points: int = 50) -> tuple[np.ndarray, np.ndarray]:
        """Samples ``(x, P[D > x])`` of the complementary CDF on an even grid."""
        d = np.sort(self.special if which == "special" else self.all_pairs)
        xs = np.linspace(0.0, float(self.all_pairs.max()), points)
        return xs, 1.0 - np.searchsorted(d, xs, side="right") / len(d)


def pair_distance_report(vectors: np.ndarray, special_pairs: Sequence[tuple[int, int]]) -> PairDistanceReport:
    x = np.asarray(vectors, dtype=np.float64)
    if len(special_pairs) == 0:
        raise ValueError("no special pairs")
    sp = np.asarray(special_pairs, dtype=np.int64)
    if sp.min() < 0 or sp.max() >= len(x):
        raise ValueError("special pair references a node outside the embedding")
    special = np.linalg.norm(x[sp[:, 0]] - x[sp[:, 1]], axis=1)
    _, _, all_d = _pairwise(x)
    sm = float(special.mean())
    am = float(all_d.mean())
    return PairDistanceReport(
        special, all_d, sm, float(special.std()), am, float(all_d.std()),
        am / sm if sm > 0 else float("inf"),
    )


def class_separation(vectors: np.ndarray, classes: Sequence[Sequence[int]]) -> np.ndarray:
    """Per class: is the mean intra-class distance below the mean member-to-outsider distance?

    Singleton classes have no intra-class pairs and are reported as separated
    only if they are not all at distance zero from outsiders.
    """
    x = np.asarray(vectors, dtype=np.float64)
    d = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)
    out = []
    for cls in classes:
        members = np.asarray(cls)
        others = np.setdiff1d(np.arange(len(x)), members)
        inter = d[np.ix_(members, others)].mean()
        if len(members) < 2:
            out.append(bool(inter > 0))
            continue
        sub = d[np.ix_(members, members)]
        intra = sub[np.triu_indices(len(members), k=1)].mean()
        out.append(bool(intra < inter))
    return np.array(out)


class Correlation(NamedTuple):
    pearson: float
    spearman: float
    pearson_pvalue: float
    spearman_pvalue: float
    pairs: int


def distance_correlation(table: DistanceTable, vectors: np.ndarray, k: int) -> Correlation:
    """Pearson and Spearman (average ranks for ties) between ``f_k`` and embedding distance."""
    us, vs, f = table.layer(k)
    if len(f) < 3:
        raise ValueError(f"layer {k} has fewer than 3 defined pairs")
    x = np.asarray(vectors, dtype=np.float64)
    d = np.linalg.norm(x[us] - x[vs], axis=1)
    pr = stats.pearsonr(f, d)
    sr = stats.spearmanr(f, d)
    return Correlation(float(pr[0]), float(sr[0]), float(pr[1]), float(sr[1]), len(f))


# -- classification ------------------------------------------------------------


def quartile_labels(scores: Sequence[float]) -> np.ndarray:
    """Labels 1..4 by quartile of ``scores``; ties split by node id."""
    scores = np.asarray(scores, dtype=float)
    n = len(scores)
    order = np.lexsort((np.arange(n), scores))
    labels = np.empty(n, dtype=np.int64)
    labels[order] = 1 + (np.arange(n) * 4) // n
    return labels


class OneVsRestLogistic:
    """One-vs-rest L2-regularised logistic regression trained by full-batch gradient descent.

    Per class the objective is ``mean log-loss + l2 / (2 N) * ||w||^2`` (bias
    unpenalised). The step halves whenever the loss goes up.
    """

    def __init__(self, l2: float = 1.0, iterations: int = 500, learning_rate: float = 0.1):
        self.l2 = l2
        self.iterations = iterations
        self.learning_rate = learning_rate

    def _fit_binary(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        n, d = x.shape
        xb = np.hstack([x, np.ones((n, 1))])
        w = np.zeros(d + 1)
        reg = np.r_[np.full(d, self.l2 / n), 0.0]

        def loss(w):
            z = xb @ w
            return np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * np.sum(reg * w * w)

        lr = self.learning_rate
        cur = loss(w)
        for _ in range(self.iterations):
            p = 1.0 / (1.0 + np.exp(-(xb @ w)))
            grad = xb.T @ (p - y) / n + reg * w
            nw = w - lr * grad
            new = loss(nw)
            if new > cur:
                lr *= 0.5
                continue
            w, cur = nw, new
        return w

    def fit(self, x: np.ndarray, y: np.ndarray) -> "OneVsRestLogistic":
        x = np.asarray(x, dtype=float)
        self.mean_ = x.mean(axis=0)
        self.scale_ = x.std(axis=0)
        self.scale_[self.scale_ == 0] = 1.0
        xs = (x - self.mean_) / self.scale_
        self.classes_ = np.unique(y)
        self.coef_ = np.array([self._fit_binary(xs, (y == c).astype(float)) for c in self.classes_])
        return self

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        xs = (np.asarray(x, dtype=float) - self.mean_) / self.scale_
        return np.hstack([xs, np.ones((len(xs), 1))]) @ self.coef_.T

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.classes_[np.argmax(self.decision_function(x), axis=1)]


@dataclass
class ClassificationResult:
    accuracies: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.accuracies.mean())

    @property
    def std(self) -> float:
        return float(self.accuracies.std())


def classify(
    features: np.ndarray,
    labels: Sequence[int],
    rng: np.random.Generator,
    train_fraction: float = 0.8,
    repeats: int = 10,
    max_redraws: int = 100,
) -> ClassificationResult:
    """Mean test accuracy of one-vs-rest logistic regression over random splits.

    Splits missing a class in the training part are redrawn.
    """
    x = np.asarray(features, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(labels)
    if len(x) != len(y):
        raise ValueError("features and labels differ in length")
    classes = np.unique(y)
    n = len(y)
    n_train = int(round(train_fraction * n))
    accs = []
    for _ in range(repeats):
        for _ in range(max_redraws):
            perm = rng.permutation(n)
            tr, te = perm[:n_train], perm[n_train:]
            if len(np.unique(y[tr])) == len(classes):
                break
        else:
            raise ValueError("could not draw a training split containing every class")
        model = OneVsRestLogistic().fit(x[tr], y[tr])
        accs.append(np.mean(model.predict(x[te]) == y[te]))
    return ClassificationResult(np.array(accs))


# -- scalability ----------------------------------------------------------------


def fit_exponent(sizes: Sequence[float], times: Sequence[float]) -> float:
    """Slope of ``log(time)`` against ``log(size)`` by least squares."""
    slope, _ = np.polyfit(np.log(np.asarray(sizes, float)), np.log(np.asarray(times, float)), 1)
    return float(slope)


@dataclass
class ScalingResult:
    sizes: list[int]
    times: list[float]
    exponent: float


def scaling_run(
    sizes: Sequence[int],
    embed: Callable[[Graph, int], object],
    rng: np.random.Generator,
    avg_degree: float = 10.0,
    repeats: int = 1,
) -> ScalingResult:
    """Mean wall time of ``embed(graph, seed)`` on ER graphs of each size, plus the fitted exponent.

    Graph generation is excluded from the timing.
    """
    means = []
    for n in sizes:
        times = []
        for _ in range(repeats):
            g = gen_er(n, avg_degree, rng)
            seed = int(rng.integers(0, 2**31))
            t0 = time.perf_counter()
            embed(g, seed)
            times.append(time.perf_counter() - t0)
        means.append(float(np.mean(times)))
        log.info("n=%d: %.2fs", n, means[-1])
    return ScalingResult(list(sizes), means, fit_exponent(sizes, means))

"""Undirected, unweighted graphs with dense node ids.

Nodes are densified to ``0..n-1`` at construction; the original labels are
kept in ``Graph.labels`` and translated back on output. Adjacency is stored
in CSR form (``indptr``, ``indices``) with sorted neighbor lists.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, NamedTuple

import numba
import numpy as np

log = logging.getLogger(__name__)

DegreeSequence = list[int]


class GraphError(ValueError):
    pass


@dataclass
class LoadReport:
    edges_read: int = 0
    duplicate_edges: int = 0
    self_loops: int = 0
    isolated_dropped: list[str] = field(default_factory=list)

    def __str__(self) -> str:
        return (
            f"edges read: {self.edges_read}, duplicates dropped: {self.duplicate_edges}, "
            f"self-loops dropped: {self.self_loops}, "
            f"isolated nodes dropped: {len(self.isolated_dropped)}"
        )


class Ring(NamedTuple):
    center: int
    distance: int
    members: list[int]


@dataclass(frozen=True)
class Graph:
    indptr: np.ndarray
    indices: np.ndarray
    labels: list[str]
    report: LoadReport = field(default_factory=LoadReport, compare=False)

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[object, object]],
        nodes: Iterable[object] | None = None,
    ) -> "Graph":
        """Build a validated graph from label pairs.

        Self-loops and duplicate edges are dropped and counted. Labels listed in
        ``nodes`` that end up without edges are dropped with a warning, as are
        nodes that only carried self-loops.
        """
        report = LoadReport()
        index: dict[str, int] = {}
        labels: list[str] = []
        seen: set[tuple[int, int]] = set()
        mentioned: list[str] = [] if nodes is None else [str(x) for x in nodes]

        def intern(label: str) -> int:
            if label not in index:
                index[label] = len(labels)
                labels.append(label)
            return index[label]

        for a, b in edges:
            report.edges_read += 1
            a, b = str(a), str(b)
            if a == b:
                report.self_loops += 1
                mentioned.append(a)
                continue
            u, v = intern(a), intern(b)
            key = (u, v) if u < v else (v, u)
            if key in seen:
                report.duplicate_edges += 1
                continue
            seen.add(key)

        report.isolated_dropped = sorted({x for x in mentioned if x not in index})
        if report.isolated_dropped:
            log.warning("dropping %d isolated node(s)", len(report.isolated_dropped))
        if not labels:
            raise GraphError("graph is empty after cleaning")

        n = len(labels)
        pairs = np.array(sorted(seen), dtype=np.int64).reshape(-1, 2)
        src = np.concatenate([pairs[:, 0], pairs[:, 1]])
        dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
        order = np.lexsort((dst, src))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(indptr, dst[order].astype(np.int64), labels, report)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def num_edges(self) -> int:
        return len(self.indices) // 2

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, u: int) -> np.ndarray:
        self._check(u)
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for u in range(self.n):
            out.extend((u, int(v)) for v in self.neighbors(u) if u < v)
        return out

    def index_of(self, label: object) -> int:
        try:
            return self.labels.index(str(label))
        except ValueError:
            raise GraphError(f"unknown node {label!r}") from None

    def _check(self, u: int) -> None:
        if not 0 <= u < self.n:
            raise GraphError(f"invalid node id {u}")


def parse_edge_lines(lines: Iterable[str], source: str = "<input>") -> list[tuple[str, str]]:
    edges = []
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphError(f"{source}:{lineno}: expected two node tokens, got {len(parts)}")
        edges.append((parts[0], parts[1]))
    return edges


def load_edge_list(path: str | Path) -> Graph:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GraphError(f"cannot read edge list {path}: {exc}") from exc
    g = Graph.from_edges(parse_edge_lines(text.splitlines(), str(path)))
    log.info("loaded %s: %d nodes, %d edges (%s)", path, g.n, g.num_edges, g.report)
    return g


def write_edge_list(g: Graph, path: str | Path) -> None:
    with open(path, "w") as fh:
        for u, v in g.edges():
            fh.write(f"{g.labels[u]} {g.labels[v]}\n")


def karate_path() -> Path:
    return Path(str(resources.files("structemb") / "data" / "karate.edges"))


def load_karate() -> Graph:
    return load_edge_list(karate_path())


@numba.njit(cache=True)
def _bfs_layers(indptr, indices, source, k_max, dist, queue):
    """BFS from ``source`` up to depth ``k_max`` (negative: unbounded).

    Fills ``queue`` with visited nodes in BFS order and returns
    ``(visited_count, ring_ptr)`` where ring ``k`` is
    ``queue[ring_ptr[k]:ring_ptr[k+1]]``. ``dist`` must be all -1 on entry and
    is restored before returning.
    """
    dist[source] = 0
    queue[0] = source
    head, tail = 0, 1
    ring_ptr = [0]
    level_end = 1
    while head < tail:
        if head == level_end:
            ring_ptr.append(head)
            level_end = tail
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
    ring_ptr.append(tail)
    for i in range(tail):
        dist[queue[i]] = -1
    return tail, np.array(ring_ptr, dtype=np.int64)


@numba.njit(cache=True)
def _eccentricities(indptr, indices, n):
    dist = -np.ones(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    ecc = np.zeros(n, dtype=np.int64)
    for s in range(n):
        _, ring_ptr = _bfs_layers(indptr, indices, s, -1, dist, queue)
        ecc[s] = len(ring_ptr) - 2
    return ecc


def rings(g: Graph, u: int, k_max: int) -> list[Ring]:
    """Rings of nodes at hop distance exactly ``k`` from ``u`` for ``k = 0..k_max``.

    Stops at the first empty ring, so at most ``ecc(u) + 1`` rings come back.
    """
    g._check(u)
    if k_max < 0:
        raise GraphError("k_max must be >= 0")
    dist = -np.ones(g.n, dtype=np.int64)
    queue = np.empty(g.n, dtype=np.int64)
    _, ring_ptr = _bfs_layers(g.indptr, g.indices, u, k_max, dist, queue)
    return [
        Ring(u, k, sorted(int(x) for x in queue[ring_ptr[k] : ring_ptr[k + 1]]))
        for k in range(len(ring_ptr) - 1)
    ]


def ordered_degree_sequence(g: Graph, ring: Ring | Iterable[int]) -> DegreeSequence:
    members = ring.members if isinstance(ring, Ring) else list(ring)
    if not members:
        raise GraphError("degree sequence of an empty ring")
    deg = g.degrees
    return sorted(int(deg[x]) for x in members)


def eccentricities(g: Graph) -> np.ndarray:
    """Per-node eccentricity within its own connected component."""
    return _eccentricities(g.indptr, g.indices, g.n)


def diameter(g: Graph) -> int:
    """Largest finite hop distance; disconnected pairs are ignored."""
    return int(eccentricities(g).max())

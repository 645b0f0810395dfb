"""Undirected communication graphs for multi-agent simulations.

Vertices are the integers ``0 .. n_vertices - 1``. Graphs are unweighted,
without self-loops, and immutable once built, so they can be shared freely
across concurrent Monte Carlo runs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Graph:
    """Undirected graph given by sorted, duplicate-free neighbor lists."""

    n_vertices: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        if len(self.adjacency) != self.n_vertices:
            raise ValueError("adjacency size does not match vertex count")
        for n, nbrs in enumerate(self.adjacency):
            if any(m < 0 or m >= self.n_vertices for m in nbrs):
                raise ValueError(f"vertex {n} has an out-of-range neighbor")
            if n in nbrs:
                raise ValueError(f"vertex {n} has a self-loop")
            if list(nbrs) != sorted(set(nbrs)):
                raise ValueError(f"neighbor list of vertex {n} is not sorted and unique")
            for m in nbrs:
                if n not in self.adjacency[m]:
                    raise ValueError(f"edge ({n}, {m}) is not symmetric")

    @property
    def n_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self.adjacency) // 2

    def degree(self, n: int) -> int:
        return len(self.adjacency[n])

    @property
    def max_degree(self) -> int:
        return max(len(nbrs) for nbrs in self.adjacency)

    def edges(self) -> list[tuple[int, int]]:
        """Canonical edge list with i < j, sorted."""
        return sorted((n, m) for n, nbrs in enumerate(self.adjacency) for m in nbrs if n < m)


def make_from_edges(n: int, edges) -> Graph:
    """Build the undirected graph on ``n`` vertices with the given edges.

    Edge order and orientation are irrelevant; duplicates collapse. Self-loops
    and out-of-range endpoints are rejected.
    """
    if n < 1:
        raise ValueError("vertex count must be positive")
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j:
            raise ValueError(f"self-loop ({i}, {j}) is not allowed")
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) has an endpoint outside [0, {n})")
        nbrs[i].add(j)
        nbrs[j].add(i)
    return Graph(n, tuple(tuple(sorted(s)) for s in nbrs))


def make_cycle(n: int) -> Graph:
    """The cycle on ``n >= 3`` vertices; every vertex has degree 2."""
    if n < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    return make_from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def make_petersen() -> Graph:
    """The Petersen graph: 10 vertices, 15 edges, 3-regular.

    Standard construction: outer 5-cycle (0-4), inner pentagram (5-9),
    spokes i -- i+5.
    """
    edges = []
    for i in range(5):
        edges.append((i, (i + 1) % 5))
        edges.append((5 + i, 5 + (i + 2) % 5))
        edges.append((i, i + 5))
    return make_from_edges(10, edges)


def is_connected(g: Graph) -> bool:
    """True iff a traversal from vertex 0 reaches every vertex."""
    seen = [False] * g.n_vertices
    seen[0] = True
    queue = deque([0])
    while queue:
        n = queue.popleft()
        for m in g.adjacency[n]:
            if not seen[m]:
                seen[m] = True
                queue.append(m)
    return all(seen)


def laplacian(g: Graph) -> np.ndarray:
    """Graph Laplacian L = D - A as an integer matrix.

    L is symmetric positive semidefinite with zero row sums; the consensus
    term of the network dynamics is -(L x) per vertex.
    """
    L = np.zeros((g.n_vertices, g.n_vertices), dtype=np.int64)
    for n, nbrs in enumerate(g.adjacency):
        L[n, n] = len(nbrs)
        for m in nbrs:
            L[n, m] = -1
    return L


def parse_edge_list(text: str) -> Graph:
    """Parse the edge-list text format.

    First non-comment line holds the vertex count N; each following line is
    an edge ``i j`` (whitespace separated). ``#`` starts a comment.
    """
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise ValueError("edge list is empty")
    try:
        n = int(lines[0])
    except ValueError:
        raise ValueError(f"first line must be the vertex count, got {lines[0]!r}") from None
    edges = []
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"expected an edge 'i j', got {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    return make_from_edges(n, edges)

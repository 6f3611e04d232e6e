"""Undirected graphs, stable-set enumeration, and the graph file format.

Graph files are plain text: the first non-comment line holds ``n m``, then
m lines ``u v`` with 0-based vertex indices; ``#`` starts a comment. The
exact maximum stable-set size is computed by bitmask enumeration, which is
fine for the n <= 16 instances the estimators are validated on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataCorruptionError

# Exhaustive subset enumeration doubles per vertex; 2^16 subsets is the
# largest search that stays interactive.
ENUM_LIMIT = 16


@dataclass(frozen=True)
class GraphInstance:
    """Simple undirected graph on vertices 0..n-1."""

    n: int
    edges: tuple

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u},{v}) out of range for n={self.n}")
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge ({u},{v})")
            seen.add(key)
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    @property
    def m(self) -> int:
        return len(self.edges)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for u, v in self.edges:
            a[u, v] = 1.0
            a[v, u] = 1.0
        return a

    def neighbor_masks(self) -> list[int]:
        masks = [0] * self.n
        for u, v in self.edges:
            masks[u] |= 1 << v
            masks[v] |= 1 << u
        return masks

    def max_stable_set_size(self) -> int:
        """Exact by enumeration over vertex subsets; limited to small n."""
        if self.n > ENUM_LIMIT:
            raise ValueError(f"exact enumeration limited to n <= {ENUM_LIMIT}")
        masks = self.neighbor_masks()
        best = 0
        for subset in range(1 << self.n):
            count = subset.bit_count()
            if count <= best:
                continue
            ok = True
            rest = subset
            while rest:
                v = (rest & -rest).bit_length() - 1
                if masks[v] & subset:
                    ok = False
                    break
                rest &= rest - 1
            if ok:
                best = count
        return best

    def greedy_stable_set(self) -> list[int]:
        """Min-degree greedy stable set; used to seed multi-start descent."""
        masks = self.neighbor_masks()
        degrees = {v: bin(masks[v]).count("1") for v in range(self.n)}
        available = set(range(self.n))
        chosen: list[int] = []
        while available:
            v = min(available, key=lambda u: (degrees[u], u))
            chosen.append(v)
            available.discard(v)
            available -= {u for u in range(self.n) if masks[v] >> u & 1}
        return sorted(chosen)


def parse_graph(text: str) -> GraphInstance:
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise DataCorruptionError("empty graph file")
    head = lines[0].split()
    if len(head) != 2:
        raise DataCorruptionError(f"expected 'n m' on the first line, got {lines[0]!r}")
    n, m = int(head[0]), int(head[1])
    if len(lines) - 1 != m:
        raise DataCorruptionError(f"declared {m} edges but found {len(lines) - 1}")
    edges = []
    for line in lines[1:]:
        parts = line.split()
        if len(parts) != 2:
            raise DataCorruptionError(f"malformed edge line {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
    try:
        return GraphInstance(n=n, edges=tuple(edges))
    except ValueError as exc:
        raise DataCorruptionError(str(exc)) from exc


def load_graph(path) -> GraphInstance:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())


def format_graph(graph: GraphInstance) -> str:
    lines = [f"{graph.n} {graph.m}"]
    lines.extend(f"{u} {v}" for u, v in graph.edges)
    return "\n".join(lines) + "\n"


def path_graph(n: int) -> GraphInstance:
    return GraphInstance(n, tuple((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> GraphInstance:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return GraphInstance(n, tuple((i, (i + 1) % n) for i in range(n)))


def complete_graph(n: int) -> GraphInstance:
    return GraphInstance(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


def empty_graph(n: int) -> GraphInstance:
    return GraphInstance(n, ())


def random_graph(n: int, p: float, seed: int) -> GraphInstance:
    rng = np.random.default_rng(seed)
    edges = tuple((i, j) for i in range(n) for j in range(i + 1, n)
                  if rng.random() < p)
    return GraphInstance(n, edges)


def petersen_graph() -> GraphInstance:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return GraphInstance(10, tuple(outer + spokes + inner))

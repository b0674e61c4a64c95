"""Combinatorics of massless phi^4 graphs.

Vertices are 0-based internally.  The text and JSON formats are 1-based, which
is what people write by hand.  Edges are stored as a sorted tuple of sorted
pairs, so parallel edges (the fish) are just repeated pairs.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class GraphFormatError(ValueError):
    """Raised for malformed graph descriptions; carries the offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def _normalize_edges(edges, n: int) -> tuple[tuple[int, int], ...]:
    out = []
    for a, b in edges:
        a, b = int(a), int(b)
        if a == b:
            raise ValueError(f"self-loop at vertex {a} (tadpoles are not allowed)")
        if not (0 <= a < n and 0 <= b < n):
            raise ValueError(f"edge ({a}, {b}) references a vertex outside 0..{n - 1}")
        out.append((min(a, b), max(a, b)))
    return tuple(sorted(out))


class _Multigraph:
    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    def degree(self, v: int) -> int:
        return sum((a == v) + (b == v) for a, b in self.edges)

    def degrees(self) -> list[int]:
        deg = [0] * self.vertex_count
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def adjacency(self) -> np.ndarray:
        """Symmetric matrix of edge multiplicities."""
        adj = np.zeros((self.vertex_count, self.vertex_count), dtype=int)
        for a, b in self.edges:
            adj[a, b] += 1
            adj[b, a] += 1
        return adj

    def neighbors(self, v: int) -> list[int]:
        """Distinct neighbours of v, sorted."""
        out = {b for a, b in self.edges if a == v} | {a for a, b in self.edges if b == v}
        return sorted(out)

    def is_connected(self) -> bool:
        return len(_components(self.vertex_count, self.edges)) == 1


def _components(n: int, edges) -> list[set[int]]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups: dict[int, set[int]] = {}
    for v in range(n):
        groups.setdefault(find(v), set()).add(v)
    return list(groups.values())


@dataclass(frozen=True)
class FeynGraph(_Multigraph):
    """A Feynman graph: multigraph without self-loops plus external legs."""

    vertex_count: int
    edges: tuple[tuple[int, int], ...]
    external_legs: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ValueError("a graph needs at least one vertex")
        object.__setattr__(self, "edges", _normalize_edges(self.edges, self.vertex_count))
        legs = tuple(int(x) for x in self.external_legs) if self.external_legs else None
        if legs is None:
            legs = tuple(max(0, 4 - d) for d in self.degrees())
        if len(legs) != self.vertex_count:
            raise ValueError("external_legs must list one count per vertex")
        if any(x < 0 for x in legs):
            raise ValueError("external leg counts must be non-negative")
        object.__setattr__(self, "external_legs", legs)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def total_legs(self) -> int:
        return sum(self.external_legs)

    @property
    def is_phi4(self) -> bool:
        return all(d + x == 4 for d, x in zip(self.degrees(), self.external_legs))

    @property
    def loops(self) -> int:
        """First Betti number E - V + 1 of a connected graph."""
        return self.edge_count - self.vertex_count + 1

    def to_json(self) -> dict:
        return {
            "vertices": self.vertex_count,
            "edges": [[a + 1, b + 1] for a, b in self.edges],
            "external": {str(v + 1): x for v, x in enumerate(self.external_legs)},
        }

    @classmethod
    def from_json(cls, data: dict | str) -> "FeynGraph":
        if isinstance(data, str):
            data = json.loads(data)
        n = int(data["vertices"])
        edges = [(int(a) - 1, int(b) - 1) for a, b in data["edges"]]
        legs = [0] * n
        if "external" in data:
            for v, x in data["external"].items():
                legs[int(v) - 1] = int(x)
            return cls(n, edges, tuple(legs))
        return cls(n, edges)

    def to_text(self) -> str:
        lines = [f"v {self.vertex_count}"]
        lines += [f"e {a + 1} {b + 1}" for a, b in self.edges]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CompletedGraph(_Multigraph):
    """A 4-regular vacuum multigraph."""

    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.vertex_count < 3:
            raise ValueError("a completed graph has at least 3 vertices")
        object.__setattr__(self, "edges", _normalize_edges(self.edges, self.vertex_count))
        bad = [v for v, d in enumerate(self.degrees()) if d != 4]
        if bad:
            raise ValueError(f"completed graph is not 4-regular at vertices {bad}")

    @property
    def loops(self) -> int:
        """Loop number of any decompletion, V - 2 (= E - V + 1 of G minus a vertex)."""
        return self.vertex_count - 2


def parse_graph(text: str) -> FeynGraph:
    """Parse the line-oriented ``v <count>`` / ``e <i> <j>`` format."""
    count = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        try:
            values = [int(p) for p in parts[1:]]
        except ValueError:
            raise GraphFormatError(f"non-integer field in {raw!r}", lineno) from None
        if tag == "v":
            if len(values) != 1 or values[0] < 1:
                raise GraphFormatError("expected 'v <count>' with count >= 1", lineno)
            if count is not None:
                raise GraphFormatError("vertex count given twice", lineno)
            count = values[0]
        elif tag == "e":
            if len(values) != 2:
                raise GraphFormatError("expected 'e <i> <j>'", lineno)
            i, j = values
            if i == j:
                raise GraphFormatError(f"self-loop at vertex {i}", lineno)
            if i < 1 or j < 1 or (count is not None and max(i, j) > count):
                raise GraphFormatError(f"vertex index out of range in {raw!r}", lineno)
            edges.append((i - 1, j - 1, lineno))
        else:
            raise GraphFormatError(f"unknown record type {tag!r}", lineno)
    if count is None:
        if not edges:
            raise GraphFormatError("empty graph description")
        count = max(max(a, b) for a, b, _ in edges) + 1
    deg = Counter()
    for a, b, lineno in edges:
        deg[a] += 1
        deg[b] += 1
        if deg[a] > 4 or deg[b] > 4:
            v = a if deg[a] > 4 else b
            raise GraphFormatError(f"vertex {v + 1} has internal degree > 4", lineno)
    return FeynGraph(count, [(a, b) for a, b, _ in edges])


def read_graph(path) -> FeynGraph:
    """Read a graph file; ``.json`` files use the JSON export format."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if str(path).endswith(".json"):
        try:
            return FeynGraph.from_json(text)
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphFormatError(f"bad JSON graph: {exc}") from None
    return parse_graph(text)


def complete(g: FeynGraph) -> CompletedGraph:
    """Join the external legs of a 4-point graph at a new last vertex."""
    if not g.is_connected():
        raise ValueError("completion needs a connected graph")
    total = g.total_legs
    if total == 0:
        return CompletedGraph(g.vertex_count, g.edges)
    if total != 4:
        raise ValueError(f"completion needs 0 or 4 external legs, got {total}")
    inf = g.vertex_count
    extra = [(v, inf) for v, x in enumerate(g.external_legs) for _ in range(x)]
    return CompletedGraph(g.vertex_count + 1, g.edges + tuple(extra))


def decomplete(c: CompletedGraph, v: int) -> FeynGraph:
    """Delete vertex v; each deleted edge becomes a leg on its other endpoint."""
    if not 0 <= v < c.vertex_count:
        raise ValueError(f"vertex {v} is not in the graph")
    relabel = {u: i for i, u in enumerate(u for u in range(c.vertex_count) if u != v)}
    legs = [0] * (c.vertex_count - 1)
    edges = []
    for a, b in c.edges:
        if a == v:
            legs[relabel[b]] += 1
        elif b == v:
            legs[relabel[a]] += 1
        else:
            edges.append((relabel[a], relabel[b]))
    return FeynGraph(c.vertex_count - 1, edges, tuple(legs))


def edge_cut_size(g: _Multigraph, subset) -> int:
    inside = set(subset)
    return sum((a in inside) != (b in inside) for a, b in g.edges)


def is_completed_primitive(c: CompletedGraph) -> bool:
    """True iff every 4-edge cut of c splits off a single vertex.

    Equivalently no vertex set S with 2 <= |S| <= n-2 has at most 4 edges
    leaving it (cuts of size 0 or 2 are subdivergences too).
    """
    n = c.vertex_count
    if n < 5:
        raise ValueError("completed primitivity is only defined for 5 or more vertices")
    if not c.is_connected():
        raise ValueError("completed primitivity needs a connected graph")
    adj = c.adjacency()
    # S always contains vertex 0, so each cut is visited once
    for mask in range(1, 1 << (n - 1)):
        members = [0] + [i + 1 for i in range(n - 1) if mask >> i & 1]
        if not 2 <= len(members) <= n - 2:
            continue
        others = [v for v in range(n) if v not in members]
        if adj[np.ix_(members, others)].sum() <= 4:
            return False
    return True


def nontrivial_four_edge_cuts(c: CompletedGraph) -> list[tuple[int, ...]]:
    """Edge 4-subsets (indices into c.edges) whose removal leaves a component
    of size 2..n-2.  Exhaustive; used as the oracle for primitivity."""
    n = c.vertex_count
    found = []
    for cut in itertools.combinations(range(len(c.edges)), 4):
        removed = set(cut)
        rest = [e for i, e in enumerate(c.edges) if i not in removed]
        if any(2 <= len(comp) <= n - 2 for comp in _components(n, rest)):
            found.append(cut)
    return found


def superficial_degree(g: FeynGraph) -> int:
    """kappa = 2 E - 4 (V - 1) for scalar propagators in four dimensions."""
    return 2 * g.edge_count - 4 * (g.vertex_count - 1)


# -- canonical labelling -------------------------------------------------------


def _refine(adj: np.ndarray, colors: list[int]) -> list[int]:
    n = len(colors)
    nbrs = [[(u, int(adj[v, u])) for u in range(n) if adj[v, u]] for v in range(n)]
    while True:
        sigs = [
            (colors[v], tuple(sorted((colors[u], m) for u, m in nbrs[v]))) for v in range(n)
        ]
        ranks = {s: i for i, s in enumerate(sorted(set(sigs)))}
        new = [ranks[s] for s in sigs]
        if len(ranks) == len(set(colors)):
            return new
        colors = new


def _leaf_code(adj: np.ndarray, legs: Sequence[int], colors: list[int]) -> tuple:
    order = sorted(range(len(colors)), key=colors.__getitem__)
    perm = adj[np.ix_(order, order)]
    upper = perm[np.triu_indices(len(order), 1)]
    return tuple(legs[v] for v in order), tuple(int(x) for x in upper)


def _search(adj, legs, colors) -> tuple:
    colors = _refine(adj, colors)
    counts = Counter(colors)
    cells = sorted(c for c, k in counts.items() if k > 1)
    if not cells:
        return _leaf_code(adj, legs, colors)
    target = cells[0]
    best = None
    for v in (v for v, c in enumerate(colors) if c == target):
        branch = [2 * c for c in colors]
        branch[v] -= 1
        code = _search(adj, legs, branch)
        if best is None or code < best:
            best = code
    return best


def canonical_form(g: FeynGraph | CompletedGraph) -> bytes:
    """Isomorphism-invariant code (external legs respected for FeynGraph)."""
    legs = g.external_legs if isinstance(g, FeynGraph) else (0,) * g.vertex_count
    tag = "F" if isinstance(g, FeynGraph) else "C"
    adj = g.adjacency()
    deg = adj.sum(axis=1)
    start = sorted(set(zip(legs, deg)))
    colors = [start.index((legs[v], deg[v])) for v in range(g.vertex_count)]
    leg_code, upper = _search(adj, legs, colors)
    text = "{}{}|{}|{}".format(
        tag, g.vertex_count, ",".join(map(str, leg_code)), ",".join(map(str, upper))
    )
    return text.encode("ascii")


def brute_force_code(g: FeynGraph | CompletedGraph) -> tuple:
    """Minimum (legs, adjacency) code over all n! labellings; test oracle only."""
    legs = g.external_legs if isinstance(g, FeynGraph) else (0,) * g.vertex_count
    adj = g.adjacency()
    n = g.vertex_count
    iu = np.triu_indices(n, 1)
    best = None
    for order in itertools.permutations(range(n)):
        code = (tuple(legs[v] for v in order), tuple(adj[np.ix_(order, order)][iu]))
        if best is None or code < best:
            best = code
    return best


# -- families ------------------------------------------------------------------


def wheel(spokes: int) -> FeynGraph:
    """Hub (vertex 0) joined to a rim cycle 1..spokes.

    For spokes >= 5 the hub has degree > 4, so the result is not a phi^4
    graph; four evenly spaced rim vertices carry one leg each so that the
    graph is still a 4-point graph.
    """
    if spokes < 3:
        raise ValueError("a wheel needs at least 3 spokes")
    rim = list(range(1, spokes + 1))
    edges = [(0, r) for r in rim]
    edges += [(rim[i], rim[(i + 1) % spokes]) for i in range(spokes)]
    legs = [0] * (spokes + 1)
    if spokes == 3:
        legs = [1, 1, 1, 1]
    elif spokes == 4:
        legs = [0, 1, 1, 1, 1]
    else:
        for k in range(4):
            legs[1 + (k * spokes) // 4] = 1
    return FeynGraph(spokes + 1, edges, tuple(legs))


def circulant(n: int, steps: Sequence[int]) -> CompletedGraph:
    edges = [(i, (i + s) % n) for i in range(n) for s in steps]
    return CompletedGraph(n, edges)


def zigzag(loops: int) -> FeynGraph:
    """Zig-zag graph with 3 or 4 loops (decompleted circulant C_{l+2}(1,2))."""
    if loops not in (3, 4):
        raise ValueError("zigzag is only provided for 3 or 4 loops")
    return decomplete(circulant(loops + 2, (1, 2)), 0)


def complete_graph(n: int) -> CompletedGraph:
    return CompletedGraph(n, list(itertools.combinations(range(n), 2)))


# -- diagonal lemma --------------------------------------------------------------


def diagonal_witness(points) -> tuple[frozenset[int], frozenset[int]]:
    """Split the indices of a configuration off the small diagonal.

    With x_0 as reference, I1 collects every index whose point differs from
    x_0 and I2 the rest; then every point of I1 differs from every point of
    I2.  Indices are 0-based.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) < 2:
        raise ValueError("need at least two points")
    differs = np.any(pts != pts[0], axis=1)
    if not differs.any():
        raise ValueError("all points coincide: configuration is on the small diagonal")
    i1 = frozenset(int(i) for i in np.flatnonzero(differs))
    i2 = frozenset(range(len(pts))) - i1
    return i1, i2


def separates(points, i1, i2) -> bool:
    """Membership in C_{I1,I2}: x_a != x_b for all a in I1, b in I2."""
    pts = np.asarray(points, dtype=float)
    return all(np.any(pts[a] != pts[b]) for a in i1 for b in i2)

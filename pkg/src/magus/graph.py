"""Relational graph over words, word combinations, and items.

Nodes are distinct word sets. An edge is either mutual improvement
(rel "+", a covering subset/superset pair) or mutual inhibition
(rel "-", incomparable overlapping sets no single item can satisfy
together). Independent pairs carry no edge and weight zero.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

from .catalog import Catalog

R_PLUS = "+"
R_MINUS = "-"

KIND_WORD = "word"
KIND_COMBINATION = "combination"
KIND_ITEM = "item"


@dataclass(frozen=True)
class Node:
    id: int
    words: frozenset[int]
    kind: str
    item_ref: int | None = None


@dataclass(frozen=True)
class Edge:
    """For rel "+", a is the subset side and b the covering superset.
    For rel "-", a < b by node id."""

    a: int
    b: int
    rel: str
    weight: float


class RelationalGraph:
    def __init__(self, nodes: list[Node], edges: list[Edge],
                 item_index: dict[int, int], dropped_queries: int = 0):
        self.nodes = nodes
        self.edges = edges
        self.item_index = item_index
        self.dropped_queries = dropped_queries
        self.by_words: dict[frozenset[int], int] = {n.words: n.id for n in nodes}
        n = len(nodes)
        # adjacency: up = covering supersets, down = covered subsets, minus = symmetric
        self.up: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        self.down: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        self.minus: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for e in edges:
            if e.rel == R_PLUS:
                self.up[e.a].append((e.b, e.weight))
                self.down[e.b].append((e.a, e.weight))
            else:
                self.minus[e.a].append((e.b, e.weight))
                self.minus[e.b].append((e.a, e.weight))
        for adj in (self.up, self.down, self.minus):
            for lst in adj:
                lst.sort()

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def item_nodes(self) -> list[int]:
        return [n.id for n in self.nodes if n.kind == KIND_ITEM]

    def with_weights(self, weights: list[float]) -> "RelationalGraph":
        """Same topology with a replaced weight per edge (aligned with self.edges)."""
        if len(weights) != len(self.edges):
            raise ValueError("weight count must match edge count")
        edges = [Edge(e.a, e.b, e.rel, float(w)) for e, w in zip(self.edges, weights)]
        return RelationalGraph(self.nodes, edges, dict(self.item_index), self.dropped_queries)


def covering_edges(family: set[frozenset[int]]) -> list[tuple[frozenset[int], frozenset[int]]]:
    """Hasse covering pairs of a deduplicated word-set family.

    Emits (a, b) iff a < b and no c in the family has a < c < b. Output is
    sorted by (size, words) of the subset, then the superset.
    """
    index = set(family)
    sizes = sorted({len(s) for s in index})
    out = []
    for b in index:
        subs = _proper_subsets_in(b, index, sizes)
        for a in subs:
            if not any(len(c) > len(a) and a < c for c in subs):
                out.append((a, b))
    out.sort(key=lambda p: (len(p[0]), sorted(p[0]), len(p[1]), sorted(p[1])))
    return out


def _proper_subsets_in(
    b: frozenset[int], index: set[frozenset[int]], sizes: list[int]
) -> list[frozenset[int]]:
    """All family members that are proper subsets of b."""
    found = []
    elems = sorted(b)
    for s in sizes:
        if s >= len(b):
            break
        if math.comb(len(b), s) <= 4096:
            for combo in combinations(elems, s):
                fs = frozenset(combo)
                if fs in index:
                    found.append(fs)
        else:
            found.extend(c for c in index if len(c) == s and c < b)
    return found


def build_graph(
    catalog: Catalog,
    max_combo_size: int = 2,
    rminus_degree_cap: int = 16,
) -> RelationalGraph:
    """Build the relational graph for a catalog.

    Node family: every single word, every word subset of size <=
    max_combo_size of each item's word set, every searched word set found in
    the query history (kept only if some item contains it), and each item's
    full word set as an item node. Improvement edges are the covering pairs
    of that family; inhibition edges join overlapping incomparable sets
    jointly contained in no item, capped per node at rminus_degree_cap with
    lowest-id partners preferred. All weights start at 1.
    """
    item_set_owner: dict[frozenset[int], int] = {}
    for item in catalog.items:
        item_set_owner.setdefault(item.words, item.id)

    family: set[frozenset[int]] = {frozenset((w,)) for w in range(catalog.n_words)}
    for item in catalog.items:
        ws = sorted(item.words)
        for size in range(2, min(max_combo_size, len(ws)) + 1):
            for combo in combinations(ws, size):
                family.add(frozenset(combo))
        family.add(item.words)

    dropped_queries = 0
    query_sets = {fs for qs in catalog.log.queries.values() for fs, _ in qs}
    for fs in query_sets:
        if any(fs <= item.words for item in catalog.items):
            family.add(fs)
        else:
            dropped_queries += 1

    # larger sets first: an item node outranks its own words on score ties
    ordered = sorted(family, key=lambda s: (-len(s), sorted(s)))
    nodes = []
    for nid, ws in enumerate(ordered):
        if ws in item_set_owner:
            nodes.append(Node(nid, ws, KIND_ITEM, item_set_owner[ws]))
        elif len(ws) == 1:
            nodes.append(Node(nid, ws, KIND_WORD))
        else:
            nodes.append(Node(nid, ws, KIND_COMBINATION))
    by_words = {n.words: n.id for n in nodes}
    item_index = {item.id: by_words[item.words] for item in catalog.items}

    edges = []
    for a_ws, b_ws in covering_edges(family):
        a = by_words[a_ws]
        if nodes[a].kind == KIND_ITEM:
            continue  # item nodes stay maximal even when item word sets nest
        edges.append(Edge(a, by_words[b_ws], R_PLUS, 1.0))

    edges.extend(_rminus_edges(catalog, nodes, rminus_degree_cap))
    return RelationalGraph(nodes, edges, item_index, dropped_queries)


def _rminus_edges(catalog: Catalog, nodes: list[Node], cap: int) -> list[Edge]:
    items_with_word: dict[int, set[int]] = {}
    for item in catalog.items:
        for w in item.words:
            items_with_word.setdefault(w, set()).add(item.id)

    def item_contains_union(union: frozenset[int]) -> bool:
        sets = sorted((items_with_word.get(w, set()) for w in union), key=len)
        if not sets or not sets[0]:
            return False
        acc = set(sets[0])
        for s in sets[1:]:
            acc &= s
            if not acc:
                return False
        return bool(acc)

    by_word: dict[int, list[int]] = {}
    for n in nodes:
        for w in n.words:
            by_word.setdefault(w, []).append(n.id)

    candidates: set[tuple[int, int]] = set()
    for members in by_word.values():
        for i, a in enumerate(members):
            for b in members[i + 1:]:
                candidates.add((a, b) if a < b else (b, a))

    degree = [0] * len(nodes)
    out = []
    for a, b in sorted(candidates):
        if degree[a] >= cap or degree[b] >= cap:
            continue
        wa, wb = nodes[a].words, nodes[b].words
        if wa <= wb or wb <= wa:
            continue
        if item_contains_union(wa | wb):
            continue
        out.append(Edge(a, b, R_MINUS, 1.0))
        degree[a] += 1
        degree[b] += 1
    return out


def node_lookup(graph: RelationalGraph, words) -> int | None:
    """NodeId of the exact word set, or None."""
    return graph.by_words.get(frozenset(words))


def save_graph(graph: RelationalGraph, path: str | Path) -> None:
    """JSON snapshot; weights survive the round trip losslessly (repr floats)."""
    doc = {
        "version": 1,
        "dropped_queries": graph.dropped_queries,
        "nodes": [
            [n.id, n.kind, sorted(n.words), n.item_ref] for n in graph.nodes
        ],
        "items": sorted(graph.item_index.items()),
        "edges": [[e.a, e.b, e.rel, e.weight] for e in graph.edges],
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n", encoding="utf-8")


def load_graph(path: str | Path) -> RelationalGraph:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    nodes = [
        Node(nid, frozenset(words), kind, item_ref)
        for nid, kind, words, item_ref in doc["nodes"]
    ]
    edges = [Edge(a, b, rel, w) for a, b, rel, w in doc["edges"]]
    item_index = {int(i): nid for i, nid in doc["items"]}
    return RelationalGraph(nodes, edges, item_index, doc.get("dropped_queries", 0))

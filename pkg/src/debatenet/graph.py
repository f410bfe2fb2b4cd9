"""Weighted directed interaction graph over user ids."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components


class InteractionGraph:
    """Directed multigraph collapsed to integer edge weights.

    Self-loops are never stored; they increment ``self_loops`` instead.
    """

    def __init__(self):
        self._succ: dict[str, dict[str, int]] = {}
        self._pred: dict[str, dict[str, int]] = {}
        self.self_loops = 0

    def add_node(self, node) -> None:
        if node not in self._succ:
            self._succ[node] = {}
            self._pred[node] = {}

    def add_interaction(self, src, dst, count: int = 1) -> "InteractionGraph":
        if count < 1:
            raise ValueError("interaction count must be positive")
        if src == dst:
            self.self_loops += count
            return self
        self.add_node(src)
        self.add_node(dst)
        self._succ[src][dst] = self._succ[src].get(dst, 0) + count
        self._pred[dst][src] = self._pred[dst].get(src, 0) + count
        return self

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple]) -> "InteractionGraph":
        g = cls()
        for src, dst in pairs:
            g.add_interaction(src, dst)
        return g

    # -- inspection -----------------------------------------------------
    def __contains__(self, node) -> bool:
        return node in self._succ

    def __len__(self) -> int:
        return len(self._succ)

    def __eq__(self, other) -> bool:
        if not isinstance(other, InteractionGraph):
            return NotImplemented
        return self._succ == other._succ

    def nodes(self) -> list:
        return sorted(self._succ)

    def edges(self) -> list[tuple]:
        """``(src, dst, weight)`` triples sorted by endpoints."""
        return sorted((s, d, w) for s, nbrs in self._succ.items() for d, w in nbrs.items())

    def number_of_edges(self) -> int:
        return sum(len(n) for n in self._succ.values())

    def total_weight(self) -> int:
        return sum(sum(n.values()) for n in self._succ.values())

    def weight(self, src, dst) -> int:
        return self._succ.get(src, {}).get(dst, 0)

    def successors(self, node) -> Mapping:
        return self._succ[node]

    def predecessors(self, node) -> Mapping:
        return self._pred[node]

    def out_weight(self, node) -> int:
        return sum(self._succ[node].values())

    def in_weight(self, node) -> int:
        return sum(self._pred[node].values())

    def neighbors(self, node) -> set:
        return set(self._succ[node]) | set(self._pred[node])

    # -- matrix views ---------------------------------------------------
    def adjacency(self, order: list | None = None) -> tuple[sp.csr_matrix, list]:
        """Directed weighted adjacency (row = source) in ``order``."""
        order = self.nodes() if order is None else list(order)
        index = {n: i for i, n in enumerate(order)}
        rows, cols, vals = [], [], []
        for s, nbrs in self._succ.items():
            if s not in index:
                continue
            for d, w in nbrs.items():
                if d in index:
                    rows.append(index[s])
                    cols.append(index[d])
                    vals.append(w)
        n = len(order)
        mat = sp.csr_matrix((np.asarray(vals, dtype=float), (rows, cols)), shape=(n, n))
        mat.sort_indices()
        return mat, order

    def undirected_adjacency(self, order: list | None = None) -> tuple[sp.csr_matrix, list]:
        """Symmetric projection with ``w(u,v) + w(v,u)`` weights."""
        mat, order = self.adjacency(order)
        sym = (mat + mat.T).tocsr()
        sym.sort_indices()
        return sym, order


@dataclass
class ComponentLabeling:
    labels: dict
    sizes: list

    def members(self, component: int) -> set:
        return {n for n, c in self.labels.items() if c == component}

    @property
    def giant(self) -> set:
        return self.members(0) if self.sizes else set()


def weak_components(graph: InteractionGraph) -> ComponentLabeling:
    """Weakly connected components; id 0 is the largest.

    Ties in size go to the component holding the smallest node id.
    """
    order = graph.nodes()
    if not order:
        return ComponentLabeling({}, [])
    adj, _ = graph.adjacency(order)
    _, raw = connected_components(adj, directed=True, connection="weak")
    groups: dict[int, list] = defaultdict(list)
    for node, c in zip(order, raw):
        groups[int(c)].append(node)
    # order is sorted, so each group's first element is its smallest id
    ranked = sorted(groups.values(), key=lambda members: (-len(members), members[0]))
    labels = {n: cid for cid, members in enumerate(ranked) for n in members}
    return ComponentLabeling(labels, [len(m) for m in ranked])


def restrict(graph: InteractionGraph, nodes: Iterable) -> InteractionGraph:
    """Induced subgraph; the self-loop tally is not carried over."""
    keep = set(nodes) & set(graph._succ)
    sub = InteractionGraph()
    for n in sorted(keep):
        sub.add_node(n)
    for s in keep:
        for d, w in graph._succ[s].items():
            if d in keep:
                sub.add_interaction(s, d, w)
    return sub


def giant_component(graph: InteractionGraph) -> InteractionGraph:
    return restrict(graph, weak_components(graph).giant)


# -- serialization --------------------------------------------------------

def write_edgelist(graph: InteractionGraph, path) -> None:
    Path(path).write_bytes(edgelist_bytes(graph))


def edgelist_bytes(graph: InteractionGraph) -> bytes:
    lines = [f"{s}\t{d}\t{w}\n" for s, d, w in graph.edges()]
    return "".join(lines).encode("utf-8")


def read_edgelist(path) -> InteractionGraph:
    g = InteractionGraph()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected src<TAB>dst<TAB>weight")
            src, dst, w = parts
            w = int(w)
            if w < 1:
                raise ValueError(f"{path}:{lineno}: weight must be >= 1")
            g.add_interaction(src, dst, w)
    return g


def write_graphml(graph: InteractionGraph, path, labels: Mapping | None = None, positions: Mapping | None = None) -> None:
    import networkx as nx

    g = nx.DiGraph()
    for n in graph.nodes():
        attrs = {}
        if labels is not None and n in labels:
            attrs["cluster"] = str(labels[n])
        if positions is not None and n in positions:
            x, y = positions[n]
            attrs["x"] = float(x)
            attrs["y"] = float(y)
        g.add_node(n, **attrs)
    for s, d, w in graph.edges():
        g.add_edge(s, d, weight=int(w))
    nx.write_graphml(g, path)


def retweet_network(records) -> InteractionGraph:
    """Edge ``a -> b`` once per retweet of ``b``'s post by ``a``."""
    from .ingest import Kind

    g = InteractionGraph()
    for rec in records:
        if rec.kind is Kind.RETWEET:
            g.add_interaction(rec.author_id, rec.ref_user_id)
    return g

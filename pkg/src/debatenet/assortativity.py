"""Global and PageRank-localised assortativity over labeled reply networks.

Only edges whose endpoints both carry a known label contribute mixing mass.
Local mixing uses the directed adjacency normalised by total out-degree, so
a node's edges towards unlabeled users dilute its labeled mass ``z``. The
neighbourhood weights come from personalised PageRank, by default on the
undirected projection.
"""
from __future__ import annotations

import csv
import io
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.linalg import splu

from .classify import KNOWN_LABELS, ClusterAssignment, Label
from .graph import InteractionGraph

GROUPS = KNOWN_LABELS
DEFAULT_ALPHA = 0.85
DEFAULT_TOL = 1e-12
DEFAULT_BINS = 40
CHECK_EVERY = 8
LU_LIMIT = 200_000      # largest graph solved directly for the starting vector
DENSE_LIMIT = 64        # below this a dense factorisation is cheaper than a sparse one


class AssortativityError(ValueError):
    pass


class ConvergenceError(AssortativityError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"PageRank did not converge: L1 residual {residual:.3e} after {iterations} iterations")
        self.residual = residual
        self.iterations = iterations


@dataclass
class MixingMatrix:
    """Edge-mass proportions between label groups (rows: source group)."""

    e: np.ndarray
    groups: tuple = GROUPS

    @property
    def a(self) -> np.ndarray:
        return self.e.sum(axis=1)

    @property
    def b(self) -> np.ndarray:
        return self.e.sum(axis=0)

    @property
    def q_max(self) -> float:
        return float(1.0 - self.a @ self.b)


class _Operator:
    """Sparse views of one graph under one labeling, shared by all focal nodes."""

    def __init__(self, graph: InteractionGraph, assignment: ClusterAssignment, weighted: bool = False, directed_walk: bool = False):
        self.order = graph.nodes()
        self.index = {n: i for i, n in enumerate(self.order)}
        n = len(self.order)
        adj, _ = graph.adjacency(self.order)
        if not weighted:
            adj = adj.copy()
            adj.data[:] = 1.0
        self.adj = adj
        gid = {lab: k for k, lab in enumerate(GROUPS)}
        self.group = np.array([gid.get(assignment.label(u), -1) for u in self.order], dtype=np.int64)
        # row-normalised labeled adjacency: entry (i, j) = A_ij / k_i, labeled pairs only
        outdeg = np.asarray(adj.sum(axis=1)).ravel()
        coo = adj.tocoo()
        keep = (self.group[coo.row] >= 0) & (self.group[coo.col] >= 0)
        self.edge_src = coo.row[keep]
        self.edge_val = coo.data[keep] / outdeg[coo.row[keep]]
        self.edge_cell = self.group[coo.row[keep]] * len(GROUPS) + self.group[coo.col[keep]]
        self.labeled_weight = coo.data[keep]
        self.weighted = weighted
        self.directed_walk = directed_walk
        self.n = n
        self._lu = None

    @cached_property
    def _walk(self) -> tuple:
        # transition matrix for the walk, transposed so that w_next = alpha * Pt @ w
        n = self.n
        coo = self.adj.tocoo()
        rows, cols, vals = coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data
        if not self.directed_walk:
            rows, cols = np.concatenate([rows, cols]), np.concatenate([cols, rows])
            vals = np.concatenate([vals, vals])
            # merge the two orientations of each pair into one undirected edge
            key, inverse = np.unique(rows * n + cols, return_inverse=True)
            vals = np.bincount(inverse, weights=vals) if self.weighted else np.ones(len(key))
            rows, cols = key // n, key % n
        deg = np.bincount(rows, weights=vals, minlength=n)
        inv = np.divide(1.0, deg, out=np.zeros(n), where=deg > 0)
        pt = sp.csr_matrix((vals * inv[rows], (cols, rows)), shape=(n, n))
        pt.sort_indices()
        return pt, deg == 0

    @property
    def pt(self) -> sp.csr_matrix:
        return self._walk[0]

    @property
    def dangling(self) -> np.ndarray:
        return self._walk[1]

    def global_mixing(self) -> MixingMatrix:
        total = self.labeled_weight.sum()
        if total == 0:
            raise AssortativityError("no edge has both endpoints labeled")
        g = len(GROUPS)
        e = np.bincount(self.edge_cell, weights=self.labeled_weight, minlength=g * g).reshape(g, g)
        return MixingMatrix(e / total)

    def factorize(self, alpha: float) -> None:
        """Prepare the direct solve behind the starting vector (no-op when cached)."""
        if self.n > LU_LIMIT or (self._lu is not None and self._lu[0] == alpha):
            return
        if self.n <= DENSE_LIMIT:
            mat = np.eye(self.n) - alpha * self.pt.toarray()
            self._lu = (alpha, lu_factor(mat))
            return
        mat = (sp.identity(self.n, format="csc") - alpha * self.pt.tocsc()).tocsc()
        # the matrix is diagonally dominant, so diagonal pivots are safe
        self._lu = (alpha, splu(mat, permc_spec="MMD_AT_PLUS_A", options={"SymmetricMode": True}))

    def _warm_start(self, focal: np.ndarray, alpha: float) -> np.ndarray | None:
        # Returning mass from dangling nodes only rescales the solution, so the
        # fixed point is (I - alpha Pt)^-1 e_l normalised to unit mass.
        if self.n > LU_LIMIT:
            return None
        self.factorize(alpha)
        rhs = np.zeros((self.n, len(focal)))
        rhs[focal, np.arange(len(focal))] = 1.0
        lu = self._lu[1]
        y = lu_solve(lu, rhs) if isinstance(lu, tuple) else lu.solve(rhs)
        return y / y.sum(axis=0)

    def ppr(self, focal: np.ndarray, alpha: float, tol: float, max_iter: int, warm: bool = True) -> np.ndarray:
        """Personalised PageRank columns for an array of focal indices.

        Power sweeps run until the L1 change of every column is below ``tol``,
        starting from a direct solve when the graph is small enough.
        """
        cols = np.arange(len(focal))
        w = self._warm_start(focal, alpha) if warm else None
        if w is None:
            w = np.zeros((self.n, len(focal)))
            w[focal, cols] = 1.0
        dangling = np.flatnonzero(self.dangling)
        resid = np.full(len(focal), np.inf)
        for it in range(1, max_iter + 1):
            nxt = self.pt @ w
            nxt *= alpha
            # walk mass sitting on dangling nodes returns to the focal node
            nxt[focal, cols] += alpha * w[dangling].sum(axis=0) + (1.0 - alpha)
            # the residual costs as much as a sweep, so test it periodically
            if it == 1 or it % CHECK_EVERY == 0 or it == max_iter:
                resid = np.abs(nxt - w).sum(axis=0)
                if (resid < tol).all():
                    return nxt
            w = nxt
        raise ConvergenceError(float(resid.max()), max_iter)

    def local_mixing(self, w: np.ndarray) -> np.ndarray:
        """Unnormalised e_gh(l) for each column of ``w``; shape (cols, G, G)."""
        g = len(GROUPS)
        w = w.reshape(self.n, -1)
        contrib = w[self.edge_src] * self.edge_val[:, None]
        out = np.zeros((w.shape[1], g * g))
        for cell in range(g * g):
            sel = self.edge_cell == cell
            if sel.any():
                out[:, cell] = contrib[sel].sum(axis=0)
        return out.reshape(-1, g, g)


def _check_ppr_args(alpha, tol):
    if not 0 < alpha < 1:
        raise AssortativityError("damping must lie strictly between 0 and 1")
    if not tol > 0:
        raise AssortativityError("tolerance must be positive")


def mixing_matrix(graph: InteractionGraph, assignment: ClusterAssignment, weighted: bool = False) -> MixingMatrix:
    """Global mixing over edges with both endpoints labeled.

    Every distinct directed edge counts once unless ``weighted``.
    """
    return _Operator(graph, assignment, weighted).global_mixing()


def _r_from(e: np.ndarray, ab: float, q_max: float) -> float:
    return float((np.trace(e) - ab) / q_max)


def global_assortativity(graph: InteractionGraph, assignment: ClusterAssignment, weighted: bool = False) -> float:
    """Newman's coefficient on the labeled part of a directed graph.

    When only one group carries edges the normaliser vanishes; the value is
    then 1 by convention and a warning is issued.
    """
    m = mixing_matrix(graph, assignment, weighted)
    if m.q_max <= 0:
        warnings.warn("all labeled edges belong to a single group; assortativity set to 1", RuntimeWarning, stacklevel=2)
        return 1.0
    return _r_from(m.e, float(m.a @ m.b), m.q_max)


def personalized_pagerank(
    graph: InteractionGraph,
    focal,
    alpha: float = DEFAULT_ALPHA,
    tol: float = DEFAULT_TOL,
    max_iter: int = 100_000,
    directed: bool = False,
    weighted: bool = False,
) -> dict:
    """Stationary distribution of a walk that restarts at ``focal``.

    Solves ``w = alpha * w P + (1 - alpha) * delta_focal`` by power iteration
    until the L1 change between sweeps drops below ``tol``. ``P`` is the
    row-stochastic transition matrix of the undirected projection (or of the
    directed graph when ``directed``); walkers on nodes without exits jump
    back to the focal node.
    """
    _check_ppr_args(alpha, tol)
    if len(graph) == 0:
        raise AssortativityError("empty graph")
    if focal not in graph:
        raise KeyError(focal)
    op = _Operator(graph, ClusterAssignment(), weighted, directed)
    w = op.ppr(np.array([op.index[focal]]), alpha, tol, max_iter)[:, 0]
    return dict(zip(op.order, w.tolist()))


def local_mixing(
    graph: InteractionGraph,
    assignment: ClusterAssignment,
    w: Mapping,
    weighted: bool = False,
) -> tuple[MixingMatrix | None, float]:
    """Neighbourhood mixing for weights ``w`` (node -> mass).

    Returns the renormalised mixing matrix and the labeled mass ``z`` seen
    before renormalisation. When ``z`` is 0 the matrix is ``None``.
    """
    op = _Operator(graph, assignment, weighted)
    vec = np.zeros(op.n)
    for node, mass in w.items():
        vec[op.index[node]] = mass
    e = op.local_mixing(vec)[0]
    z = float(e.sum())
    if z == 0:
        return None, 0.0
    return MixingMatrix(e / z), z


def local_assortativity(
    graph: InteractionGraph,
    assignment: ClusterAssignment,
    focal,
    alpha: float = DEFAULT_ALPHA,
    tol: float = DEFAULT_TOL,
    weighted: bool = False,
    directed: bool = False,
) -> tuple[float, float]:
    """``(r, z)`` for one focal node; ``r`` is NaN when ``z`` is 0."""
    prof = assortativity_profile(graph, assignment, alpha, tol, nodes=[focal], weighted=weighted, directed=directed)
    return prof.r[focal], prof.z[focal]


@dataclass
class AssortativityProfile:
    r: dict
    z: dict
    alpha: float
    tol: float
    global_r: float
    flagged: set = field(default_factory=set)

    def to_csv(self, assignment: ClusterAssignment) -> bytes:
        out = io.StringIO()
        wr = csv.writer(out, lineterminator="\n")
        wr.writerow(["user_id", "label", "r_local", "z_weight"])
        for user in sorted(self.r):
            r = self.r[user]
            wr.writerow([user, assignment.label(user).value, "" if np.isnan(r) else repr(r), repr(self.z[user])])
        return out.getvalue().encode("utf-8")


def assortativity_profile(
    graph: InteractionGraph,
    assignment: ClusterAssignment,
    alpha: float = DEFAULT_ALPHA,
    tol: float = DEFAULT_TOL,
    nodes: Sequence | None = None,
    threads: int = 1,
    batch: int = 128,
    max_iter: int = 100_000,
    weighted: bool = False,
    directed: bool = False,
) -> AssortativityProfile:
    """Local assortativity for ``nodes`` (default: every node of ``graph``).

    Focal nodes are processed in fixed blocks of ``batch`` in sorted order,
    so the thread count changes only the schedule, never the arithmetic.
    """
    _check_ppr_args(alpha, tol)
    op = _Operator(graph, assignment, weighted, directed)
    glob = op.global_mixing()
    ab = float(glob.a @ glob.b)
    q_max = glob.q_max
    if q_max <= 0:
        warnings.warn("all labeled edges belong to a single group; local values set to 1", RuntimeWarning, stacklevel=2)
    focal = op.order if nodes is None else sorted(nodes)
    for node in focal:
        if node not in op.index:
            raise KeyError(node)
    idx = np.array([op.index[n] for n in focal], dtype=np.int64)
    blocks = [idx[i:i + batch] for i in range(0, len(idx), batch)]

    if len(idx):
        op.factorize(alpha)   # once, before any worker starts

    def run(block):
        w = op.ppr(block, alpha, tol, max_iter)
        return op.local_mixing(w)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            mixes = list(pool.map(run, blocks))
    else:
        mixes = [run(b) for b in blocks]
    r, z, flagged = {}, {}, set()
    for block, mix in zip(blocks, mixes):
        for k, e in zip(block, mix):
            node = op.order[k]
            zl = float(e.sum())
            z[node] = zl
            if zl == 0:
                r[node] = float("nan")
                flagged.add(node)
            elif q_max <= 0:
                r[node] = 1.0
            else:
                r[node] = _r_from(e / zl, ab, q_max)
    g_r = 1.0 if q_max <= 0 else _r_from(glob.e, ab, q_max)
    return AssortativityProfile(r, z, alpha, tol, g_r, flagged)


@dataclass
class AssortHistogram:
    edges: np.ndarray
    mass: dict              # Label -> per-bin z mass
    mass_all: np.ndarray

    def to_csv(self) -> bytes:
        out = io.StringIO()
        wr = csv.writer(out, lineterminator="\n")
        wr.writerow(["bin_lo", "bin_hi", "mass_majority", "mass_minority", "mass_intermediate", "mass_all"])
        for i in range(len(self.edges) - 1):
            wr.writerow([
                repr(float(self.edges[i])),
                repr(float(self.edges[i + 1])),
                *(repr(float(self.mass[lab][i])) for lab in GROUPS),
                repr(float(self.mass_all[i])),
            ])
        return out.getvalue().encode("utf-8")


def assort_histogram(
    profile: AssortativityProfile,
    assignment: ClusterAssignment,
    bins: int = DEFAULT_BINS,
) -> AssortHistogram:
    """z-weighted histograms of r on [-1, 1], per group and over all nodes.

    Flagged nodes (no labeled mass) are left out. The ``all`` histogram also
    includes unclassified nodes.
    """
    edges = np.linspace(-1.0, 1.0, bins + 1)
    users = sorted(u for u in profile.r if u not in profile.flagged)
    r = np.array([profile.r[u] for u in users])
    z = np.array([profile.z[u] for u in users])
    labels = [assignment.label(u) for u in users]

    def hist(sel):
        if not len(r):
            return np.zeros(bins)
        # r can undershoot -1 for skewed marginals; clip into the outer bins
        return np.histogram(np.clip(r[sel], -1.0, 1.0), bins=edges, weights=z[sel])[0]

    mass = {lab: hist(np.array([lb is lab for lb in labels], dtype=bool)) for lab in GROUPS}
    return AssortHistogram(edges, mass, hist(np.ones(len(users), dtype=bool)))


def weighted_mean(profile: AssortativityProfile, users: Iterable) -> float:
    """z-weighted mean of r over ``users``; NaN when they carry no mass."""
    num = den = 0.0
    for u in sorted(users):
        if u in profile.r and u not in profile.flagged:
            num += profile.z[u] * profile.r[u]
            den += profile.z[u]
    return num / den if den > 0 else float("nan")

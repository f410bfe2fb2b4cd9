"""ForceAtlas2-style spatialization with adaptive speed and swing damping."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp

from ..graph import InteractionGraph
from . import _backend
from .quadtree import build_quadtree

#: above this many nodes Barnes-Hut is used regardless of the request
BH_REQUIRED = 5000
#: automatic choice switches to Barnes-Hut above this size
BH_AUTO = 1000


class LayoutError(RuntimeError):
    pass


@dataclass(frozen=True)
class LayoutParams:
    scaling_ratio: float = 2.0          # k_r, repulsion scale
    gravity: float = 1.0                # k_g
    iterations: int = 1000
    jitter_tolerance: float = 1.0
    linlog: bool = False
    edge_weight_influence: int = 1      # 0: unweighted attraction, 1: weight-scaled
    theta: float = 1.2
    barnes_hut: bool | None = None      # None: decide by graph size
    init_side: float | None = None      # side of the initial square, default sqrt(n)

    def __post_init__(self):
        if not self.scaling_ratio > 0:
            raise ValueError("scaling_ratio must be > 0")
        if not self.gravity >= 0:
            raise ValueError("gravity must be >= 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not self.jitter_tolerance > 0:
            raise ValueError("jitter_tolerance must be > 0")
        if self.edge_weight_influence not in (0, 1):
            raise ValueError("edge_weight_influence must be 0 or 1")
        if not self.theta > 0:
            raise ValueError("theta must be > 0")
        if self.init_side is not None and not self.init_side > 0:
            raise ValueError("init_side must be > 0")


@dataclass
class LayoutEmbedding:
    nodes: list
    coords: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float).reshape(len(self.nodes), 2)
        self._index = {n: i for i, n in enumerate(self.nodes)}
        if len(self._index) != len(self.nodes):
            raise ValueError("duplicate node in embedding")
        if not np.all(np.isfinite(self.coords)):
            raise ValueError("embedding has non-finite coordinates")

    def __contains__(self, node) -> bool:
        return node in self._index

    def __len__(self) -> int:
        return len(self.nodes)

    def __getitem__(self, node) -> tuple[float, float]:
        x, y = self.coords[self._index[node]]
        return float(x), float(y)

    @property
    def positions(self) -> dict:
        return {n: (float(x), float(y)) for n, (x, y) in zip(self.nodes, self.coords)}

    def transformed(self, matrix=None, offset=(0.0, 0.0)) -> "LayoutEmbedding":
        m = np.eye(2) if matrix is None else np.asarray(matrix, dtype=float)
        return LayoutEmbedding(list(self.nodes), self.coords @ m.T + np.asarray(offset), dict(self.metadata))


# -- forces ---------------------------------------------------------------

def exact_repulsion(pos: np.ndarray, mass: np.ndarray, k_r: float, chunk: int = 512) -> np.ndarray:
    """O(n^2) reference: ``k_r m_i m_j (x_i - x_j) / d^2`` summed over ``j != i``."""
    pos = np.asarray(pos, dtype=float)
    mass = np.asarray(mass, dtype=float)
    n = len(pos)
    out = np.zeros((n, 2))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        diff = pos[lo:hi, None, :] - pos[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(d2 > 0, k_r * mass[lo:hi, None] * mass[None, :] / d2, 0.0)
        out[lo:hi] = np.einsum("ij,ijk->ik", f, diff)
    return out


def repulsion_pass(
    positions,
    degrees,
    k_r: float,
    method: str = "barnes_hut",
    theta: float = 0.5,
    threads: int = 1,
    backend: str | None = None,
) -> np.ndarray:
    """Repulsive force per node with node mass ``degree + 1``.

    ``method`` is ``"exact"`` (pairwise reference) or ``"barnes_hut"``
    (quadtree approximation with opening angle ``theta``).
    """
    pos = np.ascontiguousarray(positions, dtype=np.float64)
    if not np.all(np.isfinite(pos)):
        raise ValueError("positions must be finite")
    mass = np.asarray(degrees, dtype=np.float64) + 1.0
    if method == "exact":
        return exact_repulsion(pos, mass, k_r)
    if method != "barnes_hut":
        raise ValueError(f"unknown repulsion method {method!r}")
    if len(pos) == 0:
        return np.zeros((0, 2))
    tree = build_quadtree(pos, mass)
    return _backend.get(backend).bh_repulsion(pos, mass, tree, float(k_r), float(theta), int(threads))


def _edge_arrays(graph: InteractionGraph, order: list):
    sym, _ = graph.undirected_adjacency(order)
    upper = sp.triu(sym, k=1).tocoo()
    rows = upper.row.astype(np.int64)
    cols = upper.col.astype(np.int64)
    weights = upper.data.astype(float)
    sort = np.lexsort((cols, rows))
    degree = np.diff(sym.indptr).astype(float)
    return rows[sort], cols[sort], weights[sort], degree


def _attraction(pos, rows, cols, w, linlog):
    n = len(pos)
    diff = pos[rows] - pos[cols]
    if linlog:
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(dist > 0, np.log1p(dist) / dist, 0.0)
        f = diff * (w * scale)[:, None]
    else:
        f = diff * w[:, None]
    fx = np.bincount(cols, weights=f[:, 0], minlength=n) - np.bincount(rows, weights=f[:, 0], minlength=n)
    fy = np.bincount(cols, weights=f[:, 1], minlength=n) - np.bincount(rows, weights=f[:, 1], minlength=n)
    return np.column_stack((fx, fy))


def _gravity(pos, mass, k_g):
    if k_g == 0:
        return np.zeros_like(pos)
    dist = np.sqrt(np.einsum("ij,ij->i", pos, pos))
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(dist > 0, k_g * mass / dist, 0.0)
    return -pos * factor[:, None]


def layout_energy(pos, mass, rows, cols, w, params: LayoutParams) -> float:
    """Potential whose negative gradient is the force field (exact, O(n^2))."""
    diff = pos[rows] - pos[cols]
    d2 = np.einsum("ij,ij->i", diff, diff)
    if params.linlog:
        d = np.sqrt(d2)
        attract = float(np.sum(w * ((1 + d) * np.log1p(d) - d)))
    else:
        attract = float(np.sum(w * d2) / 2)
    n = len(pos)
    rep = 0.0
    for i in range(n - 1):
        dd = pos[i + 1:] - pos[i]
        dist = np.sqrt(np.einsum("ij,ij->i", dd, dd))
        ok = dist > 0
        rep -= float(np.sum(params.scaling_ratio * mass[i] * mass[i + 1:][ok] * np.log(dist[ok])))
    grav = params.gravity * float(np.sum(mass * np.sqrt(np.einsum("ij,ij->i", pos, pos))))
    return attract + rep + grav


def _jitter_coincident(pos, rng, scale):
    _, first, counts = np.unique(pos, axis=0, return_index=True, return_counts=True)
    if np.all(counts == 1):
        return pos
    dup = np.ones(len(pos), dtype=bool)
    dup[first] = False
    pos = pos.copy()
    pos[dup] += rng.normal(scale=scale, size=(int(dup.sum()), 2))
    return pos


def spatialize(
    graph: InteractionGraph,
    params: LayoutParams | None = None,
    seed: int = 0,
    initial: dict | np.ndarray | None = None,
    threads: int = 1,
    backend: str | None = None,
    monitor_energy: bool = False,
) -> LayoutEmbedding:
    """Run the force-directed layout on ``graph`` (usually its giant component).

    Direction is ignored: edges of both orientations are merged with summed
    weights. Node mass is undirected degree + 1. Output depends only on
    ``(graph, params, seed, initial)``; ``threads`` and ``backend`` do not
    change it.
    """
    params = params or LayoutParams()
    order = graph.nodes()
    n = len(order)
    if n == 0:
        raise ValueError("cannot lay out an empty graph")
    rng = np.random.default_rng(seed)
    rows, cols, w, degree = _edge_arrays(graph, order)
    if params.edge_weight_influence == 0:
        w = np.ones_like(w)
    mass = degree + 1.0

    side = params.init_side if params.init_side is not None else max(1.0, math.sqrt(n))
    if initial is None:
        pos = rng.uniform(-side / 2, side / 2, size=(n, 2))
    elif isinstance(initial, dict):
        pos = np.array([initial[v] for v in order], dtype=float)
    else:
        pos = np.array(initial, dtype=float).reshape(n, 2)

    use_bh = params.barnes_hut if params.barnes_hut is not None else n > BH_AUTO
    if n > BH_REQUIRED:
        use_bh = True
    kernel = _backend.get(backend)

    old = np.zeros((n, 2))
    speed = 1.0
    efficiency = 1.0
    energy = []
    jt_base = params.jitter_tolerance
    est_jt = 0.05 * math.sqrt(n)
    min_jt = math.sqrt(est_jt)
    disp = np.zeros(n)
    for it in range(params.iterations):
        pos = _jitter_coincident(pos, rng, 1e-6 * side)
        if use_bh and n > 1:
            rep = kernel.bh_repulsion(pos, mass, build_quadtree(pos, mass), params.scaling_ratio, params.theta, threads)
        else:
            rep = exact_repulsion(pos, mass, params.scaling_ratio)
        forces = rep + _attraction(pos, rows, cols, w, params.linlog) + _gravity(pos, mass, params.gravity)

        swing = mass * np.sqrt(np.einsum("ij,ij->i", old - forces, old - forces))
        traction = 0.5 * mass * np.sqrt(np.einsum("ij,ij->i", old + forces, old + forces))
        total_swing = float(swing.sum())
        total_traction = float(traction.sum())

        jt = jt_base * max(min_jt, min(10.0, est_jt * total_traction / (n * n)))
        if total_traction > 0 and total_swing / total_traction > 2.0:
            if efficiency > 0.05:
                efficiency *= 0.5
            jt = max(jt, jt_base)
        target = math.inf if total_swing == 0 else jt * efficiency * total_traction / total_swing
        if total_swing > jt * total_traction:
            if efficiency > 0.05:
                efficiency *= 0.7
        elif speed < 1000:
            efficiency *= 1.3
        speed = speed + min(target - speed, 0.5 * speed)

        factor = speed / (1.0 + np.sqrt(speed * swing))
        step = forces * factor[:, None]
        pos = pos + step
        old = forces
        if not np.all(np.isfinite(pos)):
            raise LayoutError(f"layout diverged: non-finite positions at iteration {it}")
        disp = np.sqrt(np.einsum("ij,ij->i", step, step))
        if monitor_energy:
            energy.append(layout_energy(pos, mass, rows, cols, w, params))

    meta = {
        "iterations": params.iterations,
        "mean_displacement": float(disp.mean()),
        "seed": int(seed),
        "params": asdict(params),
        "barnes_hut": bool(use_bh),
    }
    if monitor_energy:
        meta["energy"] = energy
    return LayoutEmbedding(order, pos, meta)


# -- embedding files ---------------------------------------------------------

def embedding_csv(embedding: LayoutEmbedding) -> bytes:
    out = io.StringIO()
    wr = csv.writer(out, lineterminator="\n")
    wr.writerow(["node_id", "x", "y"])
    for node, (x, y) in zip(embedding.nodes, embedding.coords):
        wr.writerow([node, repr(float(x)), repr(float(y))])
    return out.getvalue().encode("utf-8")


def write_embedding(embedding: LayoutEmbedding, path) -> None:
    with open(path, "wb") as fh:
        fh.write(embedding_csv(embedding))


def read_embedding(path) -> LayoutEmbedding:
    nodes, coords = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"node_id", "x", "y"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header node_id,x,y")
        for row in reader:
            nodes.append(row["node_id"])
            coords.append((float(row["x"]), float(row["y"])))
    return LayoutEmbedding(nodes, np.array(coords, dtype=float).reshape(len(nodes), 2))

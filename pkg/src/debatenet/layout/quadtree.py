"""Array-based quadtree shared by both repulsion backends.

Bodies are snapped to a ``2**depth`` integer grid over the bounding square.
A cell is a leaf when it holds one body or sits at the maximum depth; leaves
keep their body lists so leaf interactions are evaluated exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_DEPTH = 24


@dataclass
class QuadTree:
    depth: int
    ix: np.ndarray          # body grid coordinates (int64)
    iy: np.ndarray
    com_x: np.ndarray       # per cell, mass-weighted centre
    com_y: np.ndarray
    mass: np.ndarray
    size2: np.ndarray       # squared cell side
    level: np.ndarray       # int64
    hx: np.ndarray          # cell grid coordinates at its own level
    hy: np.ndarray
    is_leaf: np.ndarray     # uint8
    child_start: np.ndarray
    child_count: np.ndarray
    leaf_start: np.ndarray
    leaf_count: np.ndarray
    leaf_bodies: np.ndarray

    @property
    def n_cells(self) -> int:
        return len(self.mass)


def build_quadtree(pos: np.ndarray, mass: np.ndarray, depth: int = MAX_DEPTH) -> QuadTree:
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    mass = np.ascontiguousarray(mass, dtype=np.float64)
    n = len(pos)
    if n == 0:
        raise ValueError("cannot build a quadtree over zero bodies")
    lo = pos.min(axis=0)
    side = float(np.max(pos.max(axis=0) - lo))
    if not side > 0:
        side = 1.0
    top = (1 << depth) - 1
    scale = (1 << depth) / side
    ix = np.minimum(((pos[:, 0] - lo[0]) * scale).astype(np.int64), top)
    iy = np.minimum(((pos[:, 1] - lo[1]) * scale).astype(np.int64), top)
    mx_all = mass * pos[:, 0]
    my_all = mass * pos[:, 1]

    com_x, com_y, cmass, size2, level, hx, hy, leaf = [], [], [], [], [], [], [], []
    child_start, child_count = [], []
    leaf_cell, leaf_body = [], []

    active = np.arange(n, dtype=np.int64)
    local = np.zeros(n, dtype=np.int64)
    k = 1
    offset = 0
    for d in range(depth + 1):
        counts = np.bincount(local, minlength=k)
        m = np.bincount(local, weights=mass[active], minlength=k)
        sx = np.bincount(local, weights=mx_all[active], minlength=k)
        sy = np.bincount(local, weights=my_all[active], minlength=k)
        com_x.append(sx / m)
        com_y.append(sy / m)
        cmass.append(m)
        cell_side = side / float(1 << d)
        size2.append(np.full(k, cell_side * cell_side))
        level.append(np.full(k, d, dtype=np.int64))
        shift = depth - d
        first = np.zeros(k, dtype=np.int64)
        # representative body per cell gives its grid coordinates
        first[local[::-1]] = active[::-1]
        hx.append(ix[first] >> shift)
        hy.append(iy[first] >> shift)
        is_leaf = (counts == 1) | (d == depth)
        leaf.append(is_leaf)

        in_leaf = is_leaf[local]
        leaf_cell.append(local[in_leaf] + offset)
        leaf_body.append(active[in_leaf])

        cs = np.full(k, -1, dtype=np.int64)
        cc = np.zeros(k, dtype=np.int64)
        if d == depth or in_leaf.all():
            child_start.append(cs)
            child_count.append(cc)
            offset += k
            break
        sel = ~in_leaf
        nxt = active[sel]
        parent = local[sel]
        s = shift - 1
        quad = (((ix[nxt] >> s) & 1) << 1) | ((iy[nxt] >> s) & 1)
        codes, inverse = np.unique(parent * 4 + quad, return_inverse=True)
        parents_of_child = codes // 4
        kids = np.bincount(parents_of_child, minlength=k)
        starts = np.searchsorted(parents_of_child, np.arange(k))
        next_offset = offset + k
        has = kids > 0
        cs[has] = starts[has] + next_offset
        cc[:] = kids
        child_start.append(cs)
        child_count.append(cc)
        active = nxt
        local = inverse.reshape(-1).astype(np.int64)
        offset = next_offset
        k = len(codes)

    lc = np.concatenate(leaf_cell)
    lb = np.concatenate(leaf_body)
    order = np.lexsort((lb, lc))
    lc, lb = lc[order], lb[order]
    n_cells = offset
    leaf_count = np.bincount(lc, minlength=n_cells).astype(np.int64)
    leaf_start = np.concatenate(([0], np.cumsum(leaf_count)[:-1])).astype(np.int64)

    return QuadTree(
        depth=depth,
        ix=ix,
        iy=iy,
        com_x=np.concatenate(com_x),
        com_y=np.concatenate(com_y),
        mass=np.concatenate(cmass),
        size2=np.concatenate(size2),
        level=np.concatenate(level),
        hx=np.concatenate(hx),
        hy=np.concatenate(hy),
        is_leaf=np.concatenate(leaf).astype(np.uint8),
        child_start=np.concatenate(child_start),
        child_count=np.concatenate(child_count),
        leaf_start=leaf_start,
        leaf_count=leaf_count,
        leaf_bodies=lb.astype(np.int64),
    )

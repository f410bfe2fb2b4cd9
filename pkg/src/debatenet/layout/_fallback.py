"""Pure numpy repulsion kernels.

The Barnes-Hut traversal runs breadth-first over (body, cell) pairs. For
each body the contributions of one tree level are summed in frontier order,
approximated cells first and exact leaf bodies second, then added to the
running total. The compiled kernel follows the same order, so both backends
return bit-identical forces.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .quadtree import QuadTree


def _bh_chunk(bodies, pos, mass, tree: QuadTree, k_r, theta2):
    n = len(bodies)
    fx = np.zeros(n)
    fy = np.zeros(n)
    if n == 0:
        return fx, fy
    x = pos[:, 0]
    y = pos[:, 1]
    pb = np.arange(n, dtype=np.int64)      # local body slot
    pc = np.zeros(n, dtype=np.int64)       # cell id (root = 0)
    depth = tree.depth
    while len(pb):
        gb = bodies[pb]
        leaf = tree.is_leaf[pc].astype(bool)
        shift = depth - tree.level[pc]
        inside = ((tree.ix[gb] >> shift) == tree.hx[pc]) & ((tree.iy[gb] >> shift) == tree.hy[pc])
        dx = x[gb] - tree.com_x[pc]
        dy = y[gb] - tree.com_y[pc]
        d2 = dx * dx + dy * dy
        far = ~leaf & ~inside & (tree.size2[pc] < theta2 * d2)
        opened = ~leaf & ~far

        # approximated cells
        a_slot = pb[far]
        a_dx, a_dy, a_d2 = dx[far], dy[far], d2[far]
        f = k_r * mass[gb[far]] * tree.mass[pc[far]] / a_d2
        a_fx = a_dx * f
        a_fy = a_dy * f

        # exact leaf bodies
        l_slot = pb[leaf]
        l_cell = pc[leaf]
        cnt = tree.leaf_count[l_cell]
        rep_slot = np.repeat(l_slot, cnt)
        starts = np.repeat(tree.leaf_start[l_cell], cnt)
        within = np.arange(len(rep_slot), dtype=np.int64) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        other = tree.leaf_bodies[starts + within]
        me = bodies[rep_slot]
        ex = x[me] - x[other]
        ey = y[me] - y[other]
        e2 = ex * ex + ey * ey
        keep = (other != me) & (e2 > 0)
        rep_slot, me, other, ex, ey, e2 = rep_slot[keep], me[keep], other[keep], ex[keep], ey[keep], e2[keep]
        g = k_r * mass[me] * mass[other] / e2
        l_fx = ex * g
        l_fy = ey * g

        slots = np.concatenate((a_slot, rep_slot))
        fx += np.bincount(slots, weights=np.concatenate((a_fx, l_fx)), minlength=n)
        fy += np.bincount(slots, weights=np.concatenate((a_fy, l_fy)), minlength=n)

        # open the rest
        o_slot = pb[opened]
        o_cell = pc[opened]
        cc = tree.child_count[o_cell]
        pb = np.repeat(o_slot, cc)
        base = np.repeat(tree.child_start[o_cell], cc)
        pc = base + (np.arange(len(pb), dtype=np.int64) - np.repeat(np.cumsum(cc) - cc, cc))
    return fx, fy


def bh_repulsion(pos, mass, tree: QuadTree, k_r: float, theta: float, threads: int = 1) -> np.ndarray:
    pos = np.ascontiguousarray(pos, dtype=np.float64)
    mass = np.ascontiguousarray(mass, dtype=np.float64)
    n = len(pos)
    theta2 = float(theta) * float(theta)
    chunks = np.array_split(np.arange(n, dtype=np.int64), max(1, int(threads)))
    out = np.zeros((n, 2))
    if threads <= 1:
        results = [_bh_chunk(c, pos, mass, tree, float(k_r), theta2) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            results = list(pool.map(lambda c: _bh_chunk(c, pos, mass, tree, float(k_r), theta2), chunks))
    for c, (fx, fy) in zip(chunks, results):
        out[c, 0] = fx
        out[c, 1] = fy
    return out

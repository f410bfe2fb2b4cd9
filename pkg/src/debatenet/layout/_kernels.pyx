# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Barnes-Hut repulsion.

Mirrors ``_fallback.bh_repulsion`` operation for operation: per body, the
tree is walked level by level, approximated cells are summed before exact
leaf bodies, and each level's sum is added to the running force. Bodies are
independent, so the thread count never changes the result.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport parallel, prange
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef void _body_force(
    Py_ssize_t i,
    const double[:, ::1] pos,
    const double[::1] mass,
    const long long[::1] ix,
    const long long[::1] iy,
    const double[::1] com_x,
    const double[::1] com_y,
    const double[::1] cmass,
    const double[::1] size2,
    const long long[::1] level,
    const long long[::1] hx,
    const long long[::1] hy,
    const unsigned char[::1] is_leaf,
    const long long[::1] child_start,
    const long long[::1] child_count,
    const long long[::1] leaf_start,
    const long long[::1] leaf_count,
    const long long[::1] leaf_bodies,
    long long depth,
    double k_r,
    double theta2,
    long long* cur,
    long long* nxt,
    double* out,
) noexcept nogil:
    cdef double fx = 0.0, fy = 0.0, sx, sy, dx, dy, d2, f
    cdef double xi = pos[i, 0], yi = pos[i, 1], mi = mass[i]
    cdef long long ncur = 1, nnext, t, c, q, s, j, shift
    cdef long long* tmp
    cdef bint inside
    cur[0] = 0
    while ncur > 0:
        sx = 0.0
        sy = 0.0
        nnext = 0
        for t in range(ncur):
            c = cur[t]
            if is_leaf[c]:
                continue
            shift = depth - level[c]
            inside = ((ix[i] >> shift) == hx[c]) and ((iy[i] >> shift) == hy[c])
            dx = xi - com_x[c]
            dy = yi - com_y[c]
            d2 = dx * dx + dy * dy
            if (not inside) and size2[c] < theta2 * d2:
                f = k_r * mi * cmass[c] / d2
                sx += dx * f
                sy += dy * f
            else:
                for q in range(child_count[c]):
                    nxt[nnext] = child_start[c] + q
                    nnext += 1
        for t in range(ncur):
            c = cur[t]
            if not is_leaf[c]:
                continue
            for s in range(leaf_start[c], leaf_start[c] + leaf_count[c]):
                j = leaf_bodies[s]
                if j == i:
                    continue
                dx = xi - pos[j, 0]
                dy = yi - pos[j, 1]
                d2 = dx * dx + dy * dy
                if d2 > 0:
                    f = k_r * mi * mass[j] / d2
                    sx += dx * f
                    sy += dy * f
        fx += sx
        fy += sy
        tmp = cur
        cur = nxt
        nxt = tmp
        ncur = nnext
    out[0] = fx
    out[1] = fy


def bh_repulsion(pos, mass, tree, double k_r, double theta, int threads=1):
    cdef const double[:, ::1] P = np.ascontiguousarray(pos, dtype=np.float64)
    cdef const double[::1] M = np.ascontiguousarray(mass, dtype=np.float64)
    cdef const long long[::1] ix = np.ascontiguousarray(tree.ix, dtype=np.int64)
    cdef const long long[::1] iy = np.ascontiguousarray(tree.iy, dtype=np.int64)
    cdef const double[::1] com_x = tree.com_x
    cdef const double[::1] com_y = tree.com_y
    cdef const double[::1] cmass = tree.mass
    cdef const double[::1] size2 = tree.size2
    cdef const long long[::1] level = np.ascontiguousarray(tree.level, dtype=np.int64)
    cdef const long long[::1] hx = np.ascontiguousarray(tree.hx, dtype=np.int64)
    cdef const long long[::1] hy = np.ascontiguousarray(tree.hy, dtype=np.int64)
    cdef const unsigned char[::1] is_leaf = tree.is_leaf
    cdef const long long[::1] child_start = np.ascontiguousarray(tree.child_start, dtype=np.int64)
    cdef const long long[::1] child_count = np.ascontiguousarray(tree.child_count, dtype=np.int64)
    cdef const long long[::1] leaf_start = np.ascontiguousarray(tree.leaf_start, dtype=np.int64)
    cdef const long long[::1] leaf_count = np.ascontiguousarray(tree.leaf_count, dtype=np.int64)
    cdef const long long[::1] leaf_bodies = np.ascontiguousarray(tree.leaf_bodies, dtype=np.int64)
    cdef Py_ssize_t n = P.shape[0]
    cdef Py_ssize_t n_cells = cmass.shape[0]
    cdef long long depth = tree.depth
    cdef double theta2 = theta * theta
    out_arr = np.zeros((n, 2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i
    cdef long long* cur
    cdef long long* nxt
    if n == 0:
        return out_arr
    if threads < 1:
        threads = 1
    with nogil, parallel(num_threads=threads):
        cur = <long long*> malloc(n_cells * sizeof(long long))
        nxt = <long long*> malloc(n_cells * sizeof(long long))
        for i in prange(n, schedule="static"):
            _body_force(i, P, M, ix, iy, com_x, com_y, cmass, size2, level, hx, hy,
                        is_leaf, child_start, child_count, leaf_start, leaf_count,
                        leaf_bodies, depth, k_r, theta2, cur, nxt, &out[i, 0])
        free(cur)
        free(nxt)
    return out_arr

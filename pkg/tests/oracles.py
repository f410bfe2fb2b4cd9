"""Independent reference implementations used as test oracles.

These deliberately avoid the package's own sparse machinery: plain loops,
dense linear algebra and brute-force search.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

GROUPS = ("Majority", "Minority", "Intermediate")


def dense_ppr(nodes, edges, focal, alpha, directed=False):
    """Solve the restart walk directly: w (I - alpha P) = (1 - alpha) e_l, dangling rows -> e_l."""
    n = len(nodes)
    idx = {u: i for i, u in enumerate(nodes)}
    adj = np.zeros((n, n))
    for s, d in edges:
        adj[idx[s], idx[d]] = 1.0
        if not directed:
            adj[idx[d], idx[s]] = 1.0
    l = idx[focal]
    P = np.zeros((n, n))
    for i in range(n):
        deg = adj[i].sum()
        if deg > 0:
            P[i] = adj[i] / deg
        else:
            P[i, l] = 1.0
    rhs = np.zeros(n)
    rhs[l] = 1.0 - alpha
    w = np.linalg.solve((np.eye(n) - alpha * P).T, rhs)
    return {u: w[idx[u]] for u in nodes}


def brute_mixing(edges, labels, w, out_degree):
    """e_gh by the double sum over labeled node pairs, unnormalised."""
    e = {(g, h): 0.0 for g in GROUPS for h in GROUPS}
    nodes = sorted(labels)
    edge_set = set(edges)
    for i in nodes:
        gi = labels.get(i)
        if gi not in GROUPS or out_degree.get(i, 0) == 0:
            continue
        for j in nodes:
            gj = labels.get(j)
            if gj not in GROUPS:
                continue
            a_ij = 1.0 if (i, j) in edge_set else 0.0
            e[(gi, gj)] += w.get(i, 0.0) * a_ij / out_degree[i]
    return e


def brute_global_r(edges, labels):
    labeled = [(s, d) for s, d in edges if labels.get(s) in GROUPS and labels.get(d) in GROUPS]
    m = len(labeled)
    e = {(g, h): sum(1 for s, d in labeled if labels[s] == g and labels[d] == h) / m for g in GROUPS for h in GROUPS}
    a = {g: sum(e[(g, h)] for h in GROUPS) for g in GROUPS}
    b = {g: sum(e[(h, g)] for h in GROUPS) for g in GROUPS}
    ab = sum(a[g] * b[g] for g in GROUPS)
    return (sum(e[(g, g)] for g in GROUPS) - ab) / (1.0 - ab), ab


def brute_local_r(nodes, edges, labels, focal, alpha):
    w = dense_ppr(nodes, edges, focal, alpha)
    outdeg = {u: sum(1 for s, _ in edges if s == u) for u in nodes}
    e = brute_mixing(edges, labels, w, outdeg)
    z = sum(e.values())
    _, ab = brute_global_r(edges, labels)
    if z == 0:
        return float("nan"), 0.0
    trace = sum(e[(g, g)] for g in GROUPS) / z
    return (trace - ab) / (1.0 - ab), z


def tree_depth_bruteforce(parent):
    """Longest root-to-node path by walking parent pointers from every node."""
    best = 0
    for node in parent:
        d, cur = 0, node
        while parent[cur] is not None:
            cur = parent[cur]
            d += 1
        best = max(best, d)
    return best


def pearson_chi2(table):
    rows = [sum(r) for r in table]
    cols = [sum(c) for c in zip(*table)]
    total = sum(rows)
    stat = 0.0
    for i, j in itertools.product(range(len(rows)), range(len(cols))):
        e = rows[i] * cols[j] / total
        stat += (table[i][j] - e) ** 2 / e
    return stat


def pooled_z(k1, n1, k2, n2):
    p = (k1 + k2) / (n1 + n2)
    return (k1 / n1 - k2 / n2) / math.sqrt(p * (1 - p) * (1 / n1 + 1 / n2))

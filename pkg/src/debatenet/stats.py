"""Engagement tables, participation tests and the cross-group reply matrix.

Counts are kept as integers. Shares and percentages are derived from those
counts and never rounded, so re-deriving them from an export reproduces the
exported value exactly.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np
from scipy import stats as _st

from .classify import KNOWN_LABELS, ClusterAssignment, Label
from .forest import Forest
from .graph import InteractionGraph

ALL_LABELS = (*KNOWN_LABELS, Label.UNCLASSIFIED)


class StatsError(ValueError):
    pass


def _trees(forest) -> list:
    return list(forest.trees if isinstance(forest, Forest) else forest)


def _share(count: int, total: int) -> float:
    return count / total if total else 0.0


@dataclass
class EngagementTable:
    """Distinct reply authors and reply counts per label.

    Shares are 0 for every label when there are no replies at all.
    """

    users: dict
    replies: dict

    @property
    def total_users(self) -> int:
        return sum(self.users.values())

    @property
    def total_replies(self) -> int:
        return sum(self.replies.values())

    def user_share(self, label) -> float:
        return _share(self.users[Label(label)], self.total_users)

    def reply_share(self, label) -> float:
        return _share(self.replies[Label(label)], self.total_replies)

    def to_csv(self) -> bytes:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["label", "users", "user_share", "replies", "reply_share"])
        for lab in ALL_LABELS:
            w.writerow([lab.value, self.users[lab], repr(self.user_share(lab)), self.replies[lab], repr(self.reply_share(lab))])
        w.writerow(["Total", self.total_users, repr(1.0 if self.total_users else 0.0),
                    self.total_replies, repr(1.0 if self.total_replies else 0.0)])
        return out.getvalue().encode("utf-8")


def _engagement(forest, assignment: ClusterAssignment, max_depth: int | None) -> EngagementTable:
    trees = _trees(forest)
    if not trees:
        raise StatsError("forest has no trees")
    authors: dict = {lab: set() for lab in ALL_LABELS}
    replies = {lab: 0 for lab in ALL_LABELS}
    for tree in trees:
        depth = tree.depths() if max_depth is not None else None
        for node in tree.replies():
            if depth is not None and depth[node] > max_depth:
                continue
            user = tree.author[node]
            lab = assignment.label(user)
            authors[lab].add(user)
            replies[lab] += 1
    return EngagementTable({lab: len(s) for lab, s in authors.items()}, replies)


def engagement_table(forest, assignment: ClusterAssignment) -> EngagementTable:
    """Reply authors and replies per label; root posts are not replies."""
    return _engagement(forest, assignment, None)


def first_order_table(forest, assignment: ClusterAssignment) -> EngagementTable:
    """As :func:`engagement_table`, counting only direct replies to a root."""
    return _engagement(forest, assignment, 1)


@dataclass
class Participation:
    active: int
    base: int

    @property
    def defined(self) -> bool:
        return self.base > 0

    @property
    def share(self) -> float:
        return self.active / self.base if self.base else float("nan")


def participation_share(rt_assignment: ClusterAssignment, reply_users: Iterable, seeds: Iterable = ()) -> dict:
    """Fraction of each retweet group's non-seed members that take part in replies.

    A label with no non-seed members has ``base == 0`` and an undefined (NaN)
    share.
    """
    seeds = set(seeds)
    active_set = set(reply_users) - seeds
    out = {}
    for lab in KNOWN_LABELS:
        base = rt_assignment.users(lab) - seeds
        out[lab] = Participation(len(base & active_set), len(base))
    return out


def participation_csv(shares: Mapping) -> bytes:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["label", "active", "base", "share"])
    for lab in KNOWN_LABELS:
        p = shares[lab]
        w.writerow([lab.value, p.active, p.base, repr(p.share) if p.defined else ""])
    return out.getvalue().encode("utf-8")


@dataclass
class TestResult:
    statistic: float
    pvalue: float
    df: int | None = None
    n: tuple = ()

    def row(self, name: str) -> list:
        return [name, repr(self.statistic), "" if self.df is None else self.df, repr(self.pvalue),
                " ".join(str(k) for k in self.n)]


def chi_square(table) -> TestResult:
    """Pearson's chi-square test of independence on a contingency table.

    Expected counts come from the row and column marginals; no continuity
    correction is applied.
    """
    obs = np.asarray(table, dtype=float)
    if obs.ndim != 2 or min(obs.shape) < 2:
        raise StatsError("need a table with at least two rows and two columns")
    if (obs < 0).any():
        raise StatsError("counts must be non-negative")
    rows, cols = obs.sum(axis=1), obs.sum(axis=0)
    if (rows == 0).any() or (cols == 0).any():
        raise StatsError("a row or column of the table sums to zero")
    total = obs.sum()
    expected = np.outer(rows, cols) / total
    stat = float(((obs - expected) ** 2 / expected).sum())
    df = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    return TestResult(stat, float(_st.chi2.sf(stat, df)), df, (int(total),))


def two_proportion_z(k1: int, n1: int, k2: int, n2: int) -> TestResult:
    """Pooled two-proportion z test, two-sided; positive when group 1 is higher."""
    for k, n in ((k1, n1), (k2, n2)):
        if n <= 0 or not 0 <= k <= n:
            raise StatsError(f"need 0 <= k <= n and n > 0, got k={k}, n={n}")
    pooled = (k1 + k2) / (n1 + n2)
    if pooled in (0.0, 1.0):
        raise StatsError("pooled proportion is 0 or 1; the variance is degenerate")
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2))
    z = (k1 / n1 - k2 / n2) / se
    return TestResult(z, float(2.0 * _st.norm.sf(abs(z))), None, (n1, n2))


def participation_tests(shares: Mapping) -> dict:
    """Chi-square over groups x (active, inactive) plus pairwise z tests.

    Labels with an empty base are left out of every test.
    """
    labs = [lab for lab in KNOWN_LABELS if shares[lab].defined]
    out: dict = {}
    if len(labs) >= 2:
        table = [[shares[lab].active, shares[lab].base - shares[lab].active] for lab in labs]
        try:
            out["chi2"] = chi_square(table)
        except StatsError:
            pass
    for i, a in enumerate(labs):
        for b in labs[i + 1:]:
            pa, pb = shares[a], shares[b]
            try:
                out[(a, b)] = two_proportion_z(pa.active, pa.base, pb.active, pb.base)
            except StatsError:
                pass
    return out


def tests_csv(results: Mapping) -> bytes:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["test", "statistic", "df", "pvalue", "n"])
    for key, res in results.items():
        name = key if isinstance(key, str) else f"z {key[0].value} vs {key[1].value}"
        w.writerow(res.row(name))
    return out.getvalue().encode("utf-8")


@dataclass
class InteractionMatrix:
    """Reply counts from-label -> to-label over the known labels.

    ``totals`` holds each from-label's reply mass including replies to
    unclassified users, so percentages along a from-label need not reach 100.
    """

    counts: np.ndarray                         # [from, to]
    totals: np.ndarray
    labels: tuple = KNOWN_LABELS

    def percent(self, src, dst) -> float:
        i, j = self.labels.index(Label(src)), self.labels.index(Label(dst))
        count, total = int(self.counts[i, j]), int(self.totals[i])
        return 100.0 * count / total if total else 0.0

    def share(self, src, dst) -> float:
        return self.percent(src, dst) / 100.0

    def to_csv(self) -> bytes:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["from_label", "to_label", "replies", "from_total", "percent"])
        for i, src in enumerate(self.labels):
            for j, dst in enumerate(self.labels):
                w.writerow([src.value, dst.value, int(self.counts[i, j]), int(self.totals[i]), repr(self.percent(src, dst))])
        return out.getvalue().encode("utf-8")


def interaction_matrix(reply_network: InteractionGraph, assignment: ClusterAssignment) -> InteractionMatrix:
    """Sum reply-edge weights by the labels of replier and addressee."""
    g = len(KNOWN_LABELS)
    idx = {lab: k for k, lab in enumerate(KNOWN_LABELS)}
    counts = np.zeros((g, g), dtype=np.int64)
    totals = np.zeros(g, dtype=np.int64)
    for src, dst, w in reply_network.edges():
        i = idx.get(assignment.label(src))
        if i is None:
            continue
        totals[i] += w
        j = idx.get(assignment.label(dst))
        if j is not None:
            counts[i, j] += w
    return InteractionMatrix(counts, totals)

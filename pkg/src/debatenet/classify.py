"""Region-based opinion cluster assignment over a layout embedding."""
from __future__ import annotations

import csv
import enum
import io
import random
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon

from .layout import LayoutEmbedding


class Label(str, enum.Enum):
    MAJORITY = "Majority"
    MINORITY = "Minority"
    INTERMEDIATE = "Intermediate"
    UNCLASSIFIED = "Unclassified"


KNOWN_LABELS = (Label.MAJORITY, Label.MINORITY, Label.INTERMEDIATE)


class Provenance(str, enum.Enum):
    EVENT = "EventNetwork"
    FALLBACK = "FallbackNetwork"
    NONE = "None"


class BoundaryError(ValueError):
    pass


@dataclass
class ClusterAssignment:
    labels: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for user, label in list(self.labels.items()):
            label = Label(label)
            self.labels[user] = label
            prov = Provenance(self.provenance.get(user, Provenance.NONE if label is Label.UNCLASSIFIED else Provenance.EVENT))
            if (prov is Provenance.NONE) != (label is Label.UNCLASSIFIED):
                raise ValueError(f"user {user}: provenance {prov.value} inconsistent with label {label.value}")
            self.provenance[user] = prov

    def label(self, user) -> Label:
        return self.labels.get(user, Label.UNCLASSIFIED)

    def __contains__(self, user) -> bool:
        return user in self.labels

    def __len__(self) -> int:
        return len(self.labels)

    def users(self, label: Label | None = None) -> set:
        if label is None:
            return set(self.labels)
        return {u for u, lab in self.labels.items() if lab is Label(label)}

    def classified(self) -> set:
        return {u for u, lab in self.labels.items() if lab is not Label.UNCLASSIFIED}

    def counts(self) -> dict:
        out = {lab: 0 for lab in Label}
        for lab in self.labels.values():
            out[lab] += 1
        return out

    def to_csv(self) -> bytes:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["user_id", "label", "provenance"])
        for user in sorted(self.labels):
            w.writerow([user, self.labels[user].value, self.provenance[user].value])
        return out.getvalue().encode("utf-8")

    @classmethod
    def from_csv(cls, data: bytes | str) -> "ClusterAssignment":
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        reader = csv.DictReader(io.StringIO(data))
        labels, prov = {}, {}
        for row in reader:
            labels[row["user_id"]] = Label(row["label"])
            if row.get("provenance"):
                prov[row["user_id"]] = Provenance(row["provenance"])
        return cls(labels, prov)


# -- boundaries -------------------------------------------------------------

@dataclass
class Region:
    name: str
    vertices: list

    def polygon(self) -> Polygon:
        return Polygon(self.vertices)


@dataclass
class BoundarySpec:
    """Two pole regions in layout coordinates; everything else is in-between.

    Regions are closed: a point on an edge belongs to the region. Region
    names are identifiers only. Majority and Minority are decided by member
    counts when the regions are applied.
    """

    regions: list

    def __post_init__(self):
        if len(self.regions) != 2:
            raise BoundaryError(f"expected exactly two pole regions, got {len(self.regions)}")
        polys = []
        for region in self.regions:
            if len(region.vertices) < 3:
                raise BoundaryError(f"region {region.name!r} needs at least 3 vertices")
            poly = region.polygon()
            if not poly.is_valid or poly.area <= 0:
                raise BoundaryError(f"region {region.name!r} is self-intersecting or degenerate")
            polys.append(poly)
        a, b = polys
        if a.intersection(b).area > 0 or a.covers(b) or b.covers(a):
            raise BoundaryError("pole regions overlap")
        if a.intersects(b):
            raise BoundaryError("pole regions touch; they must be disjoint")
        self._polys = polys

    def contains(self, index: int, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        return shapely.intersects_xy(self._polys[index], xy[:, 0], xy[:, 1])

    def transformed(self, matrix=None, offset=(0.0, 0.0)) -> "BoundarySpec":
        m = np.eye(2) if matrix is None else np.asarray(matrix, dtype=float)
        off = np.asarray(offset, dtype=float)
        return BoundarySpec(
            [Region(r.name, [tuple(np.asarray(v) @ m.T + off) for v in r.vertices]) for r in self.regions]
        )

    def to_text(self) -> str:
        lines = ["# pole regions: name line, then one x,y vertex per line"]
        for region in self.regions:
            lines.append(f"region {region.name}")
            lines.extend(f"{float(x)!r},{float(y)!r}" for x, y in region.vertices)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BoundarySpec":
        regions: list[Region] = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("region"):
                name = line[len("region"):].strip()
                if not name:
                    raise BoundaryError(f"line {lineno}: region without a name")
                regions.append(Region(name, []))
                continue
            if not regions:
                raise BoundaryError(f"line {lineno}: vertex before any region header")
            try:
                x, y = (float(v) for v in line.split(","))
            except ValueError:
                raise BoundaryError(f"line {lineno}: expected 'x,y', got {line!r}") from None
            regions[-1].vertices.append((x, y))
        return cls(regions)


def read_boundaries(path) -> BoundarySpec:
    with open(path, encoding="utf-8") as fh:
        return BoundarySpec.from_text(fh.read())


def write_boundaries(spec: BoundarySpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(spec.to_text())


def assign_clusters(
    embedding: LayoutEmbedding,
    boundaries: BoundarySpec,
    users: Iterable | None = None,
) -> ClusterAssignment:
    """Label embedded nodes by region; ``users`` outside the embedding stay Unclassified.

    The pole region with more members is the Majority (ties: first region).
    """
    xy = embedding.coords
    in_a = boundaries.contains(0, xy)
    in_b = boundaries.contains(1, xy) & ~in_a
    major_is_a = int(in_a.sum()) >= int(in_b.sum())
    labels, prov = {}, {}
    for node, a, b in zip(embedding.nodes, in_a, in_b):
        if a:
            lab = Label.MAJORITY if major_is_a else Label.MINORITY
        elif b:
            lab = Label.MINORITY if major_is_a else Label.MAJORITY
        else:
            lab = Label.INTERMEDIATE
        labels[node] = lab
        prov[node] = Provenance.EVENT
    for user in users or ():
        if user not in labels:
            labels[user] = Label.UNCLASSIFIED
            prov[user] = Provenance.NONE
    return ClusterAssignment(labels, prov)


def fallback_merge(
    event: ClusterAssignment,
    fallback: ClusterAssignment,
    reply_users: Iterable,
) -> ClusterAssignment:
    """Event label where known, else the background network's label."""
    labels, prov = {}, {}
    for user in reply_users:
        lab = event.label(user)
        if lab is not Label.UNCLASSIFIED:
            labels[user], prov[user] = lab, Provenance.EVENT
            continue
        lab = fallback.label(user)
        if lab is not Label.UNCLASSIFIED:
            labels[user], prov[user] = lab, Provenance.FALLBACK
        else:
            labels[user], prov[user] = Label.UNCLASSIFIED, Provenance.NONE
    return ClusterAssignment(labels, prov)


def coverage(assignment: ClusterAssignment, users: Iterable) -> float:
    users = set(users)
    if not users:
        raise ValueError("coverage of an empty user set")
    return sum(1 for u in users if assignment.label(u) is not Label.UNCLASSIFIED) / len(users)


def audit_sample(assignment: ClusterAssignment, n: int, seed: int = 0) -> list[tuple]:
    """Random classified users for manual checking, sorted by user id."""
    pool = sorted(assignment.classified())
    rng = random.Random(seed)
    picked = rng.sample(pool, min(n, len(pool)))
    return sorted((u, assignment.label(u).value) for u in picked)


# -- boundary construction helpers -------------------------------------------

def cut_boundaries(
    start: Sequence[float],
    end: Sequence[float],
    cuts: tuple[float, float],
    extent: float,
    names: tuple[str, str] = ("A", "B"),
) -> BoundarySpec:
    """Two half-plane regions cut perpendicular to the axis ``start -> end``.

    ``cuts`` are fractions along the axis (0 at ``start``, 1 at ``end``);
    region A lies before the first cut, region B beyond the second. Both are
    clipped to a square of half-width ``extent`` around the axis midpoint.
    """
    p0 = np.asarray(start, dtype=float)
    p1 = np.asarray(end, dtype=float)
    axis = p1 - p0
    length = float(np.hypot(*axis))
    if length == 0:
        raise BoundaryError("axis endpoints coincide")
    t1, t2 = cuts
    if not t1 < t2:
        raise BoundaryError("first cut must precede the second")
    u = axis / length
    v = np.array([-u[1], u[0]])
    mid = (p0 + p1) / 2
    # coordinates along u relative to mid
    s1 = (t1 - 0.5) * length
    s2 = (t2 - 0.5) * length
    far = max(extent, abs(s1) + 1.0, abs(s2) + 1.0)

    def rect(lo, hi):
        corners = [(lo, -far), (hi, -far), (hi, far), (lo, far)]
        return [tuple(mid + a * u + b * v) for a, b in corners]

    return BoundarySpec([Region(names[0], rect(-far, s1)), Region(names[1], rect(s2, far))])


def suggest_boundaries(
    embedding: LayoutEmbedding,
    grid: int = 96,
    smooth: float = 1.5,
    levels: Sequence[float] = tuple(np.round(np.arange(0.05, 0.65, 0.05), 2)),
    min_mass: float = 0.02,
) -> BoundarySpec:
    """Propose pole regions from the layout's point density.

    Dense regions are found on a smoothed 2-D histogram: cells above a
    fraction of the peak, trying each of ``levels`` and keeping the one that
    yields the most components holding at least ``min_mass`` of the points. The two components farthest apart are the poles. Cuts run
    perpendicular to the axis joining them, through the sparsest point
    between each pole and its nearest in-between component (or the other
    pole when there is none). Meant as a starting point for manual review.
    """
    from scipy import ndimage

    xy = embedding.coords
    if len(xy) < 3:
        raise BoundaryError("need at least three embedded nodes to propose boundaries")
    lo = np.quantile(xy, 0.001, axis=0)
    hi = np.quantile(xy, 0.999, axis=0)
    side = float(np.max(hi - lo))
    if not side > 0:
        raise BoundaryError("layout has no spread")
    centre = (lo + hi) / 2
    edges = [np.linspace(c - side / 2, c + side / 2, grid + 1) for c in centre]
    hist, _, _ = np.histogram2d(xy[:, 0], xy[:, 1], bins=edges)
    dens = ndimage.gaussian_filter(hist, smooth)
    ix = np.clip(np.searchsorted(edges[0], xy[:, 0]) - 1, 0, grid - 1)
    iy = np.clip(np.searchsorted(edges[1], xy[:, 1]) - 1, 0, grid - 1)
    # clusters are joined by sparse bridges, so raise the cut level until the
    # most dense regions separate; the lowest such level wins ties
    best = None
    for lv in levels:
        comps, n_comp = ndimage.label(dens > lv * dens.max(), structure=np.ones((3, 3)))
        point_comp = comps[ix, iy]
        masses = np.bincount(point_comp, minlength=n_comp + 1)
        big = [c for c in range(1, n_comp + 1) if masses[c] >= min_mass * len(xy)]
        if best is None or len(big) > len(best[1]):
            best = (point_comp, big)
    point_comp, big = best
    if len(big) < 2:
        raise BoundaryError("layout shows fewer than two dense regions; draw boundaries by hand")
    cents = {c: xy[point_comp == c].mean(axis=0) for c in big}
    pairs = [(a, b) for i, a in enumerate(big) for b in big[i + 1:]]
    pa, pb = max(pairs, key=lambda ab: (np.hypot(*(cents[ab[0]] - cents[ab[1]])), -ab[0], -ab[1]))
    start, end = cents[pa], cents[pb]
    axis = end - start
    length = float(np.hypot(*axis))
    t = (xy - start) @ axis / length**2          # 0 at pole a, 1 at pole b
    between = sorted(
        float((cents[c] - start) @ axis / length**2) for c in big if c not in (pa, pb)
    )
    between = [v for v in between if 0 < v < 1]

    bins = 4 * grid
    hist1, e1 = np.histogram(t, bins=bins, range=(-0.5, 1.5))
    dens1 = ndimage.gaussian_filter1d(hist1.astype(float), smooth * 2)
    mids = (e1[:-1] + e1[1:]) / 2

    def valley(a, b):
        sel = np.flatnonzero((mids >= a) & (mids <= b))
        return float(mids[sel[np.argmin(dens1[sel])]])

    if between:
        c1 = valley(0.0, between[0])
        c2 = valley(between[-1], 1.0)
    else:
        c1 = c2 = valley(0.0, 1.0)
    if c1 >= c2:
        gap = (e1[1] - e1[0]) / 2
        c1, c2 = c1 - gap, c2 + gap
    extent = float(np.max(np.abs(xy - (start + end) / 2))) * 2 + length
    return cut_boundaries(start, end, (c1, c2), extent)

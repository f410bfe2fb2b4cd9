"""Reply trees rooted at seed posts, their metrics, and the reply network."""
from __future__ import annotations

import csv
import io
import json
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .graph import InteractionGraph
from .ingest import InteractionRecord, Kind


@dataclass
class ReplyTree:
    root: str
    parent: dict            # tweet_id -> parent tweet_id (root -> None)
    author: dict            # tweet_id -> user id
    created_at: dict        # tweet_id -> timestamp
    children: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.children:
            kids: dict[str, list] = {t: [] for t in self.parent}
            for t, p in self.parent.items():
                if p is not None:
                    kids[p].append(t)
            for lst in kids.values():
                lst.sort(key=lambda t: (self.created_at[t], t))
            self.children = kids

    @property
    def root_author(self):
        return self.author[self.root]

    def __len__(self) -> int:
        return len(self.parent)

    def depths(self) -> dict:
        depth = {self.root: 0}
        queue = deque([self.root])
        while queue:
            t = queue.popleft()
            for c in self.children[t]:
                depth[c] = depth[t] + 1
                queue.append(c)
        return depth

    def replies(self) -> list:
        """Non-root tweet ids in breadth-first order."""
        out = []
        queue = deque([self.root])
        while queue:
            t = queue.popleft()
            for c in self.children[t]:
                out.append(c)
                queue.append(c)
        return out


@dataclass(frozen=True)
class TreeMetrics:
    size: int
    depth: int
    first_order: int

    @property
    def replies(self) -> int:
        return self.size - 1


@dataclass
class Forest:
    trees: list
    orphans: int = 0            # parent absent from the corpus
    unrooted: int = 0           # chain ends in a post that is not a seed root
    time_violations: int = 0    # reply older than its parent; dropped with its subtree
    duplicates: int = 0

    def __iter__(self):
        return iter(self.trees)

    def __len__(self) -> int:
        return len(self.trees)

    def reply_count(self) -> int:
        return sum(len(t) - 1 for t in self.trees)


def build_forest(records: Iterable[InteractionRecord], seeds, strict: bool = False) -> Forest:
    """Attach every reply to the seed-rooted tree its parent chain leads to.

    Roots are seed-authored originals. Records are indexed first and linked
    second, so the result does not depend on input order.
    """
    seed_ids = getattr(seeds, "user_ids", seeds)
    index: dict[str, InteractionRecord] = {}
    duplicates = 0
    for rec in records:
        if rec.tweet_id in index:
            if strict:
                raise ValueError(f"duplicate tweet id {rec.tweet_id}")
            duplicates += 1
            # keep a deterministic representative regardless of order
            if _record_key(rec) < _record_key(index[rec.tweet_id]):
                index[rec.tweet_id] = rec
            continue
        index[rec.tweet_id] = rec

    roots = sorted(t for t, r in index.items() if r.kind is Kind.ORIGINAL and r.author_id in seed_ids)
    root_set = set(roots)

    children: dict[str, list] = {}
    orphans = 0
    for t, rec in index.items():
        if rec.kind is not Kind.REPLY:
            continue
        if rec.ref_tweet_id not in index:
            orphans += 1
            continue
        children.setdefault(rec.ref_tweet_id, []).append(t)

    trees = []
    attached = 0
    violations = 0
    for root in roots:
        parent = {root: None}
        queue = deque([root])
        while queue:
            t = queue.popleft()
            for c in sorted(children.get(t, ())):
                if c in root_set:
                    continue
                if index[c].created_at < index[t].created_at:
                    violations += _subtree_size(c, children)
                    continue
                parent[c] = t
                queue.append(c)
        attached += len(parent) - 1
        trees.append(
            ReplyTree(
                root=root,
                parent=parent,
                author={t: index[t].author_id for t in parent},
                created_at={t: index[t].created_at for t in parent},
            )
        )
    total_replies = sum(1 for r in index.values() if r.kind is Kind.REPLY)
    unrooted = total_replies - attached - orphans - violations
    return Forest(trees, orphans=orphans, unrooted=unrooted, time_violations=violations, duplicates=duplicates)


def _record_key(rec: InteractionRecord):
    return json.dumps(rec.to_json(), sort_keys=True)


def _subtree_size(t, children) -> int:
    n = 0
    stack = [t]
    seen = set()
    while stack:
        x = stack.pop()
        if x in seen:
            continue
        seen.add(x)
        n += 1
        stack.extend(children.get(x, ()))
    return n


def tree_metrics(tree: ReplyTree) -> TreeMetrics:
    depths = tree.depths()
    return TreeMetrics(size=len(depths), depth=max(depths.values()), first_order=len(tree.children[tree.root]))


def ccdf(values: Sequence[int]) -> list[tuple[int, float]]:
    """``(v, P[X >= v])`` at every distinct observed value."""
    values = list(values)
    if not values:
        raise ValueError("ccdf of an empty sample")
    if any(v < 0 for v in values):
        raise ValueError("ccdf expects non-negative values")
    n = len(values)
    counts = Counter(values)
    out = []
    remaining = n
    for v in sorted(counts):
        out.append((v, remaining / n))
        remaining -= counts[v]
    return out


def aggregate_reply_network(forest: Forest | Iterable[ReplyTree]) -> InteractionGraph:
    """Edge replier -> replied-to author for every reply in every tree."""
    trees = sorted(forest, key=lambda t: t.root)
    g = InteractionGraph()
    for tree in trees:
        for t in tree.replies():
            g.add_interaction(tree.author[t], tree.author[tree.parent[t]])
    return g


def reply_users(forest: Iterable[ReplyTree]) -> set:
    """Authors of reply tweets (root authors only count if they also reply)."""
    return {tree.author[t] for tree in forest for t in tree.replies()}


def reply_network_users(forest: Iterable[ReplyTree]) -> set:
    """Every user that is a node of the aggregated reply network."""
    users = set()
    for tree in forest:
        for t in tree.replies():
            u, v = tree.author[t], tree.author[tree.parent[t]]
            if u != v:
                users.add(u)
                users.add(v)
    return users


# -- export -------------------------------------------------------------

def forest_to_jsonl(forest: Iterable[ReplyTree], labels: Mapping | None = None) -> bytes:
    out = io.StringIO()
    for tree in sorted(forest, key=lambda t: t.root):
        nodes = []
        for t in [tree.root] + tree.replies():
            node = {
                "id": t,
                "parent": tree.parent[t],
                "author": tree.author[t],
                "created_at": tree.created_at[t],
            }
            if labels is not None:
                node["label"] = str(labels.get(tree.author[t], "Unclassified"))
            nodes.append(node)
        out.write(json.dumps({"tree_id": tree.root, "nodes": nodes}, ensure_ascii=False) + "\n")
    return out.getvalue().encode("utf-8")


def forest_from_jsonl(data: bytes | str) -> list[ReplyTree]:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    trees = []
    for line in data.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        parent = {n["id"]: n["parent"] for n in obj["nodes"]}
        trees.append(
            ReplyTree(
                root=obj["tree_id"],
                parent=parent,
                author={n["id"]: n["author"] for n in obj["nodes"]},
                created_at={n["id"]: n["created_at"] for n in obj["nodes"]},
            )
        )
    return trees


def metrics_csv(forest: Iterable[ReplyTree]) -> bytes:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["tree_id", "S", "D", "first_order", "replies"])
    for tree in sorted(forest, key=lambda t: t.root):
        m = tree_metrics(tree)
        w.writerow([tree.root, m.size, m.depth, m.first_order, m.replies])
    return out.getvalue().encode("utf-8")

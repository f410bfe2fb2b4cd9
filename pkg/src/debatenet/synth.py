"""Seeded ground-truth corpora: planted retweet blocks plus group-driven replies.

Groups are indexed ``0 = Majority, 1 = Minority, 2 = Intermediate`` for the
retweeting population and ``3 = outsiders`` (users who reply but never
retweet). Retweet preferences are 3x3; reply behaviour is given per group
for all four.
"""
from __future__ import annotations

import csv
import io
import json
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from .classify import ClusterAssignment, Label, Provenance
from .ingest import InteractionRecord, Kind, SeedSet, parse_timestamp, serialize_records

GROUP_LABELS = (Label.MAJORITY, Label.MINORITY, Label.INTERMEDIATE, Label.UNCLASSIFIED)
DAY = 24 * 3600
RECENT = 30          # replies remembered per group for deeper attachment


@dataclass(frozen=True)
class GeneratorParams:
    n_majority: int = 6500
    n_minority: int = 2500
    n_intermediate: int = 1000
    n_outsiders: int = 3000
    seeds: tuple = (40, 20, 10)
    # retweet target-group preferences, rows: retweeting group
    retweet_pref: tuple = (
        (10 / 11, 0.3 / 11, 0.7 / 11),
        (0.3 / 11, 10 / 11, 0.7 / 11),
        (0.5 / 11, 0.5 / 11, 10 / 11),
    )
    retweets_min: int = 3
    retweets_max: int = 300
    activity_exponent: float = 2.5
    seed_popularity: float = 20.0
    fallback_only_fraction: float = 0.1
    roots_per_seed: float = 30.0
    # reply behaviour, one entry per group (majority, minority, intermediate, outsider)
    reply_activation: tuple = (0.2, 0.4, 0.25, 0.3)
    replies_per_active: tuple = (3.0, 3.0, 2.5, 2.0)
    reply_pref: tuple = (
        (0.70, 0.15, 0.05, 0.10),
        (0.70, 0.15, 0.05, 0.10),
        (0.45, 0.30, 0.15, 0.10),
        (0.45, 0.35, 0.10, 0.10),
    )
    first_order_fraction: tuple = (0.5, 0.6, 0.5, 0.5)
    window_start: str = "2019-07-25T00:00:00Z"
    window_end: str = "2019-09-10T00:00:00Z"
    background_start: str = "2019-07-01T00:00:00Z"
    background_end: str = "2020-02-29T00:00:00Z"
    keyword: str = "leipzig"
    seed: int = 0

    def __post_init__(self):
        for name in ("n_majority", "n_minority"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("n_intermediate", "n_outsiders"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        sizes = self.group_sizes[:3]
        if len(self.seeds) != 3 or any(s < 0 or s > n for s, n in zip(self.seeds, sizes)):
            raise ValueError("seeds must give 0..size seeds for each of the three retweet groups")
        _check_stochastic("retweet_pref", self.retweet_pref, 3)
        _check_stochastic("reply_pref", self.reply_pref, 4)
        for name in ("reply_activation", "first_order_fraction", "replies_per_active"):
            if len(getattr(self, name)) != 4:
                raise ValueError(f"{name} needs one value per group (4)")
        for p in (*self.reply_activation, *self.first_order_fraction, self.fallback_only_fraction):
            if not 0 <= p <= 1:
                raise ValueError("probabilities must lie in [0, 1]")
        if any(m < 1 for m in self.replies_per_active):
            raise ValueError("replies_per_active must be >= 1")
        if self.retweets_min < 1 or self.retweets_max < self.retweets_min:
            raise ValueError("need 1 <= retweets_min <= retweets_max")
        if not self.activity_exponent > 1:
            raise ValueError("activity_exponent must exceed 1")
        if self.roots_per_seed < 0:
            raise ValueError("roots_per_seed must be >= 0")
        ws, we = parse_timestamp(self.window_start), parse_timestamp(self.window_end)
        bs, be = parse_timestamp(self.background_start), parse_timestamp(self.background_end)
        if not (bs <= ws < we <= be) or we - ws < 3 * DAY:
            raise ValueError("need background_start <= window_start < window_end <= background_end, window >= 3 days")

    @property
    def group_sizes(self) -> tuple:
        return (self.n_majority, self.n_minority, self.n_intermediate, self.n_outsiders)


def _check_stochastic(name, rows, width):
    if len(rows) != width:
        raise ValueError(f"{name} needs {width} rows")
    for row in rows:
        if len(row) != width or any(p < 0 for p in row) or abs(sum(row) - 1) > 1e-9:
            raise ValueError(f"{name} rows must be {width} probabilities summing to 1")


def paper_pattern(seed: int = 0, n_users: int = 10_000, **overrides) -> GeneratorParams:
    """Preset mirroring the qualitative pattern: ~25% minority, twice as active, 0.7 out-group replies.

    ``n_users`` counts the retweeting population; outsiders come on top at
    30% of it.
    """
    n_min = round(0.25 * n_users)
    n_int = round(0.10 * n_users)
    n_maj = n_users - n_min - n_int
    scale = n_users / 10_000
    seeds = tuple(max(1, round(s * scale)) for s in (40, 20, 10))
    base = dict(
        n_majority=n_maj,
        n_minority=n_min,
        n_intermediate=n_int,
        n_outsiders=round(0.3 * n_users),
        seeds=seeds,
        seed=seed,
    )
    base.update(overrides)
    return GeneratorParams(**base)


def symmetric_pattern(seed: int = 0, n_per_group: int = 2000, **overrides) -> GeneratorParams:
    """Two equal poles with mirrored behaviour and no in-between group."""
    base = dict(
        n_majority=n_per_group,
        n_minority=n_per_group,
        n_intermediate=0,
        n_outsiders=0,
        seeds=(20, 20, 0),
        retweet_pref=((10 / 11, 1 / 11, 0.0), (1 / 11, 10 / 11, 0.0), (0.5, 0.5, 0.0)),
        reply_activation=(0.3, 0.3, 0.0, 0.0),
        replies_per_active=(3.0, 3.0, 1.0, 1.0),
        reply_pref=((0.6, 0.4, 0.0, 0.0), (0.4, 0.6, 0.0, 0.0), (0.5, 0.5, 0.0, 0.0), (0.5, 0.5, 0.0, 0.0)),
        first_order_fraction=(0.5, 0.5, 0.5, 0.5),
        fallback_only_fraction=0.0,
        seed=seed,
    )
    base.update(overrides)
    return GeneratorParams(**base)


@dataclass
class SyntheticCorpus:
    records: list
    seeds: SeedSet
    truth: ClusterAssignment
    params: GeneratorParams
    fallback_only: set = field(default_factory=set)
    active_repliers: set = field(default_factory=set)

    def archive_bytes(self) -> bytes:
        return serialize_records(self.records)

    def truth_csv(self) -> bytes:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["user_id", "label"])
        for user in sorted(self.truth.labels):
            w.writerow([user, self.truth.labels[user].value])
        return out.getvalue().encode("utf-8")

    def params_json(self) -> bytes:
        return (json.dumps(asdict(self.params), indent=2, sort_keys=True) + "\n").encode("utf-8")


def _power_law_counts(rng, size, kmin, kmax, exponent):
    u = rng.random(size)
    k = np.floor(kmin * (1.0 - u) ** (-1.0 / (exponent - 1.0))).astype(np.int64)
    return np.minimum(k, kmax)


def generate(params: GeneratorParams) -> SyntheticCorpus:
    rng = np.random.default_rng(params.seed)
    sizes = params.group_sizes
    n_total = sum(sizes)
    width = len(str(n_total))
    user_ids = np.array([f"u{i:0{width}d}" for i in rng.permutation(n_total)])
    group = np.repeat(np.arange(4), sizes)
    members = [np.flatnonzero(group == g) for g in range(4)]
    is_seed = np.zeros(n_total, dtype=bool)
    for g in range(3):
        is_seed[members[g][: params.seeds[g]]] = True
    seed_idx = np.flatnonzero(is_seed)

    win_start = parse_timestamp(params.window_start)
    win_end = parse_timestamp(params.window_end)
    bg_start = parse_timestamp(params.background_start)
    bg_end = parse_timestamp(params.background_end)

    replying = any(a > 0 and n > 0 for a, n in zip(params.reply_activation, sizes))
    n_roots_per_seed = rng.poisson(params.roots_per_seed, size=len(seed_idx)) if len(seed_idx) else np.zeros(0, int)
    if replying and int(n_roots_per_seed.sum()) == 0:
        raise ValueError("replies requested but the parameters produce no seed root posts")

    # raw posts: (tmp_id, author, time, kind, parent_tmp, text); parent refs resolved later
    posts: list[list] = []

    def new_post(author, t, kind, parent, text):
        posts.append([len(posts), int(author), int(t), kind, parent, text])
        return len(posts) - 1

    # seed roots
    roots_by_group: list[list[int]] = [[], [], [], []]
    root_weight: list[list[float]] = [[], [], [], []]
    roots_of_user: dict[int, list[int]] = {}
    for s, k in zip(seed_idx, n_roots_per_seed):
        for _ in range(int(k)):
            t = rng.integers(win_start, win_end - 2 * DAY)
            pid = new_post(s, t, Kind.ORIGINAL, None, f"Statement on {params.keyword} #{len(posts)}")
            roots_by_group[group[s]].append(pid)
            root_weight[group[s]].append(float(rng.pareto(1.5) + 1.0))
            roots_of_user.setdefault(int(s), []).append(pid)

    # retweets
    popularity = rng.pareto(params.activity_exponent - 1.0, size=n_total) + 1.0
    popularity[is_seed] *= params.seed_popularity
    retweeters = np.concatenate(members[:3])
    fallback_only = set()
    if params.fallback_only_fraction > 0:
        cand = retweeters[~is_seed[retweeters]]
        pick = rng.random(len(cand)) < params.fallback_only_fraction
        fallback_only = {int(u) for u in cand[pick]}
    counts = _power_law_counts(rng, len(retweeters), params.retweets_min, params.retweets_max, params.activity_exponent)
    target_cdf = []
    for h in range(3):
        w = popularity[members[h]]
        target_cdf.append(np.cumsum(w) / w.sum() if len(w) else None)
    status: dict[int, int] = {}
    pref = np.asarray(params.retweet_pref, dtype=float)
    for u, k in zip(retweeters, counts):
        g = group[u]
        hs = rng.choice(3, size=int(k), p=pref[g])
        outside = int(u) in fallback_only
        for h in hs:
            if target_cdf[h] is None:
                continue
            v = members[h][min(int(np.searchsorted(target_cdf[h], rng.random())), len(members[h]) - 1)]
            if v == u:
                continue
            if outside:
                if rng.random() < 0.5 or win_start - bg_start < DAY:
                    t = rng.integers(win_end, bg_end)
                else:
                    t = rng.integers(bg_start, win_start)
            else:
                t = rng.integers(win_start, win_end)
            own_roots = roots_of_user.get(int(v))
            if own_roots:
                ref = own_roots[int(rng.integers(len(own_roots)))]
                t = max(int(t), posts[ref][2] + 60)
                if not outside:
                    t = min(t, win_end - 1)
            else:
                if int(v) not in status:
                    status[int(v)] = new_post(v, bg_start, Kind.ORIGINAL, None, f"On {params.keyword}: update")
                ref = status[int(v)]
            new_post(u, t, Kind.RETWEET, ref, f"RT {posts[ref][5]}")

    # replies
    events: list[int] = []
    active = set()
    for g in range(4):
        for u in members[g]:
            if rng.random() < params.reply_activation[g]:
                active.add(int(u))
                m = params.replies_per_active[g]
                events.extend([int(u)] * int(rng.geometric(1.0 / m)))
    events = [events[i] for i in rng.permutation(len(events))] if events else []
    recent = [deque(maxlen=RECENT) for _ in range(4)]
    rpref = np.asarray(params.reply_pref, dtype=float)
    root_cdf = [np.cumsum(w) / np.sum(w) if w else None for w in root_weight]
    for u in events:
        g = group[u]
        parent = None
        for _ in range(10):
            h = int(rng.choice(4, p=rpref[g]))
            first = rng.random() < params.first_order_fraction[g]
            if first and root_cdf[h] is not None:
                parent = roots_by_group[h][min(int(np.searchsorted(root_cdf[h], rng.random())), len(roots_by_group[h]) - 1)]
            elif recent[h]:
                parent = recent[h][int(rng.integers(len(recent[h])))]
            elif root_cdf[h] is not None:
                parent = roots_by_group[h][min(int(np.searchsorted(root_cdf[h], rng.random())), len(roots_by_group[h]) - 1)]
            if parent is not None:
                break
        if parent is None:
            continue
        t = min(posts[parent][2] + int(rng.exponential(2 * 3600)) + 1, win_end - 1)
        pid = new_post(u, max(t, posts[parent][2]), Kind.REPLY, parent, f"@{user_ids[posts[parent][1]]} re {params.keyword}")
        recent[g].append(pid)

    # ids follow time order, like platform snowflakes
    order = sorted(range(len(posts)), key=lambda i: (posts[i][2], i))
    tid_width = len(str(len(posts)))
    tweet_id = {old: f"{rank:0{tid_width}d}" for rank, old in enumerate(order)}
    records = []
    for old in order:
        _, author, t, kind, parent, text = posts[old]
        ref_tweet = tweet_id[parent] if parent is not None else None
        ref_user = str(user_ids[posts[parent][1]]) if parent is not None else None
        records.append(InteractionRecord(tweet_id[old], str(user_ids[author]), t, kind, ref_tweet, ref_user, text))

    labels, prov = {}, {}
    for i in range(n_total):
        lab = GROUP_LABELS[group[i]]
        labels[str(user_ids[i])] = lab
        prov[str(user_ids[i])] = Provenance.NONE if lab is Label.UNCLASSIFIED else Provenance.EVENT
    truth = ClusterAssignment(labels, prov)
    seeds = SeedSet(frozenset(str(user_ids[i]) for i in seed_idx))
    return SyntheticCorpus(
        records=records,
        seeds=seeds,
        truth=truth,
        params=params,
        fallback_only={str(user_ids[i]) for i in fallback_only},
        active_repliers={str(user_ids[i]) for i in active},
    )

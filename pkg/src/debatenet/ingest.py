"""Archive parsing, corpus filters and snowball seed expansion.

Archives are line-delimited JSON objects, one post per line::

    {"id": "17", "author_id": "u3", "created_at": "2019-08-01T10:00:00Z",
     "kind": "reply", "ref_tweet_id": "12", "ref_user_id": "u1", "text": "..."}

Timestamps are held as integer UTC seconds.
"""
from __future__ import annotations

import enum
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Iterator, Sequence

import yaml

WEEK = 7 * 24 * 3600


class Kind(str, enum.Enum):
    ORIGINAL = "original"
    RETWEET = "retweet"
    REPLY = "reply"


class ArchiveError(ValueError):
    """Raised for malformed archive lines in strict mode."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


@dataclass(frozen=True)
class InteractionRecord:
    tweet_id: str
    author_id: str
    created_at: int
    kind: Kind
    ref_tweet_id: str | None = None
    ref_user_id: str | None = None
    text: str = ""

    def __post_init__(self):
        if self.kind is Kind.ORIGINAL:
            if self.ref_tweet_id is not None or self.ref_user_id is not None:
                raise ValueError(f"original post {self.tweet_id} carries a reference")
        elif self.ref_tweet_id is None or self.ref_user_id is None:
            raise ValueError(f"{self.kind.value} {self.tweet_id} lacks ref_tweet_id/ref_user_id")

    def to_json(self) -> dict:
        out = {
            "id": self.tweet_id,
            "author_id": self.author_id,
            "created_at": format_timestamp(self.created_at),
            "kind": self.kind.value,
        }
        if self.ref_tweet_id is not None:
            out["ref_tweet_id"] = self.ref_tweet_id
            out["ref_user_id"] = self.ref_user_id
        out["text"] = self.text
        return out


@dataclass(frozen=True)
class SeedSet:
    user_ids: frozenset
    labels: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.user_ids:
            raise ValueError("seed set is empty")

    def __contains__(self, user_id) -> bool:
        return user_id in self.user_ids

    def __len__(self) -> int:
        return len(self.user_ids)

    def __iter__(self):
        return iter(sorted(self.user_ids))


class KeywordScope(str, enum.Enum):
    ROOTS_ONLY = "RootsOnly"
    ALL_RECORDS = "AllRecords"


@dataclass(frozen=True)
class CorpusFilter:
    window_start: int
    window_end: int
    keywords: tuple = ()
    apply_keywords_to: KeywordScope = KeywordScope.ROOTS_ONLY

    def __post_init__(self):
        if not self.window_start < self.window_end:
            raise ValueError("window_start must precede window_end")
        for kw in self.keywords:
            if not isinstance(kw, str) or not kw or kw != kw.lower():
                raise ValueError(f"keyword {kw!r} must be a non-empty lowercase string")


@dataclass
class ParseError:
    line: int
    message: str


@dataclass
class ParsedArchive:
    records: list
    errors: list

    def __iter__(self):
        # allows ``records, errors = parse_archive(...)``
        return iter((self.records, self.errors))


def parse_timestamp(value) -> int:
    """ISO-8601 string or epoch number -> integer UTC seconds (fractions truncated)."""
    if isinstance(value, bool):
        raise ValueError("boolean is not a timestamp")
    if isinstance(value, (int, float)):
        if not math.isfinite(value):
            raise ValueError("non-finite timestamp")
        return int(value)
    if not isinstance(value, str):
        raise ValueError(f"unsupported timestamp {value!r}")
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return math.floor(dt.timestamp())


def format_timestamp(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _opt_id(obj, key):
    value = obj.get(key)
    if value is None or value == "":
        return None
    return str(value)


def record_from_json(obj: dict, quote_as: str = "retweet") -> InteractionRecord | None:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    for key in ("id", "author_id", "created_at", "kind"):
        if key not in obj or obj[key] is None:
            raise ValueError(f"missing required field {key!r}")
    kind = str(obj["kind"]).lower()
    # a quote read as an original keeps no link to the quoted post
    quoted_original = kind == "quote" and quote_as == "original"
    if kind == "quote":
        if quote_as == "drop":
            return None
        kind = quote_as
    try:
        kind = Kind(kind)
    except ValueError:
        raise ValueError(f"unknown kind {obj['kind']!r}") from None
    text = obj.get("text") or ""
    if not isinstance(text, str):
        raise ValueError("text is not a string")
    return InteractionRecord(
        tweet_id=str(obj["id"]),
        author_id=str(obj["author_id"]),
        created_at=parse_timestamp(obj["created_at"]),
        kind=kind,
        ref_tweet_id=None if quoted_original else _opt_id(obj, "ref_tweet_id"),
        ref_user_id=None if quoted_original else _opt_id(obj, "ref_user_id"),
        text=text,
    )


def _iter_lines(stream) -> Iterator[str]:
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    for raw in stream:
        if isinstance(raw, (bytes, bytearray)):
            raw = raw.decode("utf-8")
        yield raw


def parse_archive(stream: IO | Iterable, strict: bool = False, quote_as: str = "retweet") -> ParsedArchive:
    """Parse line-delimited records.

    Malformed lines (bad JSON, missing fields, broken kind/reference
    invariants, duplicate ids) raise :class:`ArchiveError` when ``strict``;
    otherwise they are collected in ``errors`` with 1-based line numbers and
    parsing continues. Blank lines are skipped silently.

    ``quote_as`` maps quote tweets to ``"retweet"`` (default), ``"original"``
    or ``"drop"``.
    """
    records: list[InteractionRecord] = []
    errors: list[ParseError] = []
    seen: set[str] = set()
    for lineno, line in enumerate(_iter_lines(stream), start=1):
        if not line.strip():
            continue
        try:
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"invalid JSON ({exc.msg})") from None
            rec = record_from_json(obj, quote_as=quote_as)
            if rec is None:
                continue
            if rec.tweet_id in seen:
                raise ValueError(f"duplicate tweet id {rec.tweet_id}")
        except ValueError as exc:
            if strict:
                raise ArchiveError(lineno, str(exc)) from None
            errors.append(ParseError(lineno, str(exc)))
            continue
        seen.add(rec.tweet_id)
        records.append(rec)
    return ParsedArchive(records, errors)


def read_archive(path, strict: bool = False, quote_as: str = "retweet") -> ParsedArchive:
    with open(path, "rb") as fh:
        return parse_archive(fh, strict=strict, quote_as=quote_as)


def serialize_records(records: Iterable[InteractionRecord]) -> bytes:
    lines = [json.dumps(r.to_json(), ensure_ascii=False, sort_keys=False) for r in records]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def filter_window(records: Iterable[InteractionRecord], window_start: int, window_end: int) -> list:
    """Records with ``window_start <= created_at < window_end``, order kept."""
    return [r for r in records if window_start <= r.created_at < window_end]


def matches_keywords(text: str, keywords: Sequence[str]) -> bool:
    folded = text.casefold()
    return any(kw in folded for kw in keywords)


def filter_keywords(records: Iterable[InteractionRecord], keywords: Sequence[str]) -> list:
    """Keep records whose case-folded text contains any keyword as a substring."""
    keywords = [kw.casefold() for kw in keywords]
    return [r for r in records if matches_keywords(r.text, keywords)]


def apply_filter(records: Iterable[InteractionRecord], corpus_filter: CorpusFilter) -> list:
    """Time window first, then keywords.

    With ``RootsOnly`` the keyword test applies to originals and retweets (the
    posts that can start a thread and the retweet network); replies pass
    through and are later attached to whatever roots survived.
    """
    out = filter_window(records, corpus_filter.window_start, corpus_filter.window_end)
    if not corpus_filter.keywords:
        return out
    keywords = [kw.casefold() for kw in corpus_filter.keywords]
    if corpus_filter.apply_keywords_to is KeywordScope.ALL_RECORDS:
        return [r for r in out if matches_keywords(r.text, keywords)]
    return [r for r in out if r.kind is Kind.REPLY or matches_keywords(r.text, keywords)]


def load_filter_config(path) -> CorpusFilter:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    return filter_from_mapping(data)


def filter_from_mapping(data: dict) -> CorpusFilter:
    missing = [k for k in ("window_start", "window_end") if k not in data]
    if missing:
        raise ValueError(f"filter config lacks {', '.join(missing)}")
    return CorpusFilter(
        window_start=parse_timestamp(_as_iso(data["window_start"])),
        window_end=parse_timestamp(_as_iso(data["window_end"])),
        keywords=tuple(data.get("keywords") or ()),
        apply_keywords_to=KeywordScope(data.get("apply_keywords_to", KeywordScope.ROOTS_ONLY.value)),
    )


def _as_iso(value):
    # yaml turns bare ISO dates into datetime objects
    if isinstance(value, datetime):
        if value.tzinfo is None:
            value = value.replace(tzinfo=timezone.utc)
        return value.isoformat()
    if hasattr(value, "isoformat") and not isinstance(value, str):
        return value.isoformat() + "T00:00:00+00:00"
    return value


def read_seeds(path) -> SeedSet:
    ids: list[str] = []
    labels: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            user, _, handle = line.partition("\t")
            user = user.strip()
            if user in labels or user in ids:
                raise ValueError(f"{path}:{lineno}: duplicate seed {user}")
            ids.append(user)
            if handle.strip():
                labels[user] = handle.strip()
    return SeedSet(frozenset(ids), labels)


def seeds_bytes(seeds: SeedSet) -> bytes:
    lines = []
    for uid in sorted(seeds.user_ids):
        handle = seeds.labels.get(uid)
        lines.append(f"{uid}\t{handle}" if handle else uid)
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_seeds(seeds: SeedSet, path) -> None:
    Path(path).write_bytes(seeds_bytes(seeds))


def snowball_expand(
    records: Sequence[InteractionRecord],
    seeds: SeedSet,
    min_weekly_rate: float,
    weeks: float | None = None,
    allow: Iterable[str] | None = None,
    deny: Iterable[str] | None = None,
) -> SeedSet:
    """One snowball round.

    A non-seed user joins when seed users retweeted or replied to them at an
    average of at least ``min_weekly_rate`` times per week. ``weeks`` defaults
    to the number of whole weeks spanned by ``records``. ``allow`` restricts
    candidates, ``deny`` excludes them (the manual relevance check).
    """
    if min_weekly_rate <= 0:
        raise ValueError("min_weekly_rate must be positive")
    if not records:
        raise ValueError("no records to expand from")
    times = [r.created_at for r in records]
    span_weeks = (max(times) - min(times)) / WEEK
    if span_weeks < 1:
        raise ValueError(f"records span {span_weeks * 7:.1f} days, shorter than one week")
    if weeks is None:
        weeks = math.floor(span_weeks)
    if weeks < 1:
        raise ValueError("weeks must be at least 1")
    if weeks > span_weeks:
        raise ValueError(f"records span {span_weeks:.2f} weeks, fewer than the {weeks} requested")

    counts = Counter(
        r.ref_user_id
        for r in records
        if r.kind is not Kind.ORIGINAL and r.author_id in seeds.user_ids and r.ref_user_id not in seeds.user_ids
    )
    allow = set(allow) if allow is not None else None
    deny = set(deny or ())
    added = {
        uid
        for uid, n in counts.items()
        if n / weeks >= min_weekly_rate and uid not in deny and (allow is None or uid in allow)
    }
    return SeedSet(frozenset(seeds.user_ids | added), dict(seeds.labels))

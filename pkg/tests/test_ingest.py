import io
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from debatenet.ingest import (
    ArchiveError, CorpusFilter, InteractionRecord, Kind, KeywordScope, SeedSet, WEEK, apply_filter,
    filter_from_mapping, filter_keywords, filter_window, parse_archive, parse_timestamp, read_seeds,
    serialize_records, snowball_expand, write_seeds,
)


def rec(tid, author, t, kind=Kind.ORIGINAL, ref=None, ref_user=None, text=""):
    return InteractionRecord(str(tid), author, t, kind, ref, ref_user, text)


def line(**kw):
    return json.dumps(kw) + "\n"


class TestParse:
    def test_empty_stream(self):
        records, errors = parse_archive(io.BytesIO(b""))
        assert records == [] and errors == []

    def test_three_lines_in_order(self):
        data = (
            line(id="1", author_id="a", created_at="2019-08-01T10:00:00Z", kind="original", text="x")
            + line(id="2", author_id="b", created_at="2019-08-01T11:00:00Z", kind="retweet", ref_tweet_id="1", ref_user_id="a")
            + line(id="3", author_id="c", created_at="2019-08-01T12:00:00Z", kind="reply", ref_tweet_id="1", ref_user_id="a")
        )
        records, errors = parse_archive(io.StringIO(data))
        assert [r.tweet_id for r in records] == ["1", "2", "3"]
        assert [r.kind for r in records] == [Kind.ORIGINAL, Kind.RETWEET, Kind.REPLY]
        assert errors == []

    def test_truncated_middle_line_lenient(self):
        good = line(id="1", author_id="a", created_at="2019-08-01T10:00:00Z", kind="original")
        bad = '{"id": "2", "author_id": "b", "crea\n'
        good2 = line(id="3", author_id="c", created_at="2019-08-01T12:00:00Z", kind="original")
        records, errors = parse_archive(io.StringIO(good + bad + good2))
        assert len(records) == 2
        assert len(errors) == 1 and errors[0].line == 2

    def test_strict_raises_with_line(self):
        data = line(id="1", author_id="a", created_at=0, kind="original") + "not json\n"
        with pytest.raises(ArchiveError) as exc:
            parse_archive(io.StringIO(data), strict=True)
        assert exc.value.line == 2

    @pytest.mark.parametrize("obj, fragment", [
        (dict(id="1", author_id="a", created_at=0, kind="reply"), "lacks"),
        (dict(id="1", author_id="a", created_at=0, kind="original", ref_tweet_id="9", ref_user_id="z"), "reference"),
        (dict(id="1", author_id="a", created_at=0, kind="like"), "unknown kind"),
        (dict(author_id="a", created_at=0, kind="original"), "'id'"),
    ])
    def test_invariant_violations(self, obj, fragment):
        records, errors = parse_archive(io.StringIO(json.dumps(obj) + "\n"))
        assert records == [] and fragment in errors[0].message

    def test_duplicate_id_is_an_error(self):
        data = line(id="1", author_id="a", created_at=0, kind="original") * 2
        records, errors = parse_archive(io.StringIO(data))
        assert len(records) == 1 and "duplicate" in errors[0].message

    @pytest.mark.parametrize("mode, expected", [("retweet", Kind.RETWEET), ("original", Kind.ORIGINAL), ("drop", None)])
    def test_quote_mapping(self, mode, expected):
        data = line(id="1", author_id="a", created_at=0, kind="quote", ref_tweet_id="0", ref_user_id="b")
        records, errors = parse_archive(io.StringIO(data), quote_as=mode)
        assert errors == []
        assert [r.kind for r in records] == ([] if expected is None else [expected])

    def test_timestamps(self):
        assert parse_timestamp("1970-01-01T00:00:10Z") == 10
        assert parse_timestamp("1970-01-01T01:00:10+01:00") == 10
        assert parse_timestamp(12.9) == 12
        with pytest.raises(ValueError):
            parse_timestamp(True)


ids = st.text(alphabet="abcdefghij0123456789", min_size=1, max_size=6)


@st.composite
def record_lists(draw):
    n = draw(st.integers(0, 12))
    out = []
    for i in range(n):
        kind = draw(st.sampled_from(list(Kind)))
        t = draw(st.integers(0, 2_000_000_000))
        text = draw(st.text(max_size=20))
        if kind is Kind.ORIGINAL:
            out.append(rec(f"t{i}", draw(ids), t, kind, text=text))
        else:
            out.append(rec(f"t{i}", draw(ids), t, kind, draw(ids), draw(ids), text))
    return out


@given(record_lists())
def test_serialize_round_trip(records):
    parsed, errors = parse_archive(io.BytesIO(serialize_records(records)), strict=True)
    assert errors == [] and parsed == records


class TestFilters:
    records = [rec(i, "a", i) for i in range(10)]

    def test_window_all_and_none(self):
        assert filter_window(self.records, 0, 10) == self.records
        assert filter_window(self.records, 20, 30) == []

    def test_window_half_open(self):
        assert [r.created_at for r in filter_window(self.records, 3, 7)] == [3, 4, 5, 6]

    @given(st.integers(0, 10), st.integers(0, 10), st.integers(0, 10), st.integers(0, 10))
    def test_nested_windows_intersect(self, a, b, c, d):
        once = filter_window(filter_window(self.records, a, b), c, d)
        assert once == filter_window(self.records, max(a, c), min(b, d))

    @pytest.mark.parametrize("kw, text, kept", [
        ("leipzig", "Riots in LEIPZIG tonight", True),
        ("randal", "die Randale eskalierte", True),
        ("polizei", "the police arrived", False),
    ])
    def test_keywords(self, kw, text, kept):
        out = filter_keywords([rec(1, "a", 0, text=text)], [kw])
        assert bool(out) is kept

    @given(st.lists(st.text(max_size=15), max_size=8), st.lists(st.text(min_size=1, max_size=3), max_size=3))
    def test_keywords_idempotent(self, texts, kws):
        rs = [rec(i, "a", 0, text=t) for i, t in enumerate(texts)]
        once = filter_keywords(rs, kws)
        assert filter_keywords(once, kws) == once

    def test_roots_only_lets_replies_through(self):
        rs = [
            rec(1, "s", 5, text="leipzig"),
            rec(2, "x", 6, Kind.REPLY, "1", "s", text="unrelated"),
            rec(3, "y", 7, Kind.RETWEET, "1", "s", text="unrelated"),
        ]
        f = CorpusFilter(0, 10, ("leipzig",))
        assert [r.tweet_id for r in apply_filter(rs, f)] == ["1", "2"]
        f_all = CorpusFilter(0, 10, ("leipzig",), KeywordScope.ALL_RECORDS)
        assert [r.tweet_id for r in apply_filter(rs, f_all)] == ["1"]

    def test_filter_mapping_validates(self):
        f = filter_from_mapping({"window_start": "2019-08-01T00:00:00Z", "window_end": "2019-08-02T00:00:00Z",
                                 "keywords": ["leipzig"]})
        assert f.window_end - f.window_start == 86400
        with pytest.raises(ValueError):
            filter_from_mapping({"window_start": "2019-08-01T00:00:00Z"})
        with pytest.raises(ValueError):
            CorpusFilter(5, 5)


class TestSnowball:
    seeds = SeedSet(frozenset({"s1", "s2"}))

    def corpus(self, mentions):
        rs = [rec("o", "s1", 0), rec("end", "s1", 4 * WEEK)]
        for k, (user, n) in enumerate(mentions.items()):
            for i in range(n):
                rs.append(rec(f"{k}-{i}", "s2", 1000 + i, Kind.RETWEET, "p", user))
        return rs

    def test_fixed_point_without_mentions(self):
        assert snowball_expand(self.corpus({}), self.seeds, 1.0) == self.seeds

    def test_rate_threshold(self):
        out = snowball_expand(self.corpus({"X": 8, "Y": 2}), self.seeds, 1.0)
        assert "X" in out and "Y" not in out

    def test_deny_and_allow(self):
        rs = self.corpus({"X": 8, "Z": 8})
        assert "X" not in snowball_expand(rs, self.seeds, 1.0, deny={"X"})
        assert snowball_expand(rs, self.seeds, 1.0, allow={"Z"}).user_ids == self.seeds.user_ids | {"Z"}

    def test_monotone(self):
        rs = self.corpus({"X": 8, "Y": 2})
        once = snowball_expand(rs, self.seeds, 1.0)
        twice = snowball_expand(rs, once, 1.0)
        assert self.seeds.user_ids <= once.user_ids <= twice.user_ids

    def test_short_span_rejected(self):
        with pytest.raises(ValueError):
            snowball_expand([rec(1, "s1", 0), rec(2, "s1", 3600)], self.seeds, 1.0)


def test_seed_file_round_trip(tmp_path):
    seeds = SeedSet(frozenset({"u2", "u1"}), {"u1": "alice"})
    write_seeds(seeds, tmp_path / "s.tsv")
    assert read_seeds(tmp_path / "s.tsv") == seeds
    with pytest.raises(ValueError):
        SeedSet(frozenset())

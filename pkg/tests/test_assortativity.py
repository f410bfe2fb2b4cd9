import math
import random
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from debatenet.assortativity import (
    GROUPS, AssortativityError, AssortativityProfile, ConvergenceError, assort_histogram, assortativity_profile,
    global_assortativity, local_assortativity, local_mixing, mixing_matrix, personalized_pagerank, weighted_mean,
)
from debatenet.classify import Label

from conftest import LABELS, assignment_from, graph_from, random_digraph
from oracles import brute_global_r, brute_local_r, brute_mixing, dense_ppr

G_IDX = {lab.value: k for k, lab in enumerate(GROUPS)}


def bipartite(n=3):
    a = [f"a{i}" for i in range(n)]
    b = [f"b{i}" for i in range(n)]
    edges = [(x, y) for x in a for y in b] + [(y, x) for x in a for y in b]
    labels = {u: "Majority" for u in a} | {u: "Minority" for u in b}
    return graph_from(edges), assignment_from(labels)


def intra_only():
    edges = [("a", "b"), ("b", "c"), ("c", "a"), ("x", "y"), ("y", "x"), ("p", "q")]
    labels = {"a": "Majority", "b": "Majority", "c": "Majority", "x": "Minority", "y": "Minority",
              "p": "Intermediate", "q": "Intermediate"}
    return graph_from(edges), assignment_from(labels)


class TestGlobal:
    def test_intra_only_is_one(self):
        assert abs(global_assortativity(*intra_only()) - 1.0) < 1e-12

    def test_bipartite_is_minus_one(self):
        assert abs(global_assortativity(*bipartite()) + 1.0) < 1e-12

    def test_matches_oracle(self):
        rng = random.Random(0)
        for _ in range(50):
            nodes, edges, labels = random_digraph(rng)
            try:
                ref, ab = brute_global_r(edges, labels)
            except ZeroDivisionError:
                continue
            if ab >= 1 - 1e-12:
                continue
            assert global_assortativity(graph_from(edges, nodes), assignment_from(labels)) == pytest.approx(ref, abs=1e-12)

    def test_mixing_invariants(self):
        rng = random.Random(1)
        nodes, edges, labels = random_digraph(rng, unlabeled_frac=0.3)
        m = mixing_matrix(graph_from(edges, nodes), assignment_from(labels))
        assert np.all(m.e >= 0) and m.e.sum() == pytest.approx(1.0)
        assert np.allclose(m.a, m.e.sum(axis=1)) and np.allclose(m.b, m.e.sum(axis=0))

    def test_weights_ignored_by_default(self):
        g, lab = graph_from([("a", "b"), ("a", "b"), ("a", "b"), ("b", "c")]), assignment_from(
            {"a": "Majority", "b": "Majority", "c": "Minority"})
        assert mixing_matrix(g, lab).e[0, 0] == pytest.approx(0.5)
        assert mixing_matrix(g, lab, weighted=True).e[0, 0] == pytest.approx(0.75)

    def test_no_labeled_edges(self):
        with pytest.raises(AssortativityError):
            global_assortativity(graph_from([("a", "b")]), assignment_from({"a": "Majority"}))

    def test_single_group_warns(self):
        g = graph_from([("a", "b")])
        with pytest.warns(RuntimeWarning):
            assert global_assortativity(g, assignment_from({"a": "Minority", "b": "Minority"})) == 1.0

    def test_permutation_null(self):
        rng = random.Random(2)
        nodes, edges, labels = random_digraph(rng, max_nodes=200, p=0.03)
        while len(nodes) < 150:
            nodes, edges, labels = random_digraph(rng, max_nodes=200, p=0.03)
        g = graph_from(edges, nodes)
        values = list(labels.values())
        rs = []
        for _ in range(100):
            rng.shuffle(values)
            rs.append(global_assortativity(g, assignment_from(dict(zip(nodes, values)))))
        assert abs(np.mean(rs)) < 0.05


class TestPageRank:
    @pytest.mark.parametrize("alpha", [0.5, 0.85, 0.99])
    def test_dense_oracle(self, alpha):
        rng = random.Random(int(alpha * 100))
        for _ in range(30):
            nodes, edges, _ = random_digraph(rng, max_nodes=10)
            g = graph_from(edges, nodes)
            focal = rng.choice(nodes)
            w = personalized_pagerank(g, focal, alpha, tol=1e-13)
            ref = dense_ppr(nodes, edges, focal, alpha)
            assert max(abs(w[u] - ref[u]) for u in nodes) < 1e-8
            assert sum(w.values()) == pytest.approx(1.0, abs=1e-12)

    def test_directed_option_matches_oracle(self):
        rng = random.Random(9)
        for _ in range(20):
            nodes, edges, _ = random_digraph(rng, max_nodes=10)
            focal = rng.choice(nodes)
            w = personalized_pagerank(graph_from(edges, nodes), focal, 0.85, tol=1e-13, directed=True)
            ref = dense_ppr(nodes, edges, focal, 0.85, directed=True)
            assert max(abs(w[u] - ref[u]) for u in nodes) < 1e-8

    def test_isolated_focal(self):
        g = graph_from([("a", "b")], nodes=["z"])
        w = personalized_pagerank(g, "z")
        assert w["z"] == 1.0 and w["a"] == w["b"] == 0.0

    @pytest.mark.parametrize("alpha", [0.3, 0.85])
    def test_two_node_closed_form(self, alpha):
        w = personalized_pagerank(graph_from([("a", "b")]), "a", alpha)
        assert w["a"] == pytest.approx(1 / (1 + alpha), abs=1e-12)
        assert w["b"] == pytest.approx(alpha / (1 + alpha), abs=1e-12)

    def test_small_alpha_concentrates(self):
        path = [(f"p{i}", f"p{i + 1}") for i in range(9)]
        assert personalized_pagerank(graph_from(path), "p4", alpha=0.01)["p4"] > 0.98

    def test_argument_checks(self):
        g = graph_from([("a", "b")])
        for bad in (0.0, 1.0):
            with pytest.raises(AssortativityError):
                personalized_pagerank(g, "a", alpha=bad)
        with pytest.raises(KeyError):
            personalized_pagerank(g, "nope")

    def test_convergence_error_reports_residual(self):
        g = graph_from([(f"p{i}", f"p{i + 1}") for i in range(9)])
        with pytest.raises(ConvergenceError) as exc:
            personalized_pagerank(g, "p0", alpha=0.99, tol=1e-300, max_iter=5)
        assert exc.value.iterations == 5 and exc.value.residual > 0


class TestLocal:
    def test_star_examples(self):
        g = graph_from([("c", f"l{i}") for i in range(4)])
        same = assignment_from({"c": "Majority"} | {f"l{i}": "Majority" for i in range(4)})
        m, z = local_mixing(g, same, {"c": 1.0})
        assert m.e[0, 0] == 1.0 and z == 1.0
        other = assignment_from({"c": "Majority"} | {f"l{i}": "Minority" for i in range(4)})
        m, z = local_mixing(g, other, {"c": 1.0})
        assert m.e[0, 1] == 1.0 and m.e[0, 0] == 0.0

    def test_unlabeled_targets_dilute_z(self):
        g = graph_from([("c", "a"), ("c", "b"), ("c", "u")])
        lab = assignment_from({"c": "Majority", "a": "Majority", "b": "Minority"})
        m, z = local_mixing(g, lab, {"c": 1.0})
        assert z == pytest.approx(2 / 3) and m.e.sum() == pytest.approx(1.0)

    def test_zero_mass_gives_none(self):
        g = graph_from([("a", "b")])
        assert local_mixing(g, assignment_from({"a": "Majority", "b": "Minority"}), {"b": 1.0}) == (None, 0.0)

    def test_two_triangle_bridge(self):
        edges = [("a", "b"), ("b", "c"), ("c", "a"), ("d", "e"), ("e", "f"), ("f", "d"), ("c", "d")]
        nodes = list("abcdef")
        labels = {"a": "Majority", "b": "Majority", "c": "Minority", "d": "Minority", "e": "Intermediate",
                  "f": "Majority"}
        g, lab = graph_from(edges), assignment_from(labels)
        w = personalized_pagerank(g, "c", 0.85, tol=1e-14)
        m, z = local_mixing(g, lab, w)
        outdeg = {u: sum(1 for s, _ in edges if s == u) for u in nodes}
        ref = brute_mixing(edges, labels, dense_ppr(nodes, edges, "c", 0.85), outdeg)
        assert z == pytest.approx(sum(ref.values()), abs=1e-9)
        for (gg, hh), v in ref.items():
            assert m.e[G_IDX[gg], G_IDX[hh]] * z == pytest.approx(v, abs=1e-9)

    def test_intra_only_every_node_one(self):
        prof = assortativity_profile(*intra_only())
        assert all(prof.r[u] == pytest.approx(1.0, abs=1e-12) for u in prof.r if u not in prof.flagged)

    def test_bipartite_every_node_minus_one(self):
        prof = assortativity_profile(*bipartite())
        assert all(abs(r + 1.0) < 1e-12 for r in prof.r.values())

    def test_oracle_on_random_graphs(self):
        rng = random.Random(3)
        checked = 0
        for _ in range(60):
            nodes, edges, labels = random_digraph(rng, unlabeled_frac=0.2)
            g, lab = graph_from(edges, nodes), assignment_from(labels)
            try:
                _, ab = brute_global_r(edges, labels)
            except ZeroDivisionError:
                continue
            if ab >= 1 - 1e-12:
                continue
            prof = assortativity_profile(g, lab)
            for focal in nodes:
                r_ref, z_ref = brute_local_r(nodes, edges, labels, focal, 0.85)
                assert prof.z[focal] == pytest.approx(z_ref, abs=1e-9)
                if z_ref == 0:
                    assert math.isnan(prof.r[focal]) and focal in prof.flagged
                else:
                    assert prof.r[focal] == pytest.approx(r_ref, abs=1e-9)
                    assert prof.r[focal] <= 1 + 1e-12 and 0 <= prof.z[focal] <= 1 + 1e-12
                checked += 1
        assert checked > 100

    def test_local_assortativity_single_node(self):
        g, lab = bipartite(2)
        r, z = local_assortativity(g, lab, "a0")
        assert r == pytest.approx(-1.0, abs=1e-12) and 0 < z <= 1

    @given(st.permutations(range(3)), st.integers(0, 10_000))
    def test_label_permutation_equivariance(self, perm, seed):
        rng = random.Random(seed)
        nodes, edges, labels = random_digraph(rng, max_nodes=12)
        g = graph_from(edges, nodes)
        try:
            if brute_global_r(edges, labels)[1] >= 1 - 1e-12:
                return
        except ZeroDivisionError:
            return
        mapping = {LABELS[i].value: LABELS[p].value for i, p in enumerate(perm)}
        a = assortativity_profile(g, assignment_from(labels))
        b = assortativity_profile(g, assignment_from({u: mapping[v] for u, v in labels.items()}))
        for u in nodes:
            assert (math.isnan(a.r[u]) and math.isnan(b.r[u])) or a.r[u] == pytest.approx(b.r[u], abs=1e-12)

    def test_disconnected_unlabeled_part_changes_nothing(self):
        rng = random.Random(4)
        nodes, edges, labels = random_digraph(rng, max_nodes=15, p=0.3)
        base = assortativity_profile(graph_from(edges, nodes), assignment_from(labels))
        extra = [("u1", "u2"), ("u2", "u3"), ("u3", "u1")]
        more = assortativity_profile(graph_from(edges + extra, nodes), assignment_from(labels))
        for u in nodes:
            assert (math.isnan(base.r[u]) and math.isnan(more.r[u])) or base.r[u] == pytest.approx(more.r[u], abs=1e-12)

    def test_threads_and_batches_identical(self):
        rng = random.Random(5)
        nodes, edges, labels = random_digraph(rng, max_nodes=60, p=0.08)
        g, lab = graph_from(edges, nodes), assignment_from(labels)
        ref = assortativity_profile(g, lab, threads=1, batch=7)
        for threads in (2, 8):
            other = assortativity_profile(g, lab, threads=threads, batch=7)
            assert other.to_csv(lab) == ref.to_csv(lab)

    def test_profile_csv(self):
        g, lab = bipartite(1)
        rows = assortativity_profile(g, lab).to_csv(lab).decode().splitlines()
        assert rows[0] == "user_id,label,r_local,z_weight" and len(rows) == 3


class TestHistogram:
    def profile(self, r, z):
        return AssortativityProfile(r, z, 0.85, 1e-12, 0.0)

    def test_all_ones(self):
        users = {f"u{i}": "Majority" for i in range(5)}
        h = assort_histogram(self.profile({u: 1.0 for u in users}, {u: 0.5 for u in users}), assignment_from(users))
        assert h.mass_all[-1] == pytest.approx(2.5) and h.mass_all[:-1].sum() == 0

    def test_mass_ratio(self):
        lab = assignment_from({"a": "Minority", "b": "Majority"})
        h = assort_histogram(self.profile({"a": -1.0, "b": 1.0}, {"a": 0.2, "b": 0.8}), lab)
        assert h.mass_all[0] * 4 == pytest.approx(h.mass_all[-1])
        assert h.mass[Label.MINORITY][0] == pytest.approx(0.2) and h.mass[Label.MAJORITY][-1] == pytest.approx(0.8)

    def test_flagged_excluded_and_unclassified_in_all(self):
        p = AssortativityProfile({"a": 0.0, "b": float("nan"), "c": 0.5}, {"a": 1.0, "b": 0.0, "c": 1.0},
                                 0.85, 1e-12, 0.0, {"b"})
        h = assort_histogram(p, assignment_from({"a": "Majority", "c": "Unclassified"}))
        assert h.mass_all.sum() == 2.0 and sum(v.sum() for v in h.mass.values()) == 1.0

    def test_bimodal_modes(self):
        rng = np.random.default_rng(0)
        r = np.concatenate([rng.normal(-0.4, 0.1, 2000), rng.normal(0.5, 0.1, 2000)])
        users = [f"u{i}" for i in range(len(r))]
        h = assort_histogram(self.profile(dict(zip(users, r)), {u: 1.0 for u in users}),
                             assignment_from({u: "Majority" for u in users}))
        centers = (h.edges[:-1] + h.edges[1:]) / 2
        left = centers[np.argmax(np.where(centers < 0, h.mass_all, -1))]
        right = centers[np.argmax(np.where(centers > 0, h.mass_all, -1))]
        assert abs(left + 0.4) <= 0.1 and abs(right - 0.5) <= 0.1

    def test_csv_header_and_rows(self):
        lab = assignment_from({"a": "Minority"})
        h = assort_histogram(self.profile({"a": 0.3}, {"a": 1.0}), lab, bins=4)
        rows = h.to_csv().decode().splitlines()
        assert rows[0] == "bin_lo,bin_hi,mass_majority,mass_minority,mass_intermediate,mass_all" and len(rows) == 5

    def test_weighted_mean(self):
        p = self.profile({"a": -1.0, "b": 1.0}, {"a": 0.2, "b": 0.8})
        assert weighted_mean(p, ["a", "b"]) == pytest.approx(0.6)
        assert math.isnan(weighted_mean(p, []))


def test_no_warning_on_regular_profile():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assortativity_profile(*bipartite())

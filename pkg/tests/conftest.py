from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from debatenet.classify import ClusterAssignment, Label  # noqa: E402
from debatenet.graph import InteractionGraph  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

LABELS = (Label.MAJORITY, Label.MINORITY, Label.INTERMEDIATE)


def graph_from(edges, nodes=()):
    g = InteractionGraph()
    for n in nodes:
        g.add_node(n)
    for s, d in edges:
        g.add_interaction(s, d)
    return g


def assignment_from(labels: dict) -> ClusterAssignment:
    return ClusterAssignment({u: Label(v) for u, v in labels.items()})


def random_digraph(rng: random.Random, max_nodes=20, p=None, labeled=True, unlabeled_frac=0.0):
    """Random simple digraph with at least one edge; returns nodes, edges, labels."""
    while True:
        n = rng.randint(2, max_nodes)
        nodes = [f"v{i:02d}" for i in range(n)]
        q = p if p is not None else rng.uniform(0.1, 0.6)
        edges = [(a, b) for a in nodes for b in nodes if a != b and rng.random() < q]
        if edges:
            break
    labels = {}
    for u in nodes:
        if labeled and rng.random() >= unlabeled_frac:
            labels[u] = rng.choice(LABELS).value
        else:
            labels[u] = Label.UNCLASSIFIED.value
    return nodes, edges, labels


@pytest.fixture(scope="session")
def paper_run():
    """Full pipeline on the 10k-user paper-pattern corpus (computed once)."""
    from pipeline_run import run_paper_pattern

    return run_paper_pattern()

"""Shared fixtures: the worked 3-vertex example and random-instance helpers."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tgkernels.temporal import LabelTimeline, TemporalEdge, TemporalGraph

# Vertex ids of the worked example: a=0, b=1, c=2.
A, B, C = 0, 1, 2

TRIANGLE_FILE = """\
# three vertices, vertex b carries the marked label
t 3
v 1 1:1
e 0 2 2
e 0 1 3
e 1 2 7
"""


@pytest.fixture
def triangle_graph() -> TemporalGraph:
    """Triangle with edge times 2, 3, 7; vertex b carries the marked label."""
    return TemporalGraph(
        vertex_count=3,
        edges=(TemporalEdge(A, B, 3), TemporalEdge(A, C, 2), TemporalEdge(B, C, 7)),
        labels=(
            LabelTimeline.constant("0"),
            LabelTimeline.constant("1"),
            LabelTimeline.constant("0"),
        ),
    )


def random_small_graph(
    rng: np.random.Generator,
    max_vertices: int = 8,
    max_edges: int = 15,
    max_time: int = 10,
    labeled: bool = True,
    alphabet: tuple[str, ...] = ("0", "1", "2"),
) -> TemporalGraph:
    """Random labeled temporal graph within the given size budget."""
    n = int(rng.integers(2, max_vertices + 1))
    target = int(rng.integers(0, max_edges + 1))
    triples = set()
    for _ in range(4 * target + 8):
        if len(triples) >= target:
            break
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u == v:
            continue
        t = int(rng.integers(1, max_time + 1))
        triples.add((min(u, v), max(u, v), t))
    edges = tuple(TemporalEdge(u, v, t) for u, v, t in triples)
    labels = None
    if labeled:
        tls = []
        for _ in range(n):
            n_changes = int(rng.integers(0, 3))
            times = sorted(rng.choice(np.arange(2, max_time + 2), size=n_changes, replace=False))
            cps = [(1, str(alphabet[int(rng.integers(0, len(alphabet)))]))]
            for t in times:
                cps.append((int(t), str(alphabet[int(rng.integers(0, len(alphabet)))])))
            tls.append(LabelTimeline(tuple(cps)))
        labels = tuple(tls)
    return TemporalGraph(n, edges, labels or ())

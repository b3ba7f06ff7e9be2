"""Temporal graph core: parsing, degrees, walk enumeration, label sequences."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tgkernels.errors import CapacityError, GraphValidationError, ParseError
from tgkernels.temporal import (
    LabelTimeline,
    TemporalEdge,
    TemporalGraph,
    availability_positions,
    enumerate_temporal_walks,
    label_sequence,
    parse,
    serialize,
    temporal_degree,
)

from conftest import A, B, C, TRIANGLE_FILE, random_small_graph


class TestParse:
    def test_triangle_file(self, triangle_graph):
        g = parse(TRIANGLE_FILE)
        assert g == triangle_graph
        assert len(g.edges) == 3
        assert g.t_max == 7

    def test_empty_edge_section(self):
        g = parse("t 1\n")
        assert g.t_max == 0
        assert g.label(0, 1) == "0"

    def test_self_loop_rejected(self):
        with pytest.raises((ParseError, GraphValidationError)):
            parse("t 1\ne 0 0 1\n")

    def test_duplicate_edge_rejected(self):
        with pytest.raises(GraphValidationError):
            parse("t 2\ne 0 1 4\ne 1 0 4\n")

    def test_malformed_line_reports_number(self):
        with pytest.raises(ParseError, match="line 3"):
            parse("t 2\ne 0 1 4\ne 0 one 5\n")

    def test_missing_header(self):
        with pytest.raises(ParseError):
            parse("e 0 1 1\n")

    def test_timeline_parsing(self):
        g = parse("t 2\nv 0 1:0,4:x\ne 0 1 5\n")
        assert g.label(0, 3) == "0"
        assert g.label(0, 4) == "x"
        assert g.label(0, 6) == "x"
        assert g.label(1, 1) == "0"

    def test_roundtrip_triangle(self, triangle_graph):
        assert parse(serialize(triangle_graph)) == triangle_graph


class TestTimeline:
    def test_must_start_at_one(self):
        with pytest.raises(GraphValidationError):
            LabelTimeline(((2, "a"),))

    def test_strictly_increasing(self):
        with pytest.raises(GraphValidationError):
            LabelTimeline(((1, "a"), (1, "b")))

    def test_redundant_points_normalized(self):
        tl = LabelTimeline(((1, "a"), (3, "a"), (5, "b")))
        assert tl.change_points == ((1, "a"), (5, "b"))

    def test_query_before_time_one(self):
        with pytest.raises(GraphValidationError):
            LabelTimeline.constant().at(0)

    def test_total_over_horizon(self, triangle_graph):
        for v in range(3):
            for t in range(1, triangle_graph.t_max + 2):
                assert triangle_graph.label(v, t) in ("0", "1")


class TestDegreesAndPositions:
    def test_triangle_degree(self, triangle_graph):
        assert temporal_degree(triangle_graph, A) == 2

    def test_isolated_vertex(self):
        g = TemporalGraph(3, (TemporalEdge(0, 1, 1),))
        assert temporal_degree(g, 2) == 0
        assert availability_positions(g, 2) == {}

    def test_parallel_edges_count_separately(self):
        g = TemporalGraph(2, (TemporalEdge(0, 1, 1), TemporalEdge(0, 1, 2)))
        assert temporal_degree(g, 0) == 2

    def test_triangle_positions(self, triangle_graph):
        assert availability_positions(triangle_graph, B) == {3: 1, 7: 2}

    def test_positions_sorted_ranks(self):
        g = TemporalGraph(
            4, (TemporalEdge(0, 1, 5), TemporalEdge(0, 2, 2), TemporalEdge(0, 3, 9))
        )
        assert availability_positions(g, 0) == {2: 1, 5: 2, 9: 3}

    def test_out_of_range_vertex(self, triangle_graph):
        with pytest.raises(GraphValidationError):
            temporal_degree(triangle_graph, 3)


class TestEnumeration:
    def test_triangle_length3_unique_walk(self, triangle_graph):
        walks = enumerate_temporal_walks(triangle_graph, 3)
        assert len(walks) == 1
        (w,) = walks
        assert w.vertices == (C, A, B, C)
        assert tuple(e.t for e in w.edges) == (2, 3, 7)

    def test_length0_one_per_vertex(self, triangle_graph):
        assert len(enumerate_temporal_walks(triangle_graph, 0)) == triangle_graph.vertex_count

    def test_equal_timestamps_no_length2(self):
        g = TemporalGraph(
            4, (TemporalEdge(0, 1, 3), TemporalEdge(0, 2, 3), TemporalEdge(0, 3, 3))
        )
        assert enumerate_temporal_walks(g, 2) == []

    def test_length1_is_twice_edge_count(self, triangle_graph):
        assert len(enumerate_temporal_walks(triangle_graph, 1)) == 2 * len(triangle_graph.edges)

    def test_capacity_cap(self):
        g = TemporalGraph(
            4,
            tuple(
                TemporalEdge(u, v, t)
                for t in range(1, 9)
                for u in range(4)
                for v in range(u + 1, 4)
            ),
        )
        with pytest.raises(CapacityError):
            enumerate_temporal_walks(g, 5, cap=100)

    @pytest.mark.parametrize("seed", range(8))
    def test_walk_invariants_random(self, seed):
        g = random_small_graph(np.random.default_rng(seed))
        for length in range(4):
            for w in enumerate_temporal_walks(g, length):
                times = [e.t for e in w.edges]
                assert all(a < b for a, b in zip(times, times[1:]))
                assert all(wt >= 0 for wt in w.waiting_times())
        assert len(enumerate_temporal_walks(g, 1)) == 2 * len(g.edges)


class TestLabelSequence:
    def test_triangle_sequence(self, triangle_graph):
        w = enumerate_temporal_walks(triangle_graph, 2)
        target = next(
            x for x in w if x.vertices == (C, A, B) and tuple(e.t for e in x.edges) == (2, 3)
        )
        seq = label_sequence(triangle_graph, target)
        assert seq == (
            triangle_graph.label(C, 2),
            triangle_graph.label(A, 3),
            triangle_graph.label(A, 3),
            triangle_graph.label(B, 4),
        )
        assert seq == ("0", "0", "0", "1")

    def test_length0_convention(self, triangle_graph):
        from tgkernels.temporal import TemporalWalk

        assert label_sequence(triangle_graph, TemporalWalk((B,))) == ("1",)

    def test_constant_labels_length2(self):
        g = TemporalGraph(3, (TemporalEdge(0, 1, 1), TemporalEdge(1, 2, 2)))
        (w,) = [x for x in enumerate_temporal_walks(g, 2) if x.vertices == (0, 1, 2)]
        assert label_sequence(g, w) == ("0", "0", "0", "0")

    def test_foreign_walk_rejected(self, triangle_graph):
        from tgkernels.temporal import TemporalWalk

        alien = TemporalWalk((0, 1), (TemporalEdge(0, 1, 99),))
        with pytest.raises(GraphValidationError):
            label_sequence(triangle_graph, alien)

    def test_sequence_length_is_2l(self, triangle_graph):
        for length in range(4):
            for w in enumerate_temporal_walks(triangle_graph, length):
                expected = 1 if length == 0 else 2 * length
                assert len(label_sequence(triangle_graph, w)) == expected


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_serialize_roundtrip_random(seed):
    g = random_small_graph(np.random.default_rng(seed))
    text = serialize(g)
    assert parse(text) == g
    assert serialize(parse(text)) == text


def test_graph_validation():
    with pytest.raises(GraphValidationError):
        TemporalGraph(0, ())
    with pytest.raises(GraphValidationError):
        TemporalGraph(2, (TemporalEdge(0, 2, 1),))
    with pytest.raises(GraphValidationError):
        TemporalGraph(2, (TemporalEdge(0, 1, 0),))

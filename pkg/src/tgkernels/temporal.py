"""Temporal graph data model, file format, and brute-force walk enumeration.

A temporal graph has a fixed vertex set, undirected edges carrying discrete
availability times, and per-vertex label timelines (labels may change over
time).  The exhaustive walk enumerator in this module is deliberately simple;
it serves as the ground-truth oracle for the transformation and kernel tests
and is only meant for small instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from bisect import bisect_right
from typing import Iterable, NamedTuple

from .errors import CapacityError, GraphValidationError, ParseError

DEFAULT_LABEL = "0"

#: Safety cap for the exhaustive walk enumerator (test-only oracle).
ENUMERATION_CAP = 10_000_000


class TemporalEdge(NamedTuple):
    """Undirected edge {u, v} available at discrete time t."""

    u: int
    v: int
    t: int


@dataclass(frozen=True)
class LabelTimeline:
    """Piecewise-constant vertex labels given as (time, label) change points.

    Times are strictly increasing and the first change point is at time 1, so
    a query is defined for every t >= 1: it returns the label of the latest
    change point not after t (queries beyond the last change point return the
    last label).
    """

    change_points: tuple[tuple[int, str], ...]

    def __post_init__(self):
        cps = tuple(self.change_points)
        if not cps or cps[0][0] != 1:
            raise GraphValidationError("timeline must start with a change point at time 1")
        times = [t for t, _ in cps]
        if any(a >= b for a, b in zip(times, times[1:])):
            raise GraphValidationError("timeline change points must have strictly increasing times")
        # Canonical form: drop change points that repeat the previous label.
        dedup = [cps[0]]
        for t, lab in cps[1:]:
            if lab != dedup[-1][1]:
                dedup.append((t, lab))
        object.__setattr__(self, "change_points", tuple(dedup))
        object.__setattr__(self, "_times", tuple(t for t, _ in dedup))

    @classmethod
    def constant(cls, label: str = DEFAULT_LABEL) -> "LabelTimeline":
        return cls(((1, label),))

    def at(self, t: int) -> str:
        """Label in effect at time t (t >= 1)."""
        if t < 1:
            raise GraphValidationError(f"label queried at invalid time {t}")
        idx = bisect_right(self._times, t) - 1
        return self.change_points[idx][1]

    @property
    def is_constant(self) -> bool:
        return len(self.change_points) == 1

    def first_change_time(self) -> int | None:
        """Time of the first label change, or None for a constant timeline."""
        if self.is_constant:
            return None
        return self.change_points[1][0]


@dataclass(frozen=True)
class TemporalGraph:
    """Immutable labeled temporal graph.

    Edges are canonicalized at construction (endpoints ordered u < v, list
    sorted by (t, u, v)); duplicate (u, v, t) triples and self-loops are
    rejected.  ``labels[v]`` is the timeline of vertex v; vertices without an
    explicit timeline get the constant default label.
    """

    vertex_count: int
    edges: tuple[TemporalEdge, ...]
    labels: tuple[LabelTimeline, ...] = ()

    def __post_init__(self):
        if self.vertex_count < 1:
            raise GraphValidationError("vertex_count must be positive")
        canon = []
        for e in self.edges:
            u, v, t = e
            if u == v:
                raise GraphValidationError(f"self-loop at vertex {u} (time {t})")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise GraphValidationError(f"edge endpoint out of range: {e}")
            if t < 1:
                raise GraphValidationError(f"timestamp must be >= 1: {e}")
            if u > v:
                u, v = v, u
            canon.append(TemporalEdge(u, v, t))
        canon.sort(key=lambda e: (e.t, e.u, e.v))
        if len(set(canon)) != len(canon):
            dup = next(e for i, e in enumerate(canon) if i and e == canon[i - 1])
            raise GraphValidationError(f"duplicate temporal edge {dup}")
        object.__setattr__(self, "edges", tuple(canon))

        labels = tuple(self.labels)
        if len(labels) > self.vertex_count:
            raise GraphValidationError("more timelines than vertices")
        if len(labels) < self.vertex_count:
            labels = labels + tuple(
                LabelTimeline.constant() for _ in range(self.vertex_count - len(labels))
            )
        object.__setattr__(self, "labels", labels)

        incident: list[list[TemporalEdge]] = [[] for _ in range(self.vertex_count)]
        for e in self.edges:
            incident[e.u].append(e)
            incident[e.v].append(e)
        object.__setattr__(self, "_incident", tuple(tuple(i) for i in incident))

    @property
    def t_max(self) -> int:
        """Largest timestamp of any edge; 0 for an edgeless graph."""
        return self.edges[-1].t if self.edges else 0

    def label(self, v: int, t: int) -> str:
        self._check_vertex(v)
        return self.labels[v].at(t)

    def incident_edges(self, v: int) -> tuple[TemporalEdge, ...]:
        """Edges incident to v, sorted by (t, u, v)."""
        self._check_vertex(v)
        return self._incident[v]

    def _check_vertex(self, v: int) -> None:
        if not (0 <= v < self.vertex_count):
            raise GraphValidationError(f"vertex {v} out of range [0, {self.vertex_count})")

    def with_labels(self, labels: Iterable[LabelTimeline]) -> "TemporalGraph":
        return TemporalGraph(self.vertex_count, self.edges, tuple(labels))


@dataclass(frozen=True)
class TemporalWalk:
    """Alternating vertex/edge sequence with strictly increasing edge times."""

    vertices: tuple[int, ...]
    edges: tuple[TemporalEdge, ...] = ()

    def __post_init__(self):
        if len(self.vertices) != len(self.edges) + 1:
            raise GraphValidationError("walk needs exactly one more vertex than edges")
        for i, e in enumerate(self.edges):
            if {e.u, e.v} != {self.vertices[i], self.vertices[i + 1]}:
                raise GraphValidationError(f"edge {e} does not connect walk step {i}")
            if i > 0 and e.t <= self.edges[i - 1].t:
                raise GraphValidationError("edge times along a walk must strictly increase")

    @property
    def length(self) -> int:
        return len(self.edges)

    def waiting_times(self) -> tuple[int, ...]:
        """Idle time spent at each intermediate vertex (non-negative)."""
        return tuple(
            self.edges[i].t - (self.edges[i - 1].t + 1) for i in range(1, len(self.edges))
        )


def temporal_degree(g: TemporalGraph, v: int) -> int:
    """Number of temporal edges incident to v, counting parallels separately."""
    return len(g.incident_edges(v))


def max_temporal_degree(g: TemporalGraph) -> int:
    return max((temporal_degree(g, v) for v in range(g.vertex_count)), default=0)


def availability_times(g: TemporalGraph, v: int) -> tuple[int, ...]:
    """Distinct availability times of edges incident to v, ascending."""
    return tuple(sorted({e.t for e in g.incident_edges(v)}))


def availability_positions(g: TemporalGraph, v: int) -> dict[int, int]:
    """Map each incident availability time to its 1-based rank at v."""
    return {t: i + 1 for i, t in enumerate(availability_times(g, v))}


def enumerate_temporal_walks(
    g: TemporalGraph, length: int, cap: int = ENUMERATION_CAP
) -> list[TemporalWalk]:
    """All temporal walks of exactly the given length (brute-force oracle).

    Length 0 yields one single-vertex walk per vertex.  Raises CapacityError
    when more than ``cap`` walks would be produced.
    """
    if length < 0:
        raise GraphValidationError("walk length must be >= 0")
    walks: list[TemporalWalk] = []
    if length == 0:
        if g.vertex_count > cap:
            raise CapacityError(f"enumeration cap {cap} exceeded")
        return [TemporalWalk((v,)) for v in range(g.vertex_count)]

    def extend(vertex: int, last_t: int, vs: list[int], es: list[TemporalEdge]) -> None:
        if len(es) == length:
            if len(walks) >= cap:
                raise CapacityError(f"enumeration cap {cap} exceeded")
            walks.append(TemporalWalk(tuple(vs), tuple(es)))
            return
        for e in g.incident_edges(vertex):
            if e.t > last_t:
                nxt = e.v if e.u == vertex else e.u
                vs.append(nxt)
                es.append(e)
                extend(nxt, e.t, vs, es)
                vs.pop()
                es.pop()

    for start in range(g.vertex_count):
        extend(start, 0, [start], [])
    return walks


def label_sequence(g: TemporalGraph, w: TemporalWalk) -> tuple[str, ...]:
    """Label sequence of a temporal walk.

    For a walk with edges at times t_1 < ... < t_l the sequence reads the
    departure label l(v_i, t_i) and the arrival label l(v_{i+1}, t_i + 1) for
    every step, giving 2*l labels.  A length-0 walk at v yields (l(v, 1),).
    """
    edge_set = set(g.edges)
    for e in w.edges:
        if e not in edge_set:
            raise GraphValidationError(f"walk edge {e} not present in graph")
    for v in w.vertices:
        g._check_vertex(v)
    if w.length == 0:
        return (g.label(w.vertices[0], 1),)
    out: list[str] = []
    for i, e in enumerate(w.edges):
        out.append(g.label(w.vertices[i], e.t))
        out.append(g.label(w.vertices[i + 1], e.t + 1))
    return tuple(out)


# ---------------------------------------------------------------------------
# File format
#
#   # comment
#   t <vertex_count>
#   v <id> <t1>:<label1>[,<t2>:<label2>...]
#   e <u> <v> <t>
#
# Vertices without a `v` line carry the constant default label "0" from
# time 1.  Serialization is byte-deterministic: one header, `v` lines for
# non-default timelines in vertex order, `e` lines sorted by (t, u, v).
# ---------------------------------------------------------------------------


def _check_label_token(label: str) -> str:
    if not label or any(c in label for c in " \t\n,:"):
        raise GraphValidationError(f"label not representable in file format: {label!r}")
    return label


def parse(text: str) -> TemporalGraph:
    """Parse the line-based temporal graph format."""
    vertex_count: int | None = None
    edges: list[TemporalEdge] = []
    timelines: dict[int, LabelTimeline] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        tag = fields[0]
        try:
            if tag == "t":
                if vertex_count is not None:
                    raise ParseError("duplicate header", lineno)
                if len(fields) != 2:
                    raise ParseError("header must be `t <vertex_count>`", lineno)
                vertex_count = int(fields[1])
            elif tag == "v":
                if len(fields) != 3:
                    raise ParseError("vertex line must be `v <id> <timeline>`", lineno)
                vid = int(fields[1])
                cps = []
                for part in fields[2].split(","):
                    t_str, _, lab = part.partition(":")
                    if not lab:
                        raise ParseError(f"malformed timeline entry {part!r}", lineno)
                    cps.append((int(t_str), lab))
                if vid in timelines:
                    raise ParseError(f"duplicate timeline for vertex {vid}", lineno)
                timelines[vid] = LabelTimeline(tuple(cps))
            elif tag == "e":
                if len(fields) != 4:
                    raise ParseError("edge line must be `e <u> <v> <t>`", lineno)
                edges.append(TemporalEdge(int(fields[1]), int(fields[2]), int(fields[3])))
            else:
                raise ParseError(f"unknown record type {tag!r}", lineno)
        except ParseError:
            raise
        except (ValueError, GraphValidationError) as exc:
            raise ParseError(str(exc), lineno) from exc
    if vertex_count is None:
        raise ParseError("missing `t <vertex_count>` header")
    if any(not 0 <= vid < vertex_count for vid in timelines):
        bad = next(vid for vid in timelines if not 0 <= vid < vertex_count)
        raise ParseError(f"timeline for out-of-range vertex {bad}")
    labels = tuple(
        timelines.get(v, LabelTimeline.constant()) for v in range(vertex_count)
    )
    try:
        return TemporalGraph(vertex_count, tuple(edges), labels)
    except GraphValidationError as exc:
        raise GraphValidationError(f"invalid graph: {exc}") from exc


def serialize(g: TemporalGraph) -> str:
    """Deterministic textual form; inverse of parse up to defaulted labels."""
    lines = [f"t {g.vertex_count}"]
    default = LabelTimeline.constant()
    for v in range(g.vertex_count):
        tl = g.labels[v]
        if tl == default:
            continue
        spec = ",".join(f"{t}:{_check_label_token(lab)}" for t, lab in tl.change_points)
        lines.append(f"v {v} {spec}")
    for e in g.edges:
        lines.append(f"e {e.u} {e.v} {e.t}")
    return "\n".join(lines) + "\n"

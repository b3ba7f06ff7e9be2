"""Transformations from temporal graphs to static labeled graphs.

Four constructions, all pure and deterministic:

* ``reduce``          -- undirected graph keeping each pair's earliest edge,
                         with rank-encoded time labels.
* ``dl_expand``       -- directed graph with one vertex per (temporal edge,
                         direction); static walks correspond one-to-one to
                         temporal walks one step longer.
* ``static_expand``   -- directed acyclic graph over (vertex, time) pairs
                         with transition and waiting edges; linear size.
* ``static_baseline`` -- underlying static multigraph with timestamps as
                         edge labels (the time-oblivious reference encoding).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

from .errors import GraphValidationError, ParseError
from .temporal import TemporalGraph, availability_times

#: Edge labels of the static expansion.
TRANSITION_LABEL = "transition"
WAITING_LABEL = "waiting"


class DLVertexKey(NamedTuple):
    """One direction (u -> v) of a temporal edge at time t."""

    u: int
    v: int
    t: int


class TimeVertexKey(NamedTuple):
    """Vertex w considered at time t."""

    w: int
    t: int


@dataclass(frozen=True)
class StaticLabeledGraph:
    """Static graph with string vertex labels and optional edge labels.

    ``edges`` holds (u, v, label-or-None) triples; for undirected graphs the
    endpoints are canonicalized u < v.  Parallel edges are allowed (used by
    the baseline encoding).  ``vertex_keys`` records what each vertex stood
    for in the source graph, ``provenance`` which construction produced it.
    """

    directed: bool
    vertex_count: int
    vertex_labels: tuple[str, ...]
    edges: tuple[tuple[int, int, str | None], ...]
    vertex_keys: tuple = ()
    provenance: str = ""

    def __post_init__(self):
        if self.vertex_count < 0:
            raise GraphValidationError("vertex_count must be >= 0")
        if len(self.vertex_labels) != self.vertex_count:
            raise GraphValidationError("need exactly one label per vertex")
        canon = []
        for u, v, lab in self.edges:
            if u == v:
                raise GraphValidationError(f"self-loop at vertex {u}")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise GraphValidationError(f"edge endpoint out of range: ({u}, {v})")
            if not self.directed and u > v:
                u, v = v, u
            canon.append((u, v, lab))
        canon.sort(key=lambda e: (e[0], e[1], e[2] or ""))
        object.__setattr__(self, "edges", tuple(canon))
        if self.vertex_keys and len(self.vertex_keys) != self.vertex_count:
            raise GraphValidationError("vertex_keys length mismatch")

    @property
    def has_edge_labels(self) -> bool:
        return any(lab is not None for _, _, lab in self.edges)

    def out_edges(self) -> tuple[tuple[tuple[int, str | None], ...], ...]:
        """Adjacency by source vertex; undirected edges appear both ways."""
        adj: list[list[tuple[int, str | None]]] = [[] for _ in range(self.vertex_count)]
        for u, v, lab in self.edges:
            adj[u].append((v, lab))
            if not self.directed:
                adj[v].append((u, lab))
        return tuple(tuple(a) for a in adj)


def is_acyclic(g: StaticLabeledGraph) -> bool:
    """Kahn topological sort; undirected graphs with any edge are cyclic."""
    if not g.directed:
        return not g.edges
    indeg = [0] * g.vertex_count
    adj: list[list[int]] = [[] for _ in range(g.vertex_count)]
    for u, v, _ in g.edges:
        adj[u].append(v)
        indeg[v] += 1
    queue = deque(v for v in range(g.vertex_count) if indeg[v] == 0)
    seen = 0
    while queue:
        u = queue.popleft()
        seen += 1
        for v in adj[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return seen == g.vertex_count


def encode_label_pair(a: str, b: str) -> str:
    """Injective flat encoding of a label pair ("a|b", with escaping)."""
    esc = lambda s: s.replace("\\", "\\\\").replace("|", "\\|")
    return f"{esc(a)}|{esc(b)}"


def _dense_ranks(values: list[int]) -> dict[int, int]:
    """1-based rank of each distinct value in ascending order."""
    return {t: i + 1 for i, t in enumerate(sorted(set(values)))}


def reduce(g: TemporalGraph) -> StaticLabeledGraph:
    """Reduced representation: earliest edge per vertex pair, ranked labels.

    Edge labels are the dense rank of the surviving edge's time among all
    surviving times.  A vertex keeps label "0" if its timeline is constant;
    otherwise its label is the dense rank of its first label-change time
    among all first-change times.
    """
    earliest: dict[tuple[int, int], int] = {}
    for e in g.edges:
        key = (e.u, e.v)
        if key not in earliest or e.t < earliest[key]:
            earliest[key] = e.t
    time_rank = _dense_ranks(list(earliest.values()))

    first_changes = {
        v: t for v in range(g.vertex_count) if (t := g.labels[v].first_change_time()) is not None
    }
    change_rank = _dense_ranks(list(first_changes.values()))
    vertex_labels = tuple(
        str(change_rank[first_changes[v]]) if v in first_changes else "0"
        for v in range(g.vertex_count)
    )
    edges = tuple((u, v, str(time_rank[t])) for (u, v), t in sorted(earliest.items()))
    return StaticLabeledGraph(
        directed=False,
        vertex_count=g.vertex_count,
        vertex_labels=vertex_labels,
        edges=edges,
        vertex_keys=tuple(range(g.vertex_count)),
        provenance="reduce",
    )


def dl_expand(g: TemporalGraph, annotate_waiting: bool = False) -> StaticLabeledGraph:
    """Directed line graph expansion.

    Each temporal edge ({u, v}, t) becomes the two vertices (u -> v, t) and
    (v -> u, t); there is an edge from (u -> v, t) to (x -> y, s) iff v == x
    and t < s.  A vertex (u -> v, t) is labeled with the pair of labels
    (l(u, t), l(v, t+1)).  With ``annotate_waiting`` each edge carries the
    idle time s - t - 1 spent at the shared vertex.
    """
    keys: list[DLVertexKey] = []
    for e in g.edges:
        keys.append(DLVertexKey(e.u, e.v, e.t))
        keys.append(DLVertexKey(e.v, e.u, e.t))
    # Deterministic ordering: by (t, canonical endpoints, direction).
    keys.sort(key=lambda k: (k.t, min(k.u, k.v), max(k.u, k.v), k.u > k.v))
    index = {k: i for i, k in enumerate(keys)}

    vertex_labels = tuple(
        encode_label_pair(g.label(k.u, k.t), g.label(k.v, k.t + 1)) for k in keys
    )
    # Group arc candidates by their shared middle vertex.
    by_source_endpoint: dict[int, list[DLVertexKey]] = {}
    for k in keys:
        by_source_endpoint.setdefault(k.u, []).append(k)
    edges = []
    for tail in keys:
        for head in by_source_endpoint.get(tail.v, ()):
            if tail.t < head.t:
                lab = str(head.t - tail.t - 1) if annotate_waiting else None
                edges.append((index[tail], index[head], lab))
    return StaticLabeledGraph(
        directed=True,
        vertex_count=len(keys),
        vertex_labels=vertex_labels,
        edges=tuple(edges),
        vertex_keys=tuple(keys),
        provenance="dl_expand",
    )


def static_expand(g: TemporalGraph) -> StaticLabeledGraph:
    """Static expansion: a DAG over (vertex, time) pairs.

    Every temporal edge ({u, v}, t) contributes the time-vertices (u, t),
    (v, t), (u, t+1), (v, t+1) and the two transition edges
    (u, t) -> (v, t+1) and (v, t) -> (u, t+1).  Waiting edges connect
    consecutive availability times i < j at the same vertex w:
    (w, i+1) -> (w, j) when i + 1 < j, and (w, i) -> (w, j).
    A time-vertex (w, t) is labeled l(w, t).
    """
    vertex_set: set[TimeVertexKey] = set()
    for e in g.edges:
        vertex_set.update(
            (
                TimeVertexKey(e.u, e.t),
                TimeVertexKey(e.v, e.t),
                TimeVertexKey(e.u, e.t + 1),
                TimeVertexKey(e.v, e.t + 1),
            )
        )
    keys = sorted(vertex_set)
    index = {k: i for i, k in enumerate(keys)}
    edges: list[tuple[int, int, str | None]] = []
    for e in g.edges:
        edges.append(
            (index[TimeVertexKey(e.u, e.t)], index[TimeVertexKey(e.v, e.t + 1)], TRANSITION_LABEL)
        )
        edges.append(
            (index[TimeVertexKey(e.v, e.t)], index[TimeVertexKey(e.u, e.t + 1)], TRANSITION_LABEL)
        )
    for w in range(g.vertex_count):
        times = availability_times(g, w)
        for i, j in zip(times, times[1:]):
            if i + 1 < j and TimeVertexKey(w, i + 1) in vertex_set:
                edges.append((index[TimeVertexKey(w, i + 1)], index[TimeVertexKey(w, j)], WAITING_LABEL))
            edges.append((index[TimeVertexKey(w, i)], index[TimeVertexKey(w, j)], WAITING_LABEL))
    return StaticLabeledGraph(
        directed=True,
        vertex_count=len(keys),
        vertex_labels=tuple(g.label(k.w, k.t) for k in keys),
        edges=tuple(edges),
        vertex_keys=tuple(keys),
        provenance="static_expand",
    )


def static_baseline(g: TemporalGraph) -> StaticLabeledGraph:
    """Time-oblivious encoding: timestamps as edge labels, concatenated
    timeline labels as vertex labels.  Parallel edges are kept."""
    vertex_labels = tuple(
        "|".join(lab for _, lab in g.labels[v].change_points) for v in range(g.vertex_count)
    )
    edges = tuple((e.u, e.v, str(e.t)) for e in g.edges)
    return StaticLabeledGraph(
        directed=False,
        vertex_count=g.vertex_count,
        vertex_labels=vertex_labels,
        edges=edges,
        vertex_keys=tuple(range(g.vertex_count)),
        provenance="static_baseline",
    )


TRANSFORMS = {
    "rd": reduce,
    "dl": dl_expand,
    "se": static_expand,
    "base": static_baseline,
}


def apply_transform(g: TemporalGraph, method: str, annotate_waiting: bool = False) -> StaticLabeledGraph:
    """Dispatch by method name ('rd', 'dl', 'se', 'base')."""
    if method not in TRANSFORMS:
        raise GraphValidationError(f"unknown transformation {method!r}")
    if method == "dl":
        return dl_expand(g, annotate_waiting=annotate_waiting)
    if annotate_waiting:
        raise GraphValidationError("waiting-time annotation is only supported by 'dl'")
    return TRANSFORMS[method](g)


# ---------------------------------------------------------------------------
# File format (mirrors the temporal one):
#
#   s <directed|undirected> <vertex_count>
#   sv <id> <label>
#   se <u> <v> [<label>]
# ---------------------------------------------------------------------------


def _check_token(label: str) -> str:
    if not label or any(c.isspace() for c in label):
        raise GraphValidationError(f"label not representable in file format: {label!r}")
    return label


def serialize_static(g: StaticLabeledGraph) -> str:
    lines = [f"s {'directed' if g.directed else 'undirected'} {g.vertex_count}"]
    for v in range(g.vertex_count):
        lines.append(f"sv {v} {_check_token(g.vertex_labels[v])}")
    for u, v, lab in g.edges:
        lines.append(f"se {u} {v}" if lab is None else f"se {u} {v} {_check_token(lab)}")
    return "\n".join(lines) + "\n"


def parse_static(text: str) -> StaticLabeledGraph:
    directed: bool | None = None
    vertex_count = 0
    labels: dict[int, str] = {}
    edges: list[tuple[int, int, str | None]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            if fields[0] == "s" and len(fields) == 3:
                directed = fields[1] == "directed"
                if fields[1] not in ("directed", "undirected"):
                    raise ParseError(f"bad directedness flag {fields[1]!r}", lineno)
                vertex_count = int(fields[2])
            elif fields[0] == "sv" and len(fields) == 3:
                labels[int(fields[1])] = fields[2]
            elif fields[0] == "se" and len(fields) in (3, 4):
                lab = fields[3] if len(fields) == 4 else None
                edges.append((int(fields[1]), int(fields[2]), lab))
            else:
                raise ParseError(f"malformed record {line!r}", lineno)
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from exc
    if directed is None:
        raise ParseError("missing `s <directedness> <vertex_count>` header")
    if sorted(labels) != list(range(vertex_count)):
        raise ParseError("every vertex needs exactly one `sv` line")
    return StaticLabeledGraph(
        directed=directed,
        vertex_count=vertex_count,
        vertex_labels=tuple(labels[v] for v in range(vertex_count)),
        edges=tuple(edges),
    )

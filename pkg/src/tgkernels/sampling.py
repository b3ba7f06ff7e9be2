"""Stochastic temporal-walk kernel: uniform sampling and sample-size bound.

Walks are drawn by a biased forward procedure (uniform first edge and
direction, then uniform extension over incident edges whose availability
time is at least the arrival time) and corrected to the uniform
distribution over all temporal walks of length k by rejection: a walk drawn
with probability P_w is kept with probability P_min / P_w, where
P_min = 1 / (|V| * Delta^k) lower-bounds the draw probability of any walk.

The batched engine below vectorizes attempts with numpy; the single-walk
sampler is a plain reference implementation of the same procedure.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import (
    CountOverflowError,
    GraphValidationError,
    KernelMismatchError,
    NoWalkError,
    RetryBudgetError,
    TGKError,
)
from .kernels import FeatureVector, _digest, _enc
from .temporal import TemporalEdge, TemporalGraph, TemporalWalk, max_temporal_degree

APPROX_KIND = "temporal-rw"

_MAX_SAMPLE_SIZE = 2**63 - 1


@dataclass(frozen=True)
class SamplerConfig:
    """Parameters of the walk sampler."""

    k: int
    samples: int
    rejection: bool = True
    max_restarts: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise GraphValidationError("walk length k must be >= 1")
        if self.samples < 1:
            raise GraphValidationError("sample count must be >= 1")
        if self.max_restarts < 1:
            raise GraphValidationError("max_restarts must be >= 1")


@dataclass(frozen=True)
class SampleBoundInputs:
    """Inputs of the sample-size bound.

    ``pattern_bound`` is an upper bound on the number of distinct walk label
    sequences of length k (see :func:`walk_pattern_bound` for the crude
    alphabet-based bound); ``accuracy`` is the additive error target per
    histogram entry scale, ``delta`` the failure probability.
    """

    collection_size: int
    pattern_bound: int
    delta: float
    accuracy: float

    def __post_init__(self):
        if self.collection_size < 1 or self.pattern_bound < 1:
            raise GraphValidationError("collection size and pattern bound must be positive")
        if not 0.0 < self.delta < 1.0:
            raise GraphValidationError("delta must lie in (0, 1)")
        if self.accuracy <= 0.0:
            raise GraphValidationError("accuracy must be positive")


def walk_pattern_bound(alphabet_size: int, k: int) -> int:
    """Crude bound: label sequences of a length-k walk have 2k symbols."""
    if alphabet_size < 1 or k < 1:
        raise GraphValidationError("alphabet size and k must be positive")
    return alphabet_size ** (2 * k)


def sample_size(b: SampleBoundInputs) -> int:
    """Number of samples sufficient for the 3-lambda additive guarantee.

    Evaluates ceil(log(2 |G| Gamma / delta) / (2 (lambda / Gamma)^2)) with
    the natural logarithm.
    """
    log_term = (
        math.log(2.0 * b.collection_size) + math.log(b.pattern_bound) - math.log(b.delta)
    )
    try:
        gamma_sq = float(b.pattern_bound) ** 2
        value = log_term * gamma_sq / (2.0 * b.accuracy**2)
    except OverflowError as exc:
        raise CountOverflowError("sample size overflows the representable range") from exc
    if not math.isfinite(value) or value > _MAX_SAMPLE_SIZE:
        raise CountOverflowError(
            f"required sample size {value:.3g} exceeds the supported range"
        )
    return max(1, math.ceil(value))


# ---------------------------------------------------------------------------
# Sampling engine
# ---------------------------------------------------------------------------


class _WalkIndex:
    """Flat incidence arrays for vectorized walk extension.

    Incidences are sorted by (vertex, time); the edges available to extend
    from vertex v at arrival time a form the contiguous range between
    searchsorted(v*T + a) and ptr[v+1].
    """

    def __init__(self, g: TemporalGraph):
        if not g.edges:
            raise NoWalkError("graph has no temporal edges")
        self.graph = g
        n_e = len(g.edges)
        self.edge_u = np.fromiter((e.u for e in g.edges), np.int64, n_e)
        self.edge_v = np.fromiter((e.v for e in g.edges), np.int64, n_e)
        self.edge_t = np.fromiter((e.t for e in g.edges), np.int64, n_e)
        self.n_vertices = g.vertex_count
        self.n_edges = n_e
        self.t_span = int(g.t_max) + 2

        from_v = np.concatenate([self.edge_u, self.edge_v])
        to_v = np.concatenate([self.edge_v, self.edge_u])
        times = np.concatenate([self.edge_t, self.edge_t])
        # slot id 2*edge + direction (0: u->v, 1: v->u)
        slots = np.concatenate(
            [2 * np.arange(n_e, dtype=np.int64), 2 * np.arange(n_e, dtype=np.int64) + 1]
        )
        order = np.lexsort((times, from_v))
        self.inc_key = from_v[order] * self.t_span + times[order]
        self.inc_slot = slots[order]
        self.inc_to = to_v[order]
        self.inc_time = times[order]
        self.ptr = np.zeros(self.n_vertices + 1, dtype=np.int64)
        np.add.at(self.ptr, from_v + 1, 1)
        np.cumsum(self.ptr, out=self.ptr)
        self.max_degree = int(np.max(self.ptr[1:] - self.ptr[:-1]))

    def slot_tail(self, slot: int) -> int:
        e = slot >> 1
        return int(self.edge_u[e] if slot & 1 == 0 else self.edge_v[e])

    def slot_head(self, slot: int) -> int:
        e = slot >> 1
        return int(self.edge_v[e] if slot & 1 == 0 else self.edge_u[e])

    def slot_time(self, slot: int) -> int:
        return int(self.edge_t[slot >> 1])


def _walk_from_slots(g: TemporalGraph, index: _WalkIndex, slots: Iterable[int]) -> TemporalWalk:
    slots = list(slots)
    vertices = [index.slot_tail(slots[0])]
    edges = []
    for s in slots:
        vertices.append(index.slot_head(s))
        edges.append(g.edges[s >> 1])
    return TemporalWalk(tuple(vertices), tuple(edges))


def sample_walk_slots(
    g: TemporalGraph,
    k: int,
    samples: int,
    rng: np.random.Generator,
    rejection: bool = True,
    max_restarts: int = 100_000,
) -> np.ndarray:
    """Draw ``samples`` temporal k-walks; rows are slot-id sequences.

    With rejection enabled the rows are uniform over all temporal walks of
    length k.  The total attempt budget is samples * max_restarts; on
    exhaustion the error distinguishes graphs without any k-walk from an
    undersized retry budget.
    """
    if k < 1:
        raise GraphValidationError("walk length k must be >= 1")
    index = _WalkIndex(g)
    n_v, n_e = index.n_vertices, index.n_edges
    delta_pow = float(index.max_degree) ** k
    if not math.isfinite(delta_pow):
        raise CountOverflowError("Delta^k overflows; rejection ratio not representable")
    p_min_inv = float(n_v) * delta_pow  # 1 / P_min

    out = np.empty((samples, k), dtype=np.int64)
    got = 0
    budget = samples * max_restarts
    while got < samples:
        if budget <= 0:
            if not has_temporal_walk(g, k):
                raise NoWalkError(f"graph admits no temporal walk of length {k}")
            raise RetryBudgetError(
                f"restart budget exhausted after {samples * max_restarts} attempts "
                f"({got}/{samples} samples accepted)"
            )
        batch = int(min(max(1024, 4 * (samples - got)), 1 << 16, budget))
        budget -= batch

        slots = rng.integers(0, 2 * n_e, size=batch, dtype=np.int64)
        seq = np.empty((batch, k), dtype=np.int64)
        seq[:, 0] = slots
        eidx = slots >> 1
        cur = np.where(slots & 1 == 0, index.edge_v[eidx], index.edge_u[eidx])
        arrival = index.edge_t[eidx] + 1
        alive = np.ones(batch, dtype=bool)
        prod_d = np.ones(batch, dtype=np.float64)
        for step in range(1, k):
            pos = np.searchsorted(index.inc_key, cur * index.t_span + arrival, side="left")
            d = index.ptr[cur + 1] - pos
            alive &= d > 0
            u = rng.random(batch)
            choice = pos + np.minimum(
                (u * np.maximum(d, 1)).astype(np.int64), np.maximum(d, 1) - 1
            )
            choice = np.minimum(choice, len(index.inc_slot) - 1)
            seq[:, step] = index.inc_slot[choice]
            cur = index.inc_to[choice]
            arrival = index.inc_time[choice] + 1
            prod_d *= d
        if rejection:
            ratio = (2.0 * n_e) * prod_d / p_min_inv
            if np.any(alive & (ratio > 1.0 + 1e-9)):
                raise TGKError("internal invariant violated: P_min > P_w for a sampled walk")
            accept = alive & (rng.random(batch) < ratio)
        else:
            accept = alive
        rows = seq[accept]
        take = min(samples - got, rows.shape[0])
        out[got : got + take] = rows[:take]
        got += take
    return out


def sample_temporal_walk(
    g: TemporalGraph,
    k: int,
    rng: np.random.Generator,
    rejection: bool = True,
    max_restarts: int = 100_000,
) -> TemporalWalk:
    """Reference single-walk sampler (same procedure, unbatched)."""
    if k < 1:
        raise GraphValidationError("walk length k must be >= 1")
    if not g.edges:
        raise NoWalkError("graph has no temporal edges")
    n_e = len(g.edges)
    delta = max_temporal_degree(g)
    p_min_inv = float(g.vertex_count) * float(delta) ** k
    incident = {
        v: sorted(((e.t, e) for e in g.incident_edges(v)))
        for v in range(g.vertex_count)
    }
    for _ in range(max_restarts):
        slot = int(rng.integers(0, 2 * n_e))
        e = g.edges[slot >> 1]
        cur = e.v if slot & 1 == 0 else e.u
        walk_edges = [e]
        vertices = [e.u if slot & 1 == 0 else e.v, cur]
        arrival = e.t + 1
        denom = 2 * n_e
        stuck = False
        for _ in range(k - 1):
            inc = incident[cur]
            lo = bisect_left(inc, (arrival, TemporalEdge(-1, -1, -1)))
            d = len(inc) - lo
            if d == 0:
                stuck = True
                break
            _, nxt = inc[lo + int(rng.integers(0, d))]
            cur = nxt.v if nxt.u == cur else nxt.u
            vertices.append(cur)
            walk_edges.append(nxt)
            arrival = nxt.t + 1
            denom *= d
        if stuck:
            continue
        if rejection:
            ratio = denom / p_min_inv
            if ratio > 1.0 + 1e-9:
                raise TGKError("internal invariant violated: P_min > P_w for a sampled walk")
            if rng.random() >= ratio:
                continue
        return TemporalWalk(tuple(vertices), tuple(walk_edges))
    if not has_temporal_walk(g, k):
        raise NoWalkError(f"graph admits no temporal walk of length {k}")
    raise RetryBudgetError(f"no walk accepted within {max_restarts} restarts")


def has_temporal_walk(g: TemporalGraph, k: int) -> bool:
    """Whether any temporal walk of length k exists (dynamic program)."""
    if k <= 0:
        return g.vertex_count > 0
    if not g.edges:
        return False
    # best[v] = longest walk length starting with a departure from v at a
    # time strictly greater than the current processing time.
    best = [0] * g.vertex_count
    longest = 0
    edges_desc = sorted(g.edges, key=lambda e: -e.t)
    i = 0
    while i < len(edges_desc):
        j = i
        t = edges_desc[i].t
        group = []
        while j < len(edges_desc) and edges_desc[j].t == t:
            e = edges_desc[j]
            group.append((e.u, 1 + best[e.v]))
            group.append((e.v, 1 + best[e.u]))
            j += 1
        for tail, length in group:
            longest = max(longest, length)
            if length >= k:
                return True
        for tail, length in group:
            best[tail] = max(best[tail], length)
        i = j
    return longest >= k


# ---------------------------------------------------------------------------
# Approximate feature map and kernel
# ---------------------------------------------------------------------------


def temporal_sequence_key(labels: Iterable[str]) -> bytes:
    """Key of a temporal walk label sequence (2k labels per Def. walk)."""
    return _digest(b"tw", *(_enc(lab) for lab in labels))


def _label_matrix(g: TemporalGraph) -> tuple[np.ndarray, list[bytes]]:
    """Dense (vertex, time) -> label-id lookup over times 1..t_max+1."""
    label_ids: dict[str, int] = {}
    enc: list[bytes] = []
    t_hi = g.t_max + 1
    mat = np.zeros((g.vertex_count, t_hi + 1), dtype=np.int32)
    for v in range(g.vertex_count):
        cps = list(g.labels[v].change_points) + [(t_hi + 1, "")]
        for (t0, lab), (t1, _) in zip(cps, cps[1:]):
            if lab not in label_ids:
                label_ids[lab] = len(label_ids)
                enc.append(_enc(lab))
            mat[v, t0 : min(t1, t_hi + 1)] = label_ids[lab]
    return mat, enc


def approx_feature_map(g: TemporalGraph, cfg: SamplerConfig) -> FeatureVector:
    """Normalized histogram over sampled temporal-walk label sequences.

    Each of the ``cfg.samples`` accepted walks contributes 1/samples to the
    entry of its label sequence, so the entries sum to exactly one.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(cfg.seed)))
    slots = sample_walk_slots(
        g,
        cfg.k,
        cfg.samples,
        rng,
        rejection=cfg.rejection,
        max_restarts=cfg.max_restarts,
    )
    index = _WalkIndex(g)
    eidx = slots >> 1
    dirs = slots & 1
    tails = np.where(dirs == 0, index.edge_u[eidx], index.edge_v[eidx])
    heads = np.where(dirs == 0, index.edge_v[eidx], index.edge_u[eidx])
    times = index.edge_t[eidx]

    mat, enc = _label_matrix(g)
    seq = np.empty((slots.shape[0], 2 * cfg.k), dtype=np.int32)
    seq[:, 0::2] = mat[tails, times]
    seq[:, 1::2] = mat[heads, times + 1]

    counts: dict[bytes, int] = {}
    row_counter: dict[bytes, int] = {}
    for row in map(bytes, np.ascontiguousarray(seq).view(np.uint8).reshape(seq.shape[0], -1)):
        row_counter[row] = row_counter.get(row, 0) + 1
    for row, c in row_counter.items():
        ids = np.frombuffer(row, dtype=np.int32)
        key = _digest(b"tw", *(enc[i] for i in ids))
        counts[key] = counts.get(key, 0) + c
    return FeatureVector(kind=APPROX_KIND, param=cfg.k, counts=counts, denom=cfg.samples)


def approx_kernel(f1: FeatureVector, f2: FeatureVector) -> float:
    """Inner product of two sampled feature maps; lies in [0, 1]."""
    for f in (f1, f2):
        if f.kind != APPROX_KIND:
            raise KernelMismatchError(f"expected {APPROX_KIND} features, got {f.kind!r}")
    if f1.param != f2.param:
        raise KernelMismatchError(
            f"walk length mismatch: k={f1.param} vs k={f2.param}"
        )
    return f1.dot(f2)


def exact_normalized_feature_map(g: TemporalGraph, k: int) -> FeatureVector:
    """Exhaustively enumerated counterpart of :func:`approx_feature_map`.

    Only feasible on small graphs; used as ground truth when validating the
    sampler.  Counts are scaled by the total walk count so the histogram
    sums to one.
    """
    from .temporal import enumerate_temporal_walks, label_sequence

    walks = enumerate_temporal_walks(g, k)
    if not walks:
        raise NoWalkError(f"graph admits no temporal walk of length {k}")
    counts: dict[bytes, int] = {}
    for w in walks:
        key = temporal_sequence_key(label_sequence(g, w))
        counts[key] = counts.get(key, 0) + 1
    return FeatureVector(kind=APPROX_KIND, param=k, counts=counts, denom=len(walks))

"""SI dissemination simulation and dataset generation.

The susceptible-infected process runs in synchronous rounds over the edge
timestamps: an edge ({u, v}, t) transmits (with probability p) when exactly
one endpoint is infected at time t; the newly infected endpoint carries the
infection from time t + 1 on.  Infection states are encoded as binary label
timelines ("0" susceptible, "1" infected), which is exactly the label input
the temporal kernels consume.

Two classification tasks are generated from a pool of base graphs:

* task 1 -- dissemination vs. matched random labeling: the second half of
  the pool is simulated only to count infections, then relabeled with the
  same number of infected vertices at uniformly random times.
* task 2 -- two dissemination regimes differing only in the transmission
  probability; simulations are retried until the infection threshold is
  reached.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import ceil, floor
from typing import Sequence

import numpy as np

from .errors import GraphValidationError
from .seeding import derive_rng
from .temporal import LabelTimeline, TemporalEdge, TemporalGraph

SUSCEPTIBLE = "0"
INFECTED = "1"

#: Retry budget for task-2 simulations that must reach the threshold.
DEFAULT_RETRY_BUDGET = 100


@dataclass(frozen=True)
class SIConfig:
    """Parameters of one SI simulation."""

    seed_count: int = 1
    p: float = 0.5
    target_fraction: float = 0.5
    rng_seed: int = 0

    def __post_init__(self):
        if self.seed_count < 1:
            raise GraphValidationError("seed count must be >= 1")
        if not 0.0 < self.p <= 1.0:
            raise GraphValidationError("infection probability must lie in (0, 1]")
        if not 0.0 < self.target_fraction <= 1.0:
            raise GraphValidationError("target fraction must lie in (0, 1]")


@dataclass(frozen=True)
class SIResult:
    """Outcome of a simulation run."""

    graph: TemporalGraph
    infection_times: dict[int, int]
    reached_threshold: bool

    @property
    def infected_count(self) -> int:
        return len(self.infection_times)


@dataclass(frozen=True)
class Dataset:
    """Labeled graph collection plus its generation recipe."""

    items: tuple[tuple[TemporalGraph, int], ...]
    task: str
    params: dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        for _, cls in self.items:
            if cls not in (+1, -1):
                raise GraphValidationError(f"class labels must be +1/-1, got {cls}")

    @property
    def graphs(self) -> tuple[TemporalGraph, ...]:
        return tuple(g for g, _ in self.items)

    @property
    def classes(self) -> tuple[int, ...]:
        return tuple(c for _, c in self.items)


def _infection_timelines(n: int, infection_times: dict[int, int]) -> tuple[LabelTimeline, ...]:
    out = []
    for v in range(n):
        t = infection_times.get(v)
        if t is None:
            out.append(LabelTimeline.constant(SUSCEPTIBLE))
        elif t <= 1:
            out.append(LabelTimeline(((1, INFECTED),)))
        else:
            out.append(LabelTimeline(((1, SUSCEPTIBLE), (t, INFECTED))))
    return tuple(out)


def infected_vertices(g: TemporalGraph) -> tuple[int, ...]:
    """Vertices whose final label is the infected symbol."""
    return tuple(
        v for v in range(g.vertex_count) if g.labels[v].change_points[-1][1] == INFECTED
    )


def si_simulate(
    g: TemporalGraph, cfg: SIConfig, rng: np.random.Generator | None = None
) -> SIResult:
    """Run the SI process on g and return it with infection timelines.

    Seeds are infected at time 1.  The run stops once at least
    ceil(|V| * target_fraction) vertices are infected or no further
    infection is possible; a run ending below the threshold is returned
    with ``reached_threshold`` False rather than raising.
    """
    if rng is None:
        rng = derive_rng(cfg.rng_seed)
    n = g.vertex_count
    if cfg.seed_count > n:
        raise GraphValidationError(f"cannot place {cfg.seed_count} seeds on {n} vertices")
    threshold = ceil(n * cfg.target_fraction)
    seeds = rng.choice(n, size=cfg.seed_count, replace=False)
    infection_times: dict[int, int] = {int(v): 1 for v in seeds}

    if len(infection_times) < threshold:
        i = 0
        edges = g.edges  # sorted by (t, u, v)
        while i < len(edges):
            t = edges[i].t
            newly: set[int] = set()
            while i < len(edges) and edges[i].t == t:
                u, v, _ = edges[i]
                i += 1
                u_inf = infection_times.get(u, _NEVER) <= t
                v_inf = infection_times.get(v, _NEVER) <= t
                if u_inf == v_inf:
                    continue
                target = v if u_inf else u
                if target in infection_times or target in newly:
                    continue
                if rng.random() < cfg.p:
                    newly.add(target)
            for v in newly:
                infection_times[v] = t + 1
            if len(infection_times) >= threshold or len(infection_times) == n:
                break
    return SIResult(
        graph=g.with_labels(_infection_timelines(n, infection_times)),
        infection_times=infection_times,
        reached_threshold=len(infection_times) >= threshold,
    )


_NEVER = 1 << 62


def extract_bfs_subgraphs(g: TemporalGraph, cap: int) -> list[TemporalGraph]:
    """Induced temporal subgraphs grown by BFS from every start vertex.

    Neighbors are visited by (earliest connecting timestamp, neighbor id);
    growth stops once ``cap`` vertices are selected.  All temporal edges
    among selected vertices are kept, timestamps unchanged; vertices are
    renumbered in ascending original order.
    """
    if cap < 1:
        raise GraphValidationError("vertex budget must be >= 1")
    earliest: dict[int, dict[int, int]] = {v: {} for v in range(g.vertex_count)}
    for e in g.edges:
        for a, b in ((e.u, e.v), (e.v, e.u)):
            if b not in earliest[a] or e.t < earliest[a][b]:
                earliest[a][b] = e.t
    neighbor_order = {
        v: [w for _, w in sorted((t, w) for w, t in earliest[v].items())]
        for v in range(g.vertex_count)
    }

    out = []
    for start in range(g.vertex_count):
        selected = {start}
        queue = [start]
        qi = 0
        while qi < len(queue) and len(selected) < cap:
            cur = queue[qi]
            qi += 1
            for w in neighbor_order[cur]:
                if w not in selected:
                    selected.add(w)
                    queue.append(w)
                    if len(selected) >= cap:
                        break
        ids = sorted(selected)
        remap = {v: i for i, v in enumerate(ids)}
        edges = tuple(
            TemporalEdge(remap[e.u], remap[e.v], e.t)
            for e in g.edges
            if e.u in selected and e.v in selected
        )
        out.append(TemporalGraph(len(ids), edges, tuple(g.labels[v] for v in ids)))
    return out


def _random_infection_labels(
    g: TemporalGraph, count: int, rng: np.random.Generator
) -> TemporalGraph:
    """Infect ``count`` uniform vertices at independent uniform times."""
    t_hi = g.t_max + 1
    chosen = rng.choice(g.vertex_count, size=count, replace=False)
    times = {int(v): int(rng.integers(1, t_hi + 1)) for v in chosen}
    return g.with_labels(_infection_timelines(g.vertex_count, times))


def make_task1(graphs: Sequence[TemporalGraph], cfg: SIConfig) -> Dataset:
    """Dissemination vs. matched random labeling.

    The first half of the pool is SI-labeled.  Every second-half graph is
    simulated only to count its infected vertices, then relabeled with the
    same number of infections placed uniformly at uniform random times in
    {1, ..., t_max + 1}.
    """
    if len(graphs) < 2:
        raise GraphValidationError("need at least two graphs")
    split = (len(graphs) + 1) // 2
    items = []
    flagged = []
    infected_counts = []
    for i, g in enumerate(graphs):
        rng = derive_rng(cfg.rng_seed, 1, i)
        result = si_simulate(g, cfg, rng)
        if not result.reached_threshold:
            flagged.append(i)
        infected_counts.append(result.infected_count)
        if i < split:
            items.append((result.graph, +1))
        else:
            items.append((_random_infection_labels(g, result.infected_count, rng), -1))
    return Dataset(
        items=tuple(items),
        task="task1",
        params={
            "seed_count": cfg.seed_count,
            "p": cfg.p,
            "target_fraction": cfg.target_fraction,
            "rng_seed": cfg.rng_seed,
            "below_threshold": tuple(flagged),
            "infected_counts": tuple(infected_counts),
        },
    )


def make_task2(
    graphs: Sequence[TemporalGraph],
    p_low: float,
    p_high: float,
    seed_count: int = 1,
    target_fraction: float = 0.5,
    rng_seed: int = 0,
    retry_budget: int = DEFAULT_RETRY_BUDGET,
) -> Dataset:
    """Two dissemination regimes differing only in transmission probability.

    Each graph is re-simulated (fresh seeds and coin flips) until the
    infection threshold is reached; graphs exhausting the retry budget are
    excluded with a warning.
    """
    if not 0.0 < p_low <= p_high <= 1.0:
        raise GraphValidationError("need 0 < p_low <= p_high <= 1")
    if len(graphs) < 2:
        raise GraphValidationError("need at least two graphs")
    split = (len(graphs) + 1) // 2
    items = []
    excluded = []
    for i, g in enumerate(graphs):
        p = p_low if i < split else p_high
        cls = +1 if i < split else -1
        cfg = SIConfig(
            seed_count=seed_count, p=p, target_fraction=target_fraction, rng_seed=rng_seed
        )
        result = None
        for attempt in range(retry_budget):
            candidate = si_simulate(g, cfg, derive_rng(rng_seed, 2, i, attempt))
            if candidate.reached_threshold:
                result = candidate
                break
        if result is None:
            excluded.append(i)
            warnings.warn(
                f"graph {i} never reached the infection threshold within "
                f"{retry_budget} attempts; excluded from task 2 dataset"
            )
            continue
        items.append((result.graph, cls))
    return Dataset(
        items=tuple(items),
        task="task2",
        params={
            "seed_count": seed_count,
            "p_low": p_low,
            "p_high": p_high,
            "target_fraction": target_fraction,
            "rng_seed": rng_seed,
            "retry_budget": retry_budget,
            "excluded": tuple(excluded),
        },
    )


def reset_infections(
    d: Dataset, fraction: float, rng: np.random.Generator
) -> Dataset:
    """Set floor(fraction * #infected) infected vertices back to susceptible.

    Models incomplete observation of the dissemination process; class
    labels are unchanged.
    """
    if not 0.0 < fraction < 1.0:
        raise GraphValidationError("reset fraction must lie in (0, 1)")
    items = []
    for g, cls in d.items:
        infected = infected_vertices(g)
        m = floor(fraction * len(infected))
        if m:
            drop = set(
                int(infected[j]) for j in rng.choice(len(infected), size=m, replace=False)
            )
            labels = tuple(
                LabelTimeline.constant(SUSCEPTIBLE) if v in drop else g.labels[v]
                for v in range(g.vertex_count)
            )
            g = g.with_labels(labels)
        items.append((g, cls))
    return Dataset(
        items=tuple(items),
        task=d.task,
        params={**d.params, "reset_fraction": fraction},
    )


def random_temporal_graph(
    n_vertices: int,
    n_edges: int,
    t_max: int,
    rng: np.random.Generator,
) -> TemporalGraph:
    """Random connected temporal graph with uniform timestamps.

    A random attachment tree guarantees connectivity of the underlying
    static graph (when n_edges allows); the remaining edges are uniform
    (pair, time) triples without duplicates.
    """
    if n_vertices < 1 or t_max < 1 or n_edges < 0:
        raise GraphValidationError("invalid generator parameters")
    triples: set[tuple[int, int, int]] = set()
    if n_vertices > 1 and n_edges >= n_vertices - 1:
        order = rng.permutation(n_vertices)
        for i in range(1, n_vertices):
            u = int(order[int(rng.integers(0, i))])
            v = int(order[i])
            t = int(rng.integers(1, t_max + 1))
            triples.add((min(u, v), max(u, v), t))
    guard = 0
    while len(triples) < n_edges:
        u = int(rng.integers(0, n_vertices))
        v = int(rng.integers(0, n_vertices))
        if u == v:
            continue
        t = int(rng.integers(1, t_max + 1))
        triples.add((min(u, v), max(u, v), t))
        guard += 1
        if guard > 100 * n_edges + 1000:
            raise GraphValidationError(
                "could not place the requested number of distinct temporal edges"
            )
    edges = tuple(TemporalEdge(u, v, t) for u, v, t in triples)
    return TemporalGraph(n_vertices, edges)

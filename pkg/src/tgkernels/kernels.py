"""Exact static graph kernels as explicit sparse feature maps.

Both kernels map a static labeled graph to a sparse histogram keyed by
128-bit digests of canonical label structures:

* random-walk features count walks up to length k by their label sequence
  (vertex and edge labels alternating),
* Weisfeiler-Lehman subtree features concatenate color histograms over h
  rounds of color refinement.

Keys are digests rather than the raw sequences to keep dense graphs
tractable; the digest construction is exposed (``walk_sequence_key``) so
tests can audit for collisions against explicitly enumerated sequences.
Counts are exact integers; Gram entries are computed in integer arithmetic
and only converted to floating point on output.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from hashlib import blake2b
from typing import Sequence

import numpy as np

from .errors import (
    CountOverflowError,
    KernelMismatchError,
    NormalizationError,
)
from .transform import StaticLabeledGraph

U64_MAX = 2**64 - 1

#: Maximum value for which pairwise integer dot products are computed with
#: int64 sparse algebra; larger magnitudes fall back to arbitrary precision.
_INT64_SAFE = 2**62


def _digest(*parts: bytes) -> bytes:
    """16-byte digest of length-prefixed parts (unambiguous concatenation)."""
    h = blake2b(digest_size=16)
    for p in parts:
        h.update(len(p).to_bytes(4, "big"))
        h.update(p)
    return h.digest()


def _enc(label: str | None) -> bytes:
    """Encode an optional label; None is the fixed placeholder symbol."""
    return b"\x00" if label is None else b"\x01" + label.encode("utf-8")


@dataclass(frozen=True)
class FeatureVector:
    """Sparse feature histogram of one graph.

    ``counts`` maps canonical 16-byte keys to positive integer counts; each
    stored count represents count/denom (denom is 1 for exact feature maps
    and the sample count for sampled ones).
    """

    kind: str
    param: int
    counts: dict[bytes, int]
    denom: int = 1

    def __post_init__(self):
        cleaned = {}
        for key, c in self.counts.items():
            if c < 0:
                raise CountOverflowError("negative feature count")
            if c > U64_MAX:
                raise CountOverflowError(
                    f"feature count {c} exceeds the checked 64-bit range"
                )
            if c:
                cleaned[key] = c
        object.__setattr__(self, "counts", cleaned)
        if self.denom < 1:
            raise KernelMismatchError("denominator must be >= 1")

    @property
    def l1_norm(self) -> Fraction:
        return Fraction(sum(self.counts.values()), self.denom)

    def dot(self, other: "FeatureVector") -> float:
        """Inner product; exact integers, floating point only at output."""
        if (self.kind, self.param) != (other.kind, other.param):
            raise KernelMismatchError(
                f"cannot combine {self.kind}/{self.param} with {other.kind}/{other.param}"
            )
        a, b = self.counts, other.counts
        if len(a) > len(b):
            a, b = b, a
        total = sum(c * b[k] for k, c in a.items() if k in b)
        return total / (self.denom * other.denom)


@dataclass(frozen=True)
class GramMatrix:
    """Symmetric matrix of kernel values over a graph collection."""

    values: np.ndarray
    ids: tuple[str, ...]
    kind: str
    param: int
    normalized: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise KernelMismatchError("Gram matrix must be square")
        if len(self.ids) != v.shape[0]:
            raise KernelMismatchError("one id per row required")
        if not np.allclose(v, v.T, rtol=0.0, atol=1e-9 * (1.0 + np.abs(v).max(initial=0.0))):
            raise KernelMismatchError("Gram matrix must be symmetric")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))

    @property
    def size(self) -> int:
        return self.values.shape[0]


# ---------------------------------------------------------------------------
# Random-walk features
# ---------------------------------------------------------------------------


def walk_sequence_key(labels: Sequence[str | None]) -> bytes:
    """Key of an explicit walk label sequence (v1, e1, v2, ..., v_{l+1}).

    Chained digest, identical to what the dynamic program below produces for
    the same sequence; used by tests to audit hash collisions.
    """
    if len(labels) % 2 != 1:
        raise KernelMismatchError("walk label sequence must have odd length")
    key = _digest(b"rw0", _enc(labels[0]))
    for i in range(1, len(labels), 2):
        key = _digest(b"rws", key, _enc(labels[i]), _enc(labels[i + 1]))
    return key


def rw_feature_map(g: StaticLabeledGraph, k: int) -> FeatureVector:
    """Histogram of walk label sequences for all walk lengths 0..k.

    Walks follow edge direction on directed graphs and both directions on
    undirected ones.  Computation propagates per-vertex maps from
    sequence key to count, so the cost scales with the number of distinct
    sequences rather than the number of walks.
    """
    if k < 0:
        raise KernelMismatchError("walk length bound must be >= 0")
    adj = g.out_edges()
    vlab = [_enc(lab) for lab in g.vertex_labels]
    totals: Counter[bytes] = Counter()
    state: list[dict[bytes, int]] = [
        {_digest(b"rw0", vlab[v]): 1} for v in range(g.vertex_count)
    ]
    for v in range(g.vertex_count):
        totals.update(state[v])
    for _ in range(k):
        nxt: list[dict[bytes, int]] = [{} for _ in range(g.vertex_count)]
        for u in range(g.vertex_count):
            if not state[u]:
                continue
            for w, elab in adj[u]:
                enc_e = _enc(elab)
                bucket = nxt[w]
                for key, c in state[u].items():
                    nk = _digest(b"rws", key, enc_e, vlab[w])
                    bucket[nk] = bucket.get(nk, 0) + c
        state = nxt
        for v in range(g.vertex_count):
            totals.update(state[v])
    return FeatureVector(kind="rw", param=k, counts=dict(totals))


# ---------------------------------------------------------------------------
# Weisfeiler-Lehman subtree features
# ---------------------------------------------------------------------------


def _wl_initial_colors(g: StaticLabeledGraph) -> list[bytes]:
    return [_digest(b"wl0", _enc(lab)) for lab in g.vertex_labels]


def _wl_refine(g: StaticLabeledGraph, colors: list[bytes]) -> list[bytes]:
    """One round of color refinement.

    Directed graphs refine with separate in- and out-neighbor multisets so
    the orientation (and hence the encoded time direction of the
    expansions) is preserved; edge labels, when present, are paired with the
    neighbor color inside the multiset.
    """
    n = g.vertex_count
    if g.directed:
        ins: list[list[bytes]] = [[] for _ in range(n)]
        outs: list[list[bytes]] = [[] for _ in range(n)]
        for u, v, lab in g.edges:
            item_out = _digest(b"it", colors[v], _enc(lab))
            item_in = _digest(b"it", colors[u], _enc(lab))
            outs[u].append(item_out)
            ins[v].append(item_in)
        return [
            _digest(b"wld", colors[v], *sorted(ins[v]), b"/", *sorted(outs[v]))
            for v in range(n)
        ]
    nbrs: list[list[bytes]] = [[] for _ in range(n)]
    for u, v, lab in g.edges:
        nbrs[u].append(_digest(b"it", colors[v], _enc(lab)))
        nbrs[v].append(_digest(b"it", colors[u], _enc(lab)))
    return [_digest(b"wlu", colors[v], *sorted(nbrs[v])) for v in range(n)]


def wl_color_sequence(g: StaticLabeledGraph, h: int) -> list[list[bytes]]:
    """Vertex colors after each refinement round 0..h."""
    if h < 0:
        raise KernelMismatchError("iteration count must be >= 0")
    rounds = [_wl_initial_colors(g)]
    for _ in range(h):
        rounds.append(_wl_refine(g, rounds[-1]))
    return rounds


def wl_feature_maps_upto(g: StaticLabeledGraph, h_max: int) -> list[FeatureVector]:
    """Feature maps for every iteration count 0..h_max (shared refinement)."""
    rounds = wl_color_sequence(g, h_max)
    counts: dict[bytes, int] = {}
    out = []
    for i, colors in enumerate(rounds):
        for c in colors:
            key = _digest(b"wlf", bytes([i]), c)
            counts[key] = counts.get(key, 0) + 1
        out.append(FeatureVector(kind="wl", param=i, counts=dict(counts)))
    return out


def wl_feature_map(g: StaticLabeledGraph, h: int) -> FeatureVector:
    """Concatenated color histograms of h refinement rounds (plus round 0)."""
    return wl_feature_maps_upto(g, h)[-1]


# ---------------------------------------------------------------------------
# Gram assembly and normalization
# ---------------------------------------------------------------------------


def _pairwise_int64_safe(features: Sequence[FeatureVector]) -> bool:
    stats = [
        (len(f.counts), max(f.counts.values(), default=0)) for f in features
    ]
    worst = 0
    for i, (nnz_i, max_i) in enumerate(stats):
        for nnz_j, max_j in stats[i:]:
            worst = max(worst, min(nnz_i, nnz_j) * max_i * max_j)
    return worst < _INT64_SAFE


def gram(
    features: Sequence[FeatureVector],
    ids: Sequence[str] | None = None,
    normalized: bool = False,
) -> GramMatrix:
    """Matrix of pairwise feature inner products.

    All feature vectors must come from the same kernel kind and parameter.
    Uses int64 sparse algebra when provably overflow-free, otherwise exact
    arbitrary-precision arithmetic.
    """
    features = list(features)
    if not features:
        raise KernelMismatchError("need at least one feature vector")
    kind, param = features[0].kind, features[0].param
    for f in features:
        if (f.kind, f.param) != (kind, param):
            raise KernelMismatchError(
                f"mixed kernels in one Gram: {kind}/{param} vs {f.kind}/{f.param}"
            )
    n = len(features)
    if ids is None:
        ids = [str(i) for i in range(n)]
    if len(ids) != n:
        raise KernelMismatchError("one id per feature vector required")

    if _pairwise_int64_safe(features):
        from scipy import sparse

        columns: dict[bytes, int] = {}
        indptr = [0]
        indices: list[int] = []
        data: list[int] = []
        for f in features:
            for key, c in f.counts.items():
                indices.append(columns.setdefault(key, len(columns)))
                data.append(c)
            indptr.append(len(indices))
        x = sparse.csr_matrix(
            (
                np.asarray(data, dtype=np.int64),
                np.asarray(indices, dtype=np.int64),
                np.asarray(indptr, dtype=np.int64),
            ),
            shape=(n, max(len(columns), 1)),
        )
        raw = (x @ x.T).toarray().astype(np.float64)
    else:
        raw = np.empty((n, n), dtype=np.float64)
        for i, fi in enumerate(features):
            for j in range(i, n):
                v = 0
                a, b = fi.counts, features[j].counts
                if len(a) > len(b):
                    a, b = b, a
                for key, c in a.items():
                    if key in b:
                        v += c * b[key]
                raw[i, j] = raw[j, i] = float(v)
    denoms = np.asarray([f.denom for f in features], dtype=np.float64)
    values = raw / np.outer(denoms, denoms)
    m = GramMatrix(values=values, ids=tuple(ids), kind=kind, param=param)
    return normalize(m) if normalized else m


def normalize(m: GramMatrix) -> GramMatrix:
    """Cosine normalization K(i,j) / sqrt(K(i,i) K(j,j)); unit diagonal."""
    diag = np.diag(m.values)
    bad = np.flatnonzero(diag <= 0.0)
    if bad.size:
        raise NormalizationError(
            f"graph {m.ids[bad[0]]!r} has no features (zero self-similarity)"
        )
    scale = 1.0 / np.sqrt(diag)
    values = m.values * np.outer(scale, scale)
    np.fill_diagonal(values, 1.0)
    return GramMatrix(values=values, ids=m.ids, kind=m.kind, param=m.param, normalized=True)


# ---------------------------------------------------------------------------
# Text format: comment header with metadata, one row of graph ids, then the
# matrix rows at 17 significant digits.
# ---------------------------------------------------------------------------


def write_gram(m: GramMatrix) -> str:
    lines = [
        f"# kernel={m.kind} param={m.param} normalized={int(m.normalized)}",
        " ".join(m.ids),
    ]
    for row in m.values:
        lines.append(" ".join(format(v, ".17g") for v in row))
    return "\n".join(lines) + "\n"


def read_gram(text: str) -> GramMatrix:
    kind, param, normalized = "unknown", -1, False
    ids: tuple[str, ...] | None = None
    rows: list[list[float]] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                if key == "kernel":
                    kind = val
                elif key == "param":
                    param = int(val)
                elif key == "normalized":
                    normalized = bool(int(val))
            continue
        if ids is None:
            ids = tuple(line.split())
        else:
            rows.append([float(v) for v in line.split()])
    if ids is None:
        raise KernelMismatchError("gram file has no id header row")
    return GramMatrix(
        values=np.asarray(rows, dtype=np.float64),
        ids=ids,
        kind=kind,
        param=param,
        normalized=normalized,
    )

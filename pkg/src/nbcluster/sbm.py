"""Two-community stochastic block model: parameters, sampling, graph queries.

Graphs are stored as immutable CSR arrays (``indptr``, ``indices``) with sorted
neighbor lists.  Labels, when present, are int8 vectors in {-1, +1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp


@dataclass(frozen=True)
class SbmParams:
    """Model G(n, a/n, b/n).  ``d`` and ``s`` are always derived from ``a`` and ``b``."""

    n: int
    a: float
    b: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not (0 < self.a < self.n):
            raise ValueError(f"need 0 < a < n, got a={self.a}, n={self.n}")
        if not (0 <= self.b < self.n):
            raise ValueError(f"need 0 <= b < n, got b={self.b}, n={self.n}")

    @property
    def d(self) -> float:
        return (self.a + self.b) / 2

    @property
    def s(self) -> float:
        return (self.a - self.b) / 2

    @property
    def snr(self) -> float:
        """s^2 / d; detection is possible above 1."""
        return self.s**2 / self.d

    @classmethod
    def from_d_s(cls, n: int, d: float, s: float) -> "SbmParams":
        return cls(n=n, a=d + s, b=d - s)

    @classmethod
    def from_snr(cls, n: int, d: float, snr: float) -> "SbmParams":
        """Parameters with mean degree ``d`` and s^2/d = ``snr`` (s >= 0).

        Requires snr <= d, otherwise b would be negative.
        """
        s = math.sqrt(snr * d)
        if s > d:
            raise ValueError(
                f"s^2/d = {snr} is unreachable at d = {d} (needs b = {d - s:.4g} < 0)"
            )
        return cls.from_d_s(n, d, s)


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LabelledGraph:
    """Undirected simple graph in CSR form with optional hidden labels."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    labels: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "indptr", _readonly(np.asarray(self.indptr, dtype=np.int64)))
        object.__setattr__(self, "indices", _readonly(np.asarray(self.indices, dtype=np.int64)))
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (self.n,):
                raise ValueError("labels must have length n")
            if not np.all((labels == 1) | (labels == -1)):
                raise ValueError("labels must be exactly -1 or +1")
            object.__setattr__(self, "labels", _readonly(labels.astype(np.int8)))
        if self.indptr.shape != (self.n + 1,):
            raise ValueError("indptr must have length n + 1")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges, labels=None) -> "LabelledGraph":
        """Build from an iterable or (m, 2) array of undirected edges.

        Self-loops and repeated edges raise ``ValueError``.
        """
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        key = lo * n + hi
        if np.unique(key).size != key.size:
            raise ValueError("duplicate edges are not allowed")
        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        return cls(n=n, indptr=indptr, indices=cols, labels=labels)

    @classmethod
    def from_adjacency(cls, adj, labels=None) -> "LabelledGraph":
        a = sp.csr_array(adj)
        n = a.shape[0]
        coo = sp.triu(a, k=1).tocoo()
        return cls.from_edges(n, np.column_stack([coo.row, coo.col]), labels=labels)

    def without_labels(self) -> "LabelledGraph":
        return LabelledGraph(self.n, self.indptr, self.indices, None)

    # -- queries -----------------------------------------------------------

    @cached_property
    def degrees(self) -> np.ndarray:
        return _readonly(np.diff(self.indptr))

    @property
    def num_edges(self) -> int:
        return int(self.indices.size // 2)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < nb.size and nb[i] == v)

    def edges(self) -> np.ndarray:
        """(m, 2) array of edges with u < v, sorted."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees)
        mask = rows < self.indices
        return np.column_stack([rows[mask], self.indices[mask]])

    @cached_property
    def adjacency(self) -> sp.csr_array:
        data = np.ones(self.indices.size, dtype=np.float64)
        return sp.csr_array((data, self.indices, self.indptr), shape=(self.n, self.n))

    def dense_adjacency(self) -> np.ndarray:
        return self.adjacency.toarray()

    def check_invariants(self) -> None:
        """Raise ``AssertionError`` if the CSR structure is not a simple undirected graph."""
        for v in range(self.n):
            nb = self.neighbors(v)
            assert np.all(np.diff(nb) > 0), f"neighbors of {v} not strictly sorted"
            assert not np.any(nb == v), f"self-loop at {v}"
        a = self.adjacency
        assert (a != a.T).nnz == 0, "adjacency not symmetric"


# -- sampling ------------------------------------------------------------------


def make_rng(seed, *stream) -> np.random.Generator:
    """PCG64 generator for ``seed`` and an optional substream path of ints."""
    if isinstance(seed, np.random.Generator):
        return seed
    entropy = [int(seed)] + [int(x) for x in stream]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def _geometric_positions(rng: np.random.Generator, total: int, p: float) -> np.ndarray:
    """Indices in [0, total) each kept independently with probability p, via geometric skips."""
    if total <= 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    out = []
    pos = -1
    mean = total * p
    chunk = int(mean + 6 * math.sqrt(mean) + 64)
    while True:
        gaps = rng.geometric(p, size=chunk)
        steps = pos + np.cumsum(gaps)
        inside = steps < total
        if not inside.all():
            out.append(steps[inside])
            break
        out.append(steps)
        pos = int(steps[-1])
        chunk = max(64, chunk // 4)
    return np.concatenate(out).astype(np.int64)


def _decode_triangular(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map linear index t = j(j-1)/2 + i to the pair (i, j) with i < j."""
    j = np.floor((1.0 + np.sqrt(1.0 + 8.0 * t.astype(np.float64))) / 2.0).astype(np.int64)
    j -= (j * (j - 1) // 2 > t).astype(np.int64)
    j += ((j + 1) * j // 2 <= t).astype(np.int64)
    i = t - j * (j - 1) // 2
    return i, j


def sample_sbm(params: SbmParams, seed) -> LabelledGraph:
    """Draw a labelled graph from G(n, a/n, b/n).

    Labels are i.i.d. uniform; within-class pairs appear with probability a/n and
    between-class pairs with probability b/n.  Expected work is O(n + m).
    """
    n = params.n
    rng = make_rng(seed)
    labels = (rng.integers(0, 2, size=n, dtype=np.int8) * 2 - 1).astype(np.int8)
    plus = np.flatnonzero(labels == 1)
    minus = np.flatnonzero(labels == -1)
    p_in, p_out = params.a / n, params.b / n

    chunks = []
    for members in (plus, minus):
        m = members.size
        t = _geometric_positions(rng, m * (m - 1) // 2, p_in)
        i, j = _decode_triangular(t)
        chunks.append(np.column_stack([members[i], members[j]]))
    t = _geometric_positions(rng, plus.size * minus.size, p_out)
    chunks.append(np.column_stack([plus[t // max(minus.size, 1)], minus[t % max(minus.size, 1)]]))
    edges = np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    return LabelledGraph.from_edges(n, edges, labels=labels)


# -- metrics and neighborhoods ---------------------------------------------------


def _check_labelling(x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("labelling must be one-dimensional")
    if not np.all((x == 1) | (x == -1)):
        raise ValueError("labelling entries must be -1 or +1")
    return x.astype(np.int64)


def overlap(sigma, tau) -> float:
    """|(1/n) sum_v sigma_v tau_v|, the sign-invariant agreement of two labellings."""
    a, b = _check_labelling(sigma), _check_labelling(tau)
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} != {b.size}")
    if a.size == 0:
        return 0.0
    return abs(int(a @ b)) / a.size


def ball(graph: LabelledGraph, v: int, r: int) -> np.ndarray:
    """Sorted vertices at graph distance <= r from v."""
    if not 0 <= v < graph.n:
        raise IndexError(f"vertex {v} out of range")
    if r < 0:
        return np.empty(0, dtype=np.int64)
    seen = np.zeros(graph.n, dtype=bool)
    seen[v] = True
    frontier = np.array([v], dtype=np.int64)
    for _ in range(r):
        if frontier.size == 0:
            break
        nb = np.concatenate([graph.neighbors(u) for u in frontier])
        nb = np.unique(nb[~seen[nb]])
        seen[nb] = True
        frontier = nb
    return np.flatnonzero(seen)


def sphere(graph: LabelledGraph, v: int, r: int) -> np.ndarray:
    """Vertices at distance exactly r: ball(v, r) minus ball(v, r - 1)."""
    return np.setdiff1d(ball(graph, v, r), ball(graph, v, r - 1), assume_unique=True)


def ball_matrix(graph: LabelledGraph, r: int) -> sp.csr_array:
    """Boolean n x n matrix whose row v is the indicator of ball(v, r).  Empty for r < 0."""
    n = graph.n
    if r < 0:
        return sp.csr_array((n, n), dtype=bool)
    reach = sp.eye_array(n, dtype=np.int32, format="csr")
    step = (graph.adjacency + sp.eye_array(n, format="csr")).astype(np.int32)
    for _ in range(r):
        reach = (reach @ step).astype(bool).astype(np.int32)
    out = reach.astype(bool).tocsr()
    out.sort_indices()
    return out


def sphere_matrix(graph: LabelledGraph, r: int) -> sp.csr_array:
    """Boolean n x n matrix whose row v is the sphere of radius r around v."""
    inner = ball_matrix(graph, r - 1).astype(np.int8)
    outer = ball_matrix(graph, r).astype(np.int8)
    out = (outer - inner).astype(bool).tocsr()
    out.eliminate_zeros()
    return out


def induced_subgraph(graph: LabelledGraph, keep) -> tuple[LabelledGraph, np.ndarray]:
    """Subgraph on ``keep`` plus the map ``new index -> old index`` (sorted)."""
    keep = np.unique(np.asarray(keep, dtype=np.int64))
    if keep.size and (keep[0] < 0 or keep[-1] >= graph.n):
        raise IndexError("vertex out of range")
    sub = graph.adjacency[keep][:, keep].tocsr()
    sub.sort_indices()
    labels = None if graph.labels is None else graph.labels[keep]
    g = LabelledGraph(n=keep.size, indptr=sub.indptr, indices=sub.indices, labels=labels)
    return g, keep


# -- file formats -------------------------------------------------------------------


def write_edge_list(path, graph: LabelledGraph) -> None:
    """One ``u v`` line per edge, 0-based, u < v, no header."""
    e = graph.edges()
    with open(path, "w") as fh:
        for u, v in e:
            fh.write(f"{u} {v}\n")


def write_labels(path, labels: Iterable[int]) -> None:
    with open(path, "w") as fh:
        for x in labels:
            fh.write(f"{int(x)}\n")


def read_labels(path) -> np.ndarray:
    vals = [int(line) for line in Path(path).read_text().split()]
    return _check_labelling(np.array(vals, dtype=np.int64)).astype(np.int8)


def read_edge_list(path, n: Optional[int] = None, labels=None) -> LabelledGraph:
    """Read an edge-list file.  Without ``n`` the vertex count is max index + 1
    (or the label count, if labels are given)."""
    text = Path(path).read_text().split()
    e = np.array(text, dtype=np.int64).reshape(-1, 2)
    if e.size and np.any(e[:, 0] >= e[:, 1]):
        raise ValueError("edge list lines must satisfy u < v")
    if n is None:
        n = int(e.max()) + 1 if e.size else 0
        if labels is not None:
            n = max(n, len(labels))
    return LabelledGraph.from_edges(n, e, labels=labels)

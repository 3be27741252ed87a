"""Exhaustive path machinery on the complete graph.

Everything here is exponential-time and meant for tiny instances: it is the
ground truth the fast engine and the moment formulas are checked against.
Paths live in the complete graph because a non-edge still carries weight -d/n.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .sbm import LabelledGraph, SbmParams

MAX_N = 12
MAX_K = 7


class CapExceeded(ValueError):
    """Raised when an exhaustive computation would exceed its configured size cap."""


def _edge(x: int, y: int) -> tuple[int, int]:
    return (x, y) if x < y else (y, x)


# -- classification ------------------------------------------------------------------


@dataclass(frozen=True)
class PathRecord:
    vertices: tuple[int, ...]
    k_n: int
    k_o: int
    k_r: int
    backtracks: int

    @property
    def length(self) -> int:
        return len(self.vertices) - 1

    @property
    def num_vertices(self) -> int:
        return len(set(self.vertices))

    @property
    def num_edges(self) -> int:
        return len(path_edge_counts(self.vertices))

    @property
    def is_non_backtracking(self) -> bool:
        return self.backtracks == 0

    @property
    def is_self_avoiding(self) -> bool:
        return self.num_vertices == len(self.vertices)


def classify_edges(path: Sequence[int]) -> PathRecord:
    """Label every step new, old or returning and count backtracks.

    A step is new if it reaches an unvisited vertex, old if it repeats an
    earlier (undirected) edge, and returning otherwise.
    """
    path = tuple(int(x) for x in path)
    if not path:
        raise ValueError("empty path")
    seen_v = {path[0]}
    seen_e: set[tuple[int, int]] = set()
    k_n = k_o = k_r = 0
    for x, y in zip(path, path[1:]):
        if x == y:
            raise ValueError(f"consecutive duplicate vertex {x}")
        e = _edge(x, y)
        if y not in seen_v:
            k_n += 1
        elif e in seen_e:
            k_o += 1
        else:
            k_r += 1
        seen_v.add(y)
        seen_e.add(e)
    backtracks = sum(1 for i in range(len(path) - 2) if path[i] == path[i + 2])
    return PathRecord(path, k_n, k_o, k_r, backtracks)


def path_edge_counts(path: Sequence[int]) -> Counter:
    """Undirected edge -> number of traversals."""
    return Counter(_edge(x, y) for x, y in zip(path, path[1:]))


# -- enumeration -----------------------------------------------------------------------


def _check_caps(n: int, k: int, max_n: int, max_k: int) -> None:
    if n > max_n or k > max_k:
        raise CapExceeded(f"n={n}, k={k} exceeds caps n<={max_n}, k<={max_k}")


@lru_cache(maxsize=8)
def _nb_levels(n: int, k: int):
    """Prefix tree of all non-backtracking paths in K_n up to length k.

    Level t holds (parent index into level t-1, last vertex).  Level 0 is the
    n single-vertex paths.
    """
    levels = [(np.full(n, -1, dtype=np.int64), np.arange(n, dtype=np.int64))]
    prev_vertex = np.full(n, -1, dtype=np.int64)
    for _ in range(k):
        parent_idx, last = levels[-1]
        m = last.size
        cand = np.tile(np.arange(n, dtype=np.int64), m)
        par = np.repeat(np.arange(m, dtype=np.int64), n)
        ok = (cand != last[par]) & (cand != prev_vertex[par])
        par, cand = par[ok], cand[ok]
        prev_vertex = last[par]
        levels.append((par, cand))
    return levels


def nb_path_array(n: int, k: int, *, max_n: int = MAX_N, max_k: int = MAX_K) -> np.ndarray:
    """All non-backtracking paths of length k in K_n as an array of shape (count, k + 1)."""
    _check_caps(n, k, max_n, max_k)
    levels = _nb_levels(n, k)
    idx = np.arange(levels[k][1].size)
    cols = []
    for t in range(k, -1, -1):
        par, vert = levels[t]
        cols.append(vert[idx])
        idx = par[idx]
    return np.column_stack(cols[::-1]) if cols else np.empty((0, 1), dtype=np.int64)


def enumerate_nb_paths(n: int, k: int, u: int, v: int, *, max_n: int = MAX_N,
                       max_k: int = MAX_K) -> list[tuple[int, ...]]:
    """Every non-backtracking path u = u_0, ..., u_k = v in the complete graph K_n."""
    arr = nb_path_array(n, k, max_n=max_n, max_k=max_k)
    sel = (arr[:, 0] == u) & (arr[:, -1] == v)
    return [tuple(int(x) for x in row) for row in arr[sel]]


def enumerate_saw_paths(n: int, k: int, u: int, v: int, *, max_n: int = MAX_N,
                        max_k: int = MAX_K) -> list[tuple[int, ...]]:
    """Every self-avoiding path of length k from u to v in K_n."""
    _check_caps(n, k, max_n, max_k)
    if k == 0:
        return [(u,)] if u == v else []
    if u == v:
        return []
    others = [w for w in range(n) if w != u and w != v]
    return [(u, *mid, v) for mid in itertools.permutations(others, k - 1)]


# -- weights -----------------------------------------------------------------------


def weight_matrix(graph: LabelledGraph, d: float, n_ref: Optional[int] = None) -> np.ndarray:
    """W_e = 1{e in E} - d/n for every ordered pair (diagonal unused)."""
    n_model = graph.n if n_ref is None else n_ref
    W = graph.dense_adjacency() - d / n_model
    np.fill_diagonal(W, 0.0)
    return W


def path_weight(graph: LabelledGraph, d: float, path: Sequence[int], n_ref: Optional[int] = None) -> float:
    """X_gamma: product over steps of (1 - d/n) on edges and (-d/n) on non-edges."""
    n_model = graph.n if n_ref is None else n_ref
    r = d / n_model
    out = 1.0
    for x, y in zip(path, path[1:]):
        out *= (1.0 - r) if graph.has_edge(int(x), int(y)) else -r
    return out


def nb_matrix_bruteforce(graph: LabelledGraph, d: float, k: int, n_ref: Optional[int] = None,
                         *, max_n: int = MAX_N, max_k: int = MAX_K) -> np.ndarray:
    """The full matrix N^(k) by summing X_gamma over every enumerated path."""
    n = graph.n
    _check_caps(n, k, max_n, max_k)
    if k == 0:
        return np.eye(n)
    W = weight_matrix(graph, d, n_ref)
    levels = _nb_levels(n, k)
    weights = np.ones(n)
    start = np.arange(n)
    for t in range(1, k + 1):
        par, vert = levels[t]
        prev_last = levels[t - 1][1][par]
        weights = weights[par] * W[prev_last, vert]
        start = start[par]
    out = np.bincount(start * n + levels[k][1], weights=weights, minlength=n * n)
    return out.reshape(n, n)


def nb_sum_bruteforce(graph: LabelledGraph, d: float, k: int, u: int, v: int,
                      n_ref: Optional[int] = None) -> float:
    """N^(k)_{u,v} as an explicit sum over enumerated non-backtracking paths."""
    if k == 0:
        return 1.0 if u == v else 0.0
    return float(sum(path_weight(graph, d, p, n_ref) for p in enumerate_nb_paths(graph.n, k, u, v)))


def saw_sum_bruteforce(graph: LabelledGraph, d: float, k: int, u: int, v: int,
                       n_ref: Optional[int] = None) -> float:
    """Y_{u,v}: the same sum restricted to self-avoiding paths."""
    if u == v:
        raise ValueError("self-avoiding sums need distinct endpoints")
    return float(sum(path_weight(graph, d, p, n_ref) for p in enumerate_saw_paths(graph.n, k, u, v)))


def path_sums_batch(W: np.ndarray, paths: np.ndarray) -> np.ndarray:
    """sum_gamma prod W[gamma_i, gamma_{i+1}] for a batch of weight matrices.

    ``W`` has shape (T, n, n); ``paths`` is (count, k + 1).  Returns shape (T,).
    """
    paths = np.asarray(paths, dtype=np.int64)
    prod = np.ones((W.shape[0], paths.shape[0]))
    for i in range(paths.shape[1] - 1):
        prod *= W[:, paths[:, i], paths[:, i + 1]]
    return prod.sum(axis=1)


# -- SAW decompositions ----------------------------------------------------------------


@dataclass(frozen=True)
class SawDecomposition:
    """Segments (self-avoiding paths or simple cycles) with traversal counts.

    ``endpoints`` is the cut set V_end.  Segments keep the orientation of their
    first traversal.
    """

    segments: tuple[tuple[int, ...], ...]
    multiplicities: tuple[int, ...]
    endpoints: frozenset

    @property
    def r(self) -> int:
        return len(self.segments)

    def edge_multiset(self) -> Counter:
        out: Counter = Counter()
        for seg, m in zip(self.segments, self.multiplicities):
            for e in path_edge_counts(seg):
                out[e] += m
        return out

    def edge_multiplicities(self) -> dict[tuple[int, int], int]:
        return dict(self.edge_multiset())


def _same_segment(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    if a == b or a == b[::-1]:
        return True
    if a[0] == a[-1] and b[0] == b[-1] and len(a) == len(b):
        # a closed cycle met from the same cut vertex, possibly reversed
        return a[0] == b[0] and (a[1:-1] == b[1:-1] or a[1:-1] == b[1:-1][::-1])
    return False


def canonical_saw_decomposition(path: Sequence[int], U: Iterable[int] = ()) -> SawDecomposition:
    """Cut ``path`` at every visit to V_end = U + degree>=3 vertices + endpoints + backtrack vertices.

    Pieces between consecutive cuts are merged when they coincide (in either
    direction); the merge count is the multiplicity.
    """
    path = tuple(int(x) for x in path)
    if len(path) < 2:
        return SawDecomposition((), (), frozenset(path))
    deg: Counter = Counter()
    for x, y in path_edge_counts(path):
        deg[x] += 1
        deg[y] += 1
    back = {path[i + 1] for i in range(len(path) - 2) if path[i] == path[i + 2]}
    v_end = set(U) | {v for v, c in deg.items() if c >= 3} | {path[0], path[-1]} | back
    pieces = []
    start = 0
    for j in range(1, len(path)):
        if path[j] in v_end:
            pieces.append(path[start : j + 1])
            start = j
    segments: list[tuple[int, ...]] = []
    mult: list[int] = []
    for piece in pieces:
        for i, seg in enumerate(segments):
            if _same_segment(seg, piece):
                mult[i] += 1
                break
        else:
            segments.append(piece)
            mult.append(1)
    return SawDecomposition(tuple(segments), tuple(mult), frozenset(v_end))


def check_decomposition(path: Sequence[int], dec: SawDecomposition) -> None:
    """Assert the structural requirements of a SAW decomposition of ``path``."""
    path = tuple(path)
    ends = {path[0], path[-1]}
    for i, seg in enumerate(dec.segments):
        closed = seg[0] == seg[-1]
        body = seg[:-1] if closed else seg
        assert len(set(body)) == len(body), f"segment {seg} not self-avoiding"
        interior = set(seg[1:-1])
        assert not (interior & ends), f"segment {seg} has a path endpoint inside"
        for j, other in enumerate(dec.segments):
            if i != j:
                assert not (interior & set(other)), f"segments {seg} and {other} share an interior vertex"
    assert dec.edge_multiset() == path_edge_counts(path), "segments do not reproduce the edge multiset"


# -- tangles ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class TangleReport:
    is_tangle_free: bool
    witness: Optional[tuple[int, int, int]] = None  # (vertex, ball vertices, ball edges)
    t: Optional[int] = None


def _ball_counts(graph: LabelledGraph, ell: int) -> tuple[np.ndarray, np.ndarray]:
    from .sbm import ball_matrix

    B = ball_matrix(graph, ell).astype(np.float64)
    nv = np.diff(B.indptr)
    ne = np.asarray((B @ graph.adjacency).multiply(B).sum(axis=1)).ravel() / 2
    return nv, ne.astype(np.int64)


def is_tangle_free(graph: LabelledGraph, ell: int) -> TangleReport:
    """True iff every radius-ell ball induces at most one cycle.

    A ball induces a connected subgraph, so "at most one cycle" is
    #edges <= #vertices.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if graph.n == 0:
        return TangleReport(True)
    nv, ne = _ball_counts(graph, ell)
    bad = np.flatnonzero(ne > nv)
    if bad.size:
        v = int(bad[0])
        return TangleReport(False, witness=(v, int(nv[v]), int(ne[v])))
    return TangleReport(True)


def _edges_graph(edges: Sequence[tuple[int, int]]) -> LabelledGraph:
    verts = sorted({x for e in edges for x in e})
    idx = {v: i for i, v in enumerate(verts)}
    return LabelledGraph.from_edges(len(verts), [(idx[x], idx[y]) for x, y in edges])


def tangle_count(path: Sequence[int], ell: int, *, max_edges: int = 20) -> int:
    """Minimal total multiplicity of edges whose removal leaves the path's graph ell-tangle-free."""
    counts = path_edge_counts(path)
    edges = sorted(counts)
    if len(edges) > max_edges:
        raise CapExceeded(f"{len(edges)} distinct edges exceeds cap {max_edges}")
    if not edges or is_tangle_free(_edges_graph(edges), ell).is_tangle_free:
        return 0
    mult = [counts[e] for e in edges]
    best = sum(mult)
    # subsets in increasing total multiplicity; stop at the first feasible cost
    by_cost: dict[int, list[tuple[int, ...]]] = {}
    for size in range(1, len(edges) + 1):
        for combo in itertools.combinations(range(len(edges)), size):
            by_cost.setdefault(sum(mult[i] for i in combo), []).append(combo)
    for cost in sorted(by_cost):
        if cost >= best:
            break
        for combo in by_cost[cost]:
            drop = set(combo)
            rest = [e for i, e in enumerate(edges) if i not in drop]
            if not rest or is_tangle_free(_edges_graph(rest), ell).is_tangle_free:
                return cost
    return best


# -- exact expectations ----------------------------------------------------------------------


def exact_edge_expectation(params: SbmParams, edge_mult: Mapping[tuple[int, int], int],
                           fixed_labels: Mapping[int, int], *, max_free: int = 16) -> float:
    """E[prod_e W_e^{m_e} | labels on ``fixed_labels``] for distinct vertex pairs e.

    Free vertices are summed over all 2^#free labellings; for each labelling every
    edge's two outcomes (present with probability (d + s tau_x tau_y)/n, absent
    otherwise) are summed, which is the full outcome sum since edges are
    conditionally independent.
    """
    n, d, s = params.n, params.d, params.s
    r = d / n
    edges = list(edge_mult.items())
    verts = sorted({x for (e, _) in edges for x in e} | set(fixed_labels))
    free = [v for v in verts if v not in fixed_labels]
    if len(free) > max_free:
        raise CapExceeded(f"{len(free)} free vertices exceeds cap {max_free}")
    col = {v: i for i, v in enumerate(verts)}
    L = np.ones((2 ** len(free), len(verts)))
    for v, x in fixed_labels.items():
        if v in col:
            L[:, col[v]] = x
    if free:
        grid = np.array(list(itertools.product((-1.0, 1.0), repeat=len(free))))
        for j, v in enumerate(free):
            L[:, col[v]] = grid[:, j]
    total = np.ones(L.shape[0])
    for (x, y), m in edges:
        prob = (d + s * L[:, col[x]] * L[:, col[y]]) / n
        total *= (1.0 - r) ** m * prob + (-r) ** m * (1.0 - prob)
    return float(total.mean())


def exact_path_expectation(params: SbmParams, decomposition: SawDecomposition,
                           endpoint_labels: Mapping[int, int], **kw) -> float:
    """E[prod_i prod_{e in segment i} W_e^{m_i} | labels on V_end], by exhaustive summation."""
    return exact_edge_expectation(params, decomposition.edge_multiplicities(), endpoint_labels, **kw)


def segment_weight_closed_form(params: SbmParams, z: int, m: int, sigma_u: int, sigma_v: int) -> float:
    """Closed-form expected weight of a length-z self-avoiding segment traversed m times.

    Exact for m = 1; for m >= 2 this is the leading-order form, accurate up to a
    factor 1 + O(d m z / n).
    """
    n, d, s = params.n, params.d, params.s
    if m == 1:
        return sigma_u * sigma_v * s**z / n**z
    return (sigma_u * sigma_v * s**z + d**z) / n**z


# -- counting bounds ---------------------------------------------------------------------------


def constant_returns_bound(n: int, k_n: int, k_r: int, C: float) -> float:
    """n^(k_n + k_r/2 + C log(2 e k_r)), the cap on fixed-endpoint paths with given k_n, k_r >= 1."""
    return n ** (k_n + k_r / 2 + C * math.log(2 * math.e * k_r))


def few_tangles_bound(n: int, k: int, k_n: int, k_r: int, t: int, ell: int) -> float:
    """k^(5 k_r + 4 k_r k / ell + 8 k_r t) n^(k_n - 1)."""
    return k ** (5 * k_r + 4 * k_r * k / ell + 8 * k_r * t) * float(n) ** (k_n - 1)


def two_saw_pairs_bound(n: int, k: int, k_n1: int, k_r1: int, v_prime_outside: bool) -> float:
    """Cap on pairs of length-k self-avoiding paths with given new/returning counts of the second
    relative to the first; ``v_prime_outside`` means v' is not in {u, v}."""
    return (2 * (k + 1) * math.comb(k, k_r1) * math.comb(k, k_r1 + 1) * (2 * k) ** k_r1
            * float(n) ** (k + k_n1 - 1 - int(v_prime_outside)))


def walk_type_counts(n: int, k_max: int, u: int, *, non_backtracking: bool = False,
                     on_path=None) -> Counter:
    """Count paths from u of length 1..k_max in K_n by (end, length, k_n, k_r).

    Depth-first over every path; ``on_path(record_tuple)`` is called for each
    path with (end, length, k_n, k_o, k_r, backtracks, distinct vertices, distinct edges).
    """
    out: Counter = Counter()
    vcount = [0] * n
    ecount: Counter = Counter()
    vcount[u] = 1
    state = {"kn": 0, "ko": 0, "kr": 0, "bt": 0, "nv": 1}

    def rec(path: list[int], length: int) -> None:
        x = path[-1]
        prev = path[-2] if len(path) > 1 else -1
        for y in range(n):
            if y == x or (non_backtracking and y == prev):
                continue
            e = (x, y) if x < y else (y, x)
            if vcount[y] == 0:
                kind = "kn"
            elif ecount[e] > 0:
                kind = "ko"
            else:
                kind = "kr"
            state[kind] += 1
            bt = int(y == prev)
            state["bt"] += bt
            new_v = vcount[y] == 0
            state["nv"] += int(new_v)
            vcount[y] += 1
            ecount[e] += 1
            out[(y, length + 1, state["kn"], state["kr"])] += 1
            if on_path is not None:
                on_path((y, length + 1, state["kn"], state["ko"], state["kr"], state["bt"],
                         state["nv"], len(ecount)))
            path.append(y)
            if length + 1 < k_max:
                rec(path, length + 1)
            path.pop()
            ecount[e] -= 1
            if ecount[e] == 0:
                del ecount[e]
            vcount[y] -= 1
            state["nv"] -= int(new_v)
            state["bt"] -= bt
            state[kind] -= 1

    rec([u], 0)
    return out


def relative_types(g1: Sequence[int], g2: Sequence[int]) -> tuple[int, int, int]:
    """(new, old, returning) counts of the steps of g2 relative to g1."""
    v1 = set(g1)
    e1 = set(path_edge_counts(g1))
    kn = ko = kr = 0
    for x, y in zip(g2, g2[1:]):
        if y not in v1:
            kn += 1
        elif _edge(x, y) in e1:
            ko += 1
        else:
            kr += 1
    return kn, ko, kr


def saw_pair_type_counts(n: int, k: int, u: int, v: int, u2: int, v2: int) -> Counter:
    """Pairs (g1: u->v, g2: u2->v2) of length-k self-avoiding paths by (k_n, k_r) of g2 relative to g1."""
    out: Counter = Counter()
    first = enumerate_saw_paths(n, k, u, v)
    second = enumerate_saw_paths(n, k, u2, v2)
    for g1 in first:
        for g2 in second:
            kn, _, kr = relative_types(g1, g2)
            out[(kn, kr)] += 1
    return out

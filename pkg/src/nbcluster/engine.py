"""Fast evaluation of N^(k) z through the four-block operator recursion.

The stack holds Q^(k, p) z, Q^(k-1, p) z, Q^(k, -r) z, Q^(k-1, -r) z with
p = 1 - r and r the weight offset (d / n of the generating model), where

    Q^(k, rho) = sum_{j <= k/2} rho^(2j) N^(k - 2j),    N^(0) = I.

One step multiplies by the 4n x 4n operator

    [ pA  -p^2 (D - I)  -r(J - A - I)  -r^2((n-1)I - D) ]
    [ I    0             0              0               ]
    [ pA  -p^2 D        -r(J - A - I)  -r^2((n-2)I - D) ]
    [ 0    0             I              0               ]

and the readout row uses D in place of D - I.  J (all ones) is applied as a
rank-one update, so each step costs O(n + m).  The vertex count n inside the
J and (n-1)I terms is the working graph's own size, while the weight offset r
may come from a larger parent model.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from .sbm import LabelledGraph

# per-step normalization is switched on automatically above this many steps
AUTO_NORMALIZE_K = 20


@dataclass(frozen=True)
class DegreeTable:
    degrees: np.ndarray
    num_edges: int

    @classmethod
    def of(cls, graph: LabelledGraph) -> "DegreeTable":
        deg = np.asarray(graph.degrees, dtype=np.float64)
        return cls(degrees=deg, num_edges=graph.num_edges)


@dataclass(frozen=True)
class NbStack:
    """Four stacked blocks at recursion level ``level``.

    Stored values times 2**log2_scale give the true blocks.  Blocks may be
    vectors (n,) or matrices (n, p) for batched right-hand sides.
    """

    q1: np.ndarray
    q2: np.ndarray
    q3: np.ndarray
    q4: np.ndarray
    level: int = 0
    log2_scale: int = 0

    @classmethod
    def initial(cls, z) -> "NbStack":
        z = np.asarray(z, dtype=np.float64)
        zero = np.zeros_like(z)
        return cls(q1=z.copy(), q2=zero, q3=z.copy(), q4=zero.copy(), level=0, log2_scale=0)

    def as_array(self) -> np.ndarray:
        """True (unscaled) 4n stack, for comparison with dense references."""
        return np.ldexp(np.concatenate([self.q1, self.q2, self.q3, self.q4]), self.log2_scale)


class MatvecResult(NamedTuple):
    values: np.ndarray
    log2_scale: int
    headroom: float

    def unscaled(self) -> np.ndarray:
        return np.ldexp(self.values, self.log2_scale)


class PairStatistic(NamedTuple):
    value: float
    log2_scale: int
    empty: bool

    def unscaled(self) -> float:
        return float(np.ldexp(self.value, self.log2_scale))


def _weights(graph: LabelledGraph, d: float, n_ref: Optional[int]) -> tuple[float, float]:
    n_model = graph.n if n_ref is None else n_ref
    r = d / n_model
    return 1.0 - r, r


def _shared_terms(graph, deg, p, r, stack):
    """Terms common to the first and third block rows, minus their diagonal parts."""
    A = graph.adjacency
    n = graph.n
    q1, q2, q3, q4 = stack.q1, stack.q2, stack.q3, stack.q4
    col = deg if q1.ndim == 1 else deg[:, None]
    # p A q1 - r (J - A - I) q3  ==  A (p q1 + r q3) - r * sum(q3) + r q3
    walk = A @ (p * q1 + r * q3)
    ones_part = r * q3.sum(axis=0)
    base = walk - ones_part + r * q3 - p * p * col * q2 - r * r * ((n - 1) - col) * q4
    scale_ref = max(_absmax(walk), _absmax(ones_part), _absmax(p * p * col * q2), _absmax(r * r * (n - 1) * q4))
    return base, scale_ref


def _absmax(x) -> float:
    x = np.asarray(x)
    return float(np.max(np.abs(x))) if x.size else 0.0


def apply_m(graph: LabelledGraph, d: float, stack: NbStack, *, n_ref: Optional[int] = None,
            normalize: bool = False, degrees: Optional[DegreeTable] = None) -> NbStack:
    """One step of the recursion: level k -> k + 1.

    With ``normalize`` the four blocks are multiplied by a common power of two
    bringing the largest entry into [1, 2); the exponent is added to log2_scale.
    """
    p, r = _weights(graph, d, n_ref)
    deg = (degrees or DegreeTable.of(graph)).degrees
    base, _ = _shared_terms(graph, deg, p, r, stack)
    # first row uses (D - I) and (n-1)I - D; third row uses D and (n-2)I - D
    new_q1 = base + p * p * stack.q2
    new_q3 = base + r * r * stack.q4
    out = NbStack(q1=new_q1, q2=stack.q1, q3=new_q3, q4=stack.q3,
                  level=stack.level + 1, log2_scale=stack.log2_scale)
    if normalize:
        out = _normalized(out)
    return out


def _normalized(stack: NbStack) -> NbStack:
    mx = max(_absmax(stack.q1), _absmax(stack.q2), _absmax(stack.q3), _absmax(stack.q4))
    if mx == 0.0 or not np.isfinite(mx):
        return stack
    e = -int(np.frexp(mx)[1]) + 1
    if e == 0:
        return stack
    return replace(stack, q1=np.ldexp(stack.q1, e), q2=np.ldexp(stack.q2, e),
                   q3=np.ldexp(stack.q3, e), q4=np.ldexp(stack.q4, e),
                   log2_scale=stack.log2_scale - e)


def apply_m_hat(graph: LabelledGraph, d: float, stack: NbStack, *, n_ref: Optional[int] = None,
                degrees: Optional[DegreeTable] = None) -> np.ndarray:
    """N^(level + 1) z in the stack's scale (first block row of the readout operator)."""
    p, r = _weights(graph, d, n_ref)
    deg = (degrees or DegreeTable.of(graph)).degrees
    base, _ = _shared_terms(graph, deg, p, r, stack)
    return base


def nb_matvec(graph: LabelledGraph, d: float, k: int, z, *, n_ref: Optional[int] = None,
              normalize: Optional[bool] = None) -> MatvecResult:
    """N^(k) z for a vector (n,) or a block of vectors (n, p).

    The true result is ``values * 2**log2_scale``.  ``normalize=None`` turns on
    per-step rescaling when k > 20.  ``headroom`` is the smallest ratio, over
    the steps, of the output magnitude to the largest term combined into it;
    values below ~1e-6 mean heavy cancellation.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    z = np.asarray(z, dtype=np.float64)
    if z.shape[0] != graph.n:
        raise ValueError("z must have one row per vertex")
    if k == 0:
        return MatvecResult(z.copy(), 0, 1.0)
    if normalize is None:
        normalize = k > AUTO_NORMALIZE_K
    p, r = _weights(graph, d, n_ref)
    deg = DegreeTable.of(graph).degrees
    stack = NbStack.initial(z)
    headroom = 1.0
    for _ in range(k - 1):
        base, ref = _shared_terms(graph, deg, p, r, stack)
        new_q1 = base + p * p * stack.q2
        new_q3 = base + r * r * stack.q4
        if ref > 0:
            headroom = min(headroom, max(_absmax(new_q1), _absmax(new_q3)) / ref)
        stack = NbStack(q1=new_q1, q2=stack.q1, q3=new_q3, q4=stack.q3,
                        level=stack.level + 1, log2_scale=stack.log2_scale)
        if normalize:
            stack = _normalized(stack)
    out, ref = _shared_terms(graph, deg, p, r, stack)
    if ref > 0:
        headroom = min(headroom, _absmax(out) / ref)
    return MatvecResult(out, stack.log2_scale, headroom)


def pair_statistic(graph: LabelledGraph, d: float, sources, targets, k: int, *,
                   n_ref: Optional[int] = None, normalize: Optional[bool] = None) -> PairStatistic:
    """sum_{t in targets} (N^(k) 1_sources)_t, returned in the engine's scale."""
    sources = np.asarray(list(sources) if not isinstance(sources, np.ndarray) else sources, dtype=np.int64)
    targets = np.asarray(list(targets) if not isinstance(targets, np.ndarray) else targets, dtype=np.int64)
    if sources.size == 0 or targets.size == 0:
        return PairStatistic(0.0, 0, True)
    z = np.zeros(graph.n)
    z[sources] = 1.0
    res = nb_matvec(graph, d, k, z, n_ref=n_ref, normalize=normalize)
    return PairStatistic(float(res.values[targets].sum()), res.log2_scale, False)


# -- dense references -------------------------------------------------------------


def dense_operators(graph: LabelledGraph, d: float, n_ref: Optional[int] = None):
    """Materialized (M, M_hat) as 4n x 4n arrays.  Small graphs only."""
    n = graph.n
    p, r = _weights(graph, d, n_ref)
    A = graph.dense_adjacency()
    D = np.diag(A.sum(axis=1))
    I = np.eye(n)
    J = np.ones((n, n))
    Z = np.zeros((n, n))
    M = np.block([
        [p * A, -p * p * (D - I), -r * (J - A - I), -r * r * ((n - 1) * I - D)],
        [I, Z, Z, Z],
        [p * A, -p * p * D, -r * (J - A - I), -r * r * ((n - 2) * I - D)],
        [Z, Z, I, Z],
    ])
    M_hat = np.block([
        [p * A, -p * p * D, -r * (J - A - I), -r * r * ((n - 1) * I - D)],
        [Z, Z, Z, Z],
        [Z, Z, Z, Z],
        [Z, Z, Z, Z],
    ])
    return M, M_hat


def q_matrix(n_mats: dict[int, np.ndarray], k: int, rho: float, n: int) -> np.ndarray:
    """Q^(k, rho) from a mapping level -> N^(level); zero for k < 0."""
    out = np.zeros((n, n))
    j = 0
    while k - 2 * j >= 0:
        out += rho ** (2 * j) * n_mats[k - 2 * j]
        j += 1
    return out


def stacked_q(n_mats: dict[int, np.ndarray], k: int, d: float, n: int, n_ref: Optional[int] = None) -> np.ndarray:
    """The 4n x n stack [Q^(k,p); Q^(k-1,p); Q^(k,-r); Q^(k-1,-r)]."""
    r = d / (n if n_ref is None else n_ref)
    p = 1.0 - r
    return np.vstack([
        q_matrix(n_mats, k, p, n),
        q_matrix(n_mats, k - 1, p, n),
        q_matrix(n_mats, k, -r, n),
        q_matrix(n_mats, k - 1, -r, n),
    ])

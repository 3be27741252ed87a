"""Anchor-oriented clustering from non-backtracking path sums.

The pipeline: drop ceil(sqrt n) random vertices, pick one of them (the
anchor) whose degree into the rest is close to a small target, then for a
series of rounds hide a random fraction of the graph and score each vertex
by the weighted path sum from the anchor's neighbours to the vertex's
R-sphere, plus a uniform dither, and take the sign.  A vertex is scored in
the first round whose hidden set swallows its (R-1)-ball but keeps its
R-sphere and the anchor's neighbours.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import stats

from .branching import calibrate_kappa
from .engine import nb_matvec
from .sbm import LabelledGraph, SbmParams, ball_matrix, induced_subgraph, make_rng, sphere_matrix

MIN_N = 1000
ALPHA_SAFETY = 1.05


class ThresholdError(ValueError):
    """Raised when s^2 <= d, where no parameter choice gives a signal."""


# s is often rebuilt as sqrt(snr * d), so s^2 = d can come back a few ulps high
THRESHOLD_RTOL = 1e-9


def _below_threshold(d: float, s: float) -> bool:
    return s * s <= d * (1.0 + THRESHOLD_RTOL)


@dataclass(frozen=True)
class AlgoParams:
    alpha: float
    k: int
    R: int
    delta: float
    s_prime: float
    d_prime: float
    kappa: float
    ell: int
    anchor_degree: int
    rounds: int
    # "keep_anchor": V_j = V' minus U_j.  "literal": V_j also drops S*, which
    # leaves no vertex able to satisfy the scoring condition.
    round_rule: str = "keep_anchor"

    def check(self, params: SbmParams) -> None:
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if self.R < 0 or self.R % 2:
            raise ValueError("R must be even and non-negative")
        if not 0 <= self.delta < 1:
            raise ValueError("delta must lie in [0, 1)")
        if self.rounds < 1:
            raise ValueError("need at least one round")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        if self.round_rule not in ("keep_anchor", "literal"):
            raise ValueError(f"unknown round rule {self.round_rule!r}")
        if params.n < 2:
            raise ValueError("graph too small")

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


def removal_fraction(d: float, s: float) -> float:
    """delta = delta'/2 where 1 - delta' = d / s^2."""
    if _below_threshold(d, s):
        raise ThresholdError(f"s^2 = {s * s:.6g} must exceed d = {d:.6g}")
    return (1.0 - d / (s * s)) / 2.0


def path_exponent(d: float, s: float, safety: float = ALPHA_SAFETY) -> float:
    if _below_threshold(d, s):
        raise ThresholdError(f"s^2 = {s * s:.6g} must exceed d = {d:.6g}")
    return safety * 2.0 / math.log(s * s / d)


def default_radius(n: int) -> int:
    inner = math.log(math.log(math.log(math.log(n)))) if n > math.exp(math.e) else -math.inf
    return max(2, 2 * math.ceil(inner)) if math.isfinite(inner) else 2


def default_anchor_degree(n: int) -> int:
    return max(2, math.ceil(math.sqrt(math.log(math.log(n)))))


def default_tangle_radius(n: int) -> int:
    return max(2, math.ceil(math.log(math.log(n))))


@lru_cache(maxsize=64)
def _cached_kappa(d: float, s: float, R: int, samples: int, seed: int) -> float:
    return calibrate_kappa(d, s, R, samples, seed).kappa


def derive_params(params: SbmParams, *, min_n: int = MIN_N, kappa: Optional[float] = None,
                  R: Optional[int] = None, rounds: Optional[int] = None,
                  safety: float = ALPHA_SAFETY, calibration_samples: int = 100_000,
                  calibration_seed: int = 0) -> AlgoParams:
    """Algorithm constants for a model above threshold.

    kappa is calibrated on the labelled Galton-Watson tree with parameters
    (d, |s|, R) unless given.
    """
    d, s, n = params.d, params.s, params.n
    delta = removal_fraction(d, s)
    if n < min_n:
        raise ValueError(f"n = {n} is below the minimum {min_n}")
    alpha = path_exponent(d, s, safety)
    R = default_radius(n) if R is None else R
    if R < 2 or R % 2:
        raise ValueError("R must be even and at least 2")
    if kappa is None:
        kappa = _cached_kappa(float(d), float(abs(s)), R, calibration_samples, calibration_seed)
    return AlgoParams(
        alpha=alpha,
        k=math.ceil(alpha * math.log(n)),
        R=R,
        delta=delta,
        s_prime=s * (1 - delta),
        d_prime=d * (1 - delta),
        kappa=float(kappa),
        ell=default_tangle_radius(n),
        anchor_degree=default_anchor_degree(n),
        rounds=math.ceil(math.log(n)) if rounds is None else rounds,
    )


def manual_params(params: SbmParams, *, delta: float, alpha: float, R: int = 2, kappa: float = 0.0,
                  rounds: Optional[int] = None) -> AlgoParams:
    """Constants chosen by hand, for models at or below threshold."""
    n = params.n
    return AlgoParams(
        alpha=alpha,
        k=math.ceil(alpha * math.log(n)),
        R=R,
        delta=delta,
        s_prime=params.s * (1 - delta),
        d_prime=params.d * (1 - delta),
        kappa=kappa,
        ell=default_tangle_radius(n),
        anchor_degree=default_anchor_degree(n),
        rounds=math.ceil(math.log(n)) if rounds is None else rounds,
    )


def simple_variant(algo: AlgoParams) -> AlgoParams:
    """R = 0 and no dither, so each vertex is scored by its own path sum."""
    return replace(algo, R=0, kappa=0.0)


def choose_anchor(graph: LabelledGraph, removed, target: int) -> tuple[int, np.ndarray]:
    """(w*, S*): the removed vertex whose degree into the kept part is closest
    to ``target`` (lowest index on ties) and its kept neighbours."""
    removed = np.unique(np.asarray(removed, dtype=np.int64))
    if removed.size == 0:
        raise ValueError("removed set is empty")
    is_removed = np.zeros(graph.n, dtype=bool)
    is_removed[removed] = True
    A = graph.adjacency
    kept_deg = A[removed] @ (~is_removed).astype(np.float64)
    gap = np.abs(kept_deg - target)
    w = int(removed[int(np.argmin(gap))])  # argmin returns the first, i.e. lowest index
    nb = graph.neighbors(w)
    return w, np.sort(nb[~is_removed[nb]])


@dataclass
class ClusterDiagnostics:
    anchor: int
    anchor_size: int
    removed: int
    unscored: int             # vertices of V' with J_v = 0
    ties: int                 # scored vertices whose statistic plus dither was exactly 0
    random_labels: int        # all vertices that got a coin flip
    rounds_run: int
    matvecs: int
    headroom_min: float
    empty_statistic: bool
    degenerate_k: bool
    round_seconds: list = field(default_factory=list)
    scored_per_round: list = field(default_factory=list)

    def to_text(self, timing: bool = False) -> str:
        rows = [
            ("anchor", self.anchor),
            ("anchor_size", self.anchor_size),
            ("removed", self.removed),
            ("unscored", self.unscored),
            ("ties", self.ties),
            ("random_labels", self.random_labels),
            ("rounds_run", self.rounds_run),
            ("matvecs", self.matvecs),
            ("headroom_min", repr(self.headroom_min)),
            ("empty_statistic", int(self.empty_statistic)),
            ("degenerate_k", int(self.degenerate_k)),
            ("scored_per_round", ",".join(map(str, self.scored_per_round))),
        ]
        if timing:
            rows.append(("round_seconds", ",".join(f"{t:.6f}" for t in self.round_seconds)))
        return "".join(f"{k}={v}\n" for k, v in rows)


@dataclass
class ClusterResult:
    labels: np.ndarray
    diagnostics: ClusterDiagnostics
    round_of: np.ndarray = None       # J_v per vertex of G (0 = unscored or removed)


def _scoring_masks(G1: LabelledGraph, R: int):
    inner = ball_matrix(G1, R - 1).astype(np.float64)
    outer = sphere_matrix(G1, R).astype(np.float64) if R > 0 else None
    return inner, outer


def cluster(graph: LabelledGraph, params: SbmParams, algo: AlgoParams, seed=0, *,
            normalize: Optional[bool] = None, check: bool = False) -> ClusterResult:
    """Labels in {-1, +1} for every vertex of ``graph`` (its own labels are ignored).

    ``check`` asserts the round-set and scoring-condition invariants as it goes.
    """
    algo.check(params)
    n = graph.n
    if n != params.n:
        raise ValueError(f"graph has {n} vertices but the model says {params.n}")
    d, R, k = params.d, algo.R, algo.k

    # (1) remove ceil(sqrt n) vertices
    n_removed = min(n - 1, math.ceil(math.sqrt(n)))
    removed = np.sort(make_rng(seed, 0).choice(n, size=n_removed, replace=False))
    kept_mask = np.ones(n, dtype=bool)
    kept_mask[removed] = False
    G1, kept = induced_subgraph(graph, np.flatnonzero(kept_mask))
    n1 = G1.n
    to_local = np.full(n, -1, dtype=np.int64)
    to_local[kept] = np.arange(n1)

    # (2) anchor
    w, s_star_global = choose_anchor(graph, removed, algo.anchor_degree)
    s_star = to_local[s_star_global]
    in_star = np.zeros(n1, dtype=bool)
    in_star[s_star] = True

    # (3) inner balls and spheres in G'
    inner, outer = _scoring_masks(G1, R)

    dither_scale = algo.kappa * algo.s_prime ** (k + R + 1) / (algo.d_prime * n) * s_star.size
    u_size = max(0, math.ceil(n * algo.delta) - n_removed)
    candidates = np.flatnonzero(~in_star)
    u_size = min(u_size, candidates.size)

    tau_local = np.zeros(n1, dtype=np.int8)
    round_of = np.zeros(n1, dtype=np.int64)
    pending = np.ones(n1, dtype=bool)
    ties = 0
    matvecs = 0
    headroom = 1.0
    secs, scored = [], []
    rounds_run = 0

    for j in range(1, algo.rounds + 1):
        if not pending.any():
            break
        t0 = time.perf_counter()
        rounds_run = j
        rng = make_rng(seed, 1, j)
        U = rng.choice(candidates, size=u_size, replace=False)
        xi = rng.uniform(-1.0, 1.0, size=n1)
        in_round = np.ones(n1, dtype=bool)
        in_round[U] = False
        if algo.round_rule == "literal":
            in_round[s_star] = False
        if check:
            assert not in_star[U].any()
            expected = n1 - u_size - (s_star.size if algo.round_rule == "literal" else 0)
            assert in_round.sum() == expected

        # (6) the scoring condition, for every pending vertex at once
        hidden = (~in_round).astype(np.float64)
        ok = pending.copy()
        ok &= (inner @ in_round.astype(np.float64)) == 0          # B_{R-1}(v) inside U_j
        if outer is not None:
            ok &= (outer @ hidden) == 0                             # S_v inside V_j
        else:
            ok &= in_round                                          # S_v = {v}
        if not in_round[s_star].all():
            ok[:] = False
        chosen = np.flatnonzero(ok)
        scored.append(int(chosen.size))
        if chosen.size:
            # (5) one path-sum pass per round serves every vertex scored in it
            sub, sub_map = induced_subgraph(G1, np.flatnonzero(in_round))
            pos = np.full(n1, -1, dtype=np.int64)
            pos[sub_map] = np.arange(sub.n)
            z = np.zeros(sub.n)
            z[pos[s_star]] = 1.0
            res = nb_matvec(sub, d, k, z, n_ref=n, normalize=normalize)
            matvecs += 1
            headroom = min(headroom, res.headroom)
            lifted = np.zeros(n1)
            lifted[sub_map] = res.values
            if outer is not None:
                stat = np.asarray(outer[chosen] @ lifted).ravel()
            else:
                stat = lifted[chosen]
            noise = np.ldexp(dither_scale * xi[chosen], -res.log2_scale)
            signs = np.sign(stat + noise).astype(np.int8)
            ties += int(np.count_nonzero(signs == 0))
            tau_local[chosen] = signs
            round_of[chosen] = j
            pending[chosen] = False
            if check:
                for v in chosen[: min(50, chosen.size)]:
                    row_in = inner[[v]].indices
                    assert not in_round[row_in].any()
                    if outer is not None:
                        assert in_round[outer[[v]].indices].all()
                    assert in_round[s_star].all()
        secs.append(time.perf_counter() - t0)

    tau = np.zeros(n, dtype=np.int8)
    tau[kept] = tau_local
    flip = make_rng(seed, 2).integers(0, 2, size=n).astype(np.int8) * 2 - 1
    need = tau == 0
    tau[need] = flip[need]
    jv = np.zeros(n, dtype=np.int64)
    jv[kept] = round_of

    diag = ClusterDiagnostics(
        anchor=w,
        anchor_size=int(s_star.size),
        removed=n_removed,
        unscored=int(np.count_nonzero(round_of == 0)),
        ties=ties,
        random_labels=int(need.sum()),
        rounds_run=rounds_run,
        matvecs=matvecs,
        headroom_min=headroom,
        empty_statistic=s_star.size == 0,
        degenerate_k=k == 0,
        round_seconds=secs,
        scored_per_round=scored,
    )
    return ClusterResult(labels=tau, diagnostics=diag, round_of=jv)


def cluster_simple(graph: LabelledGraph, params: SbmParams, algo: AlgoParams, seed=0, **kw) -> ClusterResult:
    """The pipeline with R = 0 and kappa = 0, for well-separated models."""
    return cluster(graph, params, simple_variant(algo), seed, **kw)


def predicted_scored_fraction(d: float, delta: float, rounds: int, R: int = 2) -> float:
    """Chance that a vertex is scored in some round, for R = 2 on a Poisson(d)
    tree with each round hiding every vertex independently with probability delta.

    A vertex with D neighbours and T second neighbours is scored in a given
    round with probability delta^(1+D) (1-delta)^T; D ~ Poisson(d) and, given
    D, T ~ Poisson(dD).
    """
    if R != 2:
        raise ValueError("closed form is for R = 2 only")
    total = 0.0
    for deg in range(0, 60):
        p_deg = stats.poisson.pmf(deg, d)
        if p_deg < 1e-16:
            continue
        t = np.arange(0, int(d * deg + 20 * math.sqrt(d * deg + 1) + 20))
        p_t = stats.poisson.pmf(t, d * deg) if deg else (t == 0).astype(float)
        q = delta ** (1 + deg) * (1 - delta) ** t
        total += p_deg * float(np.sum(p_t * (1.0 - (1.0 - q) ** rounds)))
    return total

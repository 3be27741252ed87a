"""Labelled Poisson Galton-Watson trees, level sums and dither calibration.

Two equivalent constructions of the labelled tree are provided:

* percolation: keep each tree edge with probability s/d, give each surviving
  component one uniform label (the root's component may be pinned to +1/-1);
* Markov: each child copies its parent's label with probability a/(a+b) =
  (d + s)/(2d) and takes the opposite label otherwise.

Both give the same law.  Negative s is handled by sampling with |s| and
flipping every label in an odd generation, which leaves even levels unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from scipy import stats

from .sbm import make_rng

POPULATION_CAP = 10_000_000

Mode = Literal["free", "plus", "minus"]


class PopulationOverflow(RuntimeError):
    pass


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class LabelledTree:
    parent: np.ndarray       # parent index, -1 for the root
    depth: np.ndarray
    labels: np.ndarray       # int8, +-1
    component: Optional[np.ndarray] = None   # percolation component id
    mode: str = "free"

    @property
    def size(self) -> int:
        return int(self.parent.size)

    def level(self, r: int) -> np.ndarray:
        return np.flatnonzero(self.depth == r)


@dataclass(frozen=True)
class LevelSum:
    psi: int
    R: int


def _check(d: float, s: float, R: int) -> None:
    if d <= 0:
        raise ValueError("d must be positive")
    if abs(s) > d:
        raise ValueError(f"|s| = {abs(s)} exceeds d = {d}")
    if R < 0:
        raise ValueError("R must be non-negative")
    if s < 0 and R % 2:
        raise ValueError("negative s requires an even depth R")


def sample_labelled_tree(d: float, s: float, R: int, mode: Mode = "free", seed=0,
                         construction: Literal["percolation", "markov"] = "percolation") -> LabelledTree:
    """One labelled tree truncated at depth R."""
    _check(d, s, R)
    rng = make_rng(seed)
    keep_p = abs(s) / d
    parent = [np.array([-1])]
    depth = [np.array([0])]
    if mode == "free":
        root_label = int(rng.integers(0, 2)) * 2 - 1
    else:
        root_label = 1 if mode == "plus" else -1
    labels = [np.array([root_label], dtype=np.int8)]
    comp = [np.array([0])]
    next_comp = 1
    offset = 0
    total = 1
    for r in range(1, R + 1):
        prev_n = labels[-1].size
        kids = rng.poisson(d, size=prev_n)
        m = int(kids.sum())
        total += m
        if total > POPULATION_CAP:
            raise PopulationOverflow(f"tree exceeds {POPULATION_CAP} vertices")
        par_local = np.repeat(np.arange(prev_n), kids)
        if construction == "percolation":
            kept = rng.random(m) < keep_p
            fresh = (rng.integers(0, 2, size=m) * 2 - 1).astype(np.int8)
            lab = np.where(kept, labels[-1][par_local], fresh).astype(np.int8)
            cid = np.where(kept, comp[-1][par_local], next_comp + np.arange(m))
            next_comp += m
            comp.append(cid)
        elif construction == "markov":
            same = rng.random(m) < (d + abs(s)) / (2 * d)
            lab = np.where(same, labels[-1][par_local], -labels[-1][par_local]).astype(np.int8)
        else:
            raise ValueError(f"unknown construction {construction!r}")
        parent.append(par_local + offset)
        offset += prev_n
        depth.append(np.full(m, r))
        labels.append(lab)
    lab_all = np.concatenate(labels)
    depth_all = np.concatenate(depth)
    if s < 0:
        lab_all = np.where(depth_all % 2 == 1, -lab_all, lab_all).astype(np.int8)
    return LabelledTree(
        parent=np.concatenate(parent),
        depth=depth_all,
        labels=lab_all,
        component=np.concatenate(comp) if construction == "percolation" else None,
        mode=mode,
    )


def psi(tree: LabelledTree, R: int) -> LevelSum:
    """Signed label sum over depth R."""
    return LevelSum(int(tree.labels[tree.depth == R].astype(np.int64).sum()), R)


def coupled_plus_minus(d: float, s: float, R: int, seed=0) -> tuple[int, int, int]:
    """(psi_R^+, psi_R^-, C) on one tree where only the root component's label differs.

    C is the size of the root's percolation component at depth R, so
    psi^+ - psi^- = 2C.
    """
    tree = sample_labelled_tree(d, s, R, "plus", seed)
    at_r = tree.depth == R
    in_root = tree.component[at_r] == 0
    lab = tree.labels[at_r].astype(np.int64)
    plus = int(lab.sum())
    # s < 0 flips odd generations; R is even then, so the root component's level-R label is +1
    minus = int(np.where(in_root, -lab, lab).sum())
    return plus, minus, int(in_root.sum())


# -- batched sampling ---------------------------------------------------------------


def sample_psi_batch(d: float, s: float, R: int, trees: int, seed=0, *, mode: Mode = "free",
                     construction: Literal["percolation", "markov"] = "percolation",
                     chunk: int = 20_000) -> dict[str, np.ndarray]:
    """Level-R statistics for many independent trees at once.

    Returns arrays ``psi`` (under ``mode``), ``psi_plus``, ``psi_minus``,
    ``root_size`` (root component at depth R, percolation only; zeros for the
    Markov construction) and ``level_size``.
    """
    _check(d, s, R)
    rng = make_rng(seed)
    out = {k: [] for k in ("psi", "psi_plus", "psi_minus", "root_size", "level_size")}
    keep_p = abs(s) / d
    same_p = (d + abs(s)) / (2 * d)
    done = 0
    while done < trees:
        t = min(chunk, trees - done)
        tree_id = np.arange(t)
        root = (rng.integers(0, 2, size=t) * 2 - 1).astype(np.int8)
        if mode == "plus":
            root[:] = 1
        elif mode == "minus":
            root[:] = -1
        label = root.copy()              # label under ``mode``
        in_root = np.ones(t, dtype=bool)  # percolation only
        off_label = label.copy()          # label off the root component (percolation)
        pop = t
        for _ in range(R):
            kids = rng.poisson(d, size=tree_id.size)
            m = int(kids.sum())
            pop += m
            if pop > POPULATION_CAP:
                raise PopulationOverflow(f"batch exceeds {POPULATION_CAP} vertices; lower the chunk")
            par = np.repeat(np.arange(tree_id.size), kids)
            tree_id = tree_id[par]
            if construction == "percolation":
                kept = rng.random(m) < keep_p
                fresh = (rng.integers(0, 2, size=m) * 2 - 1).astype(np.int8)
                in_root = in_root[par] & kept
                off_label = np.where(kept, off_label[par], fresh).astype(np.int8)
                label = np.where(in_root, root[tree_id], off_label).astype(np.int8)
            elif construction == "markov":
                same = rng.random(m) < same_p
                label = np.where(same, label[par], -label[par]).astype(np.int8)
            else:
                raise ValueError(f"unknown construction {construction!r}")
        lab = label.astype(np.float64)
        out["psi"].append(np.bincount(tree_id, weights=lab, minlength=t))
        out["level_size"].append(np.bincount(tree_id, minlength=t).astype(np.float64))
        if construction == "percolation":
            free_sum = np.bincount(tree_id, weights=np.where(in_root, 0.0, off_label), minlength=t)
            c = np.bincount(tree_id, weights=in_root.astype(np.float64), minlength=t)
            out["psi_plus"].append(free_sum + c)
            out["psi_minus"].append(free_sum - c)
            out["root_size"].append(c)
        else:
            z = np.zeros(t)
            out["psi_plus"].append(z)
            out["psi_minus"].append(z)
            out["root_size"].append(z)
        done += t
    return {k: np.concatenate(v).astype(np.int64) for k, v in out.items()}


def poisson_process_level_sizes(mean: float, R: int, trees: int, seed=0) -> np.ndarray:
    """Generation-R sizes of a plain Poisson(mean) Galton-Watson process."""
    rng = make_rng(seed)
    size = np.ones(trees, dtype=np.int64)
    for _ in range(R):
        size = rng.poisson(mean * size)  # a sum of `size` Poisson(mean) draws
    return size


# -- kappa calibration ---------------------------------------------------------------


@dataclass
class KappaCalibration:
    kappa: float
    d: float
    s: float
    R: int
    samples: int
    seed: int
    margin: float
    tail_level: float
    confidence: float
    rows: list = field(default_factory=list)  # per grid value: (kappa, tail+, tail-, p_hat, lower)

    def better_than_half(self) -> tuple[float, float]:
        """(estimate, lower confidence bound) of P[psi^+ >= xi kappa s^R] at the chosen kappa."""
        for row in self.rows:
            if row[0] == self.kappa:
                return row[3], row[4]
        raise KeyError(self.kappa)

    def to_text(self) -> str:
        lines = [
            f"kappa={self.kappa:g}",
            f"d={self.d!r}",
            f"s={self.s!r}",
            f"R={self.R}",
            f"samples={self.samples}",
            f"seed={self.seed}",
            f"margin={self.margin!r}",
            f"tail_level={self.tail_level!r}",
            f"confidence={self.confidence!r}",
        ]
        for kappa, tp, tm, p, lo in self.rows:
            lines.append(f"grid.{kappa:g}=tail_plus:{tp:.6f},tail_minus:{tm:.6f},"
                         f"p_hat:{p:.6f},p_lower:{lo:.6f}")
        return "\n".join(lines) + "\n"


def better_than_half_probability(psi_plus: np.ndarray, kappa: float, scale: float) -> np.ndarray:
    """P[psi >= xi kappa scale | psi] for xi uniform on [-1, 1], per sample."""
    return np.clip((1.0 + psi_plus / (kappa * scale)) / 2.0, 0.0, 1.0)


def calibrate_kappa(d: float, s: float, R: int, samples: int = 100_000, seed: int = 0, *,
                    grid=tuple(2.0**i for i in range(0, 11)), margin: float = 0.02,
                    tail_level: float = 0.05, confidence: float = 0.99) -> KappaCalibration:
    """Smallest kappa on ``grid`` for which both tails P[|psi^+-| >= kappa s^R] are at most
    ``tail_level`` and the lower ``confidence`` bound on P[psi^+ >= xi kappa s^R]
    is at least 1/2 + margin.

    The probability over xi is integrated exactly for each sampled tree.
    """
    if s * s <= d:
        raise ValueError(f"calibration needs s^2 > d (got s^2/d = {s * s / d:.4g})")
    draws = sample_psi_batch(d, s, R, samples, seed)
    scale = abs(s) ** R
    pp = draws["psi_plus"].astype(np.float64)
    pm = draws["psi_minus"].astype(np.float64)
    z = stats.norm.ppf(confidence)
    cal = KappaCalibration(kappa=math.nan, d=d, s=s, R=R, samples=samples, seed=seed,
                           margin=margin, tail_level=tail_level, confidence=confidence)
    for kappa in grid:
        tail_p = float(np.mean(np.abs(pp) >= kappa * scale))
        tail_m = float(np.mean(np.abs(pm) >= kappa * scale))
        q = better_than_half_probability(pp, kappa, scale)
        p_hat = float(q.mean())
        lower = float(p_hat - z * float(q.std(ddof=1)) / math.sqrt(samples))
        cal.rows.append((kappa, tail_p, tail_m, p_hat, lower))
        if tail_p <= tail_level and tail_m <= tail_level and lower >= 0.5 + margin:
            cal.kappa = kappa
            return cal
    raise CalibrationError(
        f"no kappa on the grid qualified with {samples} samples (d={d}, s={s}, R={R})"
    )

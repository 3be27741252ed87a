"""Experiment configuration, reports and the desk-scale experiment suites."""

from __future__ import annotations

import dataclasses
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from . import __version__
from .algorithm import (ThresholdError, cluster, cluster_simple, derive_params, manual_params,
                        path_exponent)
from .branching import calibrate_kappa, sample_psi_batch
from .engine import dense_operators, nb_matvec, stacked_q
from .paths import (canonical_saw_decomposition, classify_edges, constant_returns_bound,
                    enumerate_saw_paths, exact_edge_expectation, is_tangle_free,
                    nb_matrix_bruteforce, nb_path_array, path_edge_counts, path_sums_batch,
                    saw_pair_type_counts, two_saw_pairs_bound, walk_type_counts)
from .sbm import LabelledGraph, SbmParams, make_rng, overlap, sample_sbm

MODES = ("generate", "cluster", "phase-sweep", "moments", "branching", "oracle-suite", "baseline")
THREADS_ENV = "NBCLUSTER_THREADS"
SWEEP_COLUMNS = ("s2_over_d", "n", "d", "replicas", "mean_overlap", "stderr", "mean_runtime_s")


def _floats(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(float(x) for x in text)
    return tuple(float(x) for x in str(text).split(",") if x.strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    n: Optional[int] = None
    a: Optional[float] = None
    b: Optional[float] = None
    d: Optional[float] = None
    snr: Optional[float] = None          # s^2 / d
    s: Optional[float] = None
    seed: int = 0
    replicas: int = 10
    grid: tuple = ()
    variant: str = "simple"              # simple | full
    kappa: Optional[float] = None
    R: Optional[int] = None
    rounds: Optional[int] = None
    k: Optional[int] = None
    delta: Optional[float] = None        # forced delta for points at or below threshold
    round_rule: str = "keep_anchor"
    normalize: Optional[bool] = None
    input: Optional[str] = None
    out: Optional[str] = None
    gnuplot_data: Optional[str] = None
    samples: int = 100_000
    trees: int = 100_000
    instances: int = 200
    u: int = 0
    v: int = 1
    u2: int = 2
    v2: int = 3
    labelling: str = "balanced"          # balanced | alternating
    timing: bool = False                 # fill the sweep CSV runtime column (breaks bit-identical reruns)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.replicas < 1:
            raise ValueError("replicas must be at least 1")
        if self.variant not in ("simple", "full"):
            raise ValueError(f"unknown variant {self.variant!r}")
        need = {
            "generate": ("n",),
            "cluster": ("input",),
            "phase-sweep": ("n", "d", "grid"),
            "baseline": ("input",),
        }.get(self.mode, ())
        missing = [f for f in need if getattr(self, f) in (None, ())]
        if missing:
            raise ValueError(f"mode {self.mode} needs: {', '.join(missing)}")

    # -- text form ------------------------------------------------------------

    @classmethod
    def field_types(cls) -> dict:
        out = {}
        for f in dataclasses.fields(cls):
            if f.name.startswith("_"):
                continue
            t = str(f.type)
            if "int" in t:
                out[f.name] = int
            elif "float" in t:
                out[f.name] = float
            elif "bool" in t:
                out[f.name] = _bool
            elif f.name == "grid":
                out[f.name] = _floats
            else:
                out[f.name] = str
        return out

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        types = cls.field_types()
        kw = {}
        for key, raw in values.items():
            if key.startswith("meta.") or key.startswith("result."):
                continue
            if key not in types:
                raise ValueError(f"unknown config key {key!r}")
            if raw is None or raw == "":
                continue
            kw[key] = types[key](raw)
        return cls(**kw)

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            if f.name.startswith("_"):
                continue
            val = getattr(self, f.name)
            if val is None:
                continue
            if f.name == "grid":
                val = ",".join(repr(x) for x in val)
            elif isinstance(val, float):
                val = repr(val)
            lines.append(f"{f.name}={val}")
        return "\n".join(lines) + "\n"

    def sbm_params(self) -> SbmParams:
        if self.n is None:
            raise ValueError("n is required")
        if self.a is not None and self.b is not None:
            return SbmParams(self.n, self.a, self.b)
        if self.d is not None and self.snr is not None:
            return SbmParams.from_snr(self.n, self.d, self.snr)
        if self.d is not None and self.s is not None:
            return SbmParams.from_d_s(self.n, self.d, self.s)
        raise ValueError("give a and b, or d with snr or s")


def read_key_values(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"{path}: malformed line {line!r}")
            out[key.strip()] = val.strip()
    return out


def write_manifest(path, config: ExperimentConfig, *, wall_clock: float, seeds=(), outputs=(),
                   extra: Optional[dict] = None) -> None:
    lines = [config.to_text().rstrip("\n")]
    lines.append(f"meta.version={__version__}")
    lines.append(f"meta.seeds={','.join(str(s) for s in seeds)}")
    lines.append(f"meta.outputs={','.join(str(o) for o in outputs)}")
    lines.append(f"meta.wall_clock_s={wall_clock:.6f}")
    for k, v in (extra or {}).items():
        lines.append(f"meta.{k}={v}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}")


def child_seed(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([seed, *path]).generate_state(1, np.uint32)[0])


# -- algorithm parameters for a grid point --------------------------------------------------------


SUBTHRESHOLD_DELTA = 0.25
SUBTHRESHOLD_REFERENCE_SNR = 2.0


def algo_for(params: SbmParams, config: ExperimentConfig):
    """Constants for one model; at or below threshold they are forced by hand."""
    kappa = config.kappa
    if config.variant == "simple" and kappa is None:
        kappa = 0.0
    R = config.R if config.R is not None else None
    try:
        algo = derive_params(params, kappa=kappa, R=R, rounds=config.rounds)
    except ThresholdError:
        alpha = path_exponent(1.0, math.sqrt(SUBTHRESHOLD_REFERENCE_SNR))
        algo = manual_params(params, delta=config.delta if config.delta is not None else SUBTHRESHOLD_DELTA,
                             alpha=alpha, R=2 if R is None else R, kappa=kappa or 0.0,
                             rounds=config.rounds)
    changes = {}
    if config.k is not None:
        changes["k"] = config.k
    if config.round_rule != algo.round_rule:
        changes["round_rule"] = config.round_rule
    return dataclasses.replace(algo, **changes) if changes else algo


def run_cluster(graph: LabelledGraph, params: SbmParams, config: ExperimentConfig, seed: int):
    algo = algo_for(params, config)
    fn = cluster_simple if config.variant == "simple" else cluster
    return fn(graph, params, algo, seed, normalize=config.normalize), algo


# -- phase sweep -------------------------------------------------------------------------------


@dataclass
class SweepReport:
    rows: list                  # tuples in SWEEP_COLUMNS order
    overlaps: dict              # s2_over_d -> per-replica overlaps
    kendall_tau: float
    strictly_increasing: bool

    def to_csv(self, timing: bool = False) -> str:
        """Without ``timing`` the runtime column reads nan so reruns match byte for byte."""
        out = [",".join(SWEEP_COLUMNS)]
        for snr, n, d, reps, mean, se, rt in self.rows:
            rt_text = f"{rt:.6f}" if timing else "nan"
            out.append(f"{snr!r},{n},{d!r},{reps},{mean!r},{se!r},{rt_text}")
        return "\n".join(out) + "\n"

    def to_gnuplot(self) -> str:
        out = ["# s2_over_d mean_overlap stderr"]
        for snr, _, _, _, mean, se, _ in self.rows:
            out.append(f"{snr!r} {mean!r} {se!r}")
        return "\n".join(out) + "\n"

    def mean_overlap(self, snr: float) -> float:
        for row in self.rows:
            if row[0] == snr:
                return row[4]
        raise KeyError(snr)


def _sweep_replica(params, config, point, r):
    g_seed = child_seed(config.seed, point, r, 0)
    a_seed = child_seed(config.seed, point, r, 1)
    graph = sample_sbm(params, g_seed)
    t0 = time.perf_counter()
    res, _ = run_cluster(graph.without_labels(), params, config, a_seed)
    return r, overlap(graph.labels, res.labels), time.perf_counter() - t0


def run_phase_sweep(config: ExperimentConfig) -> SweepReport:
    """Overlap against s^2/d on a fixed (n, d), ``replicas`` graphs per point."""
    rows, overlaps = [], {}
    workers = thread_count()
    for point, snr in enumerate(config.grid):
        params = SbmParams.from_snr(config.n, config.d, snr)
        jobs = [(params, config, point, r) for r in range(config.replicas)]
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                results = list(pool.map(lambda j: _sweep_replica(*j), jobs))
        else:
            results = [_sweep_replica(*j) for j in jobs]
        results.sort(key=lambda x: x[0])
        ov = np.array([x[1] for x in results])
        rt = np.array([x[2] for x in results])
        se = float(ov.std(ddof=1) / math.sqrt(ov.size)) if ov.size > 1 else 0.0
        rows.append((float(snr), config.n, float(config.d), config.replicas, float(ov.mean()), se, float(rt.mean())))
        overlaps[float(snr)] = ov
    means = [row[4] for row in rows]
    xs = [row[0] for row in rows]
    tau = float(stats.kendalltau(xs, means).statistic) if len(rows) > 1 else math.nan
    order = np.argsort(xs)
    m_sorted = np.array(means)[order]
    increasing = bool(np.all(np.diff(m_sorted) > 0))
    return SweepReport(rows=rows, overlaps=overlaps, kendall_tau=tau, strictly_increasing=increasing)


# -- moment suite ------------------------------------------------------------------------------


@dataclass
class MomentEntry:
    name: str
    estimate: float
    prediction: float
    stderr: float
    tolerance: str
    passed: bool
    exact: float = math.nan


@dataclass
class MomentReport:
    entries: list = field(default_factory=list)
    settings: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def entry(self, name: str) -> MomentEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_text(self) -> str:
        lines = [f"{k}={v}" for k, v in self.settings.items()]
        for e in self.entries:
            lines += [
                f"{e.name}.estimate={e.estimate!r}",
                f"{e.name}.prediction={e.prediction!r}",
                f"{e.name}.exact={e.exact!r}",
                f"{e.name}.stderr={e.stderr!r}",
                f"{e.name}.tolerance={e.tolerance}",
                f"{e.name}.pass={int(e.passed)}",
            ]
        lines.append(f"pass={int(self.passed)}")
        return "\n".join(lines) + "\n"


def fixed_labelling(n: int, kind: str = "balanced") -> np.ndarray:
    if kind == "balanced":
        return np.where(np.arange(n) < n // 2, 1, -1).astype(np.int8)
    if kind == "alternating":
        return np.where(np.arange(n) % 2 == 0, 1, -1).astype(np.int8)
    raise ValueError(f"unknown labelling {kind!r}")


def sample_weight_matrices(params: SbmParams, sigma: np.ndarray, count: int, rng) -> np.ndarray:
    """(count, n, n) centred weight matrices W = 1{edge} - d/n with labels fixed."""
    n = params.n
    sig = sigma.astype(np.float64)
    prob = (params.d + params.s * np.outer(sig, sig)) / n
    iu = np.triu_indices(n, 1)
    present = rng.random((count, iu[0].size)) < prob[iu]
    W = np.zeros((count, n, n))
    W[:, iu[0], iu[1]] = present - params.d / n
    W[:, iu[1], iu[0]] = W[:, iu[0], iu[1]]
    return W


def exact_pair_moment(params: SbmParams, sigma, paths1, paths2) -> float:
    """E[sum_{g1} X_g1 * sum_{g2} X_g2 | sigma] with every label fixed."""
    labels = {i: int(x) for i, x in enumerate(sigma)}
    total = 0.0
    for g1 in paths1:
        c1 = path_edge_counts(g1)
        for g2 in paths2:
            mult = dict(c1)
            for e, m in path_edge_counts(g2).items():
                mult[e] = mult.get(e, 0) + m
            sub = {v: labels[v] for e in mult for v in e}
            total += exact_edge_expectation(params, mult, sub)
    return total


def exact_first_moment(params: SbmParams, sigma, paths) -> float:
    labels = {i: int(x) for i, x in enumerate(sigma)}
    total = 0.0
    for g in paths:
        mult = dict(path_edge_counts(g))
        total += exact_edge_expectation(params, mult, {v: labels[v] for e in mult for v in e})
    return total


def second_moment_ceiling(d: float, s: float, k: int, n: int) -> float:
    return 2.0 * (s * s / (s * s - d)) * s ** (2 * k) / n**2


def run_moment_suite(config: ExperimentConfig, *, n: int = 8, k: int = 2, d: float = 2.0, s: float = 1.8,
                     slack: float = 1.5, z_tol: float = 4.0, chunk: int = 20_000) -> MomentReport:
    """Monte-Carlo moments of the self-avoiding path sum Y with the labelling held fixed."""
    if config.n is not None:
        n = config.n
    if config.k is not None:
        k = config.k
    if config.d is not None:
        d = config.d
    if config.s is not None:
        s = config.s
    if n > 10 or k > 4:
        raise ValueError("moment suite is exhaustive: n <= 10 and k <= 4")
    params = SbmParams.from_d_s(n, d, s)
    sigma = fixed_labelling(n, config.labelling)
    u, v, u2, v2 = config.u, config.v, config.u2, config.v2
    if len({u, v, u2, v2}) < 4:
        raise ValueError("u, v, u2, v2 must be distinct")
    p1 = np.array(enumerate_saw_paths(n, k, u, v))
    p2 = np.array(enumerate_saw_paths(n, k, u2, v2))
    nb1 = nb_path_array(n, k)
    nb1 = nb1[(nb1[:, 0] == u) & (nb1[:, -1] == v)]
    rng = make_rng(config.seed, 7)
    T = config.samples
    y1 = np.empty(T)
    y2 = np.empty(T)
    nb = np.empty(T)
    done = 0
    while done < T:
        c = min(chunk, T - done)
        W = sample_weight_matrices(params, sigma, c, rng)
        y1[done:done + c] = path_sums_batch(W, p1)
        y2[done:done + c] = path_sums_batch(W, p2)
        nb[done:done + c] = path_sums_batch(W, nb1)
        done += c
    rep = MomentReport(settings={"n": n, "k": k, "d": repr(d), "s": repr(s), "samples": T,
                                 "seed": config.seed, "labelling": config.labelling,
                                 "pair": f"{u},{v}", "second_pair": f"{u2},{v2}",
                                 "slack": repr(slack), "z_tol": repr(z_tol)})
    sq = math.sqrt(T)
    sig_uv = int(sigma[u] * sigma[v])

    # first moment: every self-avoiding path has expected weight sigma_u sigma_v s^k / n^k
    pred1 = len(p1) * sig_uv * s**k / n**k
    est1, se1 = float(y1.mean()), float(y1.std(ddof=1) / sq)
    rep.entries.append(MomentEntry("first_moment", est1, pred1, se1, f"{z_tol:g} stderr",
                                   abs(est1 - pred1) <= z_tol * se1, exact_first_moment(params, sigma, p1)))

    # second moment against its ceiling
    ceil2 = second_moment_ceiling(d, s, k, n)
    sqv = y1 * y1
    est2, se2 = float(sqv.mean()), float(sqv.std(ddof=1) / sq)
    rep.entries.append(MomentEntry("second_moment", est2, slack * ceil2, se2, f"<= {slack:g} x ceiling",
                                   est2 <= slack * ceil2, exact_pair_moment(params, sigma, p1, p1)))

    # cross moment: E[Y Y'] / (E[Y] E[Y']) against 1, delta-method stderr
    m1, m2 = y1.mean(), y2.mean()
    prod = y1 * y2
    mp = prod.mean()
    ratio = float(mp / (m1 * m2))
    cov = np.cov(np.vstack([prod, y1, y2]), ddof=1) / T
    grad = np.array([1.0 / (m1 * m2), -mp / (m1 * m1 * m2), -mp / (m1 * m2 * m2)])
    se_r = float(math.sqrt(max(grad @ cov @ grad, 0.0)))
    exact_ratio = exact_pair_moment(params, sigma, p1, p2) / (
        exact_first_moment(params, sigma, p1) * exact_first_moment(params, sigma, p2))
    rep.entries.append(MomentEntry("cross_moment_ratio", ratio, 1.0, se_r, f"{z_tol:g} stderr",
                                   abs(ratio - 1.0) <= z_tol * se_r, exact_ratio))

    # mass of non-self-avoiding paths: P[|N - Y| >= s^k n^(-4/3)] against n^(-1/3)
    bad = np.abs(nb - y1) >= s**k * n ** (-4.0 / 3.0)
    pb = float(bad.mean())
    rep.entries.append(MomentEntry("bad_path_probability", pb, slack * n ** (-1.0 / 3.0),
                                   float(math.sqrt(pb * (1 - pb) / T)), f"<= {slack:g} x n^(-1/3)",
                                   pb <= slack * n ** (-1.0 / 3.0)))
    return rep


def exact_cross_ratio(n: int, k: int, d: float, s: float, labelling: str = "balanced",
                      pairs=((0, 1), (2, 3))) -> float:
    """Exact E[Y Y'] / (E[Y] E[Y']) with every label fixed."""
    params = SbmParams.from_d_s(n, d, s)
    sigma = fixed_labelling(n, labelling)
    (u, v), (u2, v2) = pairs
    g1 = enumerate_saw_paths(n, k, u, v, max_n=10**6)
    g2 = enumerate_saw_paths(n, k, u2, v2, max_n=10**6)
    return exact_pair_moment(params, sigma, g1, g2) / (
        exact_first_moment(params, sigma, g1) * exact_first_moment(params, sigma, g2))


# -- branching suite ---------------------------------------------------------------------------


@dataclass
class BranchingReport:
    d: float
    s: float
    R: int
    trees: int
    seed: int
    mean_psi_plus: float
    stderr: float
    target: float
    identity_holds: bool
    kappa: float
    p_hat: float
    p_lower: float
    calibration_text: str
    z_tol: float = 3.0
    floor: float = 0.52

    @property
    def mean_ok(self) -> bool:
        return abs(self.mean_psi_plus - self.target) <= self.z_tol * self.stderr

    @property
    def calibration_ok(self) -> bool:
        return self.p_lower >= self.floor

    @property
    def passed(self) -> bool:
        return self.identity_holds and self.mean_ok and self.calibration_ok

    def to_text(self) -> str:
        lines = [
            f"d={self.d!r}", f"s={self.s!r}", f"R={self.R}", f"trees={self.trees}", f"seed={self.seed}",
            f"mean_psi_plus={self.mean_psi_plus!r}", f"stderr={self.stderr!r}", f"target={self.target!r}",
            f"mean_pass={int(self.mean_ok)}", f"identity_pass={int(self.identity_holds)}",
            f"kappa={self.kappa!r}", f"p_hat={self.p_hat!r}", f"p_lower={self.p_lower!r}",
            f"calibration_pass={int(self.calibration_ok)}", f"pass={int(self.passed)}",
        ]
        cal = "".join("calibration." + line + "\n" for line in self.calibration_text.splitlines())
        return "\n".join(lines) + "\n" + cal


def run_branching_suite(config: ExperimentConfig, *, d: float = 3.0, snr: float = 2.0, R: int = 4) -> BranchingReport:
    d = config.d if config.d is not None else d
    if config.s is not None:
        s = config.s
    else:
        s = math.sqrt((config.snr if config.snr is not None else snr) * d)
    R = config.R if config.R is not None else R
    draws = sample_psi_batch(d, s, R, config.trees, child_seed(config.seed, 0))
    pp = draws["psi_plus"].astype(np.float64)
    ident = bool(np.all(draws["psi_plus"] - draws["psi_minus"] == 2 * draws["root_size"]))
    cal = calibrate_kappa(d, s, R, config.samples, child_seed(config.seed, 1))
    p_hat, lower = cal.better_than_half()
    return BranchingReport(d=d, s=s, R=R, trees=config.trees, seed=config.seed,
                           mean_psi_plus=float(pp.mean()), stderr=float(pp.std(ddof=1) / math.sqrt(pp.size)),
                           target=float(s**R), identity_holds=ident, kappa=cal.kappa, p_hat=p_hat,
                           p_lower=lower, calibration_text=cal.to_text())


# -- oracle suite ------------------------------------------------------------------------------


@dataclass
class OracleReport:
    checks: list = field(default_factory=list)     # (name, passed, detail, informational)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _, info in self.checks if not info)

    def add(self, name: str, ok: bool, detail: str = "", *, informational: bool = False) -> None:
        self.checks.append((name, bool(ok), detail, informational))

    def get(self, name: str) -> bool:
        for n, ok, _, _ in self.checks:
            if n == name:
                return ok
        raise KeyError(name)

    def to_text(self) -> str:
        lines = []
        for name, ok, detail, info in self.checks:
            status = "pass" if ok else ("counterexample" if info else "FAIL")
            lines.append(f"{name}={status}" + (f" {detail}" if detail else ""))
        lines.append(f"pass={int(self.passed)}")
        return "\n".join(lines) + "\n"


def random_small_graph(seed: int, n_max: int = 10, d_max: float = 3.0) -> tuple[LabelledGraph, float]:
    rng = make_rng(seed, 99)
    n = int(rng.integers(3, n_max + 1))
    d = float(rng.uniform(0.3, min(d_max, 0.9 * n)))
    s_max = 0.99 * min(d, n - d)
    s = float(rng.uniform(-s_max, s_max))
    params = SbmParams.from_d_s(n, d, s)
    return sample_sbm(params, seed), d


def engine_bruteforce_gap(graph: LabelledGraph, d: float, k_max: int = 6) -> float:
    """Largest entrywise |engine - enumeration| over k <= k_max, scaled by max |N^(k)| (at least 1)."""
    worst = 0.0
    eye = np.eye(graph.n)
    for k in range(k_max + 1):
        ref = nb_matrix_bruteforce(graph, d, k)
        got = nb_matvec(graph, d, k, eye).unscaled()
        scale = max(1.0, float(np.abs(ref).max()))
        worst = max(worst, float(np.abs(got - ref).max()) / scale)
    return worst


def matrix_identity_gap(graph: LabelledGraph, d: float, k_max: int = 6) -> float:
    n = graph.n
    mats = {j: nb_matrix_bruteforce(graph, d, j) for j in range(k_max + 2)}
    M, M_hat = dense_operators(graph, d)
    worst = 0.0
    for k in range(k_max + 1):
        Qk = stacked_q(mats, k, d, n)
        Qk1 = stacked_q(mats, k + 1, d, n)
        readout = np.vstack([mats[k + 1], np.zeros((3 * n, n))])
        scale = max(1.0, float(np.abs(Qk1).max()))
        worst = max(worst, float(np.abs(M @ Qk - Qk1).max()) / scale,
                    float(np.abs(M_hat @ Qk - readout).max()) / scale)
    return worst


def check_path_identities(n: int, k_max: int, u: int = 0) -> tuple[int, int]:
    """(paths checked, violations) of the vertex and edge counts for every path from u."""
    bad = [0, 0]

    def on_path(rec):
        _, length, kn, ko, kr, _, nv, ne = rec
        bad[0] += 1
        if nv != kn + 1 or ne != kn + kr or kn + ko + kr != length:
            bad[1] += 1

    walk_type_counts(n, k_max, u, on_path=on_path)
    return bad[0], bad[1]


def check_r_bound(n: int, k_max: int, u: int = 0, U=()) -> tuple[int, int]:
    """(decompositions checked, violations of r <= 2 k_r + B + 1 + |U|)."""
    checked = violations = 0
    stack = [(u,)]
    while stack:
        path = stack.pop()
        if len(path) > 1:
            rec = classify_edges(path)
            dec = canonical_saw_decomposition(path, U)
            checked += 1
            if dec.r > 2 * rec.k_r + rec.backtracks + 1 + len(U):
                violations += 1
        if len(path) - 1 < k_max:
            for y in range(n):
                if y != path[-1]:
                    stack.append(path + (y,))
    return checked, violations


def check_constant_returns(n: int, k_max: int, u: int = 0) -> tuple[int, int]:
    """(classes checked, violations) with C = k_max / ln n so every length is at most C ln n."""
    C = k_max / math.log(n)
    counts = walk_type_counts(n, k_max, u)
    by_class: dict = {}
    for (end, _length, kn, kr), c in counts.items():
        if kr >= 1:
            by_class[(end, kn, kr)] = by_class.get((end, kn, kr), 0) + c
    bad = sum(1 for (_, kn, kr), c in by_class.items() if c > constant_returns_bound(n, kn, kr, C))
    return len(by_class), bad


def check_two_saw_pairs(n: int, k: int, quads) -> tuple[int, int]:
    checked = bad = 0
    for u, v, u2, v2 in quads:
        counts = saw_pair_type_counts(n, k, u, v, u2, v2)
        for (kn, kr), c in counts.items():
            checked += 1
            if c > two_saw_pairs_bound(n, k, kn, kr, v2 not in (u, v)):
                bad += 1
    return checked, bad


def figure_eight() -> LabelledGraph:
    return LabelledGraph.from_edges(5, [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)])


def run_oracle_suite(config: ExperimentConfig, *, k_max: int = 6, identity_n: int = 6,
                     identity_k: int = 6) -> OracleReport:
    rep = OracleReport()
    worst = worst_sym = worst_id = 0.0
    for i in range(config.instances):
        graph, d = random_small_graph(child_seed(config.seed, i))
        worst = max(worst, engine_bruteforce_gap(graph, d, k_max))
        for k in range(k_max + 1):
            N = nb_matrix_bruteforce(graph, d, k)
            scale = max(1.0, float(np.abs(N).max()))
            worst_sym = max(worst_sym, float(np.abs(N - N.T).max()) / scale)
        if i < 20:
            worst_id = max(worst_id, matrix_identity_gap(graph, d, k_max))
    rep.add("engine_vs_enumeration", worst <= 1e-9, f"max_scaled_gap={worst:.3e}")
    rep.add("nb_matrix_symmetry", worst_sym <= 1e-12, f"max_scaled_gap={worst_sym:.3e}")
    rep.add("operator_identities", worst_id <= 1e-10, f"max_scaled_gap={worst_id:.3e}")

    checked, bad = check_path_identities(identity_n, identity_k)
    rep.add("vertex_edge_counts", bad == 0, f"paths={checked} violations={bad}")
    checked, bad = check_r_bound(min(identity_n, 5), min(identity_k, 6))
    # both bounds have small counterexamples, e.g. (0,1,2,1,3) has three segments with
    # one backtrack and no returning step, and pairs with every step returning are
    # bounded by zero; they are reported but do not fail the build
    rep.add("decomposition_count_bound", bad == 0, f"paths={checked} violations={bad}", informational=True)
    checked, bad = check_constant_returns(identity_n, identity_k)
    rep.add("constant_returns_bound", bad == 0, f"classes={checked} violations={bad}")
    checked, bad = check_two_saw_pairs(6, 3, [(0, 1, 2, 3), (0, 1, 0, 1), (0, 1, 1, 2)])
    rep.add("saw_pair_bound", bad == 0, f"classes={checked} violations={bad}", informational=True)

    eight = is_tangle_free(figure_eight(), 1)
    rep.add("planted_tangle_detected", not eight.is_tangle_free and eight.witness is not None,
            f"witness={eight.witness}")
    tree = LabelledGraph.from_edges(6, [(0, 1), (0, 2), (1, 3), (1, 4), (2, 5)])
    rep.add("tree_is_tangle_free", is_tangle_free(tree, 3).is_tangle_free)
    return rep


# -- spectral baseline -------------------------------------------------------------------------


@dataclass
class BaselineResult:
    labels: np.ndarray
    vector: np.ndarray
    eigenvalue: float
    iterations: int
    residual: float
    converged: bool


def spectral_baseline(graph: LabelledGraph, d: Optional[float] = None, *, iterations: int = 200,
                      tol: float = 1e-8, seed: int = 0) -> BaselineResult:
    """Signs of the top eigenvector of A - (d/n) 11^T, found by power iteration.

    The all-ones direction is projected out at every step, and the operator is
    shifted by the maximum degree so that the top (not largest-magnitude)
    eigenvalue dominates.
    """
    n = graph.n
    if n == 0:
        raise ValueError("empty graph")
    if d is None:
        d = 2.0 * graph.num_edges / n
    A = graph.adjacency
    shift = float(graph.degrees.max()) + d
    rng = make_rng(seed, 5)
    x = rng.standard_normal(n)

    def op(y):
        return A @ y - (d / n) * y.sum() + shift * y

    def deflate(y):
        return y - y.mean()

    x = deflate(x)
    x /= np.linalg.norm(x) or 1.0
    lam, res, it = 0.0, math.inf, 0
    for it in range(1, iterations + 1):
        y = deflate(op(x))
        norm = np.linalg.norm(y)
        if norm == 0:
            break
        lam = float(x @ y)
        res = float(np.linalg.norm(y - lam * x)) / max(abs(lam), 1e-300)
        x = y / norm
        if res < tol:
            break
    labels = np.where(x >= 0, 1, -1).astype(np.int8)
    return BaselineResult(labels=labels, vector=x, eigenvalue=lam - shift, iterations=it,
                          residual=res, converged=res < tol)

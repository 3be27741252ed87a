"""Command-line entry point: ``nbcluster <subcommand> [flags]``.

Every run writes ``<out>.manifest`` beside its outputs.  Passing that file
back with ``--config`` reproduces the outputs.  Exit codes: 0 success,
1 a check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import experiments as ex
from .sbm import overlap, read_edge_list, read_labels, sample_sbm, write_edge_list, write_labels

SUBCOMMANDS = {
    "generate": "generate",
    "cluster": "cluster",
    "sweep": "phase-sweep",
    "moments": "moments",
    "branching": "branching",
    "oracle": "oracle-suite",
    "baseline": "baseline",
}
DEFAULT_OUT = {
    "generate": "graph.edges",
    "cluster": "tau.labels",
    "phase-sweep": "sweep.csv",
    "moments": "moments.txt",
    "branching": "branching.txt",
    "oracle-suite": "oracle.txt",
    "baseline": "baseline.labels",
}


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nbcluster",
                                description="Path-count clustering for the two-community block model.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, model=False):
        sp.add_argument("--config", help="key=value file (a manifest works); flags override it")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        if model:
            sp.add_argument("--n", type=int)
            sp.add_argument("--a", type=float)
            sp.add_argument("--b", type=float)
            sp.add_argument("--d", type=float)
            sp.add_argument("--snr", type=float, help="s^2/d")
            sp.add_argument("--s", type=float)

    def algo(sp):
        sp.add_argument("--variant", choices=("simple", "full"))
        sp.add_argument("--kappa", type=float)
        sp.add_argument("--R", type=int)
        sp.add_argument("--rounds", type=int)
        sp.add_argument("--k", type=int)
        sp.add_argument("--delta", type=float)
        sp.add_argument("--round-rule", dest="round_rule", choices=("keep_anchor", "literal"))
        sp.add_argument("--normalize", choices=("true", "false"))

    sp = sub.add_parser("generate", help="sample a labelled graph")
    common(sp, model=True)

    sp = sub.add_parser("cluster", help="label the vertices of an edge-list graph")
    common(sp, model=True)
    sp.add_argument("--in", dest="input")
    algo(sp)

    sp = sub.add_parser("sweep", help="overlap against s^2/d")
    common(sp, model=True)
    sp.add_argument("--grid", help="comma-separated s^2/d values")
    sp.add_argument("--replicas", type=int)
    sp.add_argument("--gnuplot-data", dest="gnuplot_data")
    sp.add_argument("--timing", choices=("true", "false"),
                    help="write measured runtimes into the CSV instead of the manifest only")
    algo(sp)

    sp = sub.add_parser("moments", help="Monte-Carlo path-sum moments on a tiny model")
    common(sp, model=True)
    sp.add_argument("--k", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--labelling", choices=("balanced", "alternating"))

    sp = sub.add_parser("branching", help="labelled tree statistics and dither calibration")
    common(sp)
    sp.add_argument("--d", type=float)
    sp.add_argument("--snr", type=float)
    sp.add_argument("--s", type=float)
    sp.add_argument("--R", type=int)
    sp.add_argument("--trees", type=int)
    sp.add_argument("--samples", type=int, help="calibration sample size")

    sp = sub.add_parser("oracle", help="engine and combinatorics checks against enumeration")
    common(sp)
    sp.add_argument("--instances", type=int)

    sp = sub.add_parser("baseline", help="spectral baseline labels")
    common(sp, model=True)
    sp.add_argument("--in", dest="input")
    return p


def _config(args) -> ex.ExperimentConfig:
    mode = SUBCOMMANDS[args.command]
    values = {}
    if args.config:
        values.update(ex.read_key_values(args.config))
        if values.get("mode", mode) != mode:
            raise UsageError(f"config is for mode {values['mode']!r}, not {mode!r}")
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None:
            continue
        values[key] = val
    values["mode"] = mode
    values.setdefault("out", DEFAULT_OUT[mode])
    try:
        return ex.ExperimentConfig.from_mapping(values)
    except (TypeError, ValueError) as err:
        raise UsageError(str(err)) from err


def labels_path_for(edges_path: str) -> Path:
    p = Path(edges_path)
    return p.with_suffix(".labels") if p.suffix == ".edges" else Path(str(p) + ".labels")


def _load_graph(cfg: ex.ExperimentConfig):
    truth_path = labels_path_for(cfg.input)
    truth = read_labels(truth_path) if truth_path.exists() else None
    n = cfg.n if cfg.n is not None else (truth.size if truth is not None else None)
    graph = read_edge_list(cfg.input, n=n)
    return graph, truth


def _model(cfg: ex.ExperimentConfig, n: int):
    from dataclasses import replace
    return replace(cfg, n=n).sbm_params() if cfg.n is None else cfg.sbm_params()


def _write(path, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def run(cfg: ex.ExperimentConfig) -> tuple[int, list, dict]:
    """Carry out one configured run; returns (exit code, outputs, manifest extras)."""
    out = cfg.out
    extra = {}
    if cfg.mode == "generate":
        params = cfg.sbm_params()
        graph = sample_sbm(params, cfg.seed)
        write_edge_list(out, graph)
        lab = labels_path_for(out)
        write_labels(lab, graph.labels)
        return 0, [out, str(lab)], extra

    if cfg.mode == "cluster":
        graph, truth = _load_graph(cfg)
        params = _model(cfg, graph.n)
        res, algo = ex.run_cluster(graph, params, cfg, cfg.seed)
        write_labels(out, res.labels)
        diag = res.diagnostics.to_text()
        diag += "".join(f"algo.{k}={v!r}\n" for k, v in algo.to_dict().items())
        if truth is not None:
            diag += f"overlap={overlap(truth, res.labels)!r}\n"
        _write(out + ".diag", diag)
        extra["round_seconds"] = ",".join(f"{t:.6f}" for t in res.diagnostics.round_seconds)
        return 0, [out, out + ".diag"], extra

    if cfg.mode == "phase-sweep":
        rep = ex.run_phase_sweep(cfg)
        _write(out, rep.to_csv(timing=cfg.timing))
        extra["mean_runtime_s"] = ",".join(f"{row[6]:.6f}" for row in rep.rows)
        outs = [out]
        _write(out + ".trend", f"kendall_tau={rep.kendall_tau!r}\n"
                               f"strictly_increasing={int(rep.strictly_increasing)}\n")
        outs.append(out + ".trend")
        if cfg.gnuplot_data:
            _write(cfg.gnuplot_data, rep.to_gnuplot())
            outs.append(cfg.gnuplot_data)
        return 0, outs, extra

    if cfg.mode == "moments":
        rep = ex.run_moment_suite(cfg)
        _write(out, rep.to_text())
        return (0 if rep.passed else 1), [out], extra

    if cfg.mode == "branching":
        rep = ex.run_branching_suite(cfg)
        _write(out, rep.to_text())
        return (0 if rep.passed else 1), [out], extra

    if cfg.mode == "oracle-suite":
        rep = ex.run_oracle_suite(cfg)
        _write(out, rep.to_text())
        return (0 if rep.passed else 1), [out], extra

    if cfg.mode == "baseline":
        graph, truth = _load_graph(cfg)
        d = None
        if cfg.d is not None:
            d = cfg.d
        elif cfg.a is not None and cfg.b is not None:
            d = (cfg.a + cfg.b) / 2
        res = ex.spectral_baseline(graph, d, seed=cfg.seed)
        write_labels(out, res.labels)
        diag = (f"converged={int(res.converged)}\niterations={res.iterations}\n"
                f"residual={res.residual!r}\neigenvalue={res.eigenvalue!r}\n")
        if truth is not None:
            diag += f"overlap={overlap(truth, res.labels)!r}\n"
        _write(out + ".diag", diag)
        return 0, [out, out + ".diag"], extra

    raise UsageError(f"unknown mode {cfg.mode}")


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as stop:
        return int(stop.code or 0)
    try:
        cfg = _config(args)
        t0 = time.perf_counter()
        code, outputs, extra = run(cfg)
    except (UsageError, ValueError, FileNotFoundError) as err:
        print(f"nbcluster: error: {err}", file=sys.stderr)
        return 2
    ex.write_manifest(cfg.out + ".manifest", cfg, wall_clock=time.perf_counter() - t0,
                      seeds=[cfg.seed], outputs=outputs, extra=extra)
    for path in outputs:
        print(path)
    return code


if __name__ == "__main__":
    sys.exit(main())

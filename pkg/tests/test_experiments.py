import math

import numpy as np
import pytest

from nbcluster import experiments as ex
from nbcluster.cli import labels_path_for, main
from nbcluster.sbm import LabelledGraph, SbmParams, overlap, read_labels, sample_sbm


# -- config --------------------------------------------------------------------------


def test_config_text_round_trip(tmp_path):
    cfg = ex.ExperimentConfig(mode="phase-sweep", n=1000, d=3.0, grid=(0.5, 2.0), replicas=3,
                              variant="full", normalize=True, kappa=2.0)
    path = tmp_path / "c.txt"
    path.write_text(cfg.to_text() + "meta.version=x\n")
    back = ex.ExperimentConfig.from_mapping(ex.read_key_values(path))
    assert back == cfg


@pytest.mark.parametrize("values", [
    {"mode": "nope"},
    {"mode": "generate"},
    {"mode": "generate", "n": "10", "colour": "red"},
    {"mode": "phase-sweep", "n": "10", "d": "3", "grid": "1", "replicas": "0"},
    {"mode": "generate", "n": "10", "variant": "odd"},
])
def test_config_rejects(values):
    with pytest.raises((ValueError, TypeError)):
        ex.ExperimentConfig.from_mapping(values)


def test_model_from_config():
    assert ex.ExperimentConfig(mode="generate", n=100, a=4.0, b=2.0).sbm_params().s == 1.0
    assert ex.ExperimentConfig(mode="generate", n=100, d=3.0, snr=2.0).sbm_params().snr == pytest.approx(2.0)
    with pytest.raises(ValueError):
        ex.ExperimentConfig(mode="generate", n=100, d=3.0).sbm_params()


def test_malformed_key_value_file(tmp_path):
    p = tmp_path / "bad"
    p.write_text("# comment\nn=3\njunk\n")
    with pytest.raises(ValueError):
        ex.read_key_values(p)


def test_thread_count(monkeypatch):
    monkeypatch.setenv(ex.THREADS_ENV, "3")
    assert ex.thread_count() == 3
    monkeypatch.setenv(ex.THREADS_ENV, "x")
    with pytest.raises(ValueError):
        ex.thread_count()


def test_child_seeds_differ():
    seeds = {ex.child_seed(0, i, j) for i in range(5) for j in range(5)}
    assert len(seeds) == 25 and ex.child_seed(1, 2) == ex.child_seed(1, 2)


def test_subthreshold_point_uses_forced_constants():
    cfg = ex.ExperimentConfig(mode="phase-sweep", n=5000, d=3.0, grid=(0.5,))
    algo = ex.algo_for(SbmParams.from_snr(5000, 3.0, 0.5), cfg)
    assert algo.delta == ex.SUBTHRESHOLD_DELTA and algo.kappa == 0.0


# -- baseline ---------------------------------------------------------------------------


def test_baseline_splits_two_cliques():
    edges = [(i, j) for blk in (range(0, 10), range(10, 20)) for i in blk for j in blk if i < j]
    edges.append((0, 10))
    g = LabelledGraph.from_edges(20, edges, labels=[1] * 10 + [-1] * 10)
    res = ex.spectral_baseline(g, seed=1)
    assert res.converged
    assert overlap(g.labels, res.labels) == 1.0


def test_baseline_rejects_empty_graph():
    with pytest.raises(ValueError):
        ex.spectral_baseline(LabelledGraph.from_edges(0, []))


# -- suites ------------------------------------------------------------------------------


def test_small_sweep_is_reproducible():
    cfg = ex.ExperimentConfig(mode="phase-sweep", n=3000, d=10.0, grid=(1.0, 8.0), replicas=2, seed=4)
    a, b = ex.run_phase_sweep(cfg), ex.run_phase_sweep(cfg)
    assert [r[:6] for r in a.rows] == [r[:6] for r in b.rows]
    assert a.mean_overlap(8.0) > a.mean_overlap(1.0)
    assert a.to_csv().splitlines()[0] == ",".join(ex.SWEEP_COLUMNS)


def test_exact_first_moment_formula():
    p = SbmParams.from_d_s(6, 2.0, 1.8)
    sigma = ex.fixed_labelling(6)
    from nbcluster.paths import enumerate_saw_paths
    paths = enumerate_saw_paths(6, 2, 0, 1)
    want = len(paths) * sigma[0] * sigma[1] * 1.8**2 / 6**2
    assert ex.exact_first_moment(p, sigma, paths) == pytest.approx(want, abs=1e-14)


def test_oracle_report_informational_rows():
    rep = ex.OracleReport()
    rep.add("a", True)
    rep.add("b", False, informational=True)
    assert rep.passed and not rep.get("b")
    rep.add("c", False)
    assert not rep.passed


# -- CLI -------------------------------------------------------------------------------------


def test_cli_generate_cluster_baseline(tmp_path):
    edges = str(tmp_path / "g.edges")
    assert main(["generate", "--n", "3000", "--d", "10", "--snr", "8", "--seed", "2", "--out", edges]) == 0
    assert labels_path_for(edges).exists()
    tau = str(tmp_path / "tau.labels")
    assert main(["cluster", "--in", edges, "--d", "10", "--snr", "8", "--out", tau]) == 0
    diag = ex.read_key_values(tau + ".diag")
    assert float(diag["overlap"]) > 0.8
    base = str(tmp_path / "base.labels")
    assert main(["baseline", "--in", edges, "--d", "10", "--out", base]) == 0
    assert read_labels(base).size == 3000


@pytest.mark.parametrize("argv", [
    ["generate", "--out", "{tmp}/x"],
    ["cluster", "--in", "/nonexistent/file.edges", "--d", "3", "--snr", "2", "--out", "{tmp}/x"],
    ["generate", "--n", "100", "--d", "3", "--snr", "9", "--out", "{tmp}/x"],
    ["bogus"],
])
def test_cli_usage_errors(tmp_path, argv):
    assert main([a.format(tmp=tmp_path) for a in argv]) == 2


def test_sweep_csv_timing_is_opt_in(tmp_path):
    out = str(tmp_path / "s.csv")
    base = ["sweep", "--n", "2000", "--d", "10", "--grid", "8", "--replicas", "1", "--out", out]
    assert main(base) == 0
    assert (tmp_path / "s.csv").read_text().splitlines()[1].endswith(",nan")
    assert "meta.mean_runtime_s=" in (tmp_path / "s.csv.manifest").read_text()
    assert main(base + ["--timing", "true"]) == 0
    assert not (tmp_path / "s.csv").read_text().splitlines()[1].endswith(",nan")


def test_cli_config_mode_mismatch(tmp_path):
    out = str(tmp_path / "g.edges")
    assert main(["generate", "--n", "200", "--d", "3", "--snr", "2", "--out", out]) == 0
    assert main(["branching", "--config", out + ".manifest"]) == 2


def test_cli_manifest_rerun_is_identical(tmp_path):
    edges = str(tmp_path / "g.edges")
    main(["generate", "--n", "2000", "--d", "3", "--snr", "2.9", "--seed", "7", "--out", edges])
    first = (tmp_path / "g.edges").read_bytes()
    (tmp_path / "g.edges").unlink()
    assert main(["generate", "--config", edges + ".manifest"]) == 0
    assert (tmp_path / "g.edges").read_bytes() == first


def test_cli_flags_override_config(tmp_path):
    edges = str(tmp_path / "g.edges")
    main(["generate", "--n", "500", "--d", "3", "--snr", "2", "--out", edges])
    other = str(tmp_path / "h.edges")
    assert main(["generate", "--config", edges + ".manifest", "--n", "600", "--out", other]) == 0
    assert read_labels(labels_path_for(other)).size == 600

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from nbcluster.branching import (CalibrationError, better_than_half_probability, calibrate_kappa,
                                 coupled_plus_minus, poisson_process_level_sizes, psi,
                                 sample_labelled_tree, sample_psi_batch)


def test_coupled_identity_per_tree():
    for seed in range(200):
        plus, minus, c = coupled_plus_minus(3.0, math.sqrt(6.0), 3, seed)
        assert plus - minus == 2 * c


def test_batch_identity_and_level_sizes():
    out = sample_psi_batch(3.0, math.sqrt(6.0), 4, 5000, seed=1)
    assert np.array_equal(out["psi_plus"] - out["psi_minus"], 2 * out["root_size"])
    assert np.all(np.abs(out["psi"]) <= out["level_size"])
    assert np.all((out["psi"] - out["level_size"]) % 2 == 0)


def test_single_tree_structure():
    t = sample_labelled_tree(2.0, 1.5, 4, "plus", seed=3)
    assert t.labels[0] == 1 and t.parent[0] == -1
    assert np.all(t.depth[1:] == t.depth[t.parent[1:]] + 1)
    assert psi(t, 0).psi == 1
    # kept edges share a component and therefore a label
    kept = t.component[1:] == t.component[t.parent[1:]]
    assert np.all(t.labels[1:][kept] == t.labels[t.parent[1:]][kept])


def test_full_signal_copies_the_root_label():
    out = sample_psi_batch(2.0, 2.0, 3, 2000, seed=2, mode="plus")
    assert np.array_equal(out["psi"], out["level_size"])
    assert np.array_equal(out["root_size"], out["level_size"])


def test_zero_signal_detaches_the_root():
    out = sample_psi_batch(2.0, 0.0, 3, 2000, seed=2)
    assert not out["root_size"].any()
    assert np.array_equal(out["psi_plus"], out["psi_minus"])


def test_root_component_is_poisson_s_process():
    s, R, T = 1.6, 3, 40_000
    c = sample_psi_batch(3.0, s, R, T, seed=5)["root_size"]
    ref = poisson_process_level_sizes(s, R, T, seed=6)
    top = 12
    obs = np.bincount(np.minimum(c, top), minlength=top + 1)
    exp = np.bincount(np.minimum(ref, top), minlength=top + 1)
    _, p, _, _ = stats.chi2_contingency(np.vstack([obs, exp]))
    assert p > 1e-3


def test_constructions_agree_in_law():
    kw = dict(d=3.0, s=math.sqrt(6.0), R=3, trees=30_000)
    a = sample_psi_batch(**kw, seed=7, mode="plus")["psi"]
    b = sample_psi_batch(**kw, seed=8, mode="plus", construction="markov")["psi"]
    se = math.sqrt(a.var() / a.size + b.var() / b.size)
    assert abs(a.mean() - b.mean()) < 4 * se
    assert stats.ks_2samp(a, b).pvalue > 1e-3


def test_mean_is_signal_power():
    d, s, R = 3.0, math.sqrt(6.0), 4
    x = sample_psi_batch(d, s, R, 100_000, seed=11)["psi_plus"]
    assert abs(x.mean() - s**R) < 3 * x.std() / math.sqrt(x.size)


def test_sign_symmetry():
    a = sample_psi_batch(3.0, 2.0, 3, 30_000, seed=12, mode="plus")["psi"]
    b = sample_psi_batch(3.0, 2.0, 3, 30_000, seed=13, mode="minus")["psi"]
    se = math.sqrt(a.var() / a.size + b.var() / b.size)
    assert abs(a.mean() + b.mean()) < 4 * se


def test_negative_signal_on_even_depth():
    d, s, R = 3.0, -2.0, 2
    x = sample_psi_batch(d, s, R, 60_000, seed=14, mode="plus")["psi"]
    assert abs(x.mean() - s**R) < 4 * x.std() / math.sqrt(x.size)
    with pytest.raises(ValueError):
        sample_psi_batch(d, s, 3, 10)


@pytest.mark.parametrize("d,s,R", [(0.0, 0.0, 1), (2.0, 3.0, 1), (2.0, 1.0, -1)])
def test_rejects_bad_parameters(d, s, R):
    with pytest.raises(ValueError):
        sample_labelled_tree(d, s, R)


def test_second_moment_matches_pair_count():
    # ordered pairs at depth R whose last common ancestor sits at depth R - j number d^(2R - (R - j))
    # on average and have label correlation (s/d)^(2j); summing gives sum_j d^(R-j) s^(2j)
    d, s, R = 3.0, math.sqrt(6.0), 3
    x = sample_psi_batch(d, s, R, 100_000, seed=15, mode="plus")["psi"].astype(float)
    want = sum(d ** (R - j) * s ** (2 * j) for j in range(R + 1))
    sq = x**2
    assert abs(sq.mean() - want) < 4 * sq.std() / math.sqrt(sq.size)


@settings(max_examples=20, deadline=None)
@given(psi_val=st.integers(-50, 50), kappa=st.floats(0.5, 10), scale=st.floats(0.5, 10))
def test_better_than_half_probability_bounds(psi_val, kappa, scale):
    q = better_than_half_probability(np.array([psi_val]), kappa, scale)[0]
    assert 0 <= q <= 1
    if psi_val >= kappa * scale:
        assert q == 1.0
    if psi_val == 0:
        assert q == 0.5


def test_calibration_reaches_margin():
    cal = calibrate_kappa(3.0, math.sqrt(6.0), 4, samples=100_000, seed=0)
    est, lower = cal.better_than_half()
    assert lower >= 0.52 and est >= lower
    assert cal.kappa in [row[0] for row in cal.rows]
    assert "kappa=" in cal.to_text()


def test_calibration_errors():
    with pytest.raises(ValueError):
        calibrate_kappa(3.0, 1.0, 2)
    with pytest.raises(CalibrationError):
        calibrate_kappa(3.0, 1.8, 2, samples=200, grid=(1.0,), tail_level=0.0)

"""Overlap against s^2/d: nothing below the threshold at 1, rising above it."""

from nbcluster.experiments import ExperimentConfig, run_phase_sweep

cfg = ExperimentConfig(mode="phase-sweep", n=20_000, d=10.0, grid=(0.5, 1.0, 1.5, 2.0, 4.0, 8.0), replicas=4)
rep = run_phase_sweep(cfg)
for snr, _, _, reps, mean, se, _ in rep.rows:
    print(f"s^2/d = {snr:4.1f}: overlap {mean:.3f} +- {se:.3f} over {reps} graphs")
print(f"Kendall tau against s^2/d: {rep.kendall_tau:.2f}")

"""Level sums on labelled Poisson trees and the dither constant they calibrate."""

import math

from nbcluster.branching import calibrate_kappa, sample_psi_batch

d, s, R = 3.0, math.sqrt(6.0), 4
draws = sample_psi_batch(d, s, R, 100_000, seed=0)
plus = draws["psi_plus"]
print(f"mean psi+ = {plus.mean():.2f}  (s^R = {s**R:.2f})")
print("psi+ - psi- == 2 * root component size on every tree:",
      bool(((draws["psi_plus"] - draws["psi_minus"]) == 2 * draws["root_size"]).all()))

cal = calibrate_kappa(d, s, R, samples=100_000, seed=0)
p_hat, lower = cal.better_than_half()
print(f"kappa = {cal.kappa:g}: P[psi+ >= xi kappa s^R] = {p_hat:.4f} (99% lower bound {lower:.4f})")

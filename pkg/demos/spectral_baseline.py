"""Compare with the sign of the top eigenvector of the centred adjacency matrix."""

from nbcluster import SbmParams, cluster_simple, derive_params, overlap, sample_sbm
from nbcluster.experiments import spectral_baseline

for snr in (2.0, 4.0, 8.0):
    params = SbmParams.from_snr(20_000, 10.0, snr)
    g = sample_sbm(params, seed=2)
    base = spectral_baseline(g.without_labels(), params.d, seed=0)
    ours = cluster_simple(g.without_labels(), params, derive_params(params, kappa=0.0), seed=0)
    print(f"s^2/d = {snr}: spectral {overlap(g.labels, base.labels):.3f} "
          f"(converged={base.converged}), path sums {overlap(g.labels, ours.labels):.3f}")

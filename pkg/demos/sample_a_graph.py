"""Draw a two-community graph and look at what came out.

Mean degree should sit near d, and edges between same-label vertices should
outnumber cross edges by roughly a : b.
"""

import numpy as np

from nbcluster import SbmParams, sample_sbm

params = SbmParams.from_snr(20_000, d=5.0, snr=3.0)
print(f"a = {params.a:.3f}, b = {params.b:.3f}, d = {params.d:.3f}, s = {params.s:.3f}")

g = sample_sbm(params, seed=1)
e = g.edges()
same = g.labels[e[:, 0]] == g.labels[e[:, 1]]
print(f"{g.num_edges} edges, mean degree {2 * g.num_edges / g.n:.3f}")
print(f"same-label edges : cross edges = {same.sum()} : {(~same).sum()}"
      f"  (ratio {same.sum() / max(1, (~same).sum()):.2f}, a/b = {params.a / params.b:.2f})")
print(f"community sizes: {np.sum(g.labels == 1)} / {np.sum(g.labels == -1)}")

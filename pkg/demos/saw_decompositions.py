"""Cut a few walks into self-avoiding segments and count their edge types."""

from nbcluster.paths import canonical_saw_decomposition, classify_edges

walks = [
    (0, 1, 2, 3),
    (1, 2, 3, 1, 4),
    (0, 1, 2, 1, 0),
    (0, 1, 2, 0, 3, 4, 0, 5),
    (0, 1, 2, 1, 3),  # three segments with one backtrack and no returning step
]
for w in walks:
    rec = classify_edges(w)
    dec = canonical_saw_decomposition(w)
    pieces = ", ".join(f"{seg}x{m}" for seg, m in zip(dec.segments, dec.multiplicities))
    print(f"{w}: new={rec.k_n} old={rec.k_o} returning={rec.k_r} backtracks={rec.backtracks}")
    print(f"    cut at {sorted(dec.endpoints)} -> {pieces}")

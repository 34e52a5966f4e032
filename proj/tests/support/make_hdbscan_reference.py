"""Regenerates tests/data/hdbscan_reference.json from scikit-learn's HDBSCAN.

scikit-learn counts the point itself in min_samples; the C++ library does not,
so each case stores both values.

scikit-learn sorts the MST edges with numpy's default (unstable) argsort, so
the order of equal-weight edges, and with it the side a tied point joins, is
an accident of the sort. The fixture patches that one call to a stable sort,
which is the tie order the C++ library uses. "labels_unstable" keeps the
unpatched output for reference.

    python3 tests/support/make_hdbscan_reference.py
"""
import json
import pathlib

import numpy as np
from sklearn.cluster import HDBSCAN
import sklearn.cluster._hdbscan.hdbscan as skh


class _StableArgsort:
    def __getattr__(self, name):
        return getattr(np, name)

    @staticmethod
    def argsort(a, **kw):
        kw.setdefault("kind", "stable")
        return np.argsort(a, **kw)

CASES = [
    # (seed, n_per_blob, n_blobs, dim, spread, uniform_noise, min_samples, min_cluster_size)
    (1, 40, 3, 2, 1.0, 10, 4, 8),
    (2, 60, 2, 5, 1.5, 0, 5, 10),
    (3, 25, 4, 3, 0.8, 15, 3, 5),
    (4, 50, 3, 4, 2.5, 20, 7, 15),
    (5, 30, 5, 2, 1.2, 25, 5, 6),
    (6, 80, 2, 3, 3.0, 5, 10, 20),
    (7, 20, 6, 2, 0.6, 0, 2, 4),
    (8, 45, 3, 6, 1.0, 30, 6, 12),
]


def main():
    out = []
    for seed, per, blobs, dim, spread, noise, ms, mcs in CASES:
        rng = np.random.default_rng(seed)
        centers = rng.uniform(-10, 10, size=(blobs, dim))
        pts = [c + spread * rng.standard_normal((per, dim)) for c in centers]
        if noise:
            pts.append(rng.uniform(-14, 14, size=(noise, dim)))
        x = np.round(np.vstack(pts), 6)
        model = HDBSCAN(min_samples=ms + 1, min_cluster_size=mcs, algorithm="brute")
        unstable = model.fit(x).labels_
        skh.np = _StableArgsort()
        try:
            labels = model.fit(x).labels_
        finally:
            skh.np = np
        out.append({
            "seed": seed,
            "min_samples": ms,
            "min_cluster_size": mcs,
            "points": x.tolist(),
            "labels": labels.tolist(),
            "labels_unstable": unstable.tolist(),
        })
    path = pathlib.Path(__file__).resolve().parents[1] / "data" / "hdbscan_reference.json"
    path.write_text(json.dumps(out) + "\n")


if __name__ == "__main__":
    main()

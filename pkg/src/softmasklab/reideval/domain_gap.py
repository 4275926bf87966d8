"""Inter-domain distribution distance through a 2-D embedding lens.

The embedder is a plug-in with the usual fit/transform surface; the default
is a mean-centered projection onto the top two principal directions. The
embedder fits on a per-set fitting subset and embeds a (possibly smaller)
visualization subset; the reported value is the L1 distance between the two
embedded per-domain centroids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.decomposition import PCA


class PcaEmbedder:
    """Default 2-D embedder: mean-centered top-2 principal projection."""

    def __init__(self):
        self._pca = PCA(n_components=2, svd_solver="full")

    def fit(self, X):
        self._pca.fit(np.asarray(X, dtype=np.float64))
        return self

    def transform(self, X):
        return self._pca.transform(np.asarray(X, dtype=np.float64))


@dataclass(frozen=True)
class DomainGapResult:
    distance: float
    points: np.ndarray   # (n, 2) embedded visualization points
    labels: np.ndarray   # 0 for the first set, 1 for the second
    centroids: np.ndarray  # (2, 2)


def _as_matrix(feats) -> np.ndarray:
    arr = np.asarray(feats, dtype=np.float64)
    if arr.ndim > 2:
        arr = arr.reshape(arr.shape[0], -1)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError("feature sets must be non-empty 2-D arrays")
    return arr


def _subset(arr: np.ndarray, count, seed) -> np.ndarray:
    if count is None or count >= arr.shape[0]:
        return arr
    # The sampling stream depends only on (seed, set size), not on which
    # argument position the set occupies, keeping the distance symmetric.
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), arr.shape[0]]))
    idx = np.sort(rng.choice(arr.shape[0], size=count, replace=False))
    return arr[idx]


def embed_domains(feats_a, feats_b, embedder=None, fit_count=5000,
                  plot_count=200, seed=0) -> DomainGapResult:
    a = _as_matrix(feats_a)
    b = _as_matrix(feats_b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"feature dimensions differ: {a.shape[1]} vs {b.shape[1]}"
        )
    embedder = embedder if embedder is not None else PcaEmbedder()
    fit_a = _subset(a, fit_count, seed)
    fit_b = _subset(b, fit_count, seed)
    embedder.fit(np.concatenate([fit_a, fit_b]))
    vis_a = embedder.transform(_subset(a, plot_count, seed + 1))
    vis_b = embedder.transform(_subset(b, plot_count, seed + 1))
    centroid_a = vis_a.mean(axis=0)
    centroid_b = vis_b.mean(axis=0)
    distance = float(np.abs(centroid_a - centroid_b).sum())
    return DomainGapResult(
        distance=distance,
        points=np.concatenate([vis_a, vis_b]),
        labels=np.concatenate([
            np.zeros(len(vis_a), dtype=np.int64),
            np.ones(len(vis_b), dtype=np.int64),
        ]),
        centroids=np.stack([centroid_a, centroid_b]),
    )


def domain_centroid_distance(feats_a, feats_b, embedder=None, fit_count=5000,
                             plot_count=200, seed=0) -> float:
    """L1 distance between the embedded per-domain centroids."""
    return embed_domains(feats_a, feats_b, embedder=embedder,
                         fit_count=fit_count, plot_count=plot_count,
                         seed=seed).distance

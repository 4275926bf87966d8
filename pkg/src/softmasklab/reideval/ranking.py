"""Gallery ranking under the single-query evaluation protocol."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..exceptions import DataError
from ..validation import check_labels

DISTRACTOR_ID = -1


@dataclass(frozen=True)
class FeatureSet:
    """Row-aligned feature vectors with identity, camera, and domain labels."""

    features: np.ndarray
    identities: np.ndarray
    cameras: np.ndarray
    domains: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float32)
        if feats.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {feats.shape}")
        n = feats.shape[0]
        object.__setattr__(self, "features", feats)
        for name in ("identities", "cameras", "domains"):
            object.__setattr__(self, name, check_labels(getattr(self, name), n, name))

    def __len__(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    @classmethod
    def from_samples(cls, features, samples):
        return cls(
            features=features,
            identities=[s.identity for s in samples],
            cameras=[s.camera for s in samples],
            domains=[s.domain for s in samples],
        )

    def save(self, bin_path, csv_path):
        """Feature dump: little-endian float32 rows plus a label sidecar."""
        arr = np.ascontiguousarray(self.features.astype("<f4"))
        Path(bin_path).write_bytes(arr.tobytes())
        lines = ["index,identity,camera,domain"]
        for i in range(len(self)):
            lines.append(
                f"{i},{self.identities[i]},{self.cameras[i]},{self.domains[i]}"
            )
        Path(csv_path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, bin_path, csv_path):
        lines = Path(csv_path).read_text().strip().splitlines()
        rows = [line.split(",") for line in lines[1:]]
        n = len(rows)
        raw = np.frombuffer(Path(bin_path).read_bytes(), dtype="<f4")
        if n == 0 or raw.size % n:
            raise DataError(
                f"feature dump {bin_path} does not divide into {n} rows"
            )
        return cls(
            features=raw.reshape(n, -1),
            identities=[int(r[1]) for r in rows],
            cameras=[int(r[2]) for r in rows],
            domains=[int(r[3]) for r in rows],
        )


@dataclass(frozen=True)
class RankingResult:
    """Ordered galleries per query.

    All arrays are (num_queries, gallery_size) and aligned with ``order``:
    ``distances`` are non-decreasing along each row; entries with
    ``valid == False`` are excluded by the protocol and never counted as
    matches or non-matches; ``matches`` flags correct-identity entries
    (never distractors).
    """

    order: np.ndarray
    distances: np.ndarray
    valid: np.ndarray
    matches: np.ndarray

    @property
    def num_queries(self):
        return self.order.shape[0]


def rank_gallery(queries: FeatureSet, gallery: FeatureSet,
                 cross_camera: bool = True) -> RankingResult:
    """Euclidean ranking of the gallery for every query.

    With ``cross_camera`` on, gallery entries sharing both identity and
    camera with the query are excluded (the standard single-query
    convention). Distractor entries (identity -1) stay rankable but never
    match. Ties break by gallery index ascending.
    """
    if queries.dim != gallery.dim:
        raise ValueError(
            f"query features have dim {queries.dim}, gallery {gallery.dim}"
        )
    q = queries.features.astype(np.float64)
    g = gallery.features.astype(np.float64)
    sq = (q * q).sum(axis=1)[:, None] + (g * g).sum(axis=1)[None, :]
    d2 = np.maximum(sq - 2.0 * q @ g.T, 0.0)
    dist = np.sqrt(d2)

    order = np.argsort(dist, axis=1, kind="stable")
    sorted_dist = np.take_along_axis(dist, order, axis=1)

    g_ids = gallery.identities[order]
    g_cams = gallery.cameras[order]
    q_ids = queries.identities[:, None]
    q_cams = queries.cameras[:, None]

    matches = (g_ids == q_ids) & (g_ids != DISTRACTOR_ID)
    if cross_camera:
        excluded = (g_ids == q_ids) & (g_cams == q_cams) & (g_ids != DISTRACTOR_ID)
    else:
        excluded = np.zeros_like(matches)
    return RankingResult(
        order=order,
        distances=sorted_dist,
        valid=~excluded,
        matches=matches & ~excluded,
    )

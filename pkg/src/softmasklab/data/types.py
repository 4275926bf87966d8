"""Core data types: samples, corpora, indicators, and batch plans."""

from __future__ import annotations

import colorsys
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..exceptions import DataError
from ..validation import check_image, check_mask

ONE_HOT = "one-hot"
UNIFORM = "uniform"


@dataclass(frozen=True)
class IndicatorKind:
    """Which conditioning tensor a generator input receives.

    ``one-hot`` selects a target domain ``k`` for style transfer; ``uniform``
    requests a soft-mask (background-suppressed) image.
    """

    kind: str
    k: Optional[int] = None

    def __post_init__(self):
        if self.kind not in (ONE_HOT, UNIFORM):
            raise ValueError(f"unknown indicator kind {self.kind!r}")
        if self.kind == ONE_HOT and (self.k is None or self.k < 0):
            raise ValueError("one-hot indicator requires a domain index k >= 0")
        if self.kind == UNIFORM and self.k is not None:
            raise ValueError("uniform indicator takes no domain index")

    @classmethod
    def one_hot(cls, k: int) -> "IndicatorKind":
        return cls(ONE_HOT, int(k))

    @classmethod
    def uniform(cls) -> "IndicatorKind":
        return cls(UNIFORM)


@dataclass(frozen=True)
class DomainIndicator:
    """A materialized K-channel conditioning tensor of shape (K, H, W)."""

    tensor: np.ndarray
    kind: IndicatorKind

    @property
    def num_domains(self) -> int:
        return self.tensor.shape[0]


@dataclass(frozen=True)
class ImageSample:
    """One image with identity, camera, and domain labels plus an optional
    foreground mask aligned with the image."""

    image: np.ndarray  # (H, W, 3) float32 in [-1, 1]
    identity: int
    camera: int
    domain: int
    mask: Optional[np.ndarray] = None  # (H, W) float32 in [0, 1]

    def __post_init__(self):
        object.__setattr__(self, "image", check_image(self.image))
        if self.mask is not None:
            object.__setattr__(self, "mask", check_mask(self.mask, self.image))
        for name in ("identity", "camera", "domain"):
            value = getattr(self, name)
            if int(value) != value or (value < 0 and name != "identity"):
                raise ValueError(f"{name} must be a non-negative integer, got {value}")
        if self.identity < -1:
            raise ValueError(f"identity must be >= -1, got {self.identity}")

    @property
    def size(self):
        return self.image.shape[:2]


class Corpus:
    """An immutable multi-domain collection of samples with index maps."""

    def __init__(self, samples, num_domains):
        samples = tuple(samples)
        if not samples:
            raise DataError("corpus has no samples")
        if num_domains < 1:
            raise ValueError(f"num_domains must be >= 1, got {num_domains}")
        size = samples[0].size
        for i, s in enumerate(samples):
            if s.domain >= num_domains:
                raise ValueError(
                    f"sample {i} has domain {s.domain} >= num_domains {num_domains}"
                )
            if s.size != size:
                raise DataError(
                    f"sample {i} has size {s.size}, corpus uses {size}"
                )
        self.samples = samples
        self.num_domains = int(num_domains)
        self.by_domain = {d: [] for d in range(num_domains)}
        self.by_identity = {}
        for i, s in enumerate(samples):
            self.by_domain[s.domain].append(i)
            self.by_identity.setdefault(s.identity, []).append(i)
        missing = [d for d, idx in self.by_domain.items() if not idx]
        if missing:
            raise DataError(f"domains without samples: {missing}")

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, i) -> ImageSample:
        return self.samples[i]

    def __iter__(self):
        return iter(self.samples)

    @property
    def image_size(self):
        return self.samples[0].size

    def identities(self):
        return sorted(self.by_identity)

    def has_masks(self) -> bool:
        return all(s.mask is not None for s in self.samples)

    def images(self, indices=None) -> np.ndarray:
        idx = range(len(self)) if indices is None else indices
        return np.stack([self.samples[i].image for i in idx])

    def masks(self, indices=None) -> np.ndarray:
        idx = range(len(self)) if indices is None else indices
        out = []
        for i in idx:
            if self.samples[i].mask is None:
                raise DataError(f"sample {i} has no mask")
            out.append(self.samples[i].mask)
        return np.stack(out)

    def subset(self, indices) -> "Corpus":
        return Corpus([self.samples[i] for i in indices], self.num_domains)


@dataclass(frozen=True)
class GanBatchPlan:
    """A mini-batch partition for adversarial training.

    ``special`` indices produce a soft-mask image plus style transfers to all
    foreign domains; ``general`` indices produce one style transfer each, to
    the foreign domain recorded in ``general_targets``.
    """

    special: tuple
    general: tuple
    general_targets: tuple  # foreign domain per general index, aligned

    def __post_init__(self):
        if set(self.special) & set(self.general):
            raise ValueError("special and general indices overlap")
        if len(self.general) != len(self.general_targets):
            raise ValueError("general_targets must align with general indices")

    @property
    def batch_size(self) -> int:
        return len(self.special) + len(self.general)

    def indices(self):
        return tuple(self.special) + tuple(self.general)


def default_palette(num_domains, min_separation):
    """Evenly spaced background base colors in [-1, 1] RGB space."""
    colors = []
    for d in range(num_domains):
        hue = (d / num_domains + 0.08) % 1.0
        r, g, b = colorsys.hsv_to_rgb(hue, 0.9, 0.9)
        colors.append((2 * r - 1, 2 * g - 1, 2 * b - 1))
    palette = tuple(tuple(round(c, 4) for c in col) for col in colors)
    _check_separation(palette, min_separation)
    return palette


def _check_separation(palette, min_separation):
    for i in range(len(palette)):
        for j in range(i + 1, len(palette)):
            d = float(np.linalg.norm(np.subtract(palette[i], palette[j])))
            if d < min_separation:
                raise ValueError(
                    f"palette colors {i} and {j} are {d:.3f} apart, below the "
                    f"required separation {min_separation}"
                )


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the synthetic multi-domain corpus generator.

    Identities are shared across domains: every identity renders in every
    domain so cross-domain retrieval has ground truth. ``images_per_identity``
    counts images per identity within one domain.
    """

    num_domains: int = 2
    identities: int = 8
    images_per_identity: int = 24
    image_size: tuple = (64, 32)  # (H, W)
    cameras_per_domain: int = 2
    background_palette: Optional[tuple] = None  # per-domain RGB in [-1, 1]
    min_palette_separation: float = 0.5
    background_noise: float = 0.06
    background_gradient: float = 0.12
    foreground_strength: float = 0.8
    coverage_range: tuple = (0.16, 0.34)
    mask_noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.num_domains < 1:
            raise ValueError("num_domains must be >= 1")
        if self.identities < 1 or self.images_per_identity < 1:
            raise ValueError("identities and images_per_identity must be >= 1")
        h, w = self.image_size
        if h < 16 or w < 8:
            raise ValueError(f"image_size {self.image_size} is too small to render")
        if self.cameras_per_domain < 2:
            raise ValueError("need >= 2 cameras per domain for retrieval protocols")
        lo, hi = self.coverage_range
        if not (0.0 < lo <= hi < 1.0):
            raise ValueError("coverage_range must be inside (0, 1)")
        if not 0.0 <= self.mask_noise < 1.0:
            raise ValueError("mask_noise must lie in [0, 1)")
        if self.background_palette is None:
            object.__setattr__(
                self,
                "background_palette",
                default_palette(self.num_domains, self.min_palette_separation),
            )
        else:
            palette = tuple(tuple(float(c) for c in col) for col in self.background_palette)
            if len(palette) != self.num_domains:
                raise ValueError(
                    f"palette has {len(palette)} colors for {self.num_domains} domains"
                )
            _check_separation(palette, self.min_palette_separation)
            object.__setattr__(self, "background_palette", palette)

    def with_seed(self, seed) -> "SyntheticSpec":
        return replace(self, seed=int(seed))

    @property
    def total_images(self) -> int:
        return self.num_domains * self.identities * self.images_per_identity

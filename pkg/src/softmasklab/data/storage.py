"""Corpus persistence: PNG trees following the re-ID filename convention.

Image files are named ``<id>_c<camera>_d<domain>_<seq>.png``; masks, when
present, live in a sibling ``masks/`` directory under the same basename as
8-bit grayscale. Pixels map affinely between uint8 [0, 255] on disk and
float [-1, 1] in memory; masks map to [0, 1].
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from ..exceptions import DataError, FilenameParseError
from .types import Corpus, ImageSample
from .transforms import resize_image, resize_mask

_NAME_RE = re.compile(r"^(-?\d+)_c(\d+)_d(\d+)_(\d+)\.png$")

MASK_DIRNAME = "masks"


@dataclass(frozen=True)
class LayoutSpec:
    """How a corpus directory is interpreted on load."""

    image_size: Optional[tuple] = None  # (H, W) to resize to; None keeps files as-is
    require_masks: bool = False
    num_domains: Optional[int] = None  # inferred from files when None


def parse_filename(name: str):
    """Split ``<id>_c<camera>_d<domain>_<seq>.png`` into its label fields."""
    m = _NAME_RE.match(name)
    if m is None:
        raise FilenameParseError(
            f"file name {name!r} does not follow <id>_c<camera>_d<domain>_<seq>.png"
        )
    return tuple(int(g) for g in m.groups())


def format_filename(identity, camera, domain, seq) -> str:
    return f"{identity:04d}_c{camera}_d{domain}_{seq:04d}.png"


def _to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.rint((image + 1.0) * 127.5), 0, 255).astype(np.uint8)


def _from_uint8(raw: np.ndarray) -> np.ndarray:
    return (raw.astype(np.float32) * 2.0 / 255.0) - 1.0


def corpus_filenames(corpus: Corpus):
    """File names aligned with sample order; sequence numbers count per
    (identity, camera, domain) so the naming is a pure function of the
    corpus."""
    counters = {}
    names = []
    for sample in corpus:
        key = (sample.identity, sample.camera, sample.domain)
        seq = counters.get(key, 0)
        counters[key] = seq + 1
        names.append(format_filename(sample.identity, sample.camera,
                                     sample.domain, seq))
    return names


def write_image(image: np.ndarray, path) -> None:
    """Write one float image in [-1, 1] as 8-bit PNG."""
    Image.fromarray(_to_uint8(np.asarray(image))).save(path)


def read_image(path, size=None) -> np.ndarray:
    """Read an 8-bit PNG back to float32 in [-1, 1], optionally resized."""
    image = _from_uint8(np.asarray(Image.open(path).convert("RGB")))
    if size is not None and image.shape[:2] != tuple(size):
        image = resize_image(image, size)
    return image


def write_corpus(corpus: Corpus, root) -> None:
    """Write images (and masks, when present) under ``root``."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    mask_dir = root / MASK_DIRNAME
    for sample, name in zip(corpus, corpus_filenames(corpus)):
        write_image(sample.image, root / name)
        if sample.mask is not None:
            mask_dir.mkdir(exist_ok=True)
            raw = np.clip(np.rint(sample.mask * 255.0), 0, 255).astype(np.uint8)
            Image.fromarray(raw, mode="L").save(mask_dir / name)


def load_corpus(root, layout: LayoutSpec = LayoutSpec()) -> Corpus:
    """Load a corpus directory written in the filename convention."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"corpus directory {root} does not exist")
    files = sorted(p for p in root.iterdir() if p.suffix == ".png")
    if not files:
        raise DataError(f"no samples found under {root}")
    mask_dir = root / MASK_DIRNAME
    samples = []
    max_domain = 0
    for path in files:
        identity, camera, domain, _seq = parse_filename(path.name)
        raw = np.asarray(Image.open(path).convert("RGB"))
        image = _from_uint8(raw)
        mask = None
        mask_path = mask_dir / path.name
        if mask_path.exists():
            mask = np.asarray(Image.open(mask_path).convert("L")).astype(np.float32) / 255.0
        elif layout.require_masks:
            raise DataError(f"mask required but missing for {path.name}")
        if layout.image_size is not None and image.shape[:2] != tuple(layout.image_size):
            image = resize_image(image, layout.image_size)
            if mask is not None:
                mask = resize_mask(mask, layout.image_size)
        samples.append(
            ImageSample(image=image, identity=identity, camera=camera,
                        domain=domain, mask=mask)
        )
        max_domain = max(max_domain, domain)
    num_domains = layout.num_domains if layout.num_domains else max_domain + 1
    return Corpus(samples, num_domains)

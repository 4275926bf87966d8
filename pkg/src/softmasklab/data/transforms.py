"""Image augmentation and resizing."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F


def resize_image(image: np.ndarray, size) -> np.ndarray:
    """Bilinear resize of an (H, W, C) image to ``size`` = (H, W)."""
    image = np.asarray(image, dtype=np.float32)
    if image.shape[:2] == tuple(size):
        return image
    t = torch.from_numpy(np.ascontiguousarray(image)).permute(2, 0, 1)[None]
    out = F.interpolate(t, size=tuple(size), mode="bilinear", align_corners=False)
    return out[0].permute(1, 2, 0).numpy()


def resize_mask(mask: np.ndarray, size) -> np.ndarray:
    """Bilinear resize of an (H, W) mask, clipped back to [0, 1]."""
    mask = np.asarray(mask, dtype=np.float32)
    if mask.shape == tuple(size):
        return mask
    t = torch.from_numpy(np.ascontiguousarray(mask))[None, None]
    out = F.interpolate(t, size=tuple(size), mode="bilinear", align_corners=False)
    return np.clip(out[0, 0].numpy(), 0.0, 1.0)


def augment(image: np.ndarray, flip: bool, size=None) -> np.ndarray:
    """Horizontal mirror when ``flip``; optional bilinear resize to ``size``."""
    image = np.asarray(image, dtype=np.float32)
    if image.ndim not in (2, 3):
        raise ValueError(f"image must be 2-D or 3-D, got shape {image.shape}")
    if size is not None:
        if image.ndim == 2:
            image = resize_mask(image, size)
        else:
            image = resize_image(image, size)
    if flip:
        image = image[:, ::-1].copy()
    return image

"""Indicator construction and mask application."""

from __future__ import annotations

import numpy as np

from .types import ONE_HOT, UNIFORM, DomainIndicator, IndicatorKind


def build_indicator(num_domains, target, height, width) -> DomainIndicator:
    """Build the (K, H, W) conditioning tensor concatenated to generator inputs.

    ``target`` is an :class:`IndicatorKind`: one-hot(k) sets channel k to one
    and every other channel to zero; uniform sets every value to 1/K.
    """
    if num_domains < 1:
        raise ValueError(f"num_domains must be >= 1, got {num_domains}")
    if height < 1 or width < 1:
        raise ValueError(f"height and width must be positive, got {height}x{width}")
    if not isinstance(target, IndicatorKind):
        raise TypeError(f"target must be an IndicatorKind, got {type(target).__name__}")
    tensor = np.zeros((num_domains, height, width), dtype=np.float32)
    if target.kind == ONE_HOT:
        if target.k >= num_domains:
            raise ValueError(
                f"one-hot domain {target.k} out of range for {num_domains} domains"
            )
        tensor[target.k] = 1.0
    elif target.kind == UNIFORM:
        tensor[:] = 1.0 / num_domains
    return DomainIndicator(tensor=tensor, kind=target)


def apply_mask(image, mask):
    """Elementwise product of an image and a foreground mask.

    The mask broadcasts over the channel axis; works for channel-first
    (C, H, W) and channel-last (H, W, C) layouts alike.
    """
    image = np.asarray(image)
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {mask.shape}")
    if image.ndim == 2:
        if image.shape != mask.shape:
            raise ValueError(
                f"image shape {image.shape} does not match mask {mask.shape}"
            )
        return image * mask
    if image.ndim != 3:
        raise ValueError(f"image must be 2-D or 3-D, got shape {image.shape}")
    if image.shape[:2] == mask.shape:  # (H, W, C)
        return image * mask[:, :, None]
    if image.shape[1:] == mask.shape:  # (C, H, W)
        return image * mask[None, :, :]
    raise ValueError(
        f"image shape {image.shape} is incompatible with mask shape {mask.shape}"
    )

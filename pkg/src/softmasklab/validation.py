"""Input validation helpers used by the estimators and the lower-level ops.

Images are channel-last float arrays (H, W, 3) with values in [-1, 1];
masks are (H, W) float arrays in [0, 1]. Batches stack along a leading axis.
"""

from __future__ import annotations

import numpy as np


def check_image(image, size=None, name="image"):
    """Validate a single (H, W, 3) image array and return it as float32.

    ``size`` is an optional (H, W) pair the image must match.
    """
    arr = np.asarray(image, dtype=np.float32)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"{name} must have shape (H, W, 3), got {arr.shape}")
    if size is not None and tuple(arr.shape[:2]) != tuple(size):
        raise ValueError(
            f"{name} has spatial size {arr.shape[:2]}, expected {tuple(size)}"
        )
    return arr


def check_image_batch(images, size=None, name="images"):
    """Validate a batch of images; accepts (N, H, W, 3) or a single image."""
    arr = np.asarray(images, dtype=np.float32)
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4 or arr.shape[3] != 3:
        raise ValueError(f"{name} must have shape (N, H, W, 3), got {arr.shape}")
    if size is not None and tuple(arr.shape[1:3]) != tuple(size):
        raise ValueError(
            f"{name} has spatial size {arr.shape[1:3]}, expected {tuple(size)}"
        )
    return arr


def check_mask(mask, image=None, name="mask"):
    """Validate an (H, W) mask in [0, 1], optionally against a host image."""
    arr = np.asarray(mask, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"{name} must have shape (H, W), got {arr.shape}")
    if image is not None and arr.shape != tuple(np.asarray(image).shape[:2]):
        raise ValueError(
            f"{name} shape {arr.shape} does not match image spatial size "
            f"{np.asarray(image).shape[:2]}"
        )
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{name} values must lie in [0, 1]")
    return arr


def check_labels(labels, n=None, name="labels"):
    """Validate an integer label vector, optionally of length ``n``."""
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == arr.astype(np.int64)):
            raise ValueError(f"{name} must be integers")
        arr = arr.astype(np.int64)
    if n is not None and arr.shape[0] != n:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {n}")
    return arr.astype(np.int64)


def check_seed(seed):
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    return int(seed)

"""Small torch interop helpers shared by the GAN and re-ID models."""

from __future__ import annotations

import numpy as np
import torch


def to_nchw(images: np.ndarray) -> torch.Tensor:
    """Convert (N, H, W, C) or (H, W, C) numpy images to an NCHW float tensor."""
    arr = np.asarray(images, dtype=np.float32)
    if arr.ndim == 3:
        arr = arr[None]
    if arr.ndim != 4:
        raise ValueError(f"expected 3-D or 4-D image array, got shape {arr.shape}")
    return torch.from_numpy(np.ascontiguousarray(arr)).permute(0, 3, 1, 2).contiguous()


def to_nhwc(tensor: torch.Tensor) -> np.ndarray:
    """Convert an NCHW tensor back to (N, H, W, C) float32 numpy."""
    return tensor.detach().permute(0, 2, 3, 1).contiguous().cpu().numpy()


def derive_seed(*parts) -> int:
    """Stable 32-bit seed derived from integer parts (seed, step, role, ...)."""
    ss = np.random.SeedSequence([int(p) & 0x7FFFFFFF for p in parts])
    return int(ss.generate_state(1)[0])


def seeded_generator(*parts) -> torch.Generator:
    gen = torch.Generator()
    gen.manual_seed(derive_seed(*parts))
    return gen


def init_conv_weights(module: torch.nn.Module, std: float, generator=None) -> None:
    """Zero-mean Gaussian init for every conv kernel under ``module``."""
    with torch.no_grad():
        for m in module.modules():
            if isinstance(m, (torch.nn.Conv2d, torch.nn.ConvTranspose2d)):
                m.weight.normal_(0.0, std, generator=generator)
                if m.bias is not None:
                    m.bias.zero_()


def module_tensors(module: torch.nn.Module, prefix: str) -> dict:
    """Named parameters and buffers as numpy arrays, keyed with ``prefix``."""
    out = {}
    for name, p in module.state_dict().items():
        out[f"{prefix}.{name}"] = p.detach().cpu().numpy()
    return out


def load_module_tensors(module: torch.nn.Module, tensors: dict, prefix: str) -> None:
    state = {}
    skip = len(prefix) + 1
    for name, arr in tensors.items():
        if name.startswith(prefix + "."):
            state[name[skip:]] = torch.from_numpy(np.ascontiguousarray(arr))
    module.load_state_dict(state)


def optimizer_tensors(optimizer: torch.optim.Optimizer, prefix: str) -> dict:
    """Flatten optimizer per-parameter state into named numpy arrays."""
    out = {}
    for gi, group in enumerate(optimizer.param_groups):
        for pi, param in enumerate(group["params"]):
            state = optimizer.state.get(param, {})
            for key, value in state.items():
                if isinstance(value, torch.Tensor):
                    out[f"{prefix}.g{gi}.p{pi}.{key}"] = value.detach().cpu().numpy()
                else:
                    out[f"{prefix}.g{gi}.p{pi}.{key}"] = np.asarray(value)
    return out


def load_optimizer_tensors(optimizer: torch.optim.Optimizer, tensors: dict,
                           prefix: str) -> None:
    for gi, group in enumerate(optimizer.param_groups):
        for pi, param in enumerate(group["params"]):
            head = f"{prefix}.g{gi}.p{pi}."
            state = {}
            for name, arr in tensors.items():
                if name.startswith(head):
                    key = name[len(head):]
                    t = torch.from_numpy(np.ascontiguousarray(arr))
                    state[key] = t.reshape(()) if arr.ndim == 0 else t
            if state:
                optimizer.state[param] = state

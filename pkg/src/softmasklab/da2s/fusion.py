"""Inter-stream dense fusion modules and squeeze-excite re-weighting.

Each fusion module concatenates the two streams' taps along channels, adds
the previous module's output elementwise (from the second module on), and
applies a 3x3 convolution, batch normalization, then ReLU. Output channels
double the concatenated input and match the next tap's concatenation, which
is what makes the elementwise sum well-typed.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from ..exceptions import ConfigurationError, WiringError
from .backbone import TapShape, _conv_out, init_stream_weights

ISDC_KERNEL = 3
ISDC_PADDING = 1
ISDC_STRIDES = (2, 2, 2, 1)


class SqueezeExcite(nn.Module):
    """Channel re-weighting: squeeze to per-channel means, excite through a
    bottleneck of ``channels / reduction`` units, scale by the sigmoid."""

    def __init__(self, channels, reduction=16):
        super().__init__()
        if channels % reduction:
            raise ConfigurationError(
                f"{channels} channels are not divisible by reduction {reduction}"
            )
        hidden = channels // reduction
        self.fc1 = nn.Linear(channels, hidden)
        self.fc2 = nn.Linear(hidden, channels)

    def excitation(self, squeezed: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.fc2(torch.relu(self.fc1(squeezed))))

    def forward(self, x):
        squeezed = x.mean(dim=(2, 3))
        scale = self.excitation(squeezed)
        return x * scale[:, :, None, None]


def se_reweight(features: torch.Tensor, block: SqueezeExcite) -> torch.Tensor:
    """Apply a squeeze-excite block to a feature map."""
    return block(features)


@dataclass(frozen=True)
class IsdcSpec:
    in_channels: int
    out_channels: int
    stride: int
    in_shape: TapShape   # concatenated tap feeding this module
    out_shape: TapShape  # expected output (= next concatenated tap)


def plan_isdc_stack(concat_taps):
    """Derive the four module specs from the concatenated tap table.

    ``concat_taps`` holds five entries (pool + three transitions + final).
    Module n consumes tap n and must reproduce tap n+1's shape so the
    elementwise sum with the next concatenation type-checks.
    """
    if len(concat_taps) != 5:
        raise WiringError(f"expected 5 tap entries, got {len(concat_taps)}")
    specs = []
    for n in range(4):
        src, dst = concat_taps[n], concat_taps[n + 1]
        stride = ISDC_STRIDES[n]
        out_h = _conv_out(src.height, ISDC_KERNEL, stride, ISDC_PADDING)
        out_w = _conv_out(src.width, ISDC_KERNEL, stride, ISDC_PADDING)
        if (out_h, out_w) != dst.spatial:
            raise WiringError(
                f"fusion module {n + 1} (stride {stride}) maps tap {n + 1} "
                f"spatial {src.spatial} to {(out_h, out_w)}, but tap {n + 2} "
                f"is {dst.spatial}"
            )
        specs.append(IsdcSpec(src.channels, dst.channels, stride, src, dst))
    return specs


class IsdcModule(nn.Module):
    def __init__(self, spec: IsdcSpec, use_se=False, se_reduction=16):
        super().__init__()
        self.spec = spec
        self.conv = nn.Conv2d(spec.in_channels, spec.out_channels, ISDC_KERNEL,
                              spec.stride, ISDC_PADDING, bias=False)
        self.norm = nn.BatchNorm2d(spec.out_channels)
        self.se = SqueezeExcite(spec.out_channels, se_reduction) if use_se else None

    def forward(self, x):
        out = torch.relu(self.norm(self.conv(x)))
        if self.se is not None:
            out = self.se(out)
        return out


class IsdcStack(nn.Module):
    """The chain of four fusion modules over the first four tap pairs."""

    def __init__(self, specs, use_se=False, se_reduction=16, seed=0):
        super().__init__()
        if len(specs) != 4:
            raise WiringError(f"fusion stack needs 4 modules, got {len(specs)}")
        self.modules_ = nn.ModuleList(
            IsdcModule(spec, use_se=use_se, se_reduction=se_reduction)
            for spec in specs
        )
        init_stream_weights(self, seed)

    @property
    def specs(self):
        return [m.spec for m in self.modules_]

    def forward(self, taps1, taps2):
        out = None
        for n in range(4):
            out = isdc_forward(self, n + 1, out, taps1[n], taps2[n])
        return out


def isdc_forward(stack: IsdcStack, n: int, o_prev, tap1, tap2):
    """One fusion step: concatenate the two taps, add the previous module's
    output when ``n >= 2``, then convolve, normalize, and rectify.

    The first module takes no previous output; passing one is an error, as
    is omitting it later in the chain.
    """
    if not 1 <= n <= 4:
        raise ValueError(f"module index n must be in [1, 4], got {n}")
    if n == 1 and o_prev is not None:
        raise ValueError("the first fusion module takes no previous output")
    if n >= 2 and o_prev is None:
        raise ValueError(f"fusion module {n} requires the previous output")
    module = stack.modules_[n - 1]
    spec = module.spec
    x = torch.cat([tap1, tap2], dim=1)
    if tuple(x.shape[1:]) != (spec.in_channels, spec.in_shape.height, spec.in_shape.width):
        raise WiringError(
            f"fusion module {n} expected concatenated input "
            f"{(spec.in_channels, *spec.in_shape.spatial)}, got {tuple(x.shape[1:])}"
        )
    if o_prev is not None:
        if tuple(o_prev.shape[1:]) != tuple(x.shape[1:]):
            raise WiringError(
                f"previous output shape {tuple(o_prev.shape[1:])} does not match "
                f"concatenated tap shape {tuple(x.shape[1:])} at module {n}"
            )
        x = x + o_prev
    return module(x)

"""Densely connected backbone with tap points for inter-stream fusion.

Taps are taken after the first pooling layer and after each dense block's
transition, with the final tap at the last block's (normalized) output.
Under this placement the fusion stack's stride schedule (2, 2, 2, 1) lines
up exactly with the tap spatial sizes, and channel counts double tap to tap
for the full 121-layer configuration, ending at a 1024-channel stream map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn as nn

from ..exceptions import WiringError
from ..torchutil import seeded_generator

FULL_VARIANT = "densenet121"
MINI_VARIANT = "mini"


@dataclass(frozen=True)
class BackboneConfig:
    growth_rate: int = 8
    block_layers: tuple = (2, 2, 2, 2)
    init_channels: int = 16
    input_size: tuple = (64, 32)  # (H, W)
    bottleneck: int = 4

    def __post_init__(self):
        if len(self.block_layers) != 4:
            raise WiringError(
                f"need exactly 4 dense blocks for the fusion stack, got "
                f"{len(self.block_layers)}"
            )
        if self.growth_rate < 1 or self.init_channels < 1:
            raise WiringError("growth_rate and init_channels must be positive")
        if any(l < 1 for l in self.block_layers):
            raise WiringError("every dense block needs >= 1 layer")

    @classmethod
    def full(cls, input_size=(256, 128)) -> "BackboneConfig":
        return cls(growth_rate=32, block_layers=(6, 12, 24, 16),
                   init_channels=64, input_size=input_size)

    @classmethod
    def mini(cls, input_size=(64, 32)) -> "BackboneConfig":
        return cls(growth_rate=8, block_layers=(2, 2, 2, 2),
                   init_channels=16, input_size=input_size)

    @classmethod
    def from_variant(cls, variant, input_size=None) -> "BackboneConfig":
        if variant == FULL_VARIANT:
            return cls.full(input_size or (256, 128))
        if variant == MINI_VARIANT:
            return cls.mini(input_size or (64, 32))
        raise WiringError(f"unknown backbone variant {variant!r}")


@dataclass(frozen=True)
class TapShape:
    channels: int
    height: int
    width: int

    @property
    def spatial(self):
        return (self.height, self.width)


def _conv_out(size, kernel, stride, padding):
    return (size + 2 * padding - kernel) // stride + 1


def compute_tap_table(cfg: BackboneConfig):
    """Closed-form per-stream tap shapes: pool tap, three post-transition
    taps, and the final block output. Raises WiringError when a stage would
    collapse below one pixel."""
    h, w = cfg.input_size

    def step(name, h, w, kernel, stride, padding):
        nh, nw = _conv_out(h, kernel, stride, padding), _conv_out(w, kernel, stride, padding)
        if nh < 1 or nw < 1:
            raise WiringError(
                f"{name} collapses spatial size {h}x{w} to {nh}x{nw}"
            )
        return nh, nw

    h, w = step("stem convolution", h, w, 7, 2, 3)
    h, w = step("stem pooling", h, w, 3, 2, 1)
    channels = cfg.init_channels
    taps = [TapShape(channels, h, w)]
    for i, layers in enumerate(cfg.block_layers):
        channels += layers * cfg.growth_rate
        if i < 3:
            channels //= 2
            h, w = step(f"transition {i + 1} pooling", h, w, 2, 2, 0)
            taps.append(TapShape(channels, h, w))
    taps.append(TapShape(channels, h, w))
    return taps


class DenseLayer(nn.Module):
    def __init__(self, in_channels, growth, bottleneck):
        super().__init__()
        mid = bottleneck * growth
        self.net = nn.Sequential(
            nn.BatchNorm2d(in_channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(in_channels, mid, 1, bias=False),
            nn.BatchNorm2d(mid),
            nn.ReLU(inplace=True),
            nn.Conv2d(mid, growth, 3, 1, 1, bias=False),
        )

    def forward(self, x):
        return torch.cat([x, self.net(x)], dim=1)


class DenseBlock(nn.Sequential):
    def __init__(self, in_channels, layers, growth, bottleneck):
        super().__init__(*[
            DenseLayer(in_channels + i * growth, growth, bottleneck)
            for i in range(layers)
        ])


class Transition(nn.Module):
    def __init__(self, in_channels, out_channels):
        super().__init__()
        self.net = nn.Sequential(
            nn.BatchNorm2d(in_channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(in_channels, out_channels, 1, bias=False),
            nn.AvgPool2d(2, 2),
        )

    def forward(self, x):
        return self.net(x)


def init_stream_weights(module: nn.Module, seed: int) -> None:
    """Kaiming fan-in init for convolutions, unit batch-norm scales."""
    gen = seeded_generator(seed, 17)
    with torch.no_grad():
        for m in module.modules():
            if isinstance(m, nn.Conv2d):
                fan_in = m.in_channels * m.kernel_size[0] * m.kernel_size[1]
                m.weight.normal_(0.0, math.sqrt(2.0 / fan_in), generator=gen)
                if m.bias is not None:
                    m.bias.zero_()
            elif isinstance(m, nn.BatchNorm2d):
                m.weight.fill_(1.0)
                m.bias.zero_()
            elif isinstance(m, nn.Linear):
                fan_in = m.in_features
                m.weight.normal_(0.0, 1.0 / math.sqrt(fan_in), generator=gen)
                if m.bias is not None:
                    m.bias.zero_()


class DenseStream(nn.Module):
    """One backbone stream exposing its five tap activations."""

    def __init__(self, cfg: BackboneConfig, seed=0):
        super().__init__()
        self.cfg = cfg
        c = cfg.init_channels
        self.stem = nn.Sequential(
            nn.Conv2d(3, c, 7, 2, 3, bias=False),
            nn.BatchNorm2d(c),
            nn.ReLU(inplace=True),
            nn.MaxPool2d(3, 2, 1),
        )
        blocks = []
        transitions = []
        for i, layers in enumerate(cfg.block_layers):
            blocks.append(DenseBlock(c, layers, cfg.growth_rate, cfg.bottleneck))
            c += layers * cfg.growth_rate
            if i < 3:
                transitions.append(Transition(c, c // 2))
                c //= 2
        self.blocks = nn.ModuleList(blocks)
        self.transitions = nn.ModuleList(transitions)
        self.final_norm = nn.BatchNorm2d(c)
        self.out_channels = c
        init_stream_weights(self, seed)

    def forward_taps(self, x):
        """Run the stream and return its five taps (pool, T1, T2, T3, final)."""
        x = self.stem(x)
        taps = [x]
        for i, block in enumerate(self.blocks):
            x = block(x)
            if i < 3:
                x = self.transitions[i](x)
                taps.append(x)
        taps.append(torch.relu(self.final_norm(x)))
        return taps

    def forward(self, x):
        return self.forward_taps(x)[-1]

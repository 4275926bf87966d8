"""Generator and patch discriminator for soft-mask image translation.

The generator follows the translation-network convention: a shared trunk of
two stride-2 down-sampling convolutions and six residual blocks, then two
up-sampling branches without parameter sharing. The uniform indicator routes
through the soft-mask branch, one-hot indicators through the style branch.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from ..data.types import ONE_HOT, UNIFORM, DomainIndicator, IndicatorKind
from ..torchutil import init_conv_weights, seeded_generator, to_nchw, to_nhwc

WEIGHT_INIT_STD = 0.02


class ResidualBlock(nn.Module):
    """Two 3x3 convolutions with instance norm, ReLU after the first,
    and an additive skip."""

    def __init__(self, channels):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(channels, channels, 3, 1, 1),
            nn.InstanceNorm2d(channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels, 3, 1, 1),
            nn.InstanceNorm2d(channels),
        )

    def forward(self, x):
        return x + self.block(x)


def _indicator_channels(target, num_domains, batch, height, width, device, dtype):
    """Materialize per-sample indicator channels (N, K, H, W)."""
    if isinstance(target, DomainIndicator):
        if target.num_domains != num_domains:
            raise ValueError(
                f"indicator has {target.num_domains} domains, generator expects "
                f"{num_domains}"
            )
        t = torch.as_tensor(target.tensor, device=device, dtype=dtype)
        return target.kind, t[None].expand(batch, -1, -1, -1)
    if isinstance(target, IndicatorKind):
        if target.kind == UNIFORM:
            value = 1.0 / num_domains
            return target, torch.full(
                (batch, num_domains, height, width), value, device=device, dtype=dtype
            )
        if target.k >= num_domains:
            raise ValueError(
                f"one-hot domain {target.k} out of range for {num_domains} domains"
            )
        ks = torch.full((batch,), target.k, dtype=torch.long, device=device)
    else:
        ks = torch.as_tensor(np.asarray(target), dtype=torch.long, device=device)
        if ks.ndim != 1 or ks.shape[0] != batch:
            raise ValueError(
                f"per-sample targets must be a length-{batch} vector, got shape "
                f"{tuple(ks.shape)}"
            )
        if int(ks.min()) < 0 or int(ks.max()) >= num_domains:
            raise ValueError("per-sample target domains out of range")
        target = IndicatorKind.one_hot(int(ks[0]))
    chans = torch.zeros((batch, num_domains, height, width), device=device, dtype=dtype)
    chans.scatter_(1, ks.view(-1, 1, 1, 1).expand(-1, 1, height, width), 1.0)
    return target, chans


class TranslationGenerator(nn.Module):
    def __init__(self, num_domains, base_channels=32, num_res_blocks=6, seed=0):
        super().__init__()
        if num_domains < 1:
            raise ValueError("num_domains must be >= 1")
        self.num_domains = num_domains
        c = base_channels
        self.trunk = nn.Sequential(
            nn.Conv2d(3 + num_domains, c, 7, 1, 3),
            nn.InstanceNorm2d(c),
            nn.ReLU(inplace=True),
            nn.Conv2d(c, 2 * c, 3, 2, 1),
            nn.InstanceNorm2d(2 * c),
            nn.ReLU(inplace=True),
            nn.Conv2d(2 * c, 4 * c, 3, 2, 1),
            nn.InstanceNorm2d(4 * c),
            nn.ReLU(inplace=True),
            *[ResidualBlock(4 * c) for _ in range(num_res_blocks)],
        )
        self.branch_soft = self._make_branch(c)
        self.branch_style = self._make_branch(c)
        init_conv_weights(self, WEIGHT_INIT_STD, seeded_generator(seed, 11))

    @staticmethod
    def _make_branch(c):
        return nn.Sequential(
            nn.ConvTranspose2d(4 * c, 2 * c, 3, 2, 1, output_padding=1),
            nn.InstanceNorm2d(2 * c),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(2 * c, c, 3, 2, 1, output_padding=1),
            nn.InstanceNorm2d(c),
            nn.ReLU(inplace=True),
            nn.Conv2d(c, 3, 7, 1, 3),
            nn.Tanh(),
        )

    def forward(self, images: torch.Tensor, target) -> torch.Tensor:
        n, _, h, w = images.shape
        if h % 4 or w % 4:
            raise ValueError(f"input size {h}x{w} must be divisible by 4")
        kind, chans = _indicator_channels(
            target, self.num_domains, n, h, w, images.device, images.dtype
        )
        features = self.trunk(torch.cat([images, chans], dim=1))
        branch = self.branch_soft if kind.kind == UNIFORM else self.branch_style
        return branch(features)


class PatchDiscriminator(nn.Module):
    """Convolutional trunk with a patch-level real/fake head and a K-way
    domain classification head. No normalization in the trunk."""

    def __init__(self, num_domains, base_channels=32, num_layers=3, seed=0):
        super().__init__()
        self.num_domains = num_domains
        self.num_layers = num_layers
        layers = []
        in_c = 3
        c = base_channels
        for _ in range(num_layers):
            layers += [nn.Conv2d(in_c, c, 4, 2, 1), nn.LeakyReLU(0.2, inplace=True)]
            in_c, c = c, 2 * c
        self.trunk = nn.Sequential(*layers)
        self.head_adv = nn.Conv2d(in_c, 1, 3, 1, 1)
        self.head_dom = nn.Conv2d(in_c, num_domains, 3, 1, 1)
        init_conv_weights(self, WEIGHT_INIT_STD, seeded_generator(seed, 13))

    def patch_shape(self, height, width):
        """Spatial size of the patch map for a given input size."""
        h, w = height, width
        for _ in range(self.num_layers):
            h = (h + 2 - 4) // 2 + 1
            w = (w + 2 - 4) // 2 + 1
        return h, w

    def forward(self, images: torch.Tensor):
        h = self.trunk(images)
        adv = self.head_adv(h)
        dom = self.head_dom(h).mean(dim=(2, 3))
        return adv, dom

    def adv_map(self, images: torch.Tensor) -> torch.Tensor:
        return self.forward(images)[0]

    def domain_logits(self, images: torch.Tensor) -> torch.Tensor:
        return self.forward(images)[1]


def generate(generator, images, indicator):
    """Run the generator on numpy images with the given indicator.

    Accepts a single (H, W, 3) image or an (N, H, W, 3) batch; returns the
    same arrangement. Inference only: gradients are not tracked.
    """
    single = np.asarray(images).ndim == 3
    batch = to_nchw(images)
    kind = indicator.kind if isinstance(indicator, DomainIndicator) else indicator
    if isinstance(kind, IndicatorKind) and kind.kind == ONE_HOT:
        if kind.k >= generator.num_domains:
            raise ValueError(
                f"one-hot domain {kind.k} out of range for {generator.num_domains} domains"
            )
    was_training = generator.training
    generator.eval()
    try:
        with torch.no_grad():
            out = generator(batch, indicator)
    finally:
        generator.train(was_training)
    result = to_nhwc(out)
    return result[0] if single else result


def infer_softmask(generator, images):
    """Soft-mask inference: uniform indicator through the soft branch.

    No foreground mask is needed; each image is processed independently of
    its batch neighbours.
    """
    return generate(generator, images, IndicatorKind.uniform())

"""Central finite differences against autograd for every loss term and a
two-module fusion chain, on float64 micro tensors."""

import numpy as np
import pytest
import torch
import torch.nn as nn

from softmasklab.data.types import IndicatorKind
from softmasklab.da2s.backbone import TapShape
from softmasklab.da2s.fusion import IsdcModule, IsdcSpec, isdc_forward
from softmasklab.sbsgan.losses import (
    adversarial_loss,
    background_suppression_loss,
    domain_classification_loss,
    identity_loss,
    reconstruction_loss,
    style_consistency_loss,
)
from softmasklab.sbsgan.networks import _indicator_channels

RTOL = 1e-3
ATOL = 1e-6
EPS = 1e-6
SEEDS = range(20)


class MicroGenerator(nn.Module):
    """Two convolutions with smooth activations; both branches share one path."""

    def __init__(self, num_domains, channels=6, seed=0):
        super().__init__()
        self.num_domains = num_domains
        gen = torch.Generator().manual_seed(seed)
        self.conv1 = nn.Conv2d(3 + num_domains, channels, 3, 1, 1).double()
        self.conv2 = nn.Conv2d(channels, 3, 3, 1, 1).double()
        with torch.no_grad():
            for conv in (self.conv1, self.conv2):
                conv.weight.copy_(
                    torch.randn(conv.weight.shape, generator=gen, dtype=torch.float64) * 0.3)
                conv.bias.copy_(
                    torch.randn(conv.bias.shape, generator=gen, dtype=torch.float64) * 0.1)

    def forward(self, images, target):
        n, _, h, w = images.shape
        _, chans = _indicator_channels(target, self.num_domains, n, h, w,
                                       images.device, images.dtype)
        x = torch.cat([images, chans], dim=1)
        return torch.tanh(self.conv2(torch.tanh(self.conv1(x))))


class MicroCritic(nn.Module):
    def __init__(self, channels=6, seed=0):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        self.conv1 = nn.Conv2d(3, channels, 3, 1, 1).double()
        self.conv2 = nn.Conv2d(channels, 1, 3, 1, 1).double()
        with torch.no_grad():
            for conv in (self.conv1, self.conv2):
                conv.weight.copy_(
                    torch.randn(conv.weight.shape, generator=gen, dtype=torch.float64) * 0.3)
                conv.bias.zero_()

    def forward(self, x):
        return self.conv2(torch.tanh(self.conv1(x)))

    def domain_logits(self, x, k=3):
        h = torch.tanh(self.conv1(x))
        return h.mean(dim=(2, 3))[:, :k]


def _micro_data(seed, n=2, h=4, w=4):
    gen = torch.Generator().manual_seed(seed + 1000)
    images = torch.rand((n, 3, h, w), generator=gen, dtype=torch.float64) * 2 - 1
    masks = (torch.rand((n, h, w), generator=gen) > 0.4).double()
    return images, masks


def _check_gradients(loss_fn, module, seed, coords_per_tensor=4):
    """Analytic gradients match central finite differences at sampled
    coordinates of every parameter tensor."""
    params = [p for p in module.parameters() if p.requires_grad]
    for p in params:
        p.grad = None
    loss = loss_fn()
    loss.backward()
    rng = np.random.default_rng(seed)
    for p in params:
        grad = p.grad
        if grad is None:
            continue
        flat = p.detach().reshape(-1)
        n_coords = min(coords_per_tensor, flat.numel())
        for idx in rng.choice(flat.numel(), size=n_coords, replace=False):
            original = float(flat[idx])
            flat[idx] = original + EPS
            up = float(loss_fn().detach())
            flat[idx] = original - EPS
            down = float(loss_fn().detach())
            flat[idx] = original
            fd = (up - down) / (2 * EPS)
            an = float(grad.reshape(-1)[idx])
            assert abs(fd - an) <= ATOL + RTOL * max(abs(fd), abs(an)), (
                f"finite-difference {fd} vs analytic {an} at seed {seed}"
            )


@pytest.mark.parametrize("seed", SEEDS)
def test_identity_loss_gradients(seed):
    gen = MicroGenerator(3, seed=seed)
    images, _ = _micro_data(seed)
    _check_gradients(lambda: identity_loss(gen, images, 1, 3), gen, seed)


@pytest.mark.parametrize("seed", SEEDS)
def test_reconstruction_loss_gradients(seed):
    gen = MicroGenerator(3, seed=seed)
    images, _ = _micro_data(seed)
    target = IndicatorKind.uniform() if seed % 2 else IndicatorKind.one_hot(2)
    _check_gradients(
        lambda: reconstruction_loss(gen, images, target, [0, 1], 3), gen, seed)


@pytest.mark.parametrize("seed", SEEDS)
def test_background_suppression_gradients(seed):
    gen = MicroGenerator(3, seed=seed)
    images, masks = _micro_data(seed)
    reduction = "norm" if seed % 2 else "mse"
    _check_gradients(
        lambda: background_suppression_loss(gen, images, masks, 3,
                                            reduction=reduction),
        gen, seed)


@pytest.mark.parametrize("seed", SEEDS)
def test_style_consistency_gradients(seed):
    gen = MicroGenerator(3, seed=seed)
    images, masks = _micro_data(seed)
    _check_gradients(
        lambda: style_consistency_loss(gen, images, masks, [0, 1], 3),
        gen, seed)


@pytest.mark.parametrize("seed", SEEDS)
def test_adversarial_critic_gradients(seed):
    critic = MicroCritic(seed=seed)
    real, _ = _micro_data(seed)
    fake, _ = _micro_data(seed + 500)

    def loss_fn():
        return adversarial_loss(critic, real, fake, side="d",
                                rng=torch.Generator().manual_seed(seed))

    _check_gradients(loss_fn, critic, seed)


@pytest.mark.parametrize("seed", SEEDS)
def test_adversarial_generator_gradients(seed):
    gen = MicroGenerator(2, seed=seed)
    critic = MicroCritic(seed=seed + 1)
    images, _ = _micro_data(seed)

    def loss_fn():
        fake = gen(images, IndicatorKind.uniform())
        return adversarial_loss(critic, images, fake, side="g")

    _check_gradients(loss_fn, gen, seed)


@pytest.mark.parametrize("seed", SEEDS)
def test_domain_classification_gradients(seed):
    critic = MicroCritic(seed=seed)
    images, _ = _micro_data(seed)
    target = IndicatorKind.uniform() if seed % 2 else 1
    _check_gradients(
        lambda: domain_classification_loss(critic.domain_logits, images, target),
        critic, seed)


@pytest.mark.parametrize("seed", SEEDS)
def test_isdc_two_module_chain_gradients(seed):
    # two fusion modules over 4x4x8 taps: the second consumes the first's
    # output through the elementwise sum of Eq-style chaining
    spec1 = IsdcSpec(16, 32, 1, TapShape(16, 4, 4), TapShape(32, 4, 4))
    spec2 = IsdcSpec(32, 64, 2, TapShape(32, 4, 4), TapShape(64, 2, 2))
    chain = nn.ModuleDict({
        "m1": IsdcModule(spec1),
        "m2": IsdcModule(spec2),
    }).double()
    gen = torch.Generator().manual_seed(seed + 2000)
    taps = [torch.randn((2, 8, 4, 4), generator=gen, dtype=torch.float64)
            for _ in range(4)]

    class Stack:
        modules_ = [chain["m1"], chain["m2"]]

    def loss_fn():
        o1 = isdc_forward(Stack, 1, None, taps[0], taps[1])
        o2 = isdc_forward(Stack, 2, o1, taps[2], taps[3])
        return (o2 ** 2).mean()

    _check_gradients(loss_fn, chain, seed, coords_per_tensor=3)

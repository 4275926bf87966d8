"""Loss terms and objectives for adversarial soft-mask training.

Every term takes the generator/discriminator as a plain callable so tests
can substitute stubs. ``generator(images, target)`` maps an NCHW batch plus
an indicator target to images; targets are an :class:`IndicatorKind` or a
per-sample vector of one-hot domain indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch
import torch.nn.functional as F

from ..data.types import UNIFORM, IndicatorKind
from ..exceptions import DataError

WGAN_GP = "wgan-gp"
BCE_GAN = "bce"
ADVERSARIAL_VARIANTS = (WGAN_GP, BCE_GAN)

BGS_NORM = "norm"
BGS_MSE = "mse"
BGS_REDUCTIONS = (BGS_NORM, BGS_MSE)

DEFAULT_GP_WEIGHT = 10.0


@dataclass(frozen=True)
class LossWeights:
    """Relative weights of the generator objective terms."""

    rec: float = 10.0
    idc: float = 5.0
    bgs: float = 5.0
    sc: float = 5.0

    def __post_init__(self):
        for name in ("rec", "idc", "bgs", "sc"):
            if getattr(self, name) < 0:
                raise ValueError(f"lambda_{name} must be >= 0")


def _per_sample_mean_abs(x: torch.Tensor) -> torch.Tensor:
    return x.abs().reshape(x.shape[0], -1).mean(dim=1)


def _as_long(vec, device=None):
    if isinstance(vec, torch.Tensor):
        return vec.to(dtype=torch.long, device=device)
    return torch.as_tensor(np.asarray(vec), dtype=torch.long, device=device)


def _apply_mask_t(images: torch.Tensor, masks: torch.Tensor) -> torch.Tensor:
    return images * masks.unsqueeze(1)


def identity_loss(generator, images, targets, num_domains, source_domains=None):
    """Mean absolute difference between a style transfer and its input.

    ``targets`` is a foreign domain index or a per-sample vector of them.
    """
    if isinstance(targets, (int, np.integer)):
        targets = torch.full((images.shape[0],), int(targets), dtype=torch.long)
    targets = _as_long(targets, images.device)
    if source_domains is not None:
        sources = _as_long(source_domains, images.device)
        if bool((targets == sources).any()):
            raise ValueError("identity loss targets must be foreign domains")
    if int(targets.max()) >= num_domains or int(targets.min()) < 0:
        raise ValueError("target domain out of range")
    translated = generator(images, targets)
    return _per_sample_mean_abs(translated - images).mean()


def reconstruction_loss(generator, images, target, source_domains, num_domains):
    """Cycle the input through ``target`` and back to its source domain."""
    sources = _as_long(source_domains, images.device)
    if int(sources.max()) >= num_domains or int(sources.min()) < 0:
        raise ValueError("source domain out of range")
    translated = generator(images, target)
    cycled = generator(translated, sources)
    return _per_sample_mean_abs(cycled - images).mean()


def background_suppression_loss(generator, images, masks, num_domains,
                                reduction=BGS_NORM):
    """Distance between the soft-mask output and the hard-masked input.

    Default reduction is the per-sample Euclidean norm over all elements,
    averaged over the batch; ``mse`` switches to mean squared error.
    """
    if masks is None:
        raise DataError("background suppression loss requires foreground masks")
    if reduction not in BGS_REDUCTIONS:
        raise ValueError(f"unknown reduction {reduction!r}")
    soft = generator(images, IndicatorKind.uniform())
    residual = _apply_mask_t(images, masks) - soft
    if reduction == BGS_MSE:
        return residual.pow(2).mean()
    return residual.reshape(residual.shape[0], -1).norm(2, dim=1).mean()


def style_consistency_loss(generator, images, masks, source_domains, num_domains):
    """Tie the soft-mask output to the hard-masked input and to every
    hard-masked foreign style transfer of the same image."""
    if masks is None:
        raise DataError("style consistency loss requires foreground masks")
    if num_domains < 2:
        raise ValueError("style consistency needs >= 2 domains")
    sources = _as_long(source_domains, images.device)
    soft = generator(images, IndicatorKind.uniform())
    per_sample = _per_sample_mean_abs(soft - _apply_mask_t(images, masks))
    for k in range(num_domains):
        sel = sources != k
        if not bool(sel.any()):
            continue
        styled = generator(images[sel], IndicatorKind.one_hot(k))
        diff = soft[sel] - _apply_mask_t(styled, masks[sel])
        per_sample = per_sample.index_add(0, sel.nonzero(as_tuple=True)[0],
                                          _per_sample_mean_abs(diff))
    return per_sample.mean()


def gradient_penalty(critic, real, fake, rng: Optional[torch.Generator] = None):
    """Penalty pushing critic gradient norms on interpolates toward one."""
    n = real.shape[0]
    idx = torch.arange(n, device=real.device) % fake.shape[0]
    alpha = torch.rand((n, 1, 1, 1), generator=rng, dtype=real.dtype,
                       device=real.device)
    with torch.enable_grad():
        mixed = (alpha * real + (1.0 - alpha) * fake[idx]).detach().requires_grad_(True)
        scores = critic(mixed)
        if not scores.requires_grad:  # critic disconnected (constant stub)
            return torch.ones((), dtype=real.dtype, device=real.device)
        grads = torch.autograd.grad(
            scores.sum(), mixed, create_graph=True, allow_unused=True
        )[0]
    if grads is None:
        return torch.ones((), dtype=real.dtype, device=real.device)
    norms = grads.reshape(n, -1).norm(2, dim=1)
    return ((norms - 1.0) ** 2).mean()


def adversarial_loss(critic, real, fake, side, variant=WGAN_GP,
                     gp_weight=DEFAULT_GP_WEIGHT,
                     rng: Optional[torch.Generator] = None):
    """Adversarial objective over patch maps.

    ``critic`` maps images to a patch score map. The default is the
    Wasserstein critic with gradient penalty, matching the five-to-one
    update schedule; ``bce`` selects the non-saturating cross-entropy GAN.
    """
    if side not in ("d", "g"):
        raise ValueError(f"side must be 'd' or 'g', got {side!r}")
    if variant not in ADVERSARIAL_VARIANTS:
        raise ValueError(f"unknown adversarial variant {variant!r}")
    if variant == WGAN_GP:
        if side == "g":
            return -critic(fake).mean()
        gap = critic(fake).mean() - critic(real).mean()
        return gap + gp_weight * gradient_penalty(critic, real, fake, rng)
    if side == "g":
        scores = critic(fake)
        return F.binary_cross_entropy_with_logits(scores, torch.ones_like(scores))
    real_scores = critic(real)
    fake_scores = critic(fake)
    return (
        F.binary_cross_entropy_with_logits(real_scores, torch.ones_like(real_scores))
        + F.binary_cross_entropy_with_logits(fake_scores, torch.zeros_like(fake_scores))
    )


def domain_classification_loss(domain_head, images, target):
    """Cross entropy between the domain head and a target distribution.

    ``target`` is a domain index, a per-sample vector of indices, or the
    uniform distribution (``IndicatorKind.uniform()`` / ``"uniform"``) used
    for soft-mask outputs.
    """
    logits = domain_head(images)
    logp = F.log_softmax(logits, dim=1)
    uniform = (
        target == "uniform"
        or (isinstance(target, IndicatorKind) and target.kind == UNIFORM)
    )
    if uniform:
        return (-logp.mean(dim=1)).mean()
    if isinstance(target, IndicatorKind):
        target = target.k
    if isinstance(target, (int, np.integer)):
        target = torch.full((images.shape[0],), int(target), dtype=torch.long)
    target = _as_long(target, logits.device)
    return F.nll_loss(logp, target)


@dataclass
class GanTrainBatch:
    """One assembled training batch with its special/general partition."""

    images: torch.Tensor          # (B, 3, H, W)
    domains: torch.Tensor         # (B,) long
    masks: Optional[torch.Tensor]  # (B, H, W) or None
    special: torch.Tensor         # positions within the batch
    general: torch.Tensor
    general_targets: torch.Tensor  # aligned with ``general``
    num_domains: int

    def special_views(self):
        sel = self.special
        masks = self.masks[sel] if self.masks is not None else None
        return self.images[sel], masks, self.domains[sel]


def _foreign_pairs(images, domains, num_domains):
    """Expand a batch to one row per (sample, foreign domain) pair."""
    k = num_domains - 1
    rep = images.repeat_interleave(k, dim=0)
    targets = []
    sources = []
    for s in domains.tolist():
        foreign = [d for d in range(num_domains) if d != s]
        targets.extend(foreign)
        sources.extend([s] * k)
    return rep, torch.as_tensor(targets, dtype=torch.long), \
        torch.as_tensor(sources, dtype=torch.long)


def _generate_fakes(generator, batch: GanTrainBatch):
    """All fake images for one batch plus their domain-classification targets.

    Returns (soft_fakes, style_fakes, style_targets); the discriminator sees
    both kinds.
    """
    sp_images, _, sp_domains = batch.special_views()
    soft = None
    style_parts = []
    style_targets = []
    if sp_images.shape[0]:
        soft = generator(sp_images, IndicatorKind.uniform())
        rep, targets, _ = _foreign_pairs(sp_images, sp_domains, batch.num_domains)
        style_parts.append(generator(rep, targets))
        style_targets.append(targets)
    if batch.general.shape[0]:
        gen_images = batch.images[batch.general]
        style_parts.append(generator(gen_images, batch.general_targets))
        style_targets.append(batch.general_targets)
    style = torch.cat(style_parts) if style_parts else None
    targets = torch.cat(style_targets) if style_targets else None
    return soft, style, targets


def _fake_stack(soft, style):
    parts = [t for t in (soft, style) if t is not None]
    return torch.cat(parts)


def combine_discriminator_terms(adv, cls):
    """Discriminator objective: adversarial term plus real-domain term."""
    return adv + cls


def combine_generator_terms(terms: dict, weights: LossWeights):
    """Weighted generator objective from its six component terms."""
    return (
        terms["adv"]
        + terms["cls"]
        + weights.rec * terms["rec"]
        + weights.idc * terms["idc"]
        + weights.bgs * terms["bgs"]
        + weights.sc * terms["sc"]
    )


def discriminator_objective(generator, discriminator, batch: GanTrainBatch,
                            variant=WGAN_GP, gp_weight=DEFAULT_GP_WEIGHT,
                            rng: Optional[torch.Generator] = None):
    """Scalar whose gradient updates the discriminator only.

    Fakes are generated without gradient tracking, so generator parameters
    receive no gradient from this objective.
    """
    with torch.no_grad():
        soft, style, _ = _generate_fakes(generator, batch)
    fakes = _fake_stack(soft, style)
    adv = adversarial_loss(
        lambda x: discriminator(x)[0], batch.images, fakes, side="d",
        variant=variant, gp_weight=gp_weight, rng=rng,
    )
    cls = domain_classification_loss(
        lambda x: discriminator(x)[1], batch.images, batch.domains
    )
    return combine_discriminator_terms(adv, cls), {"adv_d": adv, "cls_r": cls}


def generator_objective(generator, discriminator, batch: GanTrainBatch,
                        weights: LossWeights = LossWeights(),
                        variant=WGAN_GP, gp_weight=DEFAULT_GP_WEIGHT,
                        bgs_reduction=BGS_NORM):
    """Weighted generator objective per the default loss balance.

    Background-suppression, style-consistency, and identity terms run on
    the special partition only; reconstruction and adversarial terms cover
    the whole batch.
    """
    sp_images, sp_masks, sp_domains = batch.special_views()
    if sp_images.shape[0] == 0:
        raise ValueError("generator objective requires a non-empty special partition")

    soft, style, style_targets = _generate_fakes(generator, batch)
    fakes = _fake_stack(soft, style)
    adv = adversarial_loss(
        lambda x: discriminator(x)[0], batch.images, fakes, side="g",
        variant=variant, gp_weight=gp_weight,
    )

    # Fake-domain classification: style transfers target their domain,
    # soft-mask outputs target the uniform distribution.
    cls_parts = []
    if soft is not None:
        cls_parts.append(
            (soft.shape[0],
             domain_classification_loss(lambda x: discriminator(x)[1], soft,
                                        IndicatorKind.uniform()))
        )
    if style is not None:
        cls_parts.append(
            (style.shape[0],
             domain_classification_loss(lambda x: discriminator(x)[1], style,
                                        style_targets))
        )
    total_fakes = sum(n for n, _ in cls_parts)
    cls = sum(n * value for n, value in cls_parts) / total_fakes

    # Reconstruction over every (sample, assigned target) pair.
    rec_u = reconstruction_loss(
        generator, sp_images, IndicatorKind.uniform(), sp_domains,
        batch.num_domains,
    )
    rep, rep_targets, rep_sources = _foreign_pairs(
        sp_images, sp_domains, batch.num_domains
    )
    if batch.general.shape[0]:
        style_in = torch.cat([rep, batch.images[batch.general]])
        style_t = torch.cat([rep_targets, batch.general_targets])
        style_s = torch.cat([rep_sources, batch.domains[batch.general]])
    else:
        style_in, style_t, style_s = rep, rep_targets, rep_sources
    rec_s = reconstruction_loss(generator, style_in, style_t, style_s,
                                batch.num_domains)
    n_u, n_s = sp_images.shape[0], style_in.shape[0]
    rec = (n_u * rec_u + n_s * rec_s) / (n_u + n_s)

    idc = identity_loss(generator, rep, rep_targets, batch.num_domains,
                        source_domains=rep_sources)
    bgs = background_suppression_loss(generator, sp_images, sp_masks,
                                      batch.num_domains, reduction=bgs_reduction)
    sc = style_consistency_loss(generator, sp_images, sp_masks, sp_domains,
                                batch.num_domains)

    terms = {"adv": adv, "cls": cls, "rec": rec, "idc": idc, "bgs": bgs, "sc": sc}
    return combine_generator_terms(terms, weights), terms

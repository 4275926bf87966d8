"""Adversarial training loop: five discriminator updates per generator update.

All randomness is re-derived per step from the run seed, so a run restarted
from a checkpoint continues bit-for-bit identically to an uninterrupted one.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import torch

from ..data.batching import compose_gan_batch
from ..data.types import Corpus
from ..exceptions import ConfigurationError, DataError, NumericError
from ..io.checkpoint import load_checkpoint, save_checkpoint
from ..torchutil import (
    derive_seed,
    load_module_tensors,
    load_optimizer_tensors,
    module_tensors,
    optimizer_tensors,
    to_nchw,
)
from .losses import (
    BGS_NORM,
    DEFAULT_GP_WEIGHT,
    WGAN_GP,
    GanTrainBatch,
    LossWeights,
    discriminator_objective,
    generator_objective,
)
from .networks import PatchDiscriminator, TranslationGenerator

LOG_COLUMNS = (
    "step",
    "loss_adv_d",
    "loss_adv_g",
    "loss_cls_r",
    "loss_cls_f",
    "loss_rec",
    "loss_idc",
    "loss_bgs",
    "loss_sc",
)

CHECKPOINT_SCHEMA = "sbsgan"


@dataclass(frozen=True)
class GanTrainingConfig:
    image_size: tuple = (64, 32)
    base_channels: int = 32
    num_res_blocks: int = 6
    learning_rate: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.999
    batch_size: int = 16
    epochs: int = 5
    d_steps_per_g: int = 5
    weights: LossWeights = field(default_factory=LossWeights)
    adversarial: str = WGAN_GP
    gp_weight: float = DEFAULT_GP_WEIGHT
    bgs_reduction: str = BGS_NORM
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 0 or self.d_steps_per_g < 1:
            raise ConfigurationError("batch_size, epochs, d_steps_per_g must be positive")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")


@dataclass
class GanTrainState:
    generator: TranslationGenerator
    discriminator: PatchDiscriminator
    opt_g: torch.optim.Adam
    opt_d: torch.optim.Adam
    num_domains: int
    config: GanTrainingConfig
    step: int = 0
    epoch: int = 0


def build_state(num_domains: int, config: GanTrainingConfig) -> GanTrainState:
    generator = TranslationGenerator(
        num_domains, config.base_channels, config.num_res_blocks, seed=config.seed
    )
    discriminator = PatchDiscriminator(
        num_domains, config.base_channels, seed=config.seed
    )
    opt_g = torch.optim.Adam(
        generator.parameters(), lr=config.learning_rate,
        betas=(config.beta1, config.beta2),
    )
    opt_d = torch.optim.Adam(
        discriminator.parameters(), lr=config.learning_rate,
        betas=(config.beta1, config.beta2),
    )
    return GanTrainState(generator, discriminator, opt_g, opt_d, num_domains, config)


def save_state(state: GanTrainState, path) -> None:
    cfg = state.config
    header = {
        "schema": CHECKPOINT_SCHEMA,
        "num_domains": state.num_domains,
        "step": state.step,
        "epoch": state.epoch,
        "lambda_rec": cfg.weights.rec,
        "lambda_idc": cfg.weights.idc,
        "lambda_bgs": cfg.weights.bgs,
        "lambda_sc": cfg.weights.sc,
        "image_size": list(cfg.image_size),
        "base_channels": cfg.base_channels,
        "num_res_blocks": cfg.num_res_blocks,
        "learning_rate": cfg.learning_rate,
        "beta1": cfg.beta1,
        "beta2": cfg.beta2,
        "batch_size": cfg.batch_size,
        "d_steps_per_g": cfg.d_steps_per_g,
        "adversarial": cfg.adversarial,
        "bgs_reduction": cfg.bgs_reduction,
        "seed": cfg.seed,
    }
    tensors = {}
    tensors.update(module_tensors(state.generator, "g"))
    tensors.update(module_tensors(state.discriminator, "d"))
    tensors.update(optimizer_tensors(state.opt_g, "opt_g"))
    tensors.update(optimizer_tensors(state.opt_d, "opt_d"))
    save_checkpoint(path, header, tensors)


def load_state(path, config: Optional[GanTrainingConfig] = None) -> GanTrainState:
    header, tensors = load_checkpoint(path, expected_schema=CHECKPOINT_SCHEMA)
    if config is None:
        config = GanTrainingConfig(
            image_size=tuple(header["image_size"]),
            base_channels=header["base_channels"],
            num_res_blocks=header["num_res_blocks"],
            learning_rate=header["learning_rate"],
            beta1=header["beta1"],
            beta2=header["beta2"],
            batch_size=header["batch_size"],
            d_steps_per_g=header["d_steps_per_g"],
            weights=LossWeights(header["lambda_rec"], header["lambda_idc"],
                                header["lambda_bgs"], header["lambda_sc"]),
            adversarial=header["adversarial"],
            bgs_reduction=header["bgs_reduction"],
            seed=header["seed"],
        )
    state = build_state(header["num_domains"], config)
    load_module_tensors(state.generator, tensors, "g")
    load_module_tensors(state.discriminator, tensors, "d")
    load_optimizer_tensors(state.opt_g, tensors, "opt_g")
    load_optimizer_tensors(state.opt_d, tensors, "opt_d")
    state.step = header["step"]
    state.epoch = header["epoch"]
    return state


def assemble_batch(corpus: Corpus, plan, num_domains: int) -> GanTrainBatch:
    indices = plan.indices()
    images = to_nchw(corpus.images(indices))
    masks = torch.from_numpy(corpus.masks(indices))
    domains = torch.as_tensor([corpus[i].domain for i in indices], dtype=torch.long)
    n_special = len(plan.special)
    return GanTrainBatch(
        images=images,
        domains=domains,
        masks=masks,
        special=torch.arange(n_special),
        general=torch.arange(n_special, len(indices)),
        general_targets=torch.as_tensor(plan.general_targets, dtype=torch.long),
        num_domains=num_domains,
    )


def _check_finite(terms: dict, step: int) -> None:
    for name, value in terms.items():
        if not math.isfinite(float(value)):
            raise NumericError(
                f"non-finite loss term {name!r} at step {step}",
                term=name, step=step,
            )


class LossLog:
    """Accumulates per-step loss rows and mirrors them to a CSV file."""

    def __init__(self, path=None, append=False):
        self.rows = []
        self.path = Path(path) if path else None
        if self.path and not (append and self.path.exists()):
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "w", newline="") as fh:
                csv.writer(fh).writerow(LOG_COLUMNS)

    def add(self, row: dict) -> None:
        self.rows.append(row)
        if self.path:
            with open(self.path, "a", newline="") as fh:
                csv.writer(fh).writerow(
                    ["" if row.get(c) is None else
                     (row[c] if c == "step" else f"{row[c]:.8e}")
                     for c in LOG_COLUMNS]
                )


@dataclass
class GanTrainResult:
    state: GanTrainState
    log: list
    checkpoints: list


def train_sbsgan(corpus: Corpus, config: GanTrainingConfig,
                 out_dir=None, resume=None) -> GanTrainResult:
    """Train on a fully masked corpus; checkpoints are written per epoch.

    ``resume`` is a checkpoint path; training continues from its epoch up
    to ``config.epochs`` and reproduces the uninterrupted run exactly.
    """
    if corpus.num_domains < 2:
        raise ConfigurationError("adversarial training needs >= 2 domains")
    if not corpus.has_masks():
        raise DataError("every training sample needs a foreground mask")
    if tuple(corpus.image_size) != tuple(config.image_size):
        raise ConfigurationError(
            f"corpus images are {corpus.image_size}, config expects "
            f"{tuple(config.image_size)}"
        )

    if resume is not None:
        state = load_state(resume, config)
    else:
        state = build_state(corpus.num_domains, config)

    out_dir = Path(out_dir) if out_dir else None
    log = LossLog(out_dir / "loss_log.csv" if out_dir else None,
                  append=resume is not None)
    checkpoints = []

    iters_per_epoch = math.ceil(len(corpus) / config.batch_size)
    seed = config.seed

    for epoch in range(state.epoch, config.epochs):
        for _ in range(iters_per_epoch):
            state.step += 1
            step = state.step
            plan_rng = np.random.default_rng(derive_seed(seed, step, 3))
            plan = compose_gan_batch(corpus, config.batch_size, plan_rng)
            batch = assemble_batch(corpus, plan, corpus.num_domains)

            gp_rng = torch.Generator().manual_seed(derive_seed(seed, step, 5))
            state.opt_d.zero_grad(set_to_none=True)
            d_total, d_terms = discriminator_objective(
                state.generator, state.discriminator, batch,
                variant=config.adversarial, gp_weight=config.gp_weight,
                rng=gp_rng,
            )
            d_total.backward()
            state.opt_d.step()

            row = {c: None for c in LOG_COLUMNS}
            row["step"] = step
            row["loss_adv_d"] = float(d_terms["adv_d"].detach())
            row["loss_cls_r"] = float(d_terms["cls_r"].detach())

            if step % config.d_steps_per_g == 0:
                state.opt_g.zero_grad(set_to_none=True)
                g_total, g_terms = generator_objective(
                    state.generator, state.discriminator, batch,
                    weights=config.weights, variant=config.adversarial,
                    gp_weight=config.gp_weight,
                    bgs_reduction=config.bgs_reduction,
                )
                g_total.backward()
                state.opt_g.step()
                for column, key in (("loss_adv_g", "adv"), ("loss_cls_f", "cls"),
                                    ("loss_rec", "rec"), ("loss_idc", "idc"),
                                    ("loss_bgs", "bgs"), ("loss_sc", "sc")):
                    row[column] = float(g_terms[key].detach())

            _check_finite({k: v for k, v in row.items()
                           if k != "step" and v is not None}, step)
            log.add(row)

        state.epoch = epoch + 1
        if out_dir:
            path = out_dir / f"sbsgan_epoch{state.epoch:03d}.ckpt"
            save_state(state, path)
            checkpoints.append(path)

    return GanTrainResult(state=state, log=log.rows, checkpoints=checkpoints)

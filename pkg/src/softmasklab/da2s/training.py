"""Identification training for the two-stream network.

Stochastic gradient descent with momentum and a step learning-rate drop;
the horizontal-flip decision is shared by both images of a pair since they
depict the same pedestrian. Per-step seeding makes runs resumable without
serializing generator state.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import torch
import torch.nn.functional as F

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
from ..validation import check_labels
from .backbone import BackboneConfig
from .model import TwoStreamNet, build_model

LOG_COLUMNS = ("step", "epoch", "lr", "loss", "accuracy")

CHECKPOINT_SCHEMA = "da2s"


@dataclass(frozen=True)
class ReidTrainingConfig:
    learning_rate: float = 0.1
    decayed_learning_rate: float = 0.01
    decay_epoch: int = 40
    momentum: float = 0.9
    batch_size: int = 50
    epochs: int = 60
    flip_probability: float = 0.5
    use_se: bool = True
    use_isdc: bool = True
    isdc_se: bool = False
    se_reduction: int = 16
    fc1_units: int = 512
    dropout: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigurationError("batch_size and epochs must be positive")
        if not 0.0 <= self.flip_probability <= 1.0:
            raise ConfigurationError("flip_probability must lie in [0, 1]")


def learning_rate_at(config: ReidTrainingConfig, epoch: int) -> float:
    """Learning rate for a one-based epoch index."""
    return (config.learning_rate if epoch <= config.decay_epoch
            else config.decayed_learning_rate)


@dataclass
class ReidTrainState:
    model: TwoStreamNet
    optimizer: torch.optim.SGD
    num_ids: int
    backbone: BackboneConfig
    config: ReidTrainingConfig
    step: int = 0
    epoch: int = 0


def build_reid_state(backbone: BackboneConfig, num_ids: int,
                     config: ReidTrainingConfig) -> ReidTrainState:
    model = build_model(
        backbone, num_ids, use_se=config.use_se, use_isdc=config.use_isdc,
        isdc_se=config.isdc_se, se_reduction=config.se_reduction,
        fc1_units=config.fc1_units, dropout=config.dropout, seed=config.seed,
    )
    optimizer = torch.optim.SGD(model.parameters(), lr=config.learning_rate,
                                momentum=config.momentum)
    return ReidTrainState(model, optimizer, num_ids, backbone, config)


def save_reid_state(state: ReidTrainState, path) -> None:
    cfg, bb = state.config, state.backbone
    header = {
        "schema": CHECKPOINT_SCHEMA,
        "num_ids": state.num_ids,
        "step": state.step,
        "epoch": state.epoch,
        "growth_rate": bb.growth_rate,
        "block_layers": list(bb.block_layers),
        "init_channels": bb.init_channels,
        "input_size": list(bb.input_size),
        "learning_rate": cfg.learning_rate,
        "decayed_learning_rate": cfg.decayed_learning_rate,
        "decay_epoch": cfg.decay_epoch,
        "momentum": cfg.momentum,
        "batch_size": cfg.batch_size,
        "flip_probability": cfg.flip_probability,
        "use_se": cfg.use_se,
        "use_isdc": cfg.use_isdc,
        "isdc_se": cfg.isdc_se,
        "se_reduction": cfg.se_reduction,
        "fc1_units": cfg.fc1_units,
        "dropout": cfg.dropout,
        "seed": cfg.seed,
    }
    tensors = module_tensors(state.model, "m")
    tensors.update(optimizer_tensors(state.optimizer, "opt"))
    save_checkpoint(path, header, tensors)


def load_reid_state(path, config: Optional[ReidTrainingConfig] = None) -> ReidTrainState:
    header, tensors = load_checkpoint(path, expected_schema=CHECKPOINT_SCHEMA)
    backbone = BackboneConfig(
        growth_rate=header["growth_rate"],
        block_layers=tuple(header["block_layers"]),
        init_channels=header["init_channels"],
        input_size=tuple(header["input_size"]),
    )
    if config is None:
        config = ReidTrainingConfig(
            learning_rate=header["learning_rate"],
            decayed_learning_rate=header["decayed_learning_rate"],
            decay_epoch=header["decay_epoch"],
            momentum=header["momentum"],
            batch_size=header["batch_size"],
            flip_probability=header["flip_probability"],
            use_se=header["use_se"],
            use_isdc=header["use_isdc"],
            isdc_se=header["isdc_se"],
            se_reduction=header["se_reduction"],
            fc1_units=header["fc1_units"],
            dropout=header["dropout"],
            seed=header["seed"],
        )
    state = build_reid_state(backbone, header["num_ids"], config)
    load_module_tensors(state.model, tensors, "m")
    load_optimizer_tensors(state.optimizer, tensors, "opt")
    state.step = header["step"]
    state.epoch = header["epoch"]
    return state


class ReidLog:
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
                csv.writer(fh).writerow([
                    row["step"], row["epoch"], f"{row['lr']:.6g}",
                    f"{row['loss']:.8e}", f"{row['accuracy']:.6f}",
                ])


@dataclass
class ReidTrainResult:
    state: ReidTrainState
    log: list
    epoch_accuracy: list
    checkpoints: list


def train_da2s(pairs, backbone: BackboneConfig, config: ReidTrainingConfig,
               out_dir=None, resume=None) -> ReidTrainResult:
    """Train on (soft image, context image, identity) triples.

    ``pairs`` is a tuple of arrays ``(soft, context, identities)`` with
    contiguous identity labels in [0, N).
    """
    soft, context, identities = pairs
    soft_t = to_nchw(soft)
    context_t = to_nchw(context)
    ids = check_labels(identities, n=soft_t.shape[0])
    unique = np.unique(ids)
    num_ids = len(unique)
    if ids.min() < 0 or not np.array_equal(unique, np.arange(num_ids)):
        raise DataError(
            "identity labels must be contiguous integers in [0, N); "
            f"got {unique[:10].tolist()}{'...' if num_ids > 10 else ''}"
        )
    if num_ids < 2:
        raise DataError("training needs at least 2 identities")
    labels = torch.as_tensor(ids, dtype=torch.long)

    if resume is not None:
        state = load_reid_state(resume, config)
    else:
        state = build_reid_state(backbone, num_ids, config)

    out_dir = Path(out_dir) if out_dir else None
    log = ReidLog(out_dir / "train_log.csv" if out_dir else None,
                  append=resume is not None)
    checkpoints = []
    epoch_accuracy = []

    n = soft_t.shape[0]
    batches_per_epoch = math.ceil(n / config.batch_size)
    seed = config.seed

    for epoch in range(state.epoch + 1, config.epochs + 1):
        lr = learning_rate_at(config, epoch)
        for group in state.optimizer.param_groups:
            group["lr"] = lr
        order = np.random.default_rng(derive_seed(seed, epoch, 31)).permutation(n)
        correct = 0
        state.model.train()
        for b in range(batches_per_epoch):
            state.step += 1
            torch.manual_seed(derive_seed(seed, state.step, 37))
            sel = order[b * config.batch_size:(b + 1) * config.batch_size]
            xs, xc, y = soft_t[sel], context_t[sel], labels[sel]
            flips = np.random.default_rng(
                derive_seed(seed, state.step, 41)
            ).random(len(sel)) < config.flip_probability
            if flips.any():
                fl = torch.from_numpy(flips.nonzero()[0])
                xs = xs.clone()
                xc = xc.clone()
                xs[fl] = xs[fl].flip(3)
                xc[fl] = xc[fl].flip(3)

            state.optimizer.zero_grad(set_to_none=True)
            logits = state.model(xs, xc)
            loss = F.cross_entropy(logits, y)
            if not math.isfinite(float(loss.detach())):
                raise NumericError(
                    f"non-finite classification loss at step {state.step}",
                    term="cross_entropy", step=state.step,
                )
            loss.backward()
            state.optimizer.step()

            batch_correct = int((logits.detach().argmax(dim=1) == y).sum())
            correct += batch_correct
            log.add({
                "step": state.step,
                "epoch": epoch,
                "lr": lr,
                "loss": float(loss.detach()),
                "accuracy": batch_correct / len(sel),
            })

        state.epoch = epoch
        epoch_accuracy.append(correct / n)
        if out_dir:
            path = out_dir / f"da2s_epoch{epoch:03d}.ckpt"
            save_reid_state(state, path)
            checkpoints.append(path)

    return ReidTrainResult(state=state, log=log.rows,
                           epoch_accuracy=epoch_accuracy,
                           checkpoints=checkpoints)

"""Mini-batch composition for adversarial training."""

from __future__ import annotations

import numpy as np

from ..exceptions import DataError
from .types import Corpus, GanBatchPlan

SPECIAL_NUMERATOR_OFFSET = 1  # (K + 1) images out of a batch of 16
SPECIAL_DENOMINATOR = 16.0


def special_count(batch_size: int, num_domains: int) -> int:
    """Number of batch members that drive soft-mask generation.

    The fraction (K + 1) / 16 of the mini-batch, rounded to nearest and
    clamped to [1, batch_size]; with a batch of 16 this selects exactly
    K + 1 members.
    """
    fraction = (num_domains + SPECIAL_NUMERATOR_OFFSET) / SPECIAL_DENOMINATOR
    n = int(np.rint(batch_size * fraction))
    return max(1, min(batch_size, n))


def compose_gan_batch(corpus: Corpus, batch_size: int,
                      rng: np.random.Generator) -> GanBatchPlan:
    """Draw one training batch and partition it.

    ``special`` members later receive the uniform indicator plus every
    foreign one-hot indicator; each ``general`` member receives the single
    random foreign one-hot domain stored in the plan.
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    if len(corpus) == 0:
        raise DataError("corpus is empty")
    if corpus.num_domains < 2:
        raise ValueError("adversarial batches need a corpus with >= 2 domains")
    replace = batch_size > len(corpus)
    chosen = rng.choice(len(corpus), size=batch_size, replace=replace)
    n_special = special_count(batch_size, corpus.num_domains)
    special = tuple(int(i) for i in chosen[:n_special])
    general = tuple(int(i) for i in chosen[n_special:])
    targets = []
    for idx in general:
        source = corpus[idx].domain
        foreign = [k for k in range(corpus.num_domains) if k != source]
        targets.append(int(rng.choice(foreign)))
    return GanBatchPlan(special=special, general=general,
                        general_targets=tuple(targets))

"""Estimator facade: fit on a masked multi-domain corpus, transform images
into their background-suppressed (soft-mask) versions."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..data.types import Corpus, IndicatorKind
from ..validation import check_image_batch
from .losses import LossWeights
from .networks import generate, infer_softmask
from .training import GanTrainingConfig, train_sbsgan


class SoftMaskGAN(BaseEstimator, TransformerMixin):
    """Background-shift suppressing translation GAN.

    ``fit`` runs adversarial training on a :class:`Corpus` whose samples all
    carry foreground masks; ``transform`` maps images to soft-mask images
    (no masks needed at inference). ``style_transfer`` exposes the auxiliary
    branch that re-styles images toward a chosen domain.
    """

    def __init__(self, image_size=(64, 32), base_channels=32, num_res_blocks=6,
                 learning_rate=1e-4, beta1=0.5, beta2=0.999, batch_size=16,
                 epochs=5, d_steps_per_g=5, lambda_rec=10.0, lambda_idc=5.0,
                 lambda_bgs=5.0, lambda_sc=5.0, adversarial="wgan-gp",
                 gp_weight=10.0, bgs_reduction="norm", seed=0):
        self.image_size = image_size
        self.base_channels = base_channels
        self.num_res_blocks = num_res_blocks
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.batch_size = batch_size
        self.epochs = epochs
        self.d_steps_per_g = d_steps_per_g
        self.lambda_rec = lambda_rec
        self.lambda_idc = lambda_idc
        self.lambda_bgs = lambda_bgs
        self.lambda_sc = lambda_sc
        self.adversarial = adversarial
        self.gp_weight = gp_weight
        self.bgs_reduction = bgs_reduction
        self.seed = seed

    def _config(self) -> GanTrainingConfig:
        return GanTrainingConfig(
            image_size=tuple(self.image_size),
            base_channels=self.base_channels,
            num_res_blocks=self.num_res_blocks,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            batch_size=self.batch_size,
            epochs=self.epochs,
            d_steps_per_g=self.d_steps_per_g,
            weights=LossWeights(self.lambda_rec, self.lambda_idc,
                                self.lambda_bgs, self.lambda_sc),
            adversarial=self.adversarial,
            gp_weight=self.gp_weight,
            bgs_reduction=self.bgs_reduction,
            seed=self.seed,
        )

    def fit(self, X: Corpus, y=None, out_dir=None, resume=None):
        if not isinstance(X, Corpus):
            raise TypeError("SoftMaskGAN.fit expects a Corpus")
        result = train_sbsgan(X, self._config(), out_dir=out_dir, resume=resume)
        self.generator_ = result.state.generator
        self.discriminator_ = result.state.discriminator
        self.num_domains_ = result.state.num_domains
        self.loss_log_ = result.log
        self.checkpoints_ = result.checkpoints
        return self

    def _images(self, X) -> np.ndarray:
        if isinstance(X, Corpus):
            return X.images()
        return check_image_batch(X, size=self.image_size)

    def transform(self, X) -> np.ndarray:
        """Soft-mask images for ``X`` (array batch or Corpus)."""
        check_is_fitted(self, "generator_")
        return infer_softmask(self.generator_, self._images(X))

    def style_transfer(self, X, target_domain: int) -> np.ndarray:
        """Re-style images toward ``target_domain`` through the style branch."""
        check_is_fitted(self, "generator_")
        return generate(self.generator_, self._images(X),
                        IndicatorKind.one_hot(target_domain))

"""Estimator facade over the two-stream network: fit on labeled image pairs,
predict identities, transform pairs into retrieval features."""

from __future__ import annotations

import numpy as np
import torch
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..torchutil import to_nchw
from ..validation import check_image_batch, check_labels
from .backbone import MINI_VARIANT, BackboneConfig
from .model import extract_features
from .training import ReidTrainingConfig, train_da2s


def _unpack_pairs(X, size=None):
    """Accept (soft, context) tuples or stacked (N, 2, H, W, 3) arrays."""
    if isinstance(X, (tuple, list)) and len(X) == 2:
        soft, context = X
    else:
        arr = np.asarray(X)
        if arr.ndim != 5 or arr.shape[1] != 2:
            raise ValueError(
                "X must be a (soft, context) pair of batches or an array of "
                f"shape (N, 2, H, W, 3); got shape {arr.shape}"
            )
        soft, context = arr[:, 0], arr[:, 1]
    soft = check_image_batch(soft, size=size, name="soft images")
    context = check_image_batch(context, size=size, name="context images")
    if soft.shape[0] != context.shape[0]:
        raise ValueError("soft and context batches differ in length")
    return soft, context


class TwoStreamReid(BaseEstimator, ClassifierMixin, TransformerMixin):
    """Two-stream identification network with inter-stream dense fusion.

    The first stream sees background-suppressed images, the second the
    context images. Training casts identification as classification over
    the label set; ``transform`` returns the pooled fusion features used
    for retrieval.
    """

    def __init__(self, variant=MINI_VARIANT, input_size=(64, 32),
                 growth_rate=None, block_layers=None, init_channels=None,
                 use_se=True, use_isdc=True, isdc_se=False, se_reduction=16,
                 fc1_units=512, dropout=0.5, learning_rate=0.1,
                 decayed_learning_rate=0.01, decay_epoch=40, momentum=0.9,
                 batch_size=50, epochs=60, flip_probability=0.5, seed=0):
        self.variant = variant
        self.input_size = input_size
        self.growth_rate = growth_rate
        self.block_layers = block_layers
        self.init_channels = init_channels
        self.use_se = use_se
        self.use_isdc = use_isdc
        self.isdc_se = isdc_se
        self.se_reduction = se_reduction
        self.fc1_units = fc1_units
        self.dropout = dropout
        self.learning_rate = learning_rate
        self.decayed_learning_rate = decayed_learning_rate
        self.decay_epoch = decay_epoch
        self.momentum = momentum
        self.batch_size = batch_size
        self.epochs = epochs
        self.flip_probability = flip_probability
        self.seed = seed

    def _backbone(self) -> BackboneConfig:
        base = BackboneConfig.from_variant(self.variant, tuple(self.input_size))
        overrides = {}
        if self.growth_rate is not None:
            overrides["growth_rate"] = self.growth_rate
        if self.block_layers is not None:
            overrides["block_layers"] = tuple(self.block_layers)
        if self.init_channels is not None:
            overrides["init_channels"] = self.init_channels
        if overrides:
            base = BackboneConfig(
                growth_rate=overrides.get("growth_rate", base.growth_rate),
                block_layers=overrides.get("block_layers", base.block_layers),
                init_channels=overrides.get("init_channels", base.init_channels),
                input_size=base.input_size,
            )
        return base

    def _train_config(self) -> ReidTrainingConfig:
        return ReidTrainingConfig(
            learning_rate=self.learning_rate,
            decayed_learning_rate=self.decayed_learning_rate,
            decay_epoch=self.decay_epoch,
            momentum=self.momentum,
            batch_size=self.batch_size,
            epochs=self.epochs,
            flip_probability=self.flip_probability,
            use_se=self.use_se,
            use_isdc=self.use_isdc,
            isdc_se=self.isdc_se,
            se_reduction=self.se_reduction,
            fc1_units=self.fc1_units,
            dropout=self.dropout,
            seed=self.seed,
        )

    def fit(self, X, y, out_dir=None, resume=None):
        soft, context = _unpack_pairs(X, size=self.input_size)
        y = check_labels(y, n=soft.shape[0])
        self.classes_, encoded = np.unique(y, return_inverse=True)
        result = train_da2s(
            (soft, context, encoded), self._backbone(), self._train_config(),
            out_dir=out_dir, resume=resume,
        )
        self.model_ = result.state.model
        self.log_ = result.log
        self.epoch_accuracy_ = result.epoch_accuracy
        self.checkpoints_ = result.checkpoints
        self.feature_dim_ = result.state.model.feature_dim
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        soft, context = _unpack_pairs(X, size=self.input_size)
        self.model_.eval()
        with torch.no_grad():
            logits = self.model_(to_nchw(soft), to_nchw(context))
        return logits.numpy()

    def predict(self, X) -> np.ndarray:
        return self.classes_[self.decision_function(X).argmax(axis=1)]

    def transform(self, X) -> np.ndarray:
        """Pooled fusion features for retrieval, shape (N, feature_dim)."""
        check_is_fitted(self, "model_")
        soft, context = _unpack_pairs(X, size=self.input_size)
        return extract_features(self.model_, soft, context)

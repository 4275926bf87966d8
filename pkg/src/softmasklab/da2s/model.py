"""The two-stream identification network with dense inter-stream fusion.

One stream receives the background-suppressed image, the other the context
image (style transfer during training, the original at test time). The final
stream maps are concatenated, re-weighted by squeeze-excite, summed with the
last fusion output, then pooled into the retrieval feature.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from ..torchutil import seeded_generator, to_nchw
from .backbone import BackboneConfig, DenseStream, TapShape, compute_tap_table
from .fusion import IsdcStack, SqueezeExcite, plan_isdc_stack


def concat_tap_table(cfg: BackboneConfig):
    """Tap table after channel concatenation of the two streams."""
    return [TapShape(2 * t.channels, t.height, t.width)
            for t in compute_tap_table(cfg)]


class TwoStreamNet(nn.Module):
    def __init__(self, cfg: BackboneConfig, num_ids, use_se=True, use_isdc=True,
                 isdc_se=False, se_reduction=16, fc1_units=512, dropout=0.5,
                 seed=0):
        super().__init__()
        if num_ids < 2:
            raise ValueError(f"num_ids must be >= 2, got {num_ids}")
        self.cfg = cfg
        self.tap_table = compute_tap_table(cfg)
        concat_taps = concat_tap_table(cfg)
        self.feature_dim = concat_taps[-1].channels

        self.stream1 = DenseStream(cfg, seed=seed * 2 + 1)
        self.stream2 = DenseStream(cfg, seed=seed * 2 + 2)
        self.isdc = (
            IsdcStack(plan_isdc_stack(concat_taps), use_se=isdc_se,
                      se_reduction=se_reduction, seed=seed + 7)
            if use_isdc else None
        )
        self.se = SqueezeExcite(self.feature_dim, se_reduction) if use_se else None

        self.fc1 = nn.Linear(self.feature_dim, fc1_units)
        self.bn1 = nn.BatchNorm1d(fc1_units)
        self.dropout = nn.Dropout(dropout)
        self.fc2 = nn.Linear(fc1_units, num_ids)
        gen = seeded_generator(seed, 23)
        with torch.no_grad():
            for fc in (self.fc1, self.fc2):
                fc.weight.normal_(0.0, 0.01, generator=gen)
                fc.bias.zero_()

    def _check_inputs(self, soft, context):
        expected = tuple(self.cfg.input_size)
        for name, x in (("soft", soft), ("context", context)):
            if tuple(x.shape[2:]) != expected:
                raise ValueError(
                    f"{name} input is {tuple(x.shape[2:])}, model expects {expected}"
                )
        if soft.shape[0] != context.shape[0]:
            raise ValueError("both streams need the same batch size")

    def fused_map(self, soft, context):
        self._check_inputs(soft, context)
        taps1 = self.stream1.forward_taps(soft)
        taps2 = self.stream2.forward_taps(context)
        base = torch.cat([taps1[-1], taps2[-1]], dim=1)
        fused = self.se(base) if self.se is not None else base
        if self.isdc is not None:
            fused = fused + self.isdc(taps1[:4], taps2[:4])
        return fused

    def features(self, soft, context):
        """Post-pooling fused feature vectors, dimension ``feature_dim``."""
        return self.fused_map(soft, context).mean(dim=(2, 3))

    def forward(self, soft, context):
        x = self.features(soft, context)
        x = self.dropout(torch.relu(self.bn1(self.fc1(x))))
        return self.fc2(x)


def build_model(cfg: BackboneConfig, num_ids, use_se=True, use_isdc=True,
                isdc_se=False, se_reduction=16, fc1_units=512, dropout=0.5,
                seed=0) -> TwoStreamNet:
    """Construct and wire-check the two-stream network.

    Tap shapes and the fusion stride schedule are validated up front; an
    inconsistent configuration raises a WiringError naming the tap.
    """
    return TwoStreamNet(cfg, num_ids, use_se=use_se, use_isdc=use_isdc,
                        isdc_se=isdc_se, se_reduction=se_reduction,
                        fc1_units=fc1_units, dropout=dropout, seed=seed)


def extract_features(model: TwoStreamNet, soft, context) -> np.ndarray:
    """Inference-mode fused feature vectors for numpy image batches."""
    was_training = model.training
    model.eval()
    try:
        with torch.no_grad():
            feats = model.features(to_nchw(soft), to_nchw(context))
    finally:
        model.train(was_training)
    return feats.cpu().numpy()

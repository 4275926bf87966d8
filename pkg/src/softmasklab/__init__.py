"""Soft-mask image generation for background-shift suppression, plus a
two-stream re-identification network with inter-stream dense fusion.

The two estimators compose with the scikit-learn ecosystem:

* :class:`SoftMaskGAN` — fit on a masked multi-domain corpus, transform
  images into background-suppressed (soft-mask) images.
* :class:`TwoStreamReid` — fit on (soft, context) image pairs with identity
  labels, predict identities, transform pairs into retrieval features.
"""

__version__ = "0.1.0"

from .data import (
    Corpus,
    DomainIndicator,
    GanBatchPlan,
    ImageSample,
    IndicatorKind,
    LayoutSpec,
    SyntheticSpec,
    apply_mask,
    augment,
    build_indicator,
    compose_gan_batch,
    generate_synthetic_corpus,
    load_corpus,
    write_corpus,
)
from .io import load_checkpoint, save_checkpoint
from .sbsgan import SoftMaskGAN, infer_softmask, train_sbsgan
from .da2s import BackboneConfig, TwoStreamReid, build_model, extract_features, train_da2s
from .reideval import (
    FeatureSet,
    compute_cmc,
    compute_map,
    domain_centroid_distance,
    rank_gallery,
)

__all__ = [
    "BackboneConfig",
    "Corpus",
    "DomainIndicator",
    "FeatureSet",
    "GanBatchPlan",
    "ImageSample",
    "IndicatorKind",
    "LayoutSpec",
    "SoftMaskGAN",
    "SyntheticSpec",
    "TwoStreamReid",
    "apply_mask",
    "augment",
    "build_indicator",
    "build_model",
    "compose_gan_batch",
    "compute_cmc",
    "compute_map",
    "domain_centroid_distance",
    "extract_features",
    "generate_synthetic_corpus",
    "infer_softmask",
    "load_checkpoint",
    "load_corpus",
    "rank_gallery",
    "save_checkpoint",
    "train_da2s",
    "train_sbsgan",
    "write_corpus",
    "__version__",
]

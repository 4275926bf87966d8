from .networks import PatchDiscriminator, ResidualBlock, TranslationGenerator, generate, infer_softmask
from .losses import (
    BGS_MSE,
    BGS_NORM,
    LossWeights,
    GanTrainBatch,
    adversarial_loss,
    background_suppression_loss,
    combine_discriminator_terms,
    combine_generator_terms,
    discriminator_objective,
    domain_classification_loss,
    generator_objective,
    gradient_penalty,
    identity_loss,
    reconstruction_loss,
    style_consistency_loss,
)
from .training import (
    GanTrainingConfig,
    GanTrainResult,
    GanTrainState,
    build_state,
    load_state,
    save_state,
    train_sbsgan,
)
from .estimator import SoftMaskGAN

__all__ = [
    "BGS_MSE",
    "BGS_NORM",
    "GanTrainBatch",
    "GanTrainResult",
    "GanTrainState",
    "GanTrainingConfig",
    "LossWeights",
    "PatchDiscriminator",
    "ResidualBlock",
    "SoftMaskGAN",
    "TranslationGenerator",
    "adversarial_loss",
    "background_suppression_loss",
    "build_state",
    "combine_discriminator_terms",
    "combine_generator_terms",
    "discriminator_objective",
    "domain_classification_loss",
    "generate",
    "generator_objective",
    "gradient_penalty",
    "identity_loss",
    "infer_softmask",
    "load_state",
    "reconstruction_loss",
    "save_state",
    "style_consistency_loss",
    "train_sbsgan",
]

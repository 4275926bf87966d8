from .backbone import (
    FULL_VARIANT,
    MINI_VARIANT,
    BackboneConfig,
    DenseStream,
    TapShape,
    compute_tap_table,
)
from .fusion import (
    ISDC_KERNEL,
    ISDC_PADDING,
    ISDC_STRIDES,
    IsdcModule,
    IsdcSpec,
    IsdcStack,
    SqueezeExcite,
    isdc_forward,
    plan_isdc_stack,
    se_reweight,
)
from .model import TwoStreamNet, build_model, concat_tap_table, extract_features
from .training import (
    ReidTrainingConfig,
    ReidTrainResult,
    ReidTrainState,
    build_reid_state,
    learning_rate_at,
    load_reid_state,
    save_reid_state,
    train_da2s,
)
from .estimator import TwoStreamReid

__all__ = [
    "FULL_VARIANT",
    "ISDC_KERNEL",
    "ISDC_PADDING",
    "ISDC_STRIDES",
    "MINI_VARIANT",
    "BackboneConfig",
    "DenseStream",
    "IsdcModule",
    "IsdcSpec",
    "IsdcStack",
    "ReidTrainResult",
    "ReidTrainState",
    "ReidTrainingConfig",
    "SqueezeExcite",
    "TapShape",
    "TwoStreamNet",
    "TwoStreamReid",
    "build_model",
    "build_reid_state",
    "compute_tap_table",
    "concat_tap_table",
    "extract_features",
    "isdc_forward",
    "learning_rate_at",
    "load_reid_state",
    "plan_isdc_stack",
    "save_reid_state",
    "se_reweight",
    "train_da2s",
]

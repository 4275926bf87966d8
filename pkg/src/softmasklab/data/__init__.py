from .types import (
    Corpus,
    DomainIndicator,
    GanBatchPlan,
    ImageSample,
    IndicatorKind,
    SyntheticSpec,
)
from .indicators import apply_mask, build_indicator
from .synthetic import generate_synthetic_corpus
from .storage import (
    LayoutSpec,
    corpus_filenames,
    load_corpus,
    parse_filename,
    read_image,
    write_corpus,
    write_image,
)
from .batching import compose_gan_batch, special_count
from .transforms import augment, resize_image, resize_mask

__all__ = [
    "Corpus",
    "DomainIndicator",
    "GanBatchPlan",
    "ImageSample",
    "IndicatorKind",
    "LayoutSpec",
    "SyntheticSpec",
    "apply_mask",
    "augment",
    "build_indicator",
    "compose_gan_batch",
    "corpus_filenames",
    "generate_synthetic_corpus",
    "load_corpus",
    "parse_filename",
    "read_image",
    "resize_image",
    "resize_mask",
    "special_count",
    "write_corpus",
    "write_image",
]

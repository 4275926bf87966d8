from .ranking import DISTRACTOR_ID, FeatureSet, RankingResult, rank_gallery
from .metrics import DEFAULT_RANKS, compute_cmc, compute_map
from .domain_gap import (
    DomainGapResult,
    PcaEmbedder,
    domain_centroid_distance,
    embed_domains,
)

__all__ = [
    "DEFAULT_RANKS",
    "DISTRACTOR_ID",
    "DomainGapResult",
    "FeatureSet",
    "PcaEmbedder",
    "RankingResult",
    "compute_cmc",
    "compute_map",
    "domain_centroid_distance",
    "embed_domains",
    "rank_gallery",
]

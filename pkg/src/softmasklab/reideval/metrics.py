"""Cumulative matching characteristic and mean average precision."""

from __future__ import annotations

import numpy as np

from ..exceptions import ProtocolError
from .ranking import RankingResult

DEFAULT_RANKS = (1, 5, 10)


def _valid_matches(result: RankingResult, query: int) -> np.ndarray:
    mv = result.matches[query][result.valid[query]]
    if not mv.any():
        raise ProtocolError(
            f"query {query} has no valid matching gallery entry"
        )
    return mv


def compute_cmc(result: RankingResult, ranks=DEFAULT_RANKS) -> np.ndarray:
    """Fraction of queries whose first valid match appears within rank n.

    Positions count valid entries only; excluded entries do not occupy
    ranks. Raises ProtocolError naming any query without a valid match.
    """
    ranks = tuple(int(r) for r in ranks)
    if any(r < 1 for r in ranks):
        raise ValueError(f"ranks must be >= 1, got {ranks}")
    first = np.empty(result.num_queries, dtype=np.int64)
    for qi in range(result.num_queries):
        mv = _valid_matches(result, qi)
        first[qi] = int(np.argmax(mv)) + 1
    return np.array([np.mean(first <= r) for r in ranks])


def compute_map(result: RankingResult) -> float:
    """Mean over queries of average precision among valid entries.

    AP divides by the number of ground-truth matches, following the common
    released evaluation convention.
    """
    aps = np.empty(result.num_queries)
    for qi in range(result.num_queries):
        mv = _valid_matches(result, qi)
        cum = np.cumsum(mv)
        positions = np.arange(1, len(mv) + 1)
        precision_at_hits = (cum / positions)[mv.astype(bool)]
        aps[qi] = precision_at_hits.sum() / mv.sum()
    return float(np.mean(aps))

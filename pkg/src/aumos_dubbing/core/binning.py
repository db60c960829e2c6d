"""Equal-frequency binning of segment durations.

Cut points are empirical quantiles (inverted CDF) at i/k for i in 1..k-1, so
each bin holds the same number of training segments on tie-free data. Bins are
upper-inclusive: a duration equal to a cut point falls in the lower bin.
Durations outside the fitted range map to the edge bins.
"""

from __future__ import annotations

import bisect
import hashlib
import json
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from aumos_dubbing.errors import ConfigurationError, InsufficientDataError, VocabularyError
from aumos_dubbing.observability import get_logger

logger = get_logger(__name__)

DEFAULT_BIN_COUNT = 100
BIN_PREFIX = "BIN"


@dataclass(frozen=True)
class BinBoundaries:
    """Fitted cut points mapping durations to bin indices.

    Attributes:
        k: Requested bin count (the bin-token vocabulary size).
        cuts: Strictly ascending cut points in milliseconds, at most k-1 of them.
        fitted_on: Number of durations the cuts were fitted on.
    """

    k: int
    cuts: tuple[float, ...]
    fitted_on: int

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ConfigurationError("bin count must be at least 2", k=self.k)
        if len(self.cuts) > self.k - 1:
            raise ConfigurationError("too many cut points for bin count", k=self.k, cuts=len(self.cuts))
        if any(b <= a for a, b in zip(self.cuts, self.cuts[1:], strict=False)):
            raise ConfigurationError("cut points must be strictly ascending")

    @property
    def effective_k(self) -> int:
        """Number of distinct bins after collapsing duplicate cut points."""
        return len(self.cuts) + 1

    def to_dict(self) -> dict[str, Any]:
        """JSON form ``{"k", "cuts_ms", "fitted_on"}``; integral cuts are written as ints."""
        return {
            "k": self.k,
            "cuts_ms": [int(cut) if float(cut).is_integer() else float(cut) for cut in self.cuts],
            "fitted_on": self.fitted_on,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> BinBoundaries:
        """Inverse of ``to_dict``."""
        return cls(k=int(data["k"]), cuts=tuple(float(c) for c in data["cuts_ms"]), fitted_on=int(data["fitted_on"]))

    def digest(self) -> str:
        """Content hash used to pin checkpoints to their training-time boundaries."""
        payload = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


def fit_bins(durations_ms: Sequence[float], k: int = DEFAULT_BIN_COUNT) -> BinBoundaries:
    """Fit k equal-frequency bins.

    Duplicate cut values are collapsed, and cut points at or above the largest
    sample are dropped because the bin above them would be empty; on discrete
    data the effective bin count may therefore be smaller than k.

    Args:
        durations_ms: Segment durations of the training corpus.
        k: Requested number of bins, at least 2.

    Returns:
        Fitted BinBoundaries.

    Raises:
        ConfigurationError: If k < 2.
        InsufficientDataError: If there are fewer durations than bins.
    """
    if k < 2:
        raise ConfigurationError("bin count must be at least 2", k=k)
    if len(durations_ms) < k:
        raise InsufficientDataError("fewer durations than bins", samples=len(durations_ms), k=k)

    values = np.asarray(durations_ms, dtype=np.float64)
    quantiles = np.arange(1, k) / k
    raw = np.quantile(values, quantiles, method="inverted_cdf")
    cuts = np.unique(raw)
    cuts = cuts[cuts < values.max()]

    boundaries = BinBoundaries(k=k, cuts=tuple(float(cut) for cut in cuts), fitted_on=len(values))
    if boundaries.effective_k < k:
        logger.info("bins_collapsed", k=k, effective_k=boundaries.effective_k, samples=len(values))
    return boundaries


def assign_bin(d_ms: float, boundaries: BinBoundaries) -> int:
    """Map a duration to its bin index.

    Returns i with ``cuts[i-1] < d_ms <= cuts[i]``, treating ``cuts[-1]`` as
    -inf and ``cuts[len(cuts)]`` as +inf. Total over all durations.
    """
    return bisect.bisect_left(boundaries.cuts, d_ms)


def bin_token(index: int, k: int = DEFAULT_BIN_COUNT) -> str:
    """Return the source token for a bin index, e.g. ``BIN4``.

    Raises:
        VocabularyError: If the index is outside ``[0, k)``.
    """
    if not 0 <= index < k:
        raise VocabularyError("bin index out of range", index=index, k=k)
    return f"{BIN_PREFIX}{index}"


def bin_tokens(k: int) -> list[str]:
    """All bin tokens for a k-bin vocabulary, in index order."""
    return [bin_token(i, k) for i in range(k)]

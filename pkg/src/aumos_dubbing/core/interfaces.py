"""Abstract interfaces (Protocol classes) for the dubbing core layer."""

from __future__ import annotations

from collections.abc import Sequence
from typing import Protocol, runtime_checkable

import numpy as np
import numpy.typing as npt


@runtime_checkable
class StepScorer(Protocol):
    """Next-token distribution of an autoregressive model, used by beam search."""

    @property
    def vocab_size(self) -> int:
        """Number of token ids the scorer assigns probabilities to."""
        ...

    def next_log_probs(self, prefixes: Sequence[Sequence[int]]) -> npt.NDArray[np.float64]:
        """Log-probabilities of shape (len(prefixes), vocab_size).

        Prefixes hold generated tokens only; the scorer supplies BOS itself.
        """
        ...


@runtime_checkable
class Translator(Protocol):
    """Maps source text plus optional segment bins to a hypothesis."""

    def translate(self, text: str, bins: Sequence[int] | None) -> tuple[list[str], bool]:
        """Decoded target tokens and whether decoding hit the length limit."""
        ...

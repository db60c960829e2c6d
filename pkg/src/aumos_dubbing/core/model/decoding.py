"""Length-normalized beam search over any StepScorer."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
import torch

from aumos_dubbing.core.codec import BOS_ID, EOS_ID, PAD_ID
from aumos_dubbing.core.interfaces import StepScorer
from aumos_dubbing.core.model.transformer import Seq2SeqTransformer
from aumos_dubbing.observability import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class BeamResult:
    """Best hypothesis of a beam search.

    Attributes:
        tokens: Generated token ids, EOS excluded.
        log_prob: Summed log-probability, EOS included when finished.
        score: ``log_prob`` divided by the scored length (tokens plus EOS).
        truncated: True when no hypothesis finished within ``max_len`` steps.
    """

    tokens: list[int]
    log_prob: float
    score: float
    truncated: bool = False


def beam_decode(
    scorer: StepScorer,
    beam: int,
    max_len: int,
    eos_id: int = EOS_ID,
    banned: Sequence[int] = (PAD_ID, BOS_ID),
) -> BeamResult:
    """Search for the hypothesis with the best length-normalized log-probability.

    A search of width ``w`` expands every live hypothesis with its ``w + 1``
    best tokens and keeps the ``w`` best non-EOS continuations by raw
    log-probability. An EOS continuation finishes a hypothesis only when it
    ranks within the top ``w`` candidates of the step. It stops once ``w``
    hypotheses have finished, nothing is alive, or ``max_len`` steps have run.
    Width 1 is greedy decoding.

    The result for ``beam`` is the best over the searches of widths
    ``1..beam``, so widening the beam never lowers the returned score.
    A finished hypothesis always ranks above a truncated one.

    Args:
        scorer: A ``StepScorer``.
        beam: Beam width, at least 1.
        max_len: Maximum number of generated tokens, EOS included.
        eos_id: End-of-sequence id.
        banned: Ids never generated.

    Returns:
        The best finished hypothesis, or the best partial one flagged ``truncated``.
    """
    if beam < 1:
        raise ValueError(f"beam must be at least 1, got {beam}")
    if max_len < 1:
        raise ValueError(f"max_len must be at least 1, got {max_len}")

    best: BeamResult | None = None
    # widest first so that ties keep the widest search
    for width in range(beam, 0, -1):
        result = _search(scorer, width, max_len, eos_id, banned)
        if best is None or _rank(result) > _rank(best):
            best = result
    assert best is not None
    if best.truncated:
        logger.warning("beam_max_len_reached", max_len=max_len, beam=beam)
    return best


def _rank(result: BeamResult) -> tuple[bool, float]:
    return (not result.truncated, result.score)


def _search(scorer: StepScorer, width: int, max_len: int, eos_id: int, banned: Sequence[int]) -> BeamResult:
    alive: list[tuple[list[int], float]] = [([], 0.0)]
    finished: list[tuple[list[int], float]] = []
    for _ in range(max_len):
        log_probs = np.array(scorer.next_log_probs([prefix for prefix, _ in alive]), dtype=np.float64)
        log_probs[:, list(banned)] = -np.inf

        candidates: list[tuple[float, int, int]] = []
        for row, (_, score) in enumerate(alive):
            order = np.argsort(-log_probs[row], kind="stable")[: width + 1]
            candidates.extend(
                (score + float(log_probs[row, token]), row, int(token))
                for token in order
                if np.isfinite(log_probs[row, token])
            )
        candidates.sort(key=lambda cand: -cand[0])

        next_alive: list[tuple[list[int], float]] = []
        for rank, (score, row, token) in enumerate(candidates):
            if token == eos_id:
                if rank < width:
                    finished.append((alive[row][0], score))
            elif len(next_alive) < width:
                next_alive.append(([*alive[row][0], token], score))
            if rank >= width and len(next_alive) >= width:
                break
        alive = next_alive
        if len(finished) >= width or not alive:
            break

    if finished:
        tokens, log_prob = max(finished, key=lambda hyp: hyp[1] / (len(hyp[0]) + 1))
        return BeamResult(tokens=tokens, log_prob=log_prob, score=log_prob / (len(tokens) + 1))
    if not alive:
        return BeamResult(tokens=[], log_prob=float("-inf"), score=float("-inf"), truncated=True)
    tokens, log_prob = max(alive, key=lambda hyp: hyp[1] / max(len(hyp[0]), 1))
    return BeamResult(tokens=tokens, log_prob=log_prob, score=log_prob / max(len(tokens), 1), truncated=True)


class TransformerScorer:
    """StepScorer over a trained model for one encoded source sentence.

    The encoder runs once; every step re-runs the decoder over the full prefix.
    """

    def __init__(self, model: Seq2SeqTransformer, src_ids: Sequence[int]) -> None:
        self._model = model
        model.eval()
        with torch.no_grad():
            src = torch.tensor([list(src_ids)], dtype=torch.long)
            self._memory, self._keep = model.encode(src)

    @property
    def vocab_size(self) -> int:
        return self._model.tgt_vocab_size

    def next_log_probs(self, prefixes: Sequence[Sequence[int]]) -> npt.NDArray[np.float64]:
        """Prefixes may differ in length; rows are right-padded and read at their last real position."""
        width = 1 + max((len(prefix) for prefix in prefixes), default=0)
        batch = torch.full((len(prefixes), width), PAD_ID, dtype=torch.long)
        for row, prefix in enumerate(prefixes):
            batch[row, : len(prefix) + 1] = torch.tensor([BOS_ID, *prefix], dtype=torch.long)
        last = torch.tensor([len(prefix) for prefix in prefixes], dtype=torch.long)
        with torch.no_grad():
            memory = self._memory.expand(len(prefixes), -1, -1)
            keep = self._keep.expand(len(prefixes), -1, -1, -1)
            logits = self._model.decode(batch, memory, keep)[torch.arange(len(prefixes)), last, :]
            return torch.log_softmax(logits.double(), dim=-1).numpy()

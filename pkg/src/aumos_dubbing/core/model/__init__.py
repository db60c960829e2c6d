"""Encoder-decoder model sub-package — transformer, training, beam search, gradient check."""

from aumos_dubbing.core.model.checkpoint import Checkpoint
from aumos_dubbing.core.model.decoding import BeamResult, TransformerScorer, beam_decode
from aumos_dubbing.core.model.gradcheck import GradCheckResult, GradFixture, grad_check
from aumos_dubbing.core.model.training import (
    EpochRecord,
    Example,
    Trainer,
    TrainingState,
    ValidationScores,
    build_model,
)
from aumos_dubbing.core.model.transformer import Seq2SeqTransformer, sequence_loss

__all__ = [
    "BeamResult",
    "Checkpoint",
    "EpochRecord",
    "Example",
    "GradCheckResult",
    "GradFixture",
    "Seq2SeqTransformer",
    "Trainer",
    "TrainingState",
    "TransformerScorer",
    "ValidationScores",
    "beam_decode",
    "build_model",
    "grad_check",
    "sequence_loss",
]

"""Self-describing checkpoint content and its compatibility check."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from torch import Tensor

from aumos_dubbing.core.config import ModelConfig, TrainingMode
from aumos_dubbing.core.model.training import EpochRecord, TrainingState
from aumos_dubbing.errors import CheckpointMismatchError, StructuralInputError

CHECKPOINT_FORMAT = 1


@dataclass
class Checkpoint:
    """Best parameters of a run plus everything needed to use or resume it.

    Attributes:
        config: Model hyperparameters.
        mode: Training mode, fixing source and target formats.
        src_vocab_digest: Hash of the source vocabulary.
        tgt_vocab_digest: Hash of the target vocabulary.
        bins_digest: Hash of the bin boundaries; None for modes without bins.
        src_vocab_size: Source vocabulary size.
        tgt_vocab_size: Target vocabulary size.
        state_dict: Parameters of the best epoch.
        epoch: Best epoch.
        metrics: Per-epoch training log records.
        train_state: Last-epoch parameters and optimizer state for resuming.
        provenance: Serialized run configuration.
    """

    config: ModelConfig
    mode: TrainingMode
    src_vocab_digest: str
    tgt_vocab_digest: str
    bins_digest: str | None
    src_vocab_size: int
    tgt_vocab_size: int
    state_dict: dict[str, Tensor]
    epoch: int
    metrics: list[dict[str, Any]] = field(default_factory=list)
    train_state: dict[str, Any] = field(default_factory=dict)
    provenance: str = ""

    def verify(self, src_vocab_digest: str, tgt_vocab_digest: str, bins_digest: str | None) -> None:
        """Fail fast when the artifacts in use differ from the training-time ones.

        Raises:
            CheckpointMismatchError: On any hash difference.
        """
        expected = {"source_vocab": self.src_vocab_digest, "target_vocab": self.tgt_vocab_digest}
        actual = {"source_vocab": src_vocab_digest, "target_vocab": tgt_vocab_digest}
        if self.mode.uses_duration_bins:
            expected["bins"] = self.bins_digest or ""
            actual["bins"] = bins_digest or ""
        mismatched = sorted(name for name in expected if expected[name] != actual[name])
        if mismatched:
            raise CheckpointMismatchError("checkpoint does not match the artifacts in use", mismatched=mismatched)

    def training_state(self) -> TrainingState:
        """Rebuild the resumable training state."""
        if not self.train_state:
            raise StructuralInputError("checkpoint carries no resumable training state")
        ts = self.train_state
        return TrainingState(
            epoch=int(ts["epoch"]),
            model_state=ts["model_state"],
            optimizer_state=ts["optimizer_state"],
            best_state=self.state_dict,
            best_epoch=self.epoch,
            best_bleu=ts.get("best_bleu"),
            best_loss=ts.get("best_loss"),
            history=[EpochRecord(**record) for record in self.metrics],
        )

    def to_payload(self) -> dict[str, Any]:
        """Plain dict of tensors and primitives, loadable with ``weights_only``."""
        return {
            "format": CHECKPOINT_FORMAT,
            "config": self.config.model_dump(),
            "mode": self.mode.value,
            "src_vocab_digest": self.src_vocab_digest,
            "tgt_vocab_digest": self.tgt_vocab_digest,
            "bins_digest": self.bins_digest,
            "src_vocab_size": self.src_vocab_size,
            "tgt_vocab_size": self.tgt_vocab_size,
            "state_dict": self.state_dict,
            "epoch": self.epoch,
            "metrics": self.metrics,
            "train_state": self.train_state,
            "provenance": self.provenance,
        }

    @classmethod
    def from_payload(cls, payload: dict[str, Any]) -> Checkpoint:
        """Inverse of ``to_payload``.

        Raises:
            StructuralInputError: On an unknown format version or missing fields.
        """
        if payload.get("format") != CHECKPOINT_FORMAT:
            raise StructuralInputError("unsupported checkpoint format", format=payload.get("format"))
        try:
            return cls(
                config=ModelConfig(**payload["config"]),
                mode=TrainingMode(payload["mode"]),
                src_vocab_digest=payload["src_vocab_digest"],
                tgt_vocab_digest=payload["tgt_vocab_digest"],
                bins_digest=payload["bins_digest"],
                src_vocab_size=int(payload["src_vocab_size"]),
                tgt_vocab_size=int(payload["tgt_vocab_size"]),
                state_dict=payload["state_dict"],
                epoch=int(payload["epoch"]),
                metrics=list(payload["metrics"]),
                train_state=dict(payload["train_state"]),
                provenance=str(payload["provenance"]),
            )
        except KeyError as exc:
            raise StructuralInputError("checkpoint is missing a field", field=str(exc)) from exc


def train_state_payload(state: TrainingState) -> dict[str, Any]:
    """The resumable part of a TrainingState as checkpoint fields."""
    return {
        "epoch": state.epoch,
        "model_state": state.model_state,
        "optimizer_state": state.optimizer_state,
        "best_bleu": state.best_bleu,
        "best_loss": state.best_loss,
    }

"""Tests for aumos_dubbing.core.model.checkpoint and the torch checkpoint adapter.

Covers:
- Save/load round trip with weights-only deserialization
- Digest verification (vocabularies always, bins only for duration modes)
- Format version and missing-field errors
- Resumable state reconstruction
"""
from __future__ import annotations

from pathlib import Path

import pytest
import torch

from aumos_dubbing.adapters.checkpoints import load_checkpoint, save_checkpoint
from aumos_dubbing.core.config import ModelConfig, TrainingMode
from aumos_dubbing.core.model.checkpoint import Checkpoint
from aumos_dubbing.core.model.training import EpochRecord
from aumos_dubbing.errors import CheckpointMismatchError, StructuralInputError


def _checkpoint(
    mode: TrainingMode = TrainingMode.TXTD2PHND,
    train_state: dict[str, object] | None = None,
) -> Checkpoint:
    """Helper to build a small checkpoint."""
    return Checkpoint(
        config=ModelConfig(d_model=8, heads=2),
        mode=mode,
        src_vocab_digest="src-hash",
        tgt_vocab_digest="tgt-hash",
        bins_digest="bins-hash" if mode.uses_duration_bins else None,
        src_vocab_size=20,
        tgt_vocab_size=30,
        state_dict={"w": torch.arange(6, dtype=torch.float32).reshape(2, 3)},
        epoch=3,
        metrics=[EpochRecord(1, 2.0, 1.9, 10.0, 0.5).to_dict(), EpochRecord(2, 1.5, 1.4, None, None).to_dict()],
        train_state=train_state or {},
        provenance='{"seed":1}',
    )


class TestCheckpointAdapter:
    """torch persistence."""

    def test_round_trip(self, tmp_path: Path) -> None:
        """Every field survives save and load."""
        path = tmp_path / "run" / "checkpoint.pt"
        original = _checkpoint()
        save_checkpoint(path, original)
        loaded = load_checkpoint(path)
        assert loaded.config == original.config
        assert loaded.mode is TrainingMode.TXTD2PHND
        assert loaded.bins_digest == "bins-hash"
        assert loaded.metrics == original.metrics
        assert loaded.provenance == '{"seed":1}'
        assert torch.equal(loaded.state_dict["w"], original.state_dict["w"])
        assert not path.with_suffix(".pt.tmp").exists()

    def test_missing_file_raises(self, tmp_path: Path) -> None:
        """A missing checkpoint is a structural input error."""
        with pytest.raises(StructuralInputError, match="not found"):
            load_checkpoint(tmp_path / "absent.pt")

    def test_garbage_file_raises(self, tmp_path: Path) -> None:
        """Non-checkpoint bytes are rejected."""
        path = tmp_path / "garbage.pt"
        path.write_bytes(b"not a checkpoint")
        with pytest.raises(StructuralInputError):
            load_checkpoint(path)


class TestVerify:
    """Artifact compatibility."""

    def test_matching_digests_pass(self) -> None:
        """Identical artifacts raise nothing."""
        _checkpoint().verify("src-hash", "tgt-hash", "bins-hash")

    def test_changed_bins_raise(self) -> None:
        """Refitted boundaries are detected."""
        with pytest.raises(CheckpointMismatchError) as info:
            _checkpoint().verify("src-hash", "tgt-hash", "other")
        assert info.value.context["mismatched"] == ["bins"]

    def test_changed_vocabularies_raise(self) -> None:
        """Both vocabularies are listed when both differ."""
        with pytest.raises(CheckpointMismatchError) as info:
            _checkpoint().verify("x", "y", "bins-hash")
        assert info.value.context["mismatched"] == ["source_vocab", "target_vocab"]

    def test_bins_ignored_without_duration_input(self) -> None:
        """Txt2Phn checkpoints do not depend on bins."""
        _checkpoint(TrainingMode.TXT2PHN).verify("src-hash", "tgt-hash", "anything")


class TestPayload:
    """Payload validation and resumable state."""

    def test_unknown_format_raises(self) -> None:
        """Only the current format version loads."""
        payload = _checkpoint().to_payload()
        payload["format"] = 99
        with pytest.raises(StructuralInputError, match="format"):
            Checkpoint.from_payload(payload)

    def test_missing_field_raises(self) -> None:
        """Every field is required."""
        payload = _checkpoint().to_payload()
        del payload["state_dict"]
        with pytest.raises(StructuralInputError, match="missing"):
            Checkpoint.from_payload(payload)

    def test_training_state(self) -> None:
        """The resumable state combines last-epoch and best-epoch parts."""
        train_state = {"epoch": 4, "model_state": {}, "optimizer_state": {}, "best_bleu": 10.0, "best_loss": 1.9}
        state = _checkpoint(train_state=train_state).training_state()
        assert state.epoch == 4
        assert state.best_epoch == 3
        assert state.best_bleu == 10.0
        assert [r.epoch for r in state.history] == [1, 2]

    def test_training_state_requires_train_state(self) -> None:
        """Checkpoints without the resumable part cannot resume."""
        with pytest.raises(StructuralInputError):
            _checkpoint().training_state()

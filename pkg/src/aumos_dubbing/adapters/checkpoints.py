"""Checkpoint persistence with torch serialization."""

from __future__ import annotations

import pickle
from pathlib import Path

import torch

from aumos_dubbing.core.model.checkpoint import Checkpoint
from aumos_dubbing.errors import StructuralInputError
from aumos_dubbing.observability import get_logger

logger = get_logger(__name__)


def save_checkpoint(path: Path, checkpoint: Checkpoint) -> None:
    """Write atomically: serialize to a sibling temp file, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(checkpoint.to_payload(), tmp)
    tmp.replace(path)
    logger.debug("checkpoint_saved", path=str(path), epoch=checkpoint.epoch)


def load_checkpoint(path: Path) -> Checkpoint:
    """Read a checkpoint; only tensors and primitive containers are unpickled.

    Raises:
        StructuralInputError: If the file is missing or not a checkpoint.
    """
    if not path.exists():
        raise StructuralInputError("checkpoint file not found", path=str(path))
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except (RuntimeError, OSError, EOFError, pickle.UnpicklingError) as exc:
        raise StructuralInputError("cannot read checkpoint", path=str(path), error=str(exc)) from exc
    if not isinstance(payload, dict):
        raise StructuralInputError("checkpoint payload is not a mapping", path=str(path))
    return Checkpoint.from_payload(payload)

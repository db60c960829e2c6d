"""Adam training loop with per-epoch validation and best-checkpoint selection.

All randomness is re-derived from ``(config.seed, epoch)``: batch order from
the ``data-shuffle`` substream and dropout from a per-epoch torch seed. A run
resumed from a saved state therefore continues on exactly the same curve as
an uninterrupted one.
"""

from __future__ import annotations

import copy
from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from typing import Any

import torch
from torch import Tensor
from torch.nn.utils.rnn import pad_sequence

from aumos_dubbing.core.codec import BOS_ID, PAD_ID
from aumos_dubbing.core.config import ModelConfig
from aumos_dubbing.core.model.transformer import Seq2SeqTransformer, sequence_loss
from aumos_dubbing.core.seeding import DATA_SHUFFLE, INIT, derive_seed, substream
from aumos_dubbing.errors import InsufficientDataError, TrainingDivergedError
from aumos_dubbing.observability import get_logger

logger = get_logger(__name__)

DROPOUT_STREAM = "dropout"


@dataclass(frozen=True)
class Example:
    """One encoded training pair; ``tgt_ids`` ends with EOS."""

    src_ids: tuple[int, ...]
    tgt_ids: tuple[int, ...]


@dataclass(frozen=True)
class Batch:
    """Padded tensors for teacher forcing."""

    src: Tensor
    tgt_in: Tensor
    tgt_out: Tensor

    @property
    def tokens(self) -> int:
        """Number of non-PAD target tokens."""
        return int((self.tgt_out != PAD_ID).sum())


def make_batch(examples: Sequence[Example]) -> Batch:
    """Pad a list of examples; the decoder input is BOS plus the target shifted right."""
    src = pad_sequence([torch.tensor(ex.src_ids, dtype=torch.long) for ex in examples], True, PAD_ID)
    tgt_in = pad_sequence(
        [torch.tensor((BOS_ID, *ex.tgt_ids[:-1]), dtype=torch.long) for ex in examples], True, PAD_ID
    )
    tgt_out = pad_sequence([torch.tensor(ex.tgt_ids, dtype=torch.long) for ex in examples], True, PAD_ID)
    return Batch(src=src, tgt_in=tgt_in, tgt_out=tgt_out)


@dataclass(frozen=True)
class ValidationScores:
    """Scores of a decode-based validation pass."""

    bleu: float
    so: float


@dataclass(frozen=True)
class EpochRecord:
    """One line of the training log."""

    epoch: int
    train_loss: float
    val_loss: float | None
    val_bleu: float | None
    val_so: float | None

    def to_dict(self) -> dict[str, Any]:
        """JSON form with the keys of the training log."""
        return asdict(self)


@dataclass
class TrainingState:
    """Everything needed to continue or reproduce a run.

    Attributes:
        epoch: Last completed epoch (0 before training).
        model_state: Parameters after ``epoch``.
        optimizer_state: Adam moments after ``epoch``.
        best_state: Parameters of the best epoch so far.
        best_epoch: Epoch of ``best_state``.
        best_bleu: Validation BLEU of ``best_state``; None when selecting by loss.
        best_loss: Validation loss of ``best_state``.
        history: Epoch records so far.
    """

    epoch: int = 0
    model_state: dict[str, Tensor] = field(default_factory=dict)
    optimizer_state: dict[str, Any] = field(default_factory=dict)
    best_state: dict[str, Tensor] = field(default_factory=dict)
    best_epoch: int = 0
    best_bleu: float | None = None
    best_loss: float | None = None
    history: list[EpochRecord] = field(default_factory=list)


def build_model(config: ModelConfig, src_vocab_size: int, tgt_vocab_size: int) -> Seq2SeqTransformer:
    """Create a model with parameters drawn from the ``init`` substream."""
    torch.manual_seed(derive_seed(config.seed, INIT))
    return Seq2SeqTransformer(config, src_vocab_size, tgt_vocab_size)


class Trainer:
    """Trains a Seq2SeqTransformer and keeps the best epoch.

    The best epoch has the highest validation BLEU when ``validate`` is given
    (ties keep the earlier epoch), otherwise the lowest validation loss.

    Args:
        model: Freshly built or restored model.
        config: Optimisation settings.
        validate: Decode-based validation; called once per epoch in eval mode.
        on_epoch: Receives each epoch record and the state after it, e.g. to append
            to the training log and save a resumable checkpoint.
    """

    def __init__(
        self,
        model: Seq2SeqTransformer,
        config: ModelConfig,
        validate: Callable[[Seq2SeqTransformer], ValidationScores] | None = None,
        on_epoch: Callable[[EpochRecord, TrainingState], None] | None = None,
    ) -> None:
        self.model = model
        self.config = config
        self._validate = validate
        self._on_epoch = on_epoch
        self.optimizer = torch.optim.Adam(
            model.parameters(),
            lr=config.lr,
            betas=(config.adam_beta1, config.adam_beta2),
            eps=config.adam_eps,
        )
        self.state = TrainingState()

    def restore(self, state: TrainingState) -> None:
        """Continue from a saved state."""
        self.model.load_state_dict(state.model_state)
        self.optimizer.load_state_dict(state.optimizer_state)
        self.state = state
        logger.info("training_resumed", epoch=state.epoch, best_epoch=state.best_epoch)

    def evaluate_loss(self, examples: Sequence[Example]) -> float:
        """Token-weighted teacher-forced loss, without label smoothing."""
        self.model.eval()
        total = 0.0
        tokens = 0
        with torch.no_grad():
            for start in range(0, len(examples), self.config.batch_size):
                batch = make_batch(examples[start : start + self.config.batch_size])
                logits = self.model(batch.src, batch.tgt_in)
                total += sequence_loss(logits, batch.tgt_out).item() * batch.tokens
                tokens += batch.tokens
        return total / max(tokens, 1)

    def _train_epoch(self, epoch: int, examples: Sequence[Example]) -> float:
        self.model.train()
        torch.manual_seed(derive_seed(self.config.seed, f"{DROPOUT_STREAM}/{epoch}"))
        order = substream(self.config.seed, DATA_SHUFFLE, epoch).permutation(len(examples))
        total = 0.0
        tokens = 0
        for step, start in enumerate(range(0, len(order), self.config.batch_size)):
            batch = make_batch([examples[i] for i in order[start : start + self.config.batch_size]])
            logits = self.model(batch.src, batch.tgt_in)
            loss = sequence_loss(logits, batch.tgt_out, label_smoothing=self.config.label_smoothing)
            if not torch.isfinite(loss):
                raise TrainingDivergedError("non-finite training loss", epoch=epoch, step=step, lr=self.config.lr)
            self.optimizer.zero_grad()
            loss.backward()
            self.optimizer.step()
            total += loss.item() * batch.tokens
            tokens += batch.tokens
        return total / max(tokens, 1)

    def _is_better(self, val_bleu: float | None, val_loss: float) -> bool:
        state = self.state
        if not state.best_state:
            return True
        if val_bleu is not None and state.best_bleu is not None:
            return val_bleu > state.best_bleu
        return state.best_loss is None or val_loss < state.best_loss

    def fit(self, train: Sequence[Example], valid: Sequence[Example]) -> TrainingState:
        """Train until ``config.max_epochs``.

        Raises:
            InsufficientDataError: If there are no training examples.
            TrainingDivergedError: On a NaN or infinite loss.
        """
        if not train:
            raise InsufficientDataError("no training examples")
        state = self.state
        for epoch in range(state.epoch + 1, self.config.max_epochs + 1):
            train_loss = self._train_epoch(epoch, train)
            val_loss = self.evaluate_loss(valid) if valid else train_loss
            scores = self._validate(self.model) if self._validate is not None else None
            record = EpochRecord(
                epoch=epoch,
                train_loss=train_loss,
                val_loss=val_loss if valid else None,
                val_bleu=scores.bleu if scores else None,
                val_so=scores.so if scores else None,
            )
            if self._is_better(record.val_bleu, val_loss):
                state.best_state = copy.deepcopy(self.model.state_dict())
                state.best_epoch = epoch
                state.best_bleu = record.val_bleu
                state.best_loss = val_loss
            state.epoch = epoch
            state.history.append(record)
            state.model_state = self.model.state_dict()
            state.optimizer_state = self.optimizer.state_dict()

            bleus = [r.val_bleu for r in state.history if r.val_bleu is not None]
            logger.info(
                "epoch_finished",
                epoch=epoch,
                train_loss=round(train_loss, 4),
                val_loss=round(val_loss, 4),
                val_bleu=record.val_bleu,
                val_so=record.val_so,
                best_epoch=state.best_epoch,
                lowest_val_bleu=min(bleus) if bleus else None,
            )
            if self._on_epoch is not None:
                self._on_epoch(record, state)
        return state

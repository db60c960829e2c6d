"""Finite-difference verification of the model's analytic gradients.

Runs in double precision with dropout off. Every checked parameter entry is
nudged by ``+h`` and ``-h`` and the central difference of the loss is
compared with autograd's gradient. The relative error of an entry is
``|a - n| / max(|a| + |n|, floor)`` so that entries with near-zero gradient
are compared absolutely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import Tensor

from aumos_dubbing.core.codec import BOS_ID, EOS_ID, PAD_ID
from aumos_dubbing.core.config import ModelConfig
from aumos_dubbing.core.model.transformer import Seq2SeqTransformer, sequence_loss
from aumos_dubbing.observability import get_logger

logger = get_logger(__name__)

RELATIVE_FLOOR = 1e-5
FIRST_FREE_ID = 7


@dataclass(frozen=True)
class GradFixture:
    """A fixed batch for gradient checking."""

    src_vocab_size: int
    tgt_vocab_size: int
    src: Tensor
    tgt_in: Tensor
    tgt_out: Tensor

    @classmethod
    def random(
        cls,
        batch: int = 2,
        src_len: int = 5,
        tgt_len: int = 4,
        src_vocab_size: int = 12,
        tgt_vocab_size: int = 11,
        seed: int = 0,
    ) -> GradFixture:
        """Random non-special tokens; the second row is padded to exercise masking."""
        gen = torch.Generator().manual_seed(seed)
        src = torch.randint(FIRST_FREE_ID, src_vocab_size, (batch, src_len), generator=gen)
        tgt = torch.randint(FIRST_FREE_ID, tgt_vocab_size, (batch, tgt_len), generator=gen)
        src[:, -1] = EOS_ID
        tgt[:, -1] = EOS_ID
        if batch > 1:
            src[1:, -2:] = PAD_ID
            tgt[1:, -1] = PAD_ID
        tgt_in = torch.cat([torch.full((batch, 1), BOS_ID), tgt[:, :-1]], dim=1)
        return cls(src_vocab_size, tgt_vocab_size, src, tgt_in, tgt)


@dataclass
class GradCheckResult:
    """Outcome of a gradient check.

    Attributes:
        max_rel_error: Largest relative error over all checked entries.
        per_parameter: Largest relative error per parameter name.
        checked_entries: Number of parameter entries compared.
        grad_norm: L2 norm of the full analytic gradient.
    """

    max_rel_error: float = 0.0
    per_parameter: dict[str, float] = field(default_factory=dict)
    checked_entries: int = 0
    grad_norm: float = 0.0


def relative_error(analytic: float, numeric: float, floor: float = RELATIVE_FLOOR) -> float:
    """``|a - n| / max(|a| + |n|, floor)``."""
    return abs(analytic - numeric) / max(abs(analytic) + abs(numeric), floor)


def grad_check(
    config: ModelConfig,
    fixture: GradFixture | None = None,
    max_entries_per_tensor: int | None = None,
    h: float = 1e-5,
    seed: int = 0,
) -> GradCheckResult:
    """Compare analytic and central finite-difference gradients on every parameter.

    Args:
        config: Tiny model configuration (d_model 16 or less keeps this fast).
        fixture: Batch to differentiate; a random padded batch when omitted.
        max_entries_per_tensor: Sample this many entries per tensor; all when None.
        h: Finite-difference step.
        seed: Seed for parameter initialisation and entry sampling.

    Returns:
        The maximum relative error and per-parameter breakdown.
    """
    fixture = fixture or GradFixture.random(seed=seed)
    torch.manual_seed(seed)
    model = Seq2SeqTransformer(config, fixture.src_vocab_size, fixture.tgt_vocab_size).double()
    model.eval()

    def loss_value() -> Tensor:
        logits = model(fixture.src, fixture.tgt_in)
        return sequence_loss(logits, fixture.tgt_out, label_smoothing=config.label_smoothing)

    model.zero_grad()
    loss_value().backward()
    analytic = {
        name: p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p)
        for name, p in model.named_parameters()
    }
    result = GradCheckResult(grad_norm=float(torch.sqrt(sum((g**2).sum() for g in analytic.values()))))

    rng = np.random.default_rng(seed)
    with torch.no_grad():
        for name, param in model.named_parameters():
            flat = param.view(-1)
            indices = np.arange(flat.numel())
            if max_entries_per_tensor is not None and flat.numel() > max_entries_per_tensor:
                indices = rng.choice(flat.numel(), size=max_entries_per_tensor, replace=False)
            worst = 0.0
            grad = analytic[name].view(-1)
            for index in indices:
                original = float(flat[index])
                flat[index] = original + h
                plus = float(loss_value())
                flat[index] = original - h
                minus = float(loss_value())
                flat[index] = original
                worst = max(worst, relative_error(float(grad[index]), (plus - minus) / (2 * h)))
            result.per_parameter[name] = worst
            result.checked_entries += len(indices)
            result.max_rel_error = max(result.max_rel_error, worst)

    logger.info(
        "grad_check_finished",
        max_rel_error=result.max_rel_error,
        checked_entries=result.checked_entries,
        parameters=len(result.per_parameter),
    )
    return result

"""Tests for aumos_dubbing.core.model.transformer.

Covers:
- Token loss: uniform logits give ln V, correct one-hot logits give zero, PAD positions are ignored,
  empty batches give zero
- Token loss against a scalar computation and equal weight for every token class
- Output shapes and input validation
- Source padding does not change decoder outputs
- Decoder causality
- Batch-order equivariance
"""
from __future__ import annotations

import math

import pytest
import torch

from aumos_dubbing.core.codec import BOS_ID, EOS_ID, PAD_ID
from aumos_dubbing.core.config import ModelConfig
from aumos_dubbing.core.model.transformer import Seq2SeqTransformer, sequence_loss
from aumos_dubbing.errors import StructuralInputError

SRC_V = 20
TGT_V = 15


def _model(seed: int = 0) -> Seq2SeqTransformer:
    """A tiny model in eval mode."""
    torch.manual_seed(seed)
    config = ModelConfig(enc_layers=2, dec_layers=2, d_model=16, heads=2, d_ffn=32, dropout=0.0, max_positions=32)
    model = Seq2SeqTransformer(config, SRC_V, TGT_V)
    model.eval()
    return model


def _ids(rows: list[list[int]]) -> torch.Tensor:
    """Helper to build a long tensor."""
    return torch.tensor(rows, dtype=torch.long)


class TestSequenceLoss:
    """Masked token cross-entropy."""

    def test_uniform_logits_give_log_vocab(self) -> None:
        """Zero logits put probability 1/V on every token."""
        logits = torch.zeros(3, 5, TGT_V)
        targets = torch.randint(7, TGT_V, (3, 5))
        assert float(sequence_loss(logits, targets)) == pytest.approx(math.log(TGT_V), rel=1e-6)

    def test_pad_positions_are_ignored(self) -> None:
        """Extending targets with PAD leaves the loss unchanged whatever the logits there."""
        torch.manual_seed(1)
        logits = torch.randn(2, 4, TGT_V)
        targets = torch.randint(7, TGT_V, (2, 4))
        padded_logits = torch.cat([logits, 100 * torch.randn(2, 3, TGT_V)], dim=1)
        padded_targets = torch.cat([targets, torch.full((2, 3), PAD_ID)], dim=1)
        assert float(sequence_loss(padded_logits, padded_targets)) == pytest.approx(
            float(sequence_loss(logits, targets)), rel=1e-6
        )

    def test_all_pad_batch_gives_zero_loss_and_gradient(self) -> None:
        """No real tokens, no loss."""
        logits = torch.randn(2, 3, TGT_V, requires_grad=True)
        loss = sequence_loss(logits, torch.full((2, 3), PAD_ID))
        loss.backward()
        assert float(loss) == 0.0
        assert logits.grad is not None
        assert float(logits.grad.abs().sum()) == 0.0

    def test_one_hot_correct_logits_give_zero_loss(self) -> None:
        """A confident correct prediction at every position costs nothing."""
        targets = torch.randint(7, TGT_V, (3, 5))
        logits = 50.0 * torch.nn.functional.one_hot(targets, TGT_V).float()
        assert float(sequence_loss(logits, targets)) < 1e-6

    def test_matches_scalar_computation(self) -> None:
        """Two hand-built positions against -log softmax written out by hand."""
        logits = torch.tensor([[[2.0, -1.0, 0.5, 0.0], [0.3, 0.3, -2.0, 1.5]]], dtype=torch.float64)
        targets = torch.tensor([[2, 3]])
        expected = 0.0
        for position, target in enumerate((2, 3)):
            row = logits[0, position].tolist()
            expected -= row[target] - math.log(sum(math.exp(value) for value in row))
        expected /= 2
        assert float(sequence_loss(logits, targets, pad_id=PAD_ID)) == pytest.approx(expected, abs=1e-9)

    def test_every_token_class_weighs_the_same(self) -> None:
        """Masking one class and recomputing splits the loss by token counts exactly."""
        torch.manual_seed(2)
        logits = torch.randn(4, 6, TGT_V, dtype=torch.float64)
        targets = torch.randint(3, TGT_V, (4, 6))
        durations = targets >= 10
        assert durations.any()
        assert (~durations).any()
        only_durations = targets.masked_fill(~durations, PAD_ID)
        only_others = targets.masked_fill(durations, PAD_ID)
        n_durations = int(durations.sum())
        n_others = int((~durations).sum())
        split = (
            float(sequence_loss(logits, only_durations)) * n_durations
            + float(sequence_loss(logits, only_others)) * n_others
        ) / (n_durations + n_others)
        assert float(sequence_loss(logits, targets)) == pytest.approx(split, abs=1e-12)

    def test_shape_mismatch_raises(self) -> None:
        """Logits and targets must agree on batch and length."""
        with pytest.raises(StructuralInputError):
            sequence_loss(torch.zeros(2, 3, TGT_V), torch.zeros(2, 4, dtype=torch.long))


class TestSeq2SeqTransformer:
    """Shapes, validation and masking."""

    def test_output_shape(self) -> None:
        """Logits are (batch, tgt_len, tgt_vocab)."""
        model = _model()
        src = _ids([[8, 9, EOS_ID], [10, EOS_ID, PAD_ID]])
        tgt = _ids([[BOS_ID, 7, 8, 9], [BOS_ID, 9, PAD_ID, PAD_ID]])
        logits = model(src, tgt)
        assert logits.shape == (2, 4, TGT_V)

    def test_id_outside_vocabulary_raises(self) -> None:
        """Ids must index the embedding table."""
        with pytest.raises(StructuralInputError, match="outside vocabulary"):
            _model()(_ids([[SRC_V]]), _ids([[BOS_ID]]))

    def test_too_long_sequence_raises(self) -> None:
        """Lengths are bounded by max_positions."""
        with pytest.raises(StructuralInputError, match="max_positions"):
            _model()(_ids([[8] * 33]), _ids([[BOS_ID]]))

    def test_one_dimensional_input_raises(self) -> None:
        """Batches are two-dimensional."""
        with pytest.raises(StructuralInputError):
            _model().encode(torch.tensor([8, 9], dtype=torch.long))

    def test_batch_size_mismatch_raises(self) -> None:
        """Source and target batches pair up row by row."""
        with pytest.raises(StructuralInputError):
            _model()(_ids([[8], [9]]), _ids([[BOS_ID]]))

    def test_source_padding_does_not_change_logits(self) -> None:
        """Padding keys are masked in encoder and cross attention."""
        model = _model()
        tgt = _ids([[BOS_ID, 7, 8]])
        with torch.no_grad():
            plain = model(_ids([[8, 9, 10, EOS_ID]]), tgt)
            padded = model(_ids([[8, 9, 10, EOS_ID, PAD_ID, PAD_ID]]), tgt)
        torch.testing.assert_close(plain, padded, rtol=1e-5, atol=1e-5)

    def test_decoder_is_causal(self) -> None:
        """Changing a later target token leaves earlier positions untouched."""
        model = _model()
        src = _ids([[8, 9, EOS_ID]])
        with torch.no_grad():
            first = model(src, _ids([[BOS_ID, 7, 8, 9]]))
            second = model(src, _ids([[BOS_ID, 7, 8, 12]]))
        torch.testing.assert_close(first[:, :3], second[:, :3], rtol=1e-5, atol=1e-5)
        assert not torch.allclose(first[:, 3], second[:, 3])

    def test_batch_permutation_permutes_outputs(self) -> None:
        """Rows are processed independently."""
        model = _model()
        src = _ids([[8, 9, EOS_ID], [11, EOS_ID, PAD_ID], [12, 13, 14]])
        tgt = _ids([[BOS_ID, 7, 8], [BOS_ID, 9, PAD_ID], [BOS_ID, 10, 11]])
        order = torch.tensor([2, 0, 1])
        with torch.no_grad():
            logits = model(src, tgt)
            permuted = model(src[order], tgt[order])
        torch.testing.assert_close(permuted, logits[order], rtol=1e-5, atol=1e-5)

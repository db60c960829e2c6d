"""Encoder-decoder Transformer and its token-level loss.

Built from torch primitives: scaled embeddings plus sinusoidal positions,
multi-head attention, ReLU feed-forward blocks and pre-norm residual layers
with a final LayerNorm on each stack. Padding keys are masked everywhere; the
decoder self-attention is also causal.
"""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from aumos_dubbing.core.codec import PAD_ID
from aumos_dubbing.core.config import ModelConfig
from aumos_dubbing.errors import StructuralInputError

MASKED = -1e9


class MultiHeadAttention(nn.Module):
    """Scaled dot-product attention over ``heads`` parallel projections."""

    def __init__(self, d_model: int, heads: int, dropout: float) -> None:
        super().__init__()
        self.heads = heads
        self.d_head = d_model // heads
        self.q_proj = nn.Linear(d_model, d_model)
        self.k_proj = nn.Linear(d_model, d_model)
        self.v_proj = nn.Linear(d_model, d_model)
        self.out_proj = nn.Linear(d_model, d_model)
        self.dropout = nn.Dropout(dropout)

    def _split(self, x: Tensor) -> Tensor:
        batch, length, _ = x.shape
        return x.view(batch, length, self.heads, self.d_head).transpose(1, 2)

    def forward(self, query: Tensor, key: Tensor, value: Tensor, keep: Tensor) -> Tensor:
        """Attend from ``query`` to ``key``/``value``.

        Args:
            query: (batch, q_len, d_model).
            key: (batch, k_len, d_model).
            value: (batch, k_len, d_model).
            keep: Boolean mask broadcastable to (batch, heads, q_len, k_len); False is masked.
        """
        q, k, v = self._split(self.q_proj(query)), self._split(self.k_proj(key)), self._split(self.v_proj(value))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.d_head)
        scores = scores.masked_fill(~keep, MASKED)
        weights = self.dropout(scores.softmax(dim=-1))
        context = (weights @ v).transpose(1, 2).reshape(query.shape[0], query.shape[1], -1)
        return self.out_proj(context)


class FeedForward(nn.Module):
    """Position-wise two-layer ReLU network."""

    def __init__(self, d_model: int, d_ffn: int, dropout: float) -> None:
        super().__init__()
        self.linear1 = nn.Linear(d_model, d_ffn)
        self.linear2 = nn.Linear(d_ffn, d_model)
        self.dropout = nn.Dropout(dropout)

    def forward(self, x: Tensor) -> Tensor:
        return self.linear2(self.dropout(F.relu(self.linear1(x))))


class SinusoidalPositions(nn.Module):
    """Fixed sine/cosine position encodings up to ``max_positions``."""

    pe: Tensor

    def __init__(self, d_model: int, max_positions: int) -> None:
        super().__init__()
        position = torch.arange(max_positions, dtype=torch.float32).unsqueeze(1)
        div_term = torch.exp(torch.arange(0, d_model, 2, dtype=torch.float32) * (-math.log(10000.0) / d_model))
        pe = torch.zeros(max_positions, d_model)
        pe[:, 0::2] = torch.sin(position * div_term)
        pe[:, 1::2] = torch.cos(position * div_term)[:, : d_model // 2]
        self.register_buffer("pe", pe.unsqueeze(0), persistent=False)

    def forward(self, x: Tensor) -> Tensor:
        return x + self.pe[:, : x.shape[1]].to(x.dtype)


class EncoderLayer(nn.Module):
    """Pre-norm self-attention and feed-forward sublayers."""

    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        self.self_attn = MultiHeadAttention(config.d_model, config.heads, config.dropout)
        self.ffn = FeedForward(config.d_model, config.d_ffn, config.dropout)
        self.norm1 = nn.LayerNorm(config.d_model)
        self.norm2 = nn.LayerNorm(config.d_model)
        self.dropout = nn.Dropout(config.dropout)

    def forward(self, x: Tensor, keep: Tensor) -> Tensor:
        h = self.norm1(x)
        x = x + self.dropout(self.self_attn(h, h, h, keep))
        return x + self.dropout(self.ffn(self.norm2(x)))


class DecoderLayer(nn.Module):
    """Pre-norm causal self-attention, cross-attention and feed-forward sublayers."""

    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        self.self_attn = MultiHeadAttention(config.d_model, config.heads, config.dropout)
        self.cross_attn = MultiHeadAttention(config.d_model, config.heads, config.dropout)
        self.ffn = FeedForward(config.d_model, config.d_ffn, config.dropout)
        self.norm1 = nn.LayerNorm(config.d_model)
        self.norm2 = nn.LayerNorm(config.d_model)
        self.norm3 = nn.LayerNorm(config.d_model)
        self.dropout = nn.Dropout(config.dropout)

    def forward(self, x: Tensor, memory: Tensor, self_keep: Tensor, cross_keep: Tensor) -> Tensor:
        h = self.norm1(x)
        x = x + self.dropout(self.self_attn(h, h, h, self_keep))
        h = self.norm2(x)
        x = x + self.dropout(self.cross_attn(h, memory, memory, cross_keep))
        return x + self.dropout(self.ffn(self.norm3(x)))


class Seq2SeqTransformer(nn.Module):
    """Encoder-decoder over separate source and target vocabularies.

    Args:
        config: Layer counts, widths and dropout.
        src_vocab_size: Source vocabulary size.
        tgt_vocab_size: Target vocabulary size.
    """

    def __init__(self, config: ModelConfig, src_vocab_size: int, tgt_vocab_size: int) -> None:
        super().__init__()
        self.config = config
        self.src_vocab_size = src_vocab_size
        self.tgt_vocab_size = tgt_vocab_size
        self.scale = math.sqrt(config.d_model)
        self.src_embed = nn.Embedding(src_vocab_size, config.d_model, padding_idx=PAD_ID)
        self.tgt_embed = nn.Embedding(tgt_vocab_size, config.d_model, padding_idx=PAD_ID)
        self.positions = SinusoidalPositions(config.d_model, config.max_positions)
        self.encoder_layers = nn.ModuleList(EncoderLayer(config) for _ in range(config.enc_layers))
        self.decoder_layers = nn.ModuleList(DecoderLayer(config) for _ in range(config.dec_layers))
        self.encoder_norm = nn.LayerNorm(config.d_model)
        self.decoder_norm = nn.LayerNorm(config.d_model)
        self.output = nn.Linear(config.d_model, tgt_vocab_size)
        self.dropout = nn.Dropout(config.dropout)

    def _check(self, ids: Tensor, vocab_size: int, side: str) -> None:
        if ids.dim() != 2:
            raise StructuralInputError("token batch must be two-dimensional", side=side, shape=tuple(ids.shape))
        if ids.shape[1] > self.config.max_positions:
            raise StructuralInputError(
                "sequence longer than max_positions", side=side, length=ids.shape[1], limit=self.config.max_positions
            )
        if ids.numel() and (int(ids.min()) < 0 or int(ids.max()) >= vocab_size):
            raise StructuralInputError("token id outside vocabulary", side=side, vocab_size=vocab_size)

    def encode(self, src: Tensor) -> tuple[Tensor, Tensor]:
        """Encode a padded source batch.

        Returns:
            Memory of shape (batch, src_len, d_model) and its key mask (batch, 1, 1, src_len).
        """
        self._check(src, self.src_vocab_size, "source")
        keep = (src != PAD_ID)[:, None, None, :]
        x = self.dropout(self.positions(self.src_embed(src) * self.scale))
        for layer in self.encoder_layers:
            x = layer(x, keep)
        return self.encoder_norm(x), keep

    def decode(self, tgt_in: Tensor, memory: Tensor, memory_keep: Tensor) -> Tensor:
        """Target logits (batch, tgt_len, tgt_vocab) given encoder memory."""
        self._check(tgt_in, self.tgt_vocab_size, "target")
        length = tgt_in.shape[1]
        causal = torch.ones(length, length, dtype=torch.bool, device=tgt_in.device).tril()
        self_keep = causal[None, None, :, :] & (tgt_in != PAD_ID)[:, None, None, :]
        x = self.dropout(self.positions(self.tgt_embed(tgt_in) * self.scale))
        for layer in self.decoder_layers:
            x = layer(x, memory, self_keep, memory_keep)
        return self.output(self.decoder_norm(x))

    def forward(self, src: Tensor, tgt_in: Tensor) -> Tensor:
        """Teacher-forced logits of shape (batch, tgt_len, tgt_vocab)."""
        if src.shape[0] != tgt_in.shape[0]:
            raise StructuralInputError("source and target batch sizes differ", src=src.shape[0], tgt=tgt_in.shape[0])
        memory, keep = self.encode(src)
        return self.decode(tgt_in, memory, keep)


def sequence_loss(logits: Tensor, targets: Tensor, pad_id: int = PAD_ID, label_smoothing: float = 0.0) -> Tensor:
    """Mean token cross-entropy over non-PAD positions.

    Every token class (phonemes, durations, EOW, PAUSE, EOS) has weight 1. A
    batch with no real tokens yields a zero loss with zero gradients.
    """
    if logits.shape[:-1] != targets.shape:
        raise StructuralInputError(
            "logits and targets disagree", logits=tuple(logits.shape), targets=tuple(targets.shape)
        )
    total = F.cross_entropy(
        logits.reshape(-1, logits.shape[-1]),
        targets.reshape(-1),
        ignore_index=pad_id,
        reduction="sum",
        label_smoothing=label_smoothing,
    )
    count = int((targets != pad_id).sum())
    return total / max(count, 1)

"""Pydantic configuration models shared by the core modules.

``Settings`` in ``aumos_dubbing.settings`` nests these models; the core
modules accept them directly so they stay usable without a settings object.
"""

from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class TrainingMode(str, Enum):
    """Source/target format of a training run."""

    STD_MT = "StdMT"  # text -> text
    TXT2PHN = "Txt2Phn"  # text -> phonemes + durations
    TXTD2PHND = "TxtD2PhnD"  # text + duration bins -> phonemes + durations

    @property
    def uses_duration_bins(self) -> bool:
        """True when the source sequence carries DELIM + bin tokens."""
        return self is TrainingMode.TXTD2PHND

    @property
    def predicts_phonemes(self) -> bool:
        """True when the target is the interleaved phoneme/duration format."""
        return self is not TrainingMode.STD_MT


class NoiseMode(str, Enum):
    """How ``NoiseSpec.sigma`` is interpreted."""

    RELATIVE = "relative"  # d * (1 + eps)
    ABSOLUTE = "absolute"  # d + eps, sigma in milliseconds


class ModelConfig(BaseModel):
    """Encoder-decoder hyperparameters and optimisation settings.

    Defaults are the desk-scale preset; ``ModelConfig.base()`` returns the
    base Transformer configuration (6 layers, d_model 512, 8 heads, FFN 2048).
    """

    model_config = ConfigDict(frozen=True)

    enc_layers: int = Field(default=2, ge=1)
    dec_layers: int = Field(default=2, ge=1)
    d_model: int = Field(default=64, ge=2)
    heads: int = Field(default=4, ge=1)
    d_ffn: int = Field(default=256, ge=1)
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    lr: float = Field(default=5e-4, gt=0.0)
    adam_beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    adam_beta2: float = Field(default=0.98, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-9, gt=0.0)
    max_epochs: int = Field(default=60, ge=1)
    batch_size: int = Field(default=32, ge=1)
    beam: int = Field(default=5, ge=1)
    max_decode_len: int = Field(default=200, ge=1)
    label_smoothing: float = Field(default=0.1, ge=0.0, lt=1.0)
    max_positions: int = Field(default=512, ge=8)
    val_beam: int = Field(default=1, ge=1)
    val_max_samples: int = Field(default=200, ge=1)
    seed: int = 1

    @model_validator(mode="after")
    def _heads_divide_d_model(self) -> ModelConfig:
        if self.d_model % self.heads != 0:
            raise ValueError(f"d_model ({self.d_model}) must be divisible by heads ({self.heads})")
        return self

    @classmethod
    def base(cls) -> ModelConfig:
        """Base Transformer configuration for full-scale corpora."""
        return cls(
            enc_layers=6,
            dec_layers=6,
            d_model=512,
            heads=8,
            d_ffn=2048,
            dropout=0.3,
            lr=5e-4,
            max_epochs=200,
            beam=5,
        )

    @classmethod
    def preset(cls, name: str) -> ModelConfig:
        """Return a named preset (``desk`` or ``base``)."""
        if name == "base":
            return cls.base()
        if name == "desk":
            return cls()
        raise ValueError(f"unknown model preset {name!r}")


class NoiseSpec(BaseModel):
    """Gaussian perturbation of source-side segment durations."""

    model_config = ConfigDict(frozen=True)

    sigma: float = Field(default=0.0, ge=0.0)
    oversample: int = Field(default=1, ge=1)
    seed: int = 1
    mode: NoiseMode = NoiseMode.RELATIVE


class VadConfig(BaseModel):
    """Energy VAD parameters; the threshold is relative to the utterance peak RMS."""

    model_config = ConfigDict(frozen=True)

    frame_ms: int = Field(default=10, gt=0)
    threshold_db: float = Field(default=-35.0, lt=0.0)
    min_pause_ms: int = Field(default=300, gt=0)
    min_speech_ms: int = Field(default=100, gt=0)

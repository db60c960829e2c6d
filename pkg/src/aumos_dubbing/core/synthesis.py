"""Native duration prediction for text outputs.

Systems that emit plain text (StdMT) have no predicted phoneme durations, so
their dubs are timed the way a TTS front end would time them: look up each
word's pronunciation and give every phoneme its mean training duration.
"""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from aumos_dubbing.core.models import TrainingRecord
from aumos_dubbing.core.p2w import PronLexicon
from aumos_dubbing.errors import InsufficientDataError


@dataclass(frozen=True)
class PhoneDurationModel:
    """Mean frames per phoneme.

    Attributes:
        mean_frames: Phoneme to mean duration in frames.
        global_mean: Mean over all phones; used for unseen phonemes.
        mean_pron_length: Mean phones per word; used to time unknown words.
    """

    mean_frames: dict[str, float] = field(default_factory=dict)
    global_mean: float = 1.0
    mean_pron_length: float = 1.0

    def to_dict(self) -> dict[str, Any]:
        """JSON form."""
        return {
            "mean_frames": dict(sorted(self.mean_frames.items())),
            "global_mean": self.global_mean,
            "mean_pron_length": self.mean_pron_length,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PhoneDurationModel:
        """Inverse of ``to_dict``."""
        return cls(
            mean_frames={str(k): float(v) for k, v in data["mean_frames"].items()},
            global_mean=float(data["global_mean"]),
            mean_pron_length=float(data["mean_pron_length"]),
        )

    def frames_for(self, phoneme: str) -> float:
        """Mean frames of a phoneme, the global mean when unseen."""
        return self.mean_frames.get(phoneme, self.global_mean)


def fit_phone_durations(records: Iterable[TrainingRecord]) -> PhoneDurationModel:
    """Fit per-phoneme mean durations on training records.

    Raises:
        InsufficientDataError: If the records contain no phones.
    """
    per_phone: dict[str, list[int]] = defaultdict(list)
    word_lengths: list[int] = []
    for record in records:
        for phone in record.target_phones:
            per_phone[phone.phoneme].append(phone.frames)
        word_lengths.extend(len(group) for group in record.words_phonemes())
    if not per_phone:
        raise InsufficientDataError("cannot fit phone durations without phones")
    all_frames = np.concatenate([np.asarray(v, dtype=np.float64) for v in per_phone.values()])
    return PhoneDurationModel(
        mean_frames={ph: float(np.mean(v)) for ph, v in sorted(per_phone.items())},
        global_mean=float(all_frames.mean()),
        mean_pron_length=float(np.mean(word_lengths)),
    )


def estimate_word_frames(words: Sequence[str], lexicon: PronLexicon, model: PhoneDurationModel) -> list[int]:
    """Predicted frames per word, at least one frame each.

    Known words use their most frequent pronunciation; unknown words are
    spelled with ``mean_pron_length`` phones of the global mean duration.
    """
    estimates: list[int] = []
    for word in words:
        pron = lexicon.primary(word)
        if pron is None:
            frames = model.mean_pron_length * model.global_mean
        else:
            frames = sum(model.frames_for(ph) for ph in pron)
        estimates.append(max(1, int(round(frames))))
    return estimates

"""Gaussian perturbation of source-side segment durations.

Force-aligned durations are nearly exact while VAD durations at inference are
not. Training on perturbed durations (and the bins derived from them) makes
the model tolerant of that gap. Only the source side is touched; target
phonemes and frames are never modified.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass

from aumos_dubbing.core.binning import BinBoundaries, assign_bin
from aumos_dubbing.core.config import NoiseMode, NoiseSpec
from aumos_dubbing.core.models import TrainingRecord
from aumos_dubbing.core.seeding import NOISE, stable_hash, substream
from aumos_dubbing.observability import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class NoisyExample:
    """One (possibly perturbed) training example.

    Attributes:
        record: The untouched training record (target side included).
        segment_durations_ms: Source-side durations after perturbation.
        bins: Bin indices recomputed from the perturbed durations.
        draw_index: Copy number within the oversampled stream, 0-based.
    """

    record: TrainingRecord
    segment_durations_ms: tuple[int, ...]
    bins: tuple[int, ...]
    draw_index: int


def perturb_durations(
    seg_ms: Sequence[int],
    spec: NoiseSpec,
    record_id: str,
    draw_index: int,
    frame_ms: int = 10,
) -> list[int]:
    """Apply independent Gaussian noise to every segment duration.

    Relative mode maps ``d -> round(d * (1 + eps))`` with ``eps ~ N(0, sigma^2)``;
    absolute mode maps ``d -> round(d + eps)`` with sigma in milliseconds.
    Results are clamped to at least one frame. The draw is a pure function of
    ``(spec.seed, record_id, draw_index)``.

    Args:
        seg_ms: Positive segment durations in milliseconds.
        spec: Noise parameters.
        record_id: Id of the record the durations belong to.
        draw_index: Copy number, so oversampled copies get independent noise.
        frame_ms: Frame length; the clamp floor.

    Returns:
        Perturbed durations, same length and order as ``seg_ms``.
    """
    if any(d <= 0 for d in seg_ms):
        raise ValueError("segment durations must be positive")
    if spec.sigma == 0:
        return list(seg_ms)

    rng = substream(spec.seed, NOISE, stable_hash(record_id), draw_index)
    eps = rng.normal(0.0, spec.sigma, size=len(seg_ms))
    if spec.mode is NoiseMode.RELATIVE:
        noisy = [d * (1.0 + e) for d, e in zip(seg_ms, eps, strict=True)]
    else:
        noisy = [d + e for d, e in zip(seg_ms, eps, strict=True)]
    return [max(frame_ms, int(round(value))) for value in noisy]


def oversample_records(
    records: Iterable[TrainingRecord],
    spec: NoiseSpec,
    boundaries: BinBoundaries,
    frame_ms: int = 10,
) -> Iterator[NoisyExample]:
    """Emit every record ``spec.oversample`` times with independent perturbations.

    Copies of one record are adjacent in the stream, draw indices 0..oversample-1.
    """
    emitted = 0
    for record in records:
        for draw_index in range(spec.oversample):
            durations = perturb_durations(record.segment_durations_ms, spec, record.id, draw_index, frame_ms)
            yield NoisyExample(
                record=record,
                segment_durations_ms=tuple(durations),
                bins=tuple(assign_bin(d, boundaries) for d in durations),
                draw_index=draw_index,
            )
            emitted += 1
    logger.debug("records_oversampled", examples=emitted, sigma=spec.sigma, oversample=spec.oversample)

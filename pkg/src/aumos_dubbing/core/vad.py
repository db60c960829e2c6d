"""Energy-based voice activity detection.

At inference time the desired segment durations come from the source speech.
Frames whose RMS energy is within ``threshold_db`` of the loudest frame are
speech. Silences shorter than ``min_pause_ms`` between speech are bridged,
then speech runs shorter than ``min_speech_ms`` are dropped. Because the
threshold is relative to the peak, scaling the signal by a positive constant
leaves the segmentation unchanged.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
import numpy.typing as npt

from aumos_dubbing.core.binning import BinBoundaries, assign_bin
from aumos_dubbing.core.config import VadConfig
from aumos_dubbing.core.models import Segment
from aumos_dubbing.errors import AudioFormatError, InsufficientDataError
from aumos_dubbing.observability import get_logger

logger = get_logger(__name__)

SUPPORTED_RATES: frozenset[int] = frozenset({16000, 22050, 44100, 48000})


def _runs(mask: npt.NDArray[np.bool_]) -> list[tuple[bool, int, int]]:
    """Maximal runs of equal values as ``(value, start, end)``, end exclusive."""
    if mask.size == 0:
        return []
    edges = np.flatnonzero(mask[1:] != mask[:-1]) + 1
    starts = np.concatenate(([0], edges))
    ends = np.concatenate((edges, [mask.size]))
    return [(bool(mask[s]), int(s), int(e)) for s, e in zip(starts, ends, strict=True)]


def frame_energies_db(samples: npt.NDArray[np.int16], rate_hz: int, frame_ms: int) -> npt.NDArray[np.float64]:
    """Per-frame RMS level in dB relative to the loudest frame (``-inf`` for digital silence).

    Frame i covers samples ``[floor(i * rate * frame_ms / 1000), floor((i + 1) * ...))``
    so frame times are exact multiples of ``frame_ms`` at every supported rate.
    """
    samples_per_frame = rate_hz * frame_ms / 1000.0
    n_frames = max(1, math.ceil(samples.size / samples_per_frame))
    starts = np.floor(np.arange(n_frames) * samples_per_frame).astype(np.int64)
    starts = starts[starts < samples.size]
    lengths = np.diff(np.concatenate((starts, [samples.size])))
    power = np.add.reduceat(samples.astype(np.float64) ** 2, starts) / lengths
    rms = np.sqrt(power)
    peak = rms.max()
    if peak == 0.0:
        return np.full(rms.shape, -np.inf)
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(rms / peak)


def detect_segments(samples: npt.NDArray[np.int16], rate_hz: int, cfg: VadConfig | None = None) -> list[Segment]:
    """Find speech segments in mono 16-bit PCM audio.

    Args:
        samples: One-dimensional int16 samples.
        rate_hz: Sample rate, one of 16000, 22050, 44100 or 48000.
        cfg: Detector parameters; defaults apply when omitted.

    Returns:
        Ordered speech segments; empty for silent audio.

    Raises:
        AudioFormatError: On an unsupported rate, dtype or channel layout, or empty audio.
    """
    cfg = cfg or VadConfig()
    if rate_hz not in SUPPORTED_RATES:
        raise AudioFormatError("unsupported sample rate", rate_hz=rate_hz)
    if samples.dtype != np.int16 or samples.ndim != 1:
        raise AudioFormatError("expected mono 16-bit PCM", dtype=str(samples.dtype), shape=samples.shape)
    if samples.size == 0:
        raise AudioFormatError("audio has no samples")

    levels = frame_energies_db(samples, rate_hz, cfg.frame_ms)
    speech = levels > cfg.threshold_db
    if not speech.any():
        return []

    min_pause = math.ceil(cfg.min_pause_ms / cfg.frame_ms)
    for value, start, end in _runs(speech):
        if not value and start > 0 and end < speech.size and end - start < min_pause:
            speech[start:end] = True

    min_speech = math.ceil(cfg.min_speech_ms / cfg.frame_ms)
    for value, start, end in _runs(speech):
        if value and end - start < min_speech:
            speech[start:end] = False

    total_ms = int(round(samples.size * 1000 / rate_hz))
    segments: list[Segment] = []
    for value, start, end in _runs(speech):
        if value:
            start_ms, end_ms = start * cfg.frame_ms, min(end * cfg.frame_ms, total_ms)
            segments.append(Segment(start_ms=start_ms, end_ms=end_ms, duration_ms=end_ms - start_ms))
    logger.debug("vad_segments", count=len(segments), audio_ms=total_ms)
    return segments


def segments_to_bins(segments: Sequence[Segment], boundaries: BinBoundaries) -> list[int]:
    """Bin index of every segment duration, in segment order.

    Raises:
        InsufficientDataError: If there are no segments (nothing to dub).
    """
    if not segments:
        raise InsufficientDataError("no speech segments to dub")
    return [assign_bin(segment.duration_ms, boundaries) for segment in segments]

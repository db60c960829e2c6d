"""RIFF WAV input for the VAD, via scipy."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import numpy.typing as npt
from scipy.io import wavfile

from aumos_dubbing.core.vad import SUPPORTED_RATES
from aumos_dubbing.errors import AudioFormatError


def read_wav(path: Path) -> tuple[npt.NDArray[np.int16], int]:
    """Load 16-bit mono PCM.

    Returns:
        Samples and sample rate.

    Raises:
        AudioFormatError: If the file is unreadable, not 16-bit, not mono, or at an unsupported rate.
    """
    try:
        rate, data = wavfile.read(path)
    except (ValueError, OSError) as exc:
        raise AudioFormatError("cannot read WAV file", path=str(path), error=str(exc)) from exc
    if data.dtype != np.int16:
        raise AudioFormatError("WAV is not 16-bit PCM", path=str(path), dtype=str(data.dtype))
    if data.ndim != 1:
        raise AudioFormatError("WAV is not mono", path=str(path), channels=int(data.shape[1]))
    if rate not in SUPPORTED_RATES:
        raise AudioFormatError("unsupported sample rate", path=str(path), rate_hz=int(rate))
    return data, int(rate)


def write_wav(path: Path, samples: npt.NDArray[np.int16], rate_hz: int) -> None:
    """Write 16-bit mono PCM."""
    path.parent.mkdir(parents=True, exist_ok=True)
    wavfile.write(path, rate_hz, samples.astype(np.int16))

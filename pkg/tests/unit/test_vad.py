"""Tests for aumos_dubbing.core.vad and the WAV adapter.

Covers:
- Two tones separated by a long silence give two segments at the right times
- Segmentation is invariant to gain
- Short dips are bridged; short bursts are dropped
- Silent audio gives no segments
- Joining two clips with a long silence gives the union of their segments
- Input validation (rate, dtype, channels, empty audio)
- Segment-to-bin mapping and WAV file round trip
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import numpy.typing as npt
import pytest

from aumos_dubbing.adapters.wav import read_wav, write_wav
from aumos_dubbing.core.binning import BinBoundaries
from aumos_dubbing.core.config import VadConfig
from aumos_dubbing.core.models import Segment
from aumos_dubbing.core.vad import detect_segments, segments_to_bins
from aumos_dubbing.errors import AudioFormatError, InsufficientDataError

RATE = 16000


def _tone(ms: int, rate: int = RATE, amplitude: float = 8000.0) -> npt.NDArray[np.float64]:
    """A 440 Hz sine of the given length."""
    t = np.arange(int(rate * ms / 1000)) / rate
    return amplitude * np.sin(2 * np.pi * 440.0 * t)


def _silence(ms: int, rate: int = RATE) -> npt.NDArray[np.float64]:
    """Digital silence of the given length."""
    return np.zeros(int(rate * ms / 1000))


def _pcm(*parts: npt.NDArray[np.float64], gain: float = 1.0) -> npt.NDArray[np.int16]:
    """Concatenate parts, scale and convert to int16."""
    return np.round(np.concatenate(parts) * gain).astype(np.int16)


def _two_tones(rate: int = RATE) -> list[npt.NDArray[np.float64]]:
    """Lead-in, 600 ms tone, 500 ms gap, 700 ms tone, tail."""
    return [_silence(200, rate), _tone(600, rate), _silence(500, rate), _tone(700, rate), _silence(300, rate)]


def _alternating(lengths_ms: tuple[int, ...]) -> npt.NDArray[np.float64]:
    """Silence, tone, silence, ... with the given lengths."""
    parts = [_tone(ms) if i % 2 else _silence(ms) for i, ms in enumerate(lengths_ms)]
    return np.concatenate(parts)


class TestDetectSegments:
    """Energy-based speech detection."""

    def test_two_tones_give_two_segments(self) -> None:
        """Segment edges are within 30 ms of the tone edges."""
        segments = detect_segments(_pcm(*_two_tones()), RATE)
        assert len(segments) == 2
        expected = [(200, 800), (1300, 2000)]
        for segment, (start, end) in zip(segments, expected):
            assert abs(segment.start_ms - start) <= 30
            assert abs(segment.end_ms - end) <= 30
            assert segment.duration_ms == segment.end_ms - segment.start_ms
            assert segment.phone_range is None

    @pytest.mark.parametrize("gain", [0.25, 4.0])
    def test_gain_invariance(self, gain: float) -> None:
        """Scaling the signal leaves the segmentation unchanged."""
        reference = detect_segments(_pcm(*_two_tones()), RATE)
        assert detect_segments(_pcm(*_two_tones(), gain=gain), RATE) == reference

    def test_short_dip_is_bridged(self) -> None:
        """A 200 ms silence is below the 300 ms minimum pause."""
        samples = _pcm(_silence(100), _tone(500), _silence(200), _tone(500), _silence(100))
        segments = detect_segments(samples, RATE)
        assert len(segments) == 1
        assert abs(segments[0].duration_ms - 1200) <= 30

    def test_short_burst_is_dropped(self) -> None:
        """Speech shorter than min_speech_ms is not a segment."""
        samples = _pcm(_silence(500), _tone(50), _silence(500), _tone(600), _silence(200))
        segments = detect_segments(samples, RATE)
        assert len(segments) == 1
        assert abs(segments[0].start_ms - 1050) <= 30

    @pytest.mark.parametrize(
        ("first", "second"),
        [
            ((100, 400, 400, 300, 100), (100, 500, 100)),
            ((0, 700, 200), (300, 200, 500, 600, 0)),
            ((250, 350, 50), (0, 900, 150)),
        ],
    )
    def test_concatenation_gives_union(self, first: tuple[int, ...], second: tuple[int, ...]) -> None:
        """Two clips joined by a long silence segment like the clips did on their own."""
        clip_a = _alternating(first)
        clip_b = _alternating(second)
        gap_ms = 500
        offset = len(clip_a) * 1000 // RATE + gap_ms
        joined = detect_segments(_pcm(clip_a, _silence(gap_ms), clip_b), RATE)
        expected = [(s.start_ms, s.end_ms) for s in detect_segments(_pcm(clip_a), RATE)] + [
            (s.start_ms + offset, s.end_ms + offset) for s in detect_segments(_pcm(clip_b), RATE)
        ]
        assert len(joined) == len(expected)
        frame_ms = VadConfig().frame_ms
        for segment, (start, end) in zip(joined, expected, strict=True):
            assert abs(segment.start_ms - start) <= frame_ms
            assert abs(segment.end_ms - end) <= frame_ms

    def test_silence_gives_no_segments(self) -> None:
        """Digital silence has no speech."""
        assert detect_segments(_pcm(_silence(1000)), RATE) == []

    @pytest.mark.parametrize("rate", [22050, 44100, 48000])
    def test_other_rates(self, rate: int) -> None:
        """Every supported rate gives the same two segments."""
        segments = detect_segments(_pcm(*_two_tones(rate)), rate)
        assert len(segments) == 2
        assert abs(segments[1].end_ms - 2000) <= 30

    def test_custom_min_pause(self) -> None:
        """A longer minimum pause merges the two tones."""
        segments = detect_segments(_pcm(*_two_tones()), RATE, VadConfig(min_pause_ms=600))
        assert len(segments) == 1

    def test_unsupported_rate_raises(self) -> None:
        """Only the listed sample rates are accepted."""
        with pytest.raises(AudioFormatError):
            detect_segments(_pcm(_tone(100)), 8000)

    def test_wrong_dtype_raises(self) -> None:
        """Samples must be int16."""
        with pytest.raises(AudioFormatError):
            detect_segments(_tone(100).astype(np.float32), RATE)  # type: ignore[arg-type]

    def test_stereo_raises(self) -> None:
        """Samples must be one-dimensional."""
        stereo = np.zeros((100, 2), dtype=np.int16)
        with pytest.raises(AudioFormatError):
            detect_segments(stereo, RATE)

    def test_empty_audio_raises(self) -> None:
        """There must be at least one sample."""
        with pytest.raises(AudioFormatError):
            detect_segments(np.zeros(0, dtype=np.int16), RATE)


class TestSegmentsToBins:
    """Mapping VAD segments to source bin indices."""

    def test_bins_in_segment_order(self) -> None:
        """Each segment duration maps through the boundaries."""
        boundaries = BinBoundaries(k=4, cuts=(300.0, 700.0, 1200.0), fitted_on=100)
        segments = [Segment(0, 600, 600), Segment(900, 2400, 1500), Segment(2500, 2700, 200)]
        assert segments_to_bins(segments, boundaries) == [1, 3, 0]

    def test_no_segments_raise(self) -> None:
        """Nothing to dub."""
        boundaries = BinBoundaries(k=2, cuts=(300.0,), fitted_on=10)
        with pytest.raises(InsufficientDataError):
            segments_to_bins([], boundaries)


class TestWavAdapter:
    """Reading and writing 16-bit mono PCM."""

    def test_round_trip(self, tmp_path: Path) -> None:
        """write_wav then read_wav returns the samples and rate."""
        samples = _pcm(*_two_tones())
        path = tmp_path / "speech.wav"
        write_wav(path, samples, RATE)
        loaded, rate = read_wav(path)
        assert rate == RATE
        np.testing.assert_array_equal(loaded, samples)

    def test_unsupported_rate_raises(self, tmp_path: Path) -> None:
        """8 kHz files are rejected on read."""
        path = tmp_path / "low.wav"
        write_wav(path, _pcm(_tone(100, rate=8000)), 8000)
        with pytest.raises(AudioFormatError):
            read_wav(path)

    def test_missing_file_raises(self, tmp_path: Path) -> None:
        """Unreadable files are audio format errors."""
        with pytest.raises(AudioFormatError):
            read_wav(tmp_path / "absent.wav")

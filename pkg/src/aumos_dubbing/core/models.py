"""Domain types for duration-annotated translation data.

Times are integer milliseconds throughout; target durations are integer
frames of ``frame_ms`` milliseconds. All types are immutable so pipelines can
fan out over utterances without shared mutable state.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class PhoneEvent:
    """One force-aligned phone.

    Attributes:
        label: ARPAbet-style symbol, stress digit allowed (e.g. ``EH1``).
        start_ms: Phone onset in milliseconds.
        end_ms: Phone offset in milliseconds (exclusive).
        word_idx: Index of the target word this phone belongs to.
    """

    label: str
    start_ms: int
    end_ms: int
    word_idx: int

    @property
    def duration_ms(self) -> int:
        """Phone duration in milliseconds."""
        return self.end_ms - self.start_ms


@dataclass(frozen=True)
class AlignedUtterance:
    """Training triplet: source text, target words and time-stamped target phones."""

    id: str
    source_text: str
    target_words: tuple[str, ...]
    phones: tuple[PhoneEvent, ...]


@dataclass(frozen=True)
class Segment:
    """A contiguous stretch of speech between pauses.

    Attributes:
        start_ms: Onset of the first phone (or first speech frame for VAD segments).
        end_ms: Offset of the last phone (or last speech frame).
        duration_ms: Voiced duration; for aligned segments the sum of phone durations.
        phone_range: Half-open index range into the utterance phones; None for VAD segments.
    """

    start_ms: int
    end_ms: int
    duration_ms: int
    phone_range: tuple[int, int] | None = None


@dataclass(frozen=True)
class TargetPhone:
    """A target phone quantized to frames."""

    phoneme: str
    frames: int
    word_idx: int


@dataclass(frozen=True)
class TrainingRecord:
    """One training example after segmentation and frame quantization.

    Attributes:
        id: Utterance id.
        source_text: Source-language text.
        segment_durations_ms: Voiced duration of each target segment, in order.
        target_phones: Quantized phones with their word index.
        segment_breaks: Phone indices at which a new segment starts (one per pause).
        target_words: Target transcript words, used for text references and StdMT.
    """

    id: str
    source_text: str
    segment_durations_ms: tuple[int, ...]
    target_phones: tuple[TargetPhone, ...]
    segment_breaks: tuple[int, ...] = ()
    target_words: tuple[str, ...] = ()

    @property
    def pause_count(self) -> int:
        """Number of pauses, i.e. segment count minus one."""
        return len(self.segment_durations_ms) - 1

    def words_phonemes(self) -> list[list[str]]:
        """Phoneme symbols grouped by target word."""
        groups: list[list[str]] = []
        current = -1
        for phone in self.target_phones:
            if phone.word_idx != current:
                groups.append([])
                current = phone.word_idx
            groups[-1].append(phone.phoneme)
        return groups


@dataclass(frozen=True)
class PauseStats:
    """Pause statistics over a set of records, one row per pause-count bucket."""

    samples: int
    with_one_plus: int
    with_two_plus: int
    label: str = "all"

    @property
    def pct_one_plus(self) -> float:
        """Percentage of records with at least one pause."""
        return 100.0 * self.with_one_plus / self.samples

    @property
    def pct_two_plus(self) -> float:
        """Percentage of records with at least two pauses."""
        return 100.0 * self.with_two_plus / self.samples


@dataclass(frozen=True)
class RecordSplits:
    """Deterministic train/valid/test partition of training records."""

    train: tuple[TrainingRecord, ...]
    valid: tuple[TrainingRecord, ...]
    test: tuple[TrainingRecord, ...]

    def items(self) -> list[tuple[str, tuple[TrainingRecord, ...]]]:
        """Split name and records, in train/valid/test order."""
        return [("train", self.train), ("valid", self.valid), ("test", self.test)]


@dataclass
class RepairCounts:
    """Repairs applied while decoding malformed model output."""

    missing_duration: int = 0
    dangling_duration: int = 0
    unknown_token: int = 0
    missing_eow: int = 0
    stray_marker: int = 0

    @property
    def total(self) -> int:
        """Sum of all repair counters."""
        return (
            self.missing_duration + self.dangling_duration + self.unknown_token + self.missing_eow + self.stray_marker
        )

    def as_dict(self) -> dict[str, int]:
        """Counters as a plain dict for JSON output."""
        return {
            "missing_duration": self.missing_duration,
            "dangling_duration": self.dangling_duration,
            "unknown_token": self.unknown_token,
            "missing_eow": self.missing_eow,
            "stray_marker": self.stray_marker,
        }


@dataclass
class DecodedTarget:
    """Structured view of an interleaved target sequence.

    Attributes:
        words: Per word, the list of ``(phoneme, frames)`` pairs.
        segment_breaks: Word indices at which a new segment starts.
        repairs: Repairs applied during decoding.
    """

    words: list[list[tuple[str, int]]] = field(default_factory=list)
    segment_breaks: list[int] = field(default_factory=list)
    repairs: RepairCounts = field(default_factory=RepairCounts)

    @property
    def phone_count(self) -> int:
        """Total number of phones across words."""
        return sum(len(word) for word in self.words)

    def segment_word_ranges(self) -> list[tuple[int, int]]:
        """Half-open word index ranges of each segment."""
        bounds = [0, *self.segment_breaks, len(self.words)]
        return [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]

    def segment_frames(self) -> list[int]:
        """Sum of frames per segment."""
        return [
            sum(frames for word in self.words[start:end] for _, frames in word)
            for start, end in self.segment_word_ranges()
        ]

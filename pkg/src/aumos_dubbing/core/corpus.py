"""Training-data derivation from forced alignments.

Pipeline per utterance:
1. Validate the alignment (sorted, non-overlapping phones; every word voiced).
2. Detect pauses: inter-phone gaps of at least ``threshold_ms`` (default 300 ms).
3. Partition the phones into segments at the pauses; each segment's duration is
   the sum of its phone durations, pause time excluded.
4. Quantize phone durations to frames and emit a TrainingRecord.

Every function is pure and works on a single utterance, so callers may map
them over a corpus in any order or in parallel.
"""

from __future__ import annotations

import hashlib
import math
from collections.abc import Iterable, Sequence

from aumos_dubbing.core.models import (
    AlignedUtterance,
    PauseStats,
    PhoneEvent,
    RecordSplits,
    Segment,
    TargetPhone,
    TrainingRecord,
)
from aumos_dubbing.errors import InsufficientDataError, StructuralInputError
from aumos_dubbing.observability import get_logger

logger = get_logger(__name__)

DEFAULT_PAUSE_THRESHOLD_MS = 300
DEFAULT_FRAME_MS = 10


def _check_phone_order(phones: Sequence[PhoneEvent]) -> None:
    for index, phone in enumerate(phones):
        if phone.start_ms < 0 or phone.end_ms <= phone.start_ms:
            raise StructuralInputError(
                "phone has non-positive duration or negative onset",
                phone_index=index,
                start_ms=phone.start_ms,
                end_ms=phone.end_ms,
            )
        if index and phone.start_ms < phones[index - 1].end_ms:
            raise StructuralInputError(
                "phones are unsorted or overlapping",
                phone_index=index,
                previous_end_ms=phones[index - 1].end_ms,
                start_ms=phone.start_ms,
            )


def validate_utterance(utt: AlignedUtterance) -> None:
    """Check every AlignedUtterance invariant.

    Args:
        utt: Utterance to validate.

    Raises:
        StructuralInputError: If phones are unsorted/overlapping, a word index is
            out of range or decreasing, or a target word owns no phone.
    """
    if not utt.phones:
        raise StructuralInputError("utterance has no phones", utterance_id=utt.id)
    try:
        _check_phone_order(utt.phones)
    except StructuralInputError as exc:
        exc.context["utterance_id"] = utt.id
        raise

    previous = 0
    for index, phone in enumerate(utt.phones):
        if not 0 <= phone.word_idx < len(utt.target_words):
            raise StructuralInputError(
                "word_idx out of range",
                utterance_id=utt.id,
                phone_index=index,
                word_idx=phone.word_idx,
            )
        if phone.word_idx < previous:
            raise StructuralInputError(
                "word_idx decreases along the phone list",
                utterance_id=utt.id,
                phone_index=index,
            )
        previous = phone.word_idx

    voiced = {phone.word_idx for phone in utt.phones}
    silent = [i for i in range(len(utt.target_words)) if i not in voiced]
    if silent:
        raise StructuralInputError("target words without phones", utterance_id=utt.id, word_indices=silent)


def detect_pauses(phones: Sequence[PhoneEvent], threshold_ms: int) -> list[tuple[int, int]]:
    """Return every inter-phone gap of at least ``threshold_ms``.

    Leading and trailing silence is never a pause: only gaps strictly between
    the first phone's onset and the last phone's offset are considered. A gap
    exactly equal to the threshold counts.

    Args:
        phones: Phones sorted by onset, non-overlapping.
        threshold_ms: Minimum silence length, must be positive.

    Returns:
        ``(gap_start_ms, gap_end_ms)`` tuples in time order.

    Raises:
        StructuralInputError: On unsorted or overlapping phones.
        ValueError: If ``threshold_ms`` is not positive.
    """
    if threshold_ms <= 0:
        raise ValueError(f"threshold_ms must be positive, got {threshold_ms}")
    if not phones:
        return []
    _check_phone_order(phones)
    return [
        (left.end_ms, right.start_ms)
        for left, right in zip(phones, phones[1:], strict=False)
        if right.start_ms - left.end_ms >= threshold_ms
    ]


def segment_utterance(utt: AlignedUtterance, threshold_ms: int = DEFAULT_PAUSE_THRESHOLD_MS) -> list[Segment]:
    """Partition an utterance's phones into segments at detected pauses.

    Args:
        utt: A valid aligned utterance.
        threshold_ms: Pause threshold in milliseconds.

    Returns:
        Ordered, disjoint segments covering every phone exactly once.

    Raises:
        StructuralInputError: On invalid alignments, or when a pause falls
            inside a word (pauses are only accepted at word boundaries).
    """
    validate_utterance(utt)
    pauses = set(detect_pauses(utt.phones, threshold_ms))

    segments: list[Segment] = []
    first = 0
    for index in range(1, len(utt.phones)):
        left, right = utt.phones[index - 1], utt.phones[index]
        if (left.end_ms, right.start_ms) not in pauses:
            continue
        if left.word_idx == right.word_idx:
            raise StructuralInputError(
                "pause inside a word",
                utterance_id=utt.id,
                word=utt.target_words[left.word_idx],
                gap_start_ms=left.end_ms,
            )
        segments.append(_make_segment(utt.phones, first, index))
        first = index
    segments.append(_make_segment(utt.phones, first, len(utt.phones)))
    return segments


def _make_segment(phones: Sequence[PhoneEvent], start: int, end: int) -> Segment:
    span = phones[start:end]
    return Segment(
        start_ms=span[0].start_ms,
        end_ms=span[-1].end_ms,
        duration_ms=sum(phone.duration_ms for phone in span),
        phone_range=(start, end),
    )


def quantize_frames(duration_ms: int, frame_ms: int = DEFAULT_FRAME_MS) -> int:
    """Round a duration to frames (half up), with a floor of one frame."""
    return max(1, math.floor(duration_ms / frame_ms + 0.5))


def build_training_record(
    utt: AlignedUtterance,
    segments: Sequence[Segment],
    frame_ms: int = DEFAULT_FRAME_MS,
) -> TrainingRecord:
    """Quantize phone durations and attach segment durations and breaks.

    Args:
        utt: The utterance the segments were computed from.
        segments: Output of ``segment_utterance`` for ``utt``.
        frame_ms: Frame length in milliseconds.

    Returns:
        A TrainingRecord with one segment break per pause.
    """
    if frame_ms <= 0:
        raise ValueError(f"frame_ms must be positive, got {frame_ms}")
    if not segments:
        raise InsufficientDataError("no segments for utterance", utterance_id=utt.id)

    target = tuple(
        TargetPhone(phoneme=phone.label, frames=quantize_frames(phone.duration_ms, frame_ms), word_idx=phone.word_idx)
        for phone in utt.phones
    )
    breaks = tuple(segment.phone_range[0] for segment in segments[1:] if segment.phone_range is not None)
    return TrainingRecord(
        id=utt.id,
        source_text=utt.source_text,
        segment_durations_ms=tuple(segment.duration_ms for segment in segments),
        target_phones=target,
        segment_breaks=breaks,
        target_words=utt.target_words,
    )


def corpus_stats(records: Sequence[TrainingRecord], label: str = "all") -> PauseStats:
    """Count records with one or more and two or more pauses.

    Raises:
        InsufficientDataError: On an empty record set.
    """
    if not records:
        raise InsufficientDataError("cannot compute pause statistics on an empty corpus", label=label)
    return PauseStats(
        samples=len(records),
        with_one_plus=sum(1 for record in records if record.pause_count >= 1),
        with_two_plus=sum(1 for record in records if record.pause_count >= 2),
        label=label,
    )


def pause_counts_by_threshold(
    utterances: Iterable[AlignedUtterance],
    thresholds: Sequence[int],
) -> dict[int, PauseStats]:
    """Pause statistics of the same utterances under several thresholds."""
    utterances = list(utterances)
    if not utterances:
        raise InsufficientDataError("cannot analyze an empty corpus")
    result: dict[int, PauseStats] = {}
    for threshold in thresholds:
        counts = [len(detect_pauses(utt.phones, threshold)) for utt in utterances]
        result[threshold] = PauseStats(
            samples=len(counts),
            with_one_plus=sum(1 for count in counts if count >= 1),
            with_two_plus=sum(1 for count in counts if count >= 2),
            label=f"{threshold}ms",
        )
    return result


def _split_bucket(record_id: str, seed: int) -> float:
    digest = hashlib.blake2b(f"{seed}:{record_id}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2**64


def split_records(
    records: Iterable[TrainingRecord],
    valid_fraction: float = 0.05,
    test_fraction: float = 0.05,
    seed: int = 1,
) -> RecordSplits:
    """Hash-split records into train/valid/test.

    The bucket of a record depends only on ``(seed, id)``, so the split is
    independent of input order. Each split keeps input order.
    """
    if valid_fraction < 0 or test_fraction < 0 or valid_fraction + test_fraction >= 1:
        raise ValueError("split fractions must be non-negative and sum to less than 1")
    train: list[TrainingRecord] = []
    valid: list[TrainingRecord] = []
    test: list[TrainingRecord] = []
    for record in records:
        bucket = _split_bucket(record.id, seed)
        if bucket < test_fraction:
            test.append(record)
        elif bucket < test_fraction + valid_fraction:
            valid.append(record)
        else:
            train.append(record)
    logger.debug("records_split", train=len(train), valid=len(valid), test=len(test), seed=seed)
    return RecordSplits(train=tuple(train), valid=tuple(valid), test=tuple(test))


def render_pause_table(stats: Sequence[PauseStats]) -> str:
    """Plain-text pause statistics, one row per split or threshold."""
    header = f"{'Set':<10} {'Samples':>8} {'1+ pauses':>10} {'%':>6} {'2+ pauses':>10} {'%':>6}"
    lines = [header, "-" * len(header)]
    for row in stats:
        lines.append(
            f"{row.label:<10} {row.samples:>8} {row.with_one_plus:>10} {row.pct_one_plus:>6.1f} "
            f"{row.with_two_plus:>10} {row.pct_two_plus:>6.1f}"
        )
    return "\n".join(lines) + "\n"

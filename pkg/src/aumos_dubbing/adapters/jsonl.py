"""JSON-lines schemas and readers/writers for alignments, records and hypotheses."""

from __future__ import annotations

import json
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path
from typing import Any, TypeVar

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from aumos_dubbing.core.models import AlignedUtterance, PhoneEvent, TargetPhone, TrainingRecord
from aumos_dubbing.observability import get_logger

logger = get_logger(__name__)

RowT = TypeVar("RowT", bound=BaseModel)


# ─────────────────────────────────────────────
# Row schemas
# ─────────────────────────────────────────────


class PhoneRow(BaseModel):
    """One aligned phone: ``{"ph", "start_ms", "end_ms", "word_idx"}``."""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    label: str = Field(alias="ph", min_length=1)
    start_ms: int
    end_ms: int
    word_idx: int = Field(ge=0)


class AlignmentRow(BaseModel):
    """One line of the alignment input file."""

    model_config = ConfigDict(extra="forbid")

    id: str = Field(min_length=1)
    source_text: str
    target_words: list[str]
    phones: list[PhoneRow]


class RecordRow(BaseModel):
    """One line of a training-record file; ``tgt`` rows are ``[phoneme, frames, word_idx]``."""

    model_config = ConfigDict(extra="forbid")

    id: str = Field(min_length=1)
    src: str
    seg_ms: list[int] = Field(min_length=1)
    tgt: list[tuple[str, int, int]]
    seg_breaks: list[int] = Field(default_factory=list)
    tgt_words: list[str] = Field(default_factory=list)


class TranslateInputRow(BaseModel):
    """Translation request: source text plus durations or a WAV path."""

    model_config = ConfigDict(extra="forbid")

    id: str = Field(min_length=1)
    src: str
    seg_ms: list[int] | None = None
    wav: str | None = None


class HypothesisRow(BaseModel):
    """One translated line.

    ``phones`` and ``frames`` are grouped per output word; ``seg_ms_pred`` is
    the virtual-synthesizer timing per predicted segment.
    """

    model_config = ConfigDict(extra="forbid")

    id: str
    words: list[str]
    phones: list[list[str]]
    frames: list[list[int]]
    seg_ms_pred: list[int]
    seg_ms_src: list[int]
    truncated: bool = False
    repairs: dict[str, int] = Field(default_factory=dict)


# ─────────────────────────────────────────────
# Domain conversions
# ─────────────────────────────────────────────


def utterance_from_row(row: AlignmentRow) -> AlignedUtterance:
    """AlignmentRow to AlignedUtterance."""
    return AlignedUtterance(
        id=row.id,
        source_text=row.source_text,
        target_words=tuple(row.target_words),
        phones=tuple(
            PhoneEvent(label=p.label, start_ms=p.start_ms, end_ms=p.end_ms, word_idx=p.word_idx) for p in row.phones
        ),
    )


def row_from_utterance(utt: AlignedUtterance) -> AlignmentRow:
    """AlignedUtterance to its interchange row."""
    return AlignmentRow(
        id=utt.id,
        source_text=utt.source_text,
        target_words=list(utt.target_words),
        phones=[
            PhoneRow(label=p.label, start_ms=p.start_ms, end_ms=p.end_ms, word_idx=p.word_idx) for p in utt.phones
        ],
    )


def record_from_row(row: RecordRow) -> TrainingRecord:
    """RecordRow to TrainingRecord."""
    return TrainingRecord(
        id=row.id,
        source_text=row.src,
        segment_durations_ms=tuple(row.seg_ms),
        target_phones=tuple(TargetPhone(phoneme=ph, frames=frames, word_idx=w) for ph, frames, w in row.tgt),
        segment_breaks=tuple(row.seg_breaks),
        target_words=tuple(row.tgt_words),
    )


def row_from_record(record: TrainingRecord) -> RecordRow:
    """TrainingRecord to its file row."""
    return RecordRow(
        id=record.id,
        src=record.source_text,
        seg_ms=list(record.segment_durations_ms),
        tgt=[(p.phoneme, p.frames, p.word_idx) for p in record.target_phones],
        seg_breaks=list(record.segment_breaks),
        tgt_words=list(record.target_words),
    )


# ─────────────────────────────────────────────
# File I/O
# ─────────────────────────────────────────────


@dataclass(frozen=True)
class MalformedLine:
    """A line that could not be parsed, with its 1-based line number."""

    line: int
    error: str


def read_jsonl(path: Path, row_type: type[RowT]) -> tuple[list[tuple[int, RowT]], list[MalformedLine]]:
    """Parse every non-blank line of a JSONL file into ``row_type``.

    Returns:
        ``(line_number, row)`` pairs for valid lines and the malformed lines.
    """
    rows: list[tuple[int, RowT]] = []
    malformed: list[MalformedLine] = []
    with path.open(encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                rows.append((number, row_type.model_validate_json(line)))
            except ValidationError as exc:
                malformed.append(MalformedLine(line=number, error=exc.errors()[0]["msg"]))
    for bad in malformed:
        logger.warning("malformed_line", path=str(path), line=bad.line, error=bad.error)
    return rows, malformed


def write_jsonl(path: Path, rows: Iterable[BaseModel]) -> int:
    """Write one JSON object per line; returns the row count."""
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(row.model_dump_json(by_alias=True))
            handle.write("\n")
            count += 1
    return count


def write_json(path: Path, data: Any) -> None:
    """Write pretty, key-sorted JSON followed by a newline."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def read_json(path: Path) -> Any:
    """Load a JSON file."""
    return json.loads(path.read_text(encoding="utf-8"))


def write_dict_lines(path: Path, records: Iterable[dict[str, Any]]) -> None:
    """Write plain dicts as key-sorted JSON lines."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(json.dumps(record, sort_keys=True) + "\n" for record in records), encoding="utf-8")

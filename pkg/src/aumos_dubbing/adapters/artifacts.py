"""File formats of the prepared artifacts.

- bins JSON: ``{"k", "cuts_ms", "fitted_on", "provenance"}``
- vocab: one token per line, id = line number (0-based), specials first
- BPE: ``#vocab_size: N`` and ``#alphabet: ...`` headers, then one ``left right`` merge per line
- lexicon: ``WORD  PH PH PH`` lines plus a ``word count`` unigram file
- manifest JSON: provenance, input and artifact hashes, statistics
"""

from __future__ import annotations

import hashlib
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from aumos_dubbing.adapters.jsonl import RecordRow, read_json, read_jsonl, record_from_row, write_json
from aumos_dubbing.core.binning import BinBoundaries
from aumos_dubbing.core.codec import BpeModel, Vocabulary, VocabKind
from aumos_dubbing.core.config import TrainingMode
from aumos_dubbing.core.models import TrainingRecord
from aumos_dubbing.core.p2w import PronLexicon
from aumos_dubbing.core.synthesis import PhoneDurationModel
from aumos_dubbing.errors import StructuralInputError

# prepared-directory layout
BINS_FILE = "bins.json"
SOURCE_BPE_FILE = "source.bpe"
TARGET_BPE_FILE = "target.bpe"
SOURCE_VOCAB_FILE = "source.vocab"
PHONEME_VOCAB_FILE = "phoneme.vocab"
TEXT_VOCAB_FILE = "text.vocab"
LEXICON_FILE = "lexicon.txt"
UNIGRAM_FILE = "unigrams.txt"
DURATIONS_FILE = "phone_durations.json"
MANIFEST_FILE = "manifest.json"
SPLIT_FILES = {"train": "train.jsonl", "valid": "valid.jsonl", "test": "test.jsonl"}

_VOCAB_SIZE_HEADER = "#vocab_size:"
_ALPHABET_HEADER = "#alphabet:"


def sha256_file(path: Path) -> str:
    """Hex SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with path.open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_lines(path: Path, lines: Iterable[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")


def _read_lines(path: Path) -> list[str]:
    return path.read_text(encoding="utf-8").splitlines()


def save_bins(path: Path, boundaries: BinBoundaries, provenance: Mapping[str, Any] | None = None) -> None:
    """Write bin boundaries, optionally with the run configuration embedded."""
    data = boundaries.to_dict()
    if provenance is not None:
        data["provenance"] = dict(provenance)
    write_json(path, data)


def load_bins(path: Path) -> BinBoundaries:
    """Read bin boundaries written by ``save_bins``."""
    try:
        return BinBoundaries.from_dict(read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise StructuralInputError("invalid bins file", path=str(path), error=str(exc)) from exc


def save_vocab(path: Path, vocab: Vocabulary) -> None:
    """One token per line in id order."""
    _write_lines(path, vocab.tokens)


def load_vocab(path: Path, kind: VocabKind) -> Vocabulary:
    """Read a vocabulary file; line number is the token id."""
    return Vocabulary.from_file_tokens(_read_lines(path), kind)


def save_bpe(path: Path, bpe: BpeModel) -> None:
    """Headers with the size budget and alphabet, then one merge per line."""
    _write_lines(
        path,
        [
            f"{_VOCAB_SIZE_HEADER} {bpe.vocab_size}",
            f"{_ALPHABET_HEADER} {' '.join(bpe.alphabet)}",
            *(f"{left} {right}" for left, right in bpe.merges),
        ],
    )


def load_bpe(path: Path) -> BpeModel:
    """Read a BPE model written by ``save_bpe``."""
    vocab_size = 0
    alphabet: tuple[str, ...] = ()
    merges: list[tuple[str, str]] = []
    for number, line in enumerate(_read_lines(path), start=1):
        if line.startswith(_VOCAB_SIZE_HEADER):
            vocab_size = int(line[len(_VOCAB_SIZE_HEADER) :])
        elif line.startswith(_ALPHABET_HEADER):
            alphabet = tuple(line[len(_ALPHABET_HEADER) :].split())
        elif line.strip():
            parts = line.split()
            if len(parts) != 2:
                raise StructuralInputError("BPE merge line must hold two symbols", path=str(path), line=number)
            merges.append((parts[0], parts[1]))
    return BpeModel(merges=tuple(merges), vocab_size=vocab_size, alphabet=alphabet)


def save_lexicon(lexicon_path: Path, unigram_path: Path, lexicon: PronLexicon) -> None:
    """Write the pronunciation lexicon and its unigram counts."""
    _write_lines(lexicon_path, lexicon.to_lines())
    _write_lines(unigram_path, (f"{word} {count}" for word, count in sorted(lexicon.counts.items())))


def load_lexicon(lexicon_path: Path, unigram_path: Path | None = None) -> PronLexicon:
    """Read a lexicon; counts default to 1 without a unigram file."""
    counts: dict[str, int] = {}
    if unigram_path is not None and unigram_path.exists():
        for number, line in enumerate(_read_lines(unigram_path), start=1):
            parts = line.split()
            if len(parts) != 2 or not parts[1].isdigit():
                raise StructuralInputError("unigram line must be 'word count'", path=str(unigram_path), line=number)
            counts[parts[0]] = int(parts[1])
    return PronLexicon.from_lines(_read_lines(lexicon_path), counts)


def save_durations(path: Path, model: PhoneDurationModel, provenance: Mapping[str, Any] | None = None) -> None:
    """Write the per-phoneme duration model."""
    data = model.to_dict()
    if provenance is not None:
        data["provenance"] = dict(provenance)
    write_json(path, data)


def load_durations(path: Path) -> PhoneDurationModel:
    """Read a duration model written by ``save_durations``."""
    try:
        return PhoneDurationModel.from_dict(read_json(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise StructuralInputError("invalid phone duration file", path=str(path), error=str(exc)) from exc


def load_records(path: Path) -> list[TrainingRecord]:
    """Read a training-record file; any malformed line is an error.

    Raises:
        StructuralInputError: If the file is missing or has malformed lines.
    """
    if not path.exists():
        raise StructuralInputError("record file not found", path=str(path))
    rows, malformed = read_jsonl(path, RecordRow)
    if malformed:
        raise StructuralInputError(
            "malformed record lines", path=str(path), lines=[bad.line for bad in malformed[:20]]
        )
    return [record_from_row(row) for _, row in rows]


# ─────────────────────────────────────────────
# Prepared directory
# ─────────────────────────────────────────────


@dataclass(frozen=True)
class PreparedArtifacts:
    """Everything ``prepare`` derives from a corpus, as loaded for training or inference.

    Attributes:
        root: The prepared directory.
        boundaries: Duration bin boundaries fitted on the training split.
        source_bpe: Source text BPE model.
        source_vocab: Source vocabulary (BPE symbols plus bin tokens).
        phoneme_vocab: Closed target vocabulary of phonemes and duration tokens.
        target_bpe: Target text BPE model (text-output mode).
        text_vocab: Target text vocabulary (text-output mode).
        lexicon: Pronunciation lexicon with unigram counts.
        durations: Per-phoneme mean durations.
        frame_ms: Frame length the records were quantized with.
        max_frames: Largest duration token.
    """

    root: Path
    boundaries: BinBoundaries
    source_bpe: BpeModel
    source_vocab: Vocabulary
    phoneme_vocab: Vocabulary
    target_bpe: BpeModel
    text_vocab: Vocabulary
    lexicon: PronLexicon
    durations: PhoneDurationModel
    frame_ms: int
    max_frames: int

    def target_vocab(self, mode: TrainingMode) -> Vocabulary:
        """Target vocabulary of a training mode."""
        return self.phoneme_vocab if mode.predicts_phonemes else self.text_vocab

    def bins_digest(self, mode: TrainingMode) -> str | None:
        """Bin digest a checkpoint of this mode is pinned to."""
        return self.boundaries.digest() if mode.uses_duration_bins else None

    def split_path(self, split: str) -> Path:
        """Record file of a split."""
        return self.root / SPLIT_FILES[split]


def _require(root: Path, name: str) -> Path:
    path = root / name
    if not path.exists():
        raise StructuralInputError("prepared artifact missing", path=str(path))
    return path


def load_prepared(root: Path) -> PreparedArtifacts:
    """Load a directory written by ``prepare``.

    Raises:
        StructuralInputError: If an artifact is missing or unreadable.
    """
    manifest = read_json(_require(root, MANIFEST_FILE))
    try:
        frame_ms = int(manifest["provenance"]["frame_ms"])
        max_frames = int(manifest["provenance"]["max_frames"])
    except (KeyError, TypeError, ValueError) as exc:
        raise StructuralInputError("manifest lacks provenance", path=str(root / MANIFEST_FILE)) from exc
    return PreparedArtifacts(
        root=root,
        boundaries=load_bins(_require(root, BINS_FILE)),
        source_bpe=load_bpe(_require(root, SOURCE_BPE_FILE)),
        source_vocab=load_vocab(_require(root, SOURCE_VOCAB_FILE), VocabKind.TEXT_BPE),
        phoneme_vocab=load_vocab(_require(root, PHONEME_VOCAB_FILE), VocabKind.PHONEME_CLOSED),
        target_bpe=load_bpe(_require(root, TARGET_BPE_FILE)),
        text_vocab=load_vocab(_require(root, TEXT_VOCAB_FILE), VocabKind.TEXT_BPE),
        lexicon=load_lexicon(_require(root, LEXICON_FILE), root / UNIGRAM_FILE),
        durations=load_durations(_require(root, DURATIONS_FILE)),
        frame_ms=frame_ms,
        max_frames=max_frames,
    )

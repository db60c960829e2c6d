"""Pipeline services behind the CLI subcommands.

Contains:
- PrepareService — alignments to records, bins, vocabularies and lexicon
- TrainService — per-mode example building, training and checkpointing
- TranslateService — checkpoint inference timed by given durations or by VAD
- EvaluateService — BLEU and speech-overlap reports over several systems
- VadService — WAV to speech segments
- AnalyzeService — pause statistics over thresholds, lexicon recovery
- ToyCorpusService — synthetic alignment corpus
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from aumos_dubbing.adapters.artifacts import (
    BINS_FILE,
    DURATIONS_FILE,
    LEXICON_FILE,
    MANIFEST_FILE,
    PHONEME_VOCAB_FILE,
    SOURCE_BPE_FILE,
    SOURCE_VOCAB_FILE,
    SPLIT_FILES,
    TARGET_BPE_FILE,
    TEXT_VOCAB_FILE,
    UNIGRAM_FILE,
    PreparedArtifacts,
    load_bins,
    load_lexicon,
    load_prepared,
    load_records,
    save_bins,
    save_bpe,
    save_durations,
    save_lexicon,
    save_vocab,
    sha256_file,
)
from aumos_dubbing.adapters.checkpoints import load_checkpoint, save_checkpoint
from aumos_dubbing.adapters.jsonl import (
    AlignmentRow,
    HypothesisRow,
    TranslateInputRow,
    read_jsonl,
    row_from_record,
    row_from_utterance,
    utterance_from_row,
    write_dict_lines,
    write_json,
    write_jsonl,
)
from aumos_dubbing.adapters.wav import read_wav
from aumos_dubbing.core.binning import BinBoundaries, assign_bin, fit_bins
from aumos_dubbing.core.codec import (
    BpeModel,
    Vocabulary,
    build_phoneme_vocab,
    build_source_vocab,
    build_text_vocab,
    decode_target,
    encode_plain_source,
    encode_source,
    encode_target,
    encode_text_target,
    render_timing,
    train_bpe,
)
from aumos_dubbing.core.config import ModelConfig, NoiseSpec, TrainingMode
from aumos_dubbing.core.corpus import (
    build_training_record,
    corpus_stats,
    pause_counts_by_threshold,
    segment_utterance,
    split_records,
    validate_utterance,
)
from aumos_dubbing.core.interfaces import Translator
from aumos_dubbing.core.metrics import (
    EvalReport,
    EvalSample,
    align_segments,
    bleu,
    build_report,
    corpus_speech_overlap,
    render_table,
)
from aumos_dubbing.core.model.checkpoint import Checkpoint, train_state_payload
from aumos_dubbing.core.model.decoding import TransformerScorer, beam_decode
from aumos_dubbing.core.model.training import (
    EpochRecord,
    Example,
    Trainer,
    TrainingState,
    ValidationScores,
    build_model,
)
from aumos_dubbing.core.model.transformer import Seq2SeqTransformer
from aumos_dubbing.core.models import AlignedUtterance, PauseStats, TrainingRecord
from aumos_dubbing.core.noise import oversample_records
from aumos_dubbing.core.p2w import PronLexicon, phones_to_words, recovery_rate
from aumos_dubbing.core.synthesis import estimate_word_frames, fit_phone_durations
from aumos_dubbing.core.toy import generate_toy_corpus
from aumos_dubbing.core.vad import detect_segments, segments_to_bins
from aumos_dubbing.errors import (
    CheckpointMismatchError,
    ConfigurationError,
    InsufficientDataError,
    MetricInputError,
    StructuralInputError,
)
from aumos_dubbing.observability import get_logger
from aumos_dubbing.settings import Settings

logger = get_logger(__name__)

CHECKPOINT_FILE = "checkpoint.pt"
TRAIN_LOG_FILE = "train_log.jsonl"
DEFAULT_THRESHOLDS = (100, 200, 300, 400, 500)
_MAX_LISTED_LINES = 20


def meta_path(output: Path) -> Path:
    """Sibling provenance file of a line-based output, e.g. ``hyp.meta.json``."""
    return output.with_name(f"{output.stem}.meta.json")


def _input_entry(path: Path) -> dict[str, str]:
    return {"name": path.name, "sha256": sha256_file(path)}


# ─────────────────────────────────────────────
# Shared dubbing path
# ─────────────────────────────────────────────


@dataclass(frozen=True)
class Dub:
    """A translation realized as timed words.

    Attributes:
        words: Output words.
        phones: Phonemes per word; for text outputs the word's primary pronunciation.
        frames: Frames per phone; for text outputs a single total per word.
        seg_ms_pred: Virtual-synthesizer duration of each predicted segment.
        truncated: True when beam search hit its length limit.
        repairs: Decoder repair counters.
    """

    words: list[str]
    phones: list[list[str]]
    frames: list[list[int]]
    seg_ms_pred: list[int]
    truncated: bool = False
    repairs: dict[str, int] = field(default_factory=dict)


def realize(tokens: Sequence[str], mode: TrainingMode, artifacts: PreparedArtifacts, truncated: bool = False) -> Dub:
    """Turn decoded target tokens into words and segment timings.

    Phoneme outputs are parsed, mapped to words through the lexicon and timed
    by their predicted durations. Text outputs have no durations and no
    pauses: every word is timed by the phone duration model as one segment.
    """
    if mode.predicts_phonemes:
        decoded = decode_target(tokens)
        groups = [[phoneme for phoneme, _ in word] for word in decoded.words]
        return Dub(
            words=phones_to_words(groups, artifacts.lexicon),
            phones=groups,
            frames=[[frames for _, frames in word] for word in decoded.words],
            seg_ms_pred=render_timing(decoded, artifacts.frame_ms),
            truncated=truncated,
            repairs=decoded.repairs.as_dict(),
        )
    words = BpeModel.decode(tokens).split()
    word_frames = estimate_word_frames(words, artifacts.lexicon, artifacts.durations)
    return Dub(
        words=words,
        phones=[list(artifacts.lexicon.primary(word) or ()) for word in words],
        frames=[[frames] for frames in word_frames],
        seg_ms_pred=[sum(word_frames) * artifacts.frame_ms] if words else [],
        truncated=truncated,
    )


def dub_sentence(
    translator: Translator,
    text: str,
    bins: Sequence[int] | None,
    mode: TrainingMode,
    artifacts: PreparedArtifacts,
) -> Dub:
    """Translate one sentence with any ``Translator`` and realize the output."""
    tokens, truncated = translator.translate(text, bins)
    return realize(tokens, mode, artifacts, truncated)


class ModelTranslator:
    """Beam-search translator over a trained model and its prepared artifacts.

    Implements the ``Translator`` protocol.

    Args:
        model: Trained encoder-decoder.
        artifacts: Vocabularies, BPE, bins and lexicon the model was trained with.
        mode: Training mode of the model.
        beam: Beam width.
        max_len: Maximum generated tokens.
    """

    def __init__(
        self,
        model: Seq2SeqTransformer,
        artifacts: PreparedArtifacts,
        mode: TrainingMode,
        beam: int,
        max_len: int,
    ) -> None:
        self.model = model
        self.artifacts = artifacts
        self.mode = mode
        self.beam = beam
        self.max_len = max_len
        self.target_vocab: Vocabulary = artifacts.target_vocab(mode)

    def encode(self, text: str, bins: Sequence[int] | None) -> list[int]:
        """Source ids; bins are only used by the duration-conditioned mode."""
        a = self.artifacts
        if self.mode.uses_duration_bins:
            return encode_source(text, bins or (), a.source_bpe, a.source_vocab, a.boundaries.k)
        return encode_plain_source(text, a.source_bpe, a.source_vocab)

    def translate(self, text: str, bins: Sequence[int] | None) -> tuple[list[str], bool]:
        """Target tokens (EOS excluded) and whether the search was truncated."""
        result = beam_decode(TransformerScorer(self.model, self.encode(text, bins)), self.beam, self.max_len)
        return self.target_vocab.decode(result.tokens), result.truncated


# ─────────────────────────────────────────────
# Prepare
# ─────────────────────────────────────────────


@dataclass(frozen=True)
class PrepareResult:
    """Summary of a prepare run.

    Attributes:
        records: Training records derived.
        malformed_lines: 1-based line numbers that were skipped.
        splits: Record count per split.
        stats: Pause statistics per non-empty split.
        boundaries: Fitted duration bins.
    """

    records: int
    malformed_lines: list[int]
    splits: dict[str, int]
    stats: list[PauseStats]
    boundaries: BinBoundaries


class PrepareService:
    """Derives every training artifact from an alignment file.

    Args:
        settings: Run configuration.
    """

    def __init__(self, settings: Settings) -> None:
        self._settings = settings

    def derive_records(self, alignments: Path) -> tuple[list[TrainingRecord], list[int], int]:
        """Parse, validate and segment every alignment line.

        Returns:
            Records, skipped line numbers and the number of non-blank lines.

        Raises:
            StructuralInputError: If more than ``max_malformed_fraction`` of the lines are malformed.
            InsufficientDataError: If the file has no utterances.
        """
        s = self._settings
        if not alignments.exists():
            raise StructuralInputError("alignment file not found", path=str(alignments))
        rows, malformed = read_jsonl(alignments, AlignmentRow)
        bad_lines = [bad.line for bad in malformed]
        records: list[TrainingRecord] = []
        for number, row in rows:
            utt = utterance_from_row(row)
            try:
                records.append(build_training_record(utt, segment_utterance(utt, s.pause_threshold_ms), s.frame_ms))
            except (StructuralInputError, InsufficientDataError) as exc:
                logger.warning("malformed_line", path=str(alignments), line=number, error=str(exc))
                bad_lines.append(number)

        total = len(rows) + len(malformed)
        if total == 0:
            raise InsufficientDataError("alignment file has no utterances", path=str(alignments))
        bad_lines.sort()
        if len(bad_lines) / total > s.max_malformed_fraction:
            raise StructuralInputError(
                "too many malformed alignment lines",
                path=str(alignments),
                malformed=len(bad_lines),
                total=total,
                lines=bad_lines[:_MAX_LISTED_LINES],
            )
        return records, bad_lines, total

    def fit_boundaries(self, train: Sequence[TrainingRecord]) -> BinBoundaries:
        """Fit duration bins on training segments, shrinking k when there are too few."""
        durations = [d for record in train for d in record.segment_durations_ms]
        k = self._settings.bins
        if len(durations) < 2:
            raise InsufficientDataError("need at least two segments to fit bins", samples=len(durations))
        if len(durations) < k:
            logger.warning("bin_count_fallback", requested_k=k, k=len(durations), samples=len(durations))
            k = len(durations)
        return fit_bins(durations, k)

    def run(self, alignments: Path, out_dir: Path) -> PrepareResult:
        """Write splits, bins, BPE models, vocabularies, lexicon, durations and manifest."""
        s = self._settings
        records, bad_lines, total = self.derive_records(alignments)
        splits = split_records(records, s.valid_fraction, s.test_fraction, s.seed)
        if not splits.train:
            raise InsufficientDataError("training split is empty", records=len(records))

        boundaries = self.fit_boundaries(splits.train)
        source_bpe = train_bpe((record.source_text for record in splits.train), s.source_bpe_size)
        target_bpe = train_bpe((" ".join(record.target_words) for record in splits.train), s.target_bpe_size)
        phonemes = (phone.phoneme for record in records for phone in record.target_phones)
        lexicon = PronLexicon.from_records(splits.train)

        out_dir.mkdir(parents=True, exist_ok=True)
        provenance = s.provenance()
        for name, split in splits.items():
            write_jsonl(out_dir / SPLIT_FILES[name], (row_from_record(record) for record in split))
        save_bins(out_dir / BINS_FILE, boundaries, provenance)
        save_bpe(out_dir / SOURCE_BPE_FILE, source_bpe)
        save_bpe(out_dir / TARGET_BPE_FILE, target_bpe)
        save_vocab(out_dir / SOURCE_VOCAB_FILE, build_source_vocab(source_bpe, boundaries.k))
        save_vocab(out_dir / PHONEME_VOCAB_FILE, build_phoneme_vocab(phonemes, s.max_frames))
        save_vocab(out_dir / TEXT_VOCAB_FILE, build_text_vocab(target_bpe))
        save_lexicon(out_dir / LEXICON_FILE, out_dir / UNIGRAM_FILE, lexicon)
        save_durations(out_dir / DURATIONS_FILE, fit_phone_durations(splits.train), provenance)

        stats = [corpus_stats(split, name) for name, split in splits.items() if split]
        artifact_names = [
            BINS_FILE,
            DURATIONS_FILE,
            LEXICON_FILE,
            PHONEME_VOCAB_FILE,
            SOURCE_BPE_FILE,
            SOURCE_VOCAB_FILE,
            TARGET_BPE_FILE,
            TEXT_VOCAB_FILE,
            UNIGRAM_FILE,
            *SPLIT_FILES.values(),
        ]
        write_json(
            out_dir / MANIFEST_FILE,
            {
                "provenance": provenance,
                "inputs": {"alignments": _input_entry(alignments)},
                "artifacts": {name: sha256_file(out_dir / name) for name in sorted(artifact_names)},
                "stats": {
                    "lines": total,
                    "records": len(records),
                    "malformed_lines": bad_lines,
                    "splits": {name: len(split) for name, split in splits.items()},
                    "pauses": [asdict(row) for row in stats],
                    "bins": {
                        "requested_k": s.bins,
                        "k": boundaries.k,
                        "effective_k": boundaries.effective_k,
                    },
                },
            },
        )
        logger.info(
            "corpus_prepared",
            records=len(records),
            malformed=len(bad_lines),
            train=len(splits.train),
            valid=len(splits.valid),
            test=len(splits.test),
            effective_k=boundaries.effective_k,
        )
        return PrepareResult(
            records=len(records),
            malformed_lines=bad_lines,
            splits={name: len(split) for name, split in splits.items()},
            stats=stats,
            boundaries=boundaries,
        )


# ─────────────────────────────────────────────
# Train
# ─────────────────────────────────────────────


@dataclass(frozen=True)
class TrainResult:
    """Outcome of a training run."""

    checkpoint: Path
    best_epoch: int
    best_bleu: float | None
    history: list[EpochRecord]


class TrainService:
    """Trains one mode on a prepared directory.

    Args:
        settings: Run configuration; ``mode``, ``model`` and ``noise`` apply.
    """

    def __init__(self, settings: Settings) -> None:
        self._settings = settings

    def _target_ids(self, record: TrainingRecord, artifacts: PreparedArtifacts) -> tuple[int, ...]:
        mode = self._settings.mode
        vocab = artifacts.target_vocab(mode)
        if mode.predicts_phonemes:
            if not record.target_phones:
                raise ConfigurationError("mode needs target phones", mode=mode.value, record_id=record.id)
            return tuple(encode_target(record, vocab, artifacts.max_frames).ids(vocab))
        if not record.target_words:
            raise ConfigurationError("mode needs target words", mode=mode.value, record_id=record.id)
        return tuple(encode_text_target(record.target_words, artifacts.target_bpe, vocab))

    def build_examples(
        self,
        records: Sequence[TrainingRecord],
        artifacts: PreparedArtifacts,
        noisy: bool,
    ) -> list[Example]:
        """Encode records for the configured mode.

        With ``noisy`` the duration-conditioned mode oversamples every record
        with perturbed source durations; the target side is never perturbed.
        """
        mode = self._settings.mode
        a = artifacts
        targets: dict[str, tuple[int, ...]] = {}

        def target(record: TrainingRecord) -> tuple[int, ...]:
            if record.id not in targets:
                targets[record.id] = self._target_ids(record, a)
            return targets[record.id]

        if not mode.uses_duration_bins:
            return [
                Example(tuple(encode_plain_source(r.source_text, a.source_bpe, a.source_vocab)), target(r))
                for r in records
            ]
        spec = self._settings.run_noise_spec() if noisy else NoiseSpec(sigma=0.0)
        return [
            Example(
                tuple(encode_source(ex.record.source_text, ex.bins, a.source_bpe, a.source_vocab, a.boundaries.k)),
                target(ex.record),
            )
            for ex in oversample_records(records, spec, a.boundaries, a.frame_ms)
        ]

    def validator(
        self,
        records: Sequence[TrainingRecord],
        artifacts: PreparedArtifacts,
        config: ModelConfig,
    ) -> Callable[[Seq2SeqTransformer], ValidationScores]:
        """Decode-based validation: translate, map phones to words, score BLEU and SO."""
        sample = list(records[: config.val_max_samples])
        mode = self._settings.mode

        def validate(model: Seq2SeqTransformer) -> ValidationScores:
            translator: Translator = ModelTranslator(model, artifacts, mode, config.val_beam, config.max_decode_len)
            hypotheses: list[str] = []
            references: list[str] = []
            pairs: list[tuple[int, int]] = []
            for record in sample:
                bins = [assign_bin(d, artifacts.boundaries) for d in record.segment_durations_ms]
                dub = dub_sentence(translator, record.source_text, bins, mode, artifacts)
                hypotheses.append(" ".join(dub.words))
                references.append(" ".join(record.target_words))
                pairs.extend(align_segments(record.segment_durations_ms, dub.seg_ms_pred))
            return ValidationScores(bleu=bleu(hypotheses, references), so=corpus_speech_overlap(pairs))

        return validate

    def run(self, prepared: Path, out_dir: Path, resume: bool = False) -> TrainResult:
        """Train, writing the training log and checkpoint after every epoch.

        Raises:
            ConfigurationError: If the records lack what the mode needs, or a
                resumed checkpoint was trained with a different configuration.
            CheckpointMismatchError: If a resumed checkpoint does not match the artifacts.
        """
        s = self._settings
        mode = s.mode
        artifacts = load_prepared(prepared)
        if not mode.uses_duration_bins and s.noise.sigma > 0:
            logger.warning("noise_ignored", mode=mode.value, sigma=s.noise.sigma)
        train = load_records(artifacts.split_path("train"))
        valid = load_records(artifacts.split_path("valid"))
        config = s.run_model_config()
        train_examples = self.build_examples(train, artifacts, noisy=True)
        valid_examples = self.build_examples(valid, artifacts, noisy=False)

        src_vocab = artifacts.source_vocab
        tgt_vocab = artifacts.target_vocab(mode)
        digests = (src_vocab.digest(), tgt_vocab.digest(), artifacts.bins_digest(mode))
        out_dir.mkdir(parents=True, exist_ok=True)
        checkpoint_path = out_dir / CHECKPOINT_FILE
        log_path = out_dir / TRAIN_LOG_FILE
        provenance = s.provenance_json()

        def on_epoch(_: EpochRecord, state: TrainingState) -> None:
            write_dict_lines(log_path, (record.to_dict() for record in state.history))
            save_checkpoint(
                checkpoint_path,
                Checkpoint(
                    config=config,
                    mode=mode,
                    src_vocab_digest=digests[0],
                    tgt_vocab_digest=digests[1],
                    bins_digest=digests[2],
                    src_vocab_size=len(src_vocab),
                    tgt_vocab_size=len(tgt_vocab),
                    state_dict=state.best_state,
                    epoch=state.best_epoch,
                    metrics=[record.to_dict() for record in state.history],
                    train_state=train_state_payload(state),
                    provenance=provenance,
                ),
            )

        model = build_model(config, len(src_vocab), len(tgt_vocab))
        validate = self.validator(valid, artifacts, config) if valid else None
        trainer = Trainer(model, config, validate=validate, on_epoch=on_epoch)
        if resume:
            checkpoint = load_checkpoint(checkpoint_path)
            checkpoint.verify(*digests)
            if checkpoint.mode is not mode:
                raise CheckpointMismatchError(
                    "checkpoint mode differs", checkpoint=checkpoint.mode.value, run=mode.value
                )
            if checkpoint.config.model_copy(update={"max_epochs": config.max_epochs}) != config:
                raise ConfigurationError("checkpoint was trained with a different model configuration")
            trainer.restore(checkpoint.training_state())

        logger.info(
            "training_started",
            mode=mode.value,
            train_examples=len(train_examples),
            valid_examples=len(valid_examples),
            src_vocab=len(src_vocab),
            tgt_vocab=len(tgt_vocab),
        )
        state = trainer.fit(train_examples, valid_examples)
        logger.info("training_finished", epochs=state.epoch, best_epoch=state.best_epoch, best_bleu=state.best_bleu)
        return TrainResult(
            checkpoint=checkpoint_path,
            best_epoch=state.best_epoch,
            best_bleu=state.best_bleu,
            history=list(state.history),
        )


# ─────────────────────────────────────────────
# Translate
# ─────────────────────────────────────────────


class TranslateService:
    """Runs a checkpoint over translation requests.

    Args:
        settings: Run configuration; ``vad`` applies to WAV inputs.
    """

    def __init__(self, settings: Settings) -> None:
        self._settings = settings

    def load_translator(self, checkpoint_path: Path, prepared: Path) -> ModelTranslator:
        """Load a checkpoint and refuse it when its hashes differ from the prepared artifacts.

        Raises:
            CheckpointMismatchError: On a vocabulary or bin hash mismatch.
        """
        checkpoint = load_checkpoint(checkpoint_path)
        artifacts = load_prepared(prepared)
        mode = checkpoint.mode
        checkpoint.verify(
            artifacts.source_vocab.digest(),
            artifacts.target_vocab(mode).digest(),
            artifacts.bins_digest(mode),
        )
        model = Seq2SeqTransformer(checkpoint.config, checkpoint.src_vocab_size, checkpoint.tgt_vocab_size)
        model.load_state_dict(checkpoint.state_dict)
        return ModelTranslator(model, artifacts, mode, checkpoint.config.beam, checkpoint.config.max_decode_len)

    def source_timing(
        self,
        row: TranslateInputRow,
        base_dir: Path,
        boundaries: BinBoundaries,
    ) -> tuple[list[int], list[int]]:
        """Source segment durations and their bins, from ``seg_ms`` or from VAD over ``wav``.

        Relative WAV paths are resolved against ``base_dir``.
        """
        if row.seg_ms is not None:
            if not row.seg_ms or any(d <= 0 for d in row.seg_ms):
                raise StructuralInputError("segment durations must be positive and non-empty", id=row.id)
            durations = list(row.seg_ms)
            return durations, [assign_bin(d, boundaries) for d in durations]
        if row.wav is None:
            raise StructuralInputError("translation input needs seg_ms or wav", id=row.id)
        path = Path(row.wav)
        if not path.is_absolute():
            path = base_dir / path
        samples, rate = read_wav(path)
        segments = detect_segments(samples, rate, self._settings.vad)
        return [segment.duration_ms for segment in segments], segments_to_bins(segments, boundaries)

    def run(self, checkpoint_path: Path, prepared: Path, input_path: Path, output_path: Path) -> list[HypothesisRow]:
        """Translate every input line in order and write hypotheses plus a ``.meta.json``."""
        translator = self.load_translator(checkpoint_path, prepared)
        if not input_path.exists():
            raise StructuralInputError("translation input not found", path=str(input_path))
        rows, malformed = read_jsonl(input_path, TranslateInputRow)
        if malformed:
            raise StructuralInputError(
                "malformed translation input",
                path=str(input_path),
                lines=[bad.line for bad in malformed[:_MAX_LISTED_LINES]],
            )

        hypotheses: list[HypothesisRow] = []
        for _, row in rows:
            seg_ms, bins = self.source_timing(row, input_path.parent, translator.artifacts.boundaries)
            dub = dub_sentence(translator, row.src, bins, translator.mode, translator.artifacts)
            hypotheses.append(
                HypothesisRow(
                    id=row.id,
                    words=dub.words,
                    phones=dub.phones,
                    frames=dub.frames,
                    seg_ms_pred=dub.seg_ms_pred,
                    seg_ms_src=seg_ms,
                    truncated=dub.truncated,
                    repairs=dub.repairs,
                )
            )
        write_jsonl(output_path, hypotheses)
        write_json(
            meta_path(output_path),
            {
                "provenance": self._settings.provenance(),
                "mode": translator.mode.value,
                "inputs": {"checkpoint": _input_entry(checkpoint_path), "requests": _input_entry(input_path)},
                "rows": len(hypotheses),
                "truncated": sum(1 for row in hypotheses if row.truncated),
            },
        )
        logger.info("translation_finished", rows=len(hypotheses), mode=translator.mode.value)
        return hypotheses


# ─────────────────────────────────────────────
# Evaluate
# ─────────────────────────────────────────────


class EvaluateService:
    """Scores hypothesis files against a reference record file.

    Args:
        settings: Run configuration, embedded in the report.
    """

    def __init__(self, settings: Settings) -> None:
        self._settings = settings

    def samples(self, system: str, references: Sequence[TrainingRecord], hypotheses: Path) -> list[EvalSample]:
        """Join hypotheses to references by id, in reference order.

        Raises:
            MetricInputError: If the id sets differ; lists the missing and unexpected ids.
        """
        if not hypotheses.exists():
            raise StructuralInputError("hypothesis file not found", system=system, path=str(hypotheses))
        rows, malformed = read_jsonl(hypotheses, HypothesisRow)
        if malformed:
            raise StructuralInputError(
                "malformed hypothesis lines",
                system=system,
                lines=[bad.line for bad in malformed[:_MAX_LISTED_LINES]],
            )
        by_id = {row.id: row for _, row in rows}
        reference_ids = {record.id for record in references}
        missing = sorted(reference_ids - by_id.keys())
        unexpected = sorted(by_id.keys() - reference_ids)
        if missing or unexpected or len(by_id) != len(rows):
            raise MetricInputError(
                "hypothesis ids do not match references",
                system=system,
                missing=missing,
                unexpected=unexpected,
                duplicates=len(rows) - len(by_id),
            )
        return [
            EvalSample(
                id=record.id,
                source_text=record.source_text,
                hypothesis=" ".join(by_id[record.id].words),
                reference=" ".join(record.target_words),
                src_ms=record.segment_durations_ms,
                dub_ms=tuple(by_id[record.id].seg_ms_pred),
            )
            for record in references
        ]

    def run(
        self,
        references_path: Path,
        systems: Sequence[tuple[str, Path]],
        output: Path | None = None,
    ) -> list[EvalReport]:
        """Build one report per system; with ``output`` also write the JSON report and the text table."""
        if not systems:
            raise MetricInputError("no systems to evaluate")
        references = load_records(references_path)
        if not references:
            raise MetricInputError("reference file is empty", path=str(references_path))
        reports = [build_report(name, self.samples(name, references, path)) for name, path in systems]
        if output is not None:
            write_json(
                output,
                {
                    "provenance": self._settings.provenance(),
                    "inputs": {
                        "references": _input_entry(references_path),
                        **{f"system:{name}": _input_entry(path) for name, path in systems},
                    },
                    "reports": [report.model_dump() for report in reports],
                },
            )
            output.with_suffix(".txt").write_text(render_table(reports), encoding="utf-8")
        for report in reports:
            logger.info("system_scored", system=report.system, bleu=report.bleu, so=report.so)
        return reports


# ─────────────────────────────────────────────
# VAD, analysis and toy data
# ─────────────────────────────────────────────


class VadService:
    """Speech segments of a WAV file."""

    def __init__(self, settings: Settings) -> None:
        self._settings = settings

    def run(self, wav: Path, bins_path: Path | None = None) -> dict[str, Any]:
        """Segments as JSON-ready data; with ``bins_path`` also their bin indices."""
        samples, rate = read_wav(wav)
        segments = detect_segments(samples, rate, self._settings.vad)
        result: dict[str, Any] = {
            "provenance": self._settings.provenance(),
            "inputs": {"wav": _input_entry(wav)},
            "rate_hz": rate,
            "audio_ms": int(round(samples.size * 1000 / rate)),
            "segments": [
                {"start_ms": seg.start_ms, "end_ms": seg.end_ms, "dur_ms": seg.duration_ms} for seg in segments
            ],
        }
        if bins_path is not None:
            result["bins"] = segments_to_bins(segments, load_bins(bins_path)) if segments else []
        return result


class AnalyzeService:
    """Corpus statistics that need no training."""

    def __init__(self, settings: Settings) -> None:
        self._settings = settings

    def pause_stats(self, alignments: Path, thresholds: Sequence[int] = DEFAULT_THRESHOLDS) -> list[PauseStats]:
        """Pause statistics of the valid utterances under each threshold."""
        if not alignments.exists():
            raise StructuralInputError("alignment file not found", path=str(alignments))
        rows, _ = read_jsonl(alignments, AlignmentRow)
        utterances: list[AlignedUtterance] = []
        for number, row in rows:
            utt = utterance_from_row(row)
            try:
                validate_utterance(utt)
            except StructuralInputError as exc:
                logger.warning("malformed_line", path=str(alignments), line=number, error=str(exc))
                continue
            utterances.append(utt)
        by_threshold = pause_counts_by_threshold(utterances, thresholds)
        return [by_threshold[threshold] for threshold in thresholds]

    def lexicon_recovery(self, lexicon_path: Path, unigram_path: Path | None = None) -> tuple[int, int, float]:
        """Exact word recovery over a lexicon's unambiguous vocabulary."""
        if not lexicon_path.exists():
            raise StructuralInputError("lexicon not found", path=str(lexicon_path))
        return recovery_rate(load_lexicon(lexicon_path, unigram_path))


class ToyCorpusService:
    """Writes a generated toy corpus as alignment JSONL."""

    def __init__(self, settings: Settings) -> None:
        self._settings = settings

    def run(self, n: int, output: Path) -> int:
        """Generate ``n`` utterances from the root seed; returns the line count."""
        corpus = generate_toy_corpus(n, self._settings.seed)
        count = write_jsonl(output, (row_from_utterance(utt) for utt in corpus.utterances))
        logger.info("toy_corpus_written", utterances=count, words=len(corpus.lexicon), seed=self._settings.seed)
        return count

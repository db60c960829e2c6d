"""Speech overlap, BLEU and isometry scoring plus report assembly.

Speech overlap (SO) of a segment is ``1 - |src - dub| / src``, unclamped, so a
dub more than twice as long as its source scores below zero. The corpus SO is
the mean over all segments of all samples. BLEU follows the signature
``nrefs:1|case:lc|eff:no|tok:none|smooth:exp``: lowercased whitespace tokens,
exponential smoothing of zero n-gram precisions, standard brevity penalty.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field
from sacrebleu.metrics import BLEU

from aumos_dubbing.errors import MetricInputError
from aumos_dubbing.observability import get_logger

logger = get_logger(__name__)

MAX_NGRAM_ORDER = 4


# ─────────────────────────────────────────────
# Speech overlap
# ─────────────────────────────────────────────


def speech_overlap(src_ms: float, dub_ms: float) -> float:
    """Overlap of one segment: ``1 - |src - dub| / src``.

    Raises:
        MetricInputError: If ``src_ms`` is not positive or ``dub_ms`` is negative.
    """
    if src_ms <= 0:
        raise MetricInputError("source duration must be positive", src_ms=src_ms)
    if dub_ms < 0:
        raise MetricInputError("dub duration must be non-negative", dub_ms=dub_ms)
    return 1.0 - abs(src_ms - dub_ms) / src_ms


def corpus_speech_overlap(pairs: Sequence[tuple[float, float]]) -> float:
    """Mean speech overlap over ``(src_ms, dub_ms)`` segment pairs.

    Raises:
        MetricInputError: On an empty pair list.
    """
    if not pairs:
        raise MetricInputError("no segments to score")
    return float(np.mean([speech_overlap(src, dub) for src, dub in pairs]))


def align_segments(src_ms: Sequence[int], dub_ms: Sequence[int]) -> list[tuple[int, int]]:
    """Pair source and dub segments in order.

    Unmatched source segments pair with a 0 ms dub; surplus dub segments are
    added onto the last source segment. The result has one pair per source
    segment.
    """
    if not src_ms:
        raise MetricInputError("source has no segments")
    pairs = [(src, dub_ms[i] if i < len(dub_ms) else 0) for i, src in enumerate(src_ms)]
    surplus = sum(dub_ms[len(src_ms) :])
    if surplus:
        last_src, last_dub = pairs[-1]
        pairs[-1] = (last_src, last_dub + surplus)
    return pairs


# ─────────────────────────────────────────────
# BLEU
# ─────────────────────────────────────────────


@dataclass(frozen=True)
class NgramStats:
    """Sufficient statistics of one hypothesis/reference pair for corpus BLEU."""

    correct: tuple[int, ...]
    total: tuple[int, ...]
    hyp_len: int
    ref_len: int


# effective_order leaves the n-gram counts unchanged
_SENTENCE_BLEU = BLEU(lowercase=True, tokenize="none", smooth_method="exp", effective_order=True)
_CORPUS_BLEU = BLEU(lowercase=True, tokenize="none", smooth_method="exp", max_ngram_order=MAX_NGRAM_ORDER)


def _rounded(score: float) -> float:
    # exp(log(100)) is not exactly 100 in floating point
    return round(float(score), 10)


def sentence_stats(hypothesis: str, reference: str) -> NgramStats:
    """Clipped n-gram matches and counts for orders 1..4, lowercased, whitespace-tokenized."""
    score = _SENTENCE_BLEU.sentence_score(hypothesis, [reference])
    return NgramStats(
        correct=tuple(int(count) for count in score.counts),
        total=tuple(int(count) for count in score.totals),
        hyp_len=int(score.sys_len),
        ref_len=int(score.ref_len),
    )


def bleu_from_stats(stats: Sequence[NgramStats]) -> float:
    """Corpus BLEU in [0, 100] from summed sentence statistics."""
    correct = [sum(s.correct[n] for s in stats) for n in range(MAX_NGRAM_ORDER)]
    total = [sum(s.total[n] for s in stats) for n in range(MAX_NGRAM_ORDER)]
    score = BLEU.compute_bleu(
        correct=correct,
        total=total,
        sys_len=sum(s.hyp_len for s in stats),
        ref_len=sum(s.ref_len for s in stats),
        smooth_method="exp",
        effective_order=False,
        max_ngram_order=MAX_NGRAM_ORDER,
    ).score
    return _rounded(score)


def bleu(hypotheses: Sequence[str], references: Sequence[str]) -> float:
    """Corpus BLEU of hypotheses against single references.

    Raises:
        MetricInputError: If the lists differ in length or are empty.
    """
    if len(hypotheses) != len(references):
        raise MetricInputError("hypothesis and reference counts differ", hyps=len(hypotheses), refs=len(references))
    if not hypotheses:
        raise MetricInputError("no sentences to score")
    return _rounded(_CORPUS_BLEU.corpus_score(list(hypotheses), [list(references)]).score)


# ─────────────────────────────────────────────
# Isometry
# ─────────────────────────────────────────────


def isometry_ratio(source_text: str, target_text: str) -> float:
    """Character-length ratio target/source, whitespace included.

    Raises:
        MetricInputError: If the source is empty.
    """
    if not source_text:
        raise MetricInputError("empty source text")
    return len(target_text) / len(source_text)


# ─────────────────────────────────────────────
# Reports
# ─────────────────────────────────────────────


@dataclass(frozen=True)
class EvalSample:
    """One hypothesis joined with its reference and source timing.

    Attributes:
        id: Utterance id.
        source_text: Source sentence.
        hypothesis: Hypothesis words joined by spaces.
        reference: Reference target text.
        src_ms: Source segment durations.
        dub_ms: Predicted dub segment durations.
    """

    id: str
    source_text: str
    hypothesis: str
    reference: str
    src_ms: tuple[int, ...]
    dub_ms: tuple[int, ...]


class SampleRow(BaseModel):
    """Per-sample breakdown in an EvalReport."""

    id: str
    ngram_correct: list[int]
    ngram_total: list[int]
    hyp_len: int
    ref_len: int
    src_ms: list[int]
    dub_ms: list[int]
    so: list[float]
    so_utterance: float
    isometry: float
    segment_mismatch: bool


class EvalReport(BaseModel):
    """Corpus scores of one system.

    ``so`` is the mean over all segments of all samples; ``so_utterance`` the
    mean of per-utterance overlaps computed on summed durations.
    """

    system: str
    bleu: float
    so: float
    so_utterance: float
    isometry: float
    samples: int
    segments: int
    negative_so_segments: int
    segment_mismatches: int
    rows: list[SampleRow] = Field(default_factory=list)


def build_report(system: str, samples: Sequence[EvalSample]) -> EvalReport:
    """Score a system's hypotheses.

    Raises:
        MetricInputError: On an empty sample list or invalid durations.
    """
    if not samples:
        raise MetricInputError("no samples to evaluate", system=system)

    rows: list[SampleRow] = []
    stats: list[NgramStats] = []
    all_so: list[float] = []
    mismatches = 0
    for sample in samples:
        mismatch = len(sample.src_ms) != len(sample.dub_ms)
        if mismatch:
            mismatches += 1
            logger.warning(
                "segment_count_mismatch",
                system=system,
                sample_id=sample.id,
                src=len(sample.src_ms),
                dub=len(sample.dub_ms),
            )
        pairs = align_segments(sample.src_ms, sample.dub_ms)
        so = [speech_overlap(src, dub) for src, dub in pairs]
        all_so.extend(so)
        sentence = sentence_stats(sample.hypothesis, sample.reference)
        stats.append(sentence)
        rows.append(
            SampleRow(
                id=sample.id,
                ngram_correct=list(sentence.correct),
                ngram_total=list(sentence.total),
                hyp_len=sentence.hyp_len,
                ref_len=sentence.ref_len,
                src_ms=list(sample.src_ms),
                dub_ms=list(sample.dub_ms),
                so=so,
                so_utterance=speech_overlap(sum(sample.src_ms), sum(sample.dub_ms)),
                isometry=isometry_ratio(sample.source_text, sample.hypothesis),
                segment_mismatch=mismatch,
            )
        )

    return EvalReport(
        system=system,
        bleu=bleu_from_stats(stats),
        so=float(np.mean(all_so)),
        so_utterance=float(np.mean([row.so_utterance for row in rows])),
        isometry=float(np.mean([row.isometry for row in rows])),
        samples=len(rows),
        segments=len(all_so),
        negative_so_segments=sum(1 for value in all_so if value < 0),
        segment_mismatches=mismatches,
        rows=rows,
    )


def render_table(reports: Sequence[EvalReport]) -> str:
    """Plain-text comparison table, one row per system."""
    header = f"{'System':<24} {'BLEU':>6} {'SO':>6} {'SO-utt':>7} {'Isometry':>9}"
    lines = [header, "-" * len(header)]
    for report in reports:
        lines.append(
            f"{report.system:<24} {report.bleu:>6.1f} {report.so:>6.2f} {report.so_utterance:>7.2f} "
            f"{report.isometry:>9.2f}"
        )
    return "\n".join(lines) + "\n"

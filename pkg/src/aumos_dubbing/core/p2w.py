"""Phonemes-to-words mapping through an inverted pronunciation lexicon.

Decoded phoneme output has to be turned back into words before BLEU can be
computed against text references. There is no one-to-one mapping from
pronunciations to words (``K AE1 T S`` is both "cats" and "cat's"), so
homophones are resolved by unigram frequency, ties lexicographically.
Pronunciations not in the lexicon fall back to the nearest entry within one
phoneme edit (stress digits ignored), then to an OOV marker.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from functools import cached_property

from rapidfuzz.distance import Levenshtein

from aumos_dubbing.core.models import TrainingRecord
from aumos_dubbing.errors import StructuralInputError
from aumos_dubbing.observability import get_logger

logger = get_logger(__name__)

Pronunciation = tuple[str, ...]

MAX_EDIT_DISTANCE = 1
OOV_JOINER = "_"


def strip_stress(phoneme: str) -> str:
    """Drop a trailing ARPAbet stress digit: ``EH1`` -> ``EH``."""
    return phoneme.rstrip("012")


@dataclass
class PronLexicon:
    """Pronunciations per word plus unigram counts from training text.

    Attributes:
        prons: Word to pronunciations, most frequently observed first.
        counts: Word unigram counts; in-corpus words have count >= 1.
    """

    prons: dict[str, list[Pronunciation]] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for word, variants in self.prons.items():
            if not variants or any(not pron for pron in variants):
                raise StructuralInputError("empty pronunciation in lexicon", word=word)

    def __len__(self) -> int:
        return len(self.prons)

    def count(self, word: str) -> int:
        """Unigram count of a word, 0 when unseen."""
        return self.counts.get(word, 0)

    def primary(self, word: str) -> Pronunciation | None:
        """Most frequently observed pronunciation of a word."""
        variants = self.prons.get(word)
        return variants[0] if variants else None

    @classmethod
    def from_records(cls, records: Iterable[TrainingRecord]) -> PronLexicon:
        """Collect pronunciations from force-aligned training phones.

        Each target word's phones become one observed pronunciation; variants
        are ordered by observation count, then lexicographically.
        """
        observed: dict[str, Counter[Pronunciation]] = {}
        counts: Counter[str] = Counter()
        for record in records:
            groups = record.words_phonemes()
            if len(groups) != len(record.target_words):
                raise StructuralInputError(
                    "record phones do not cover its target words",
                    record_id=record.id,
                    words=len(record.target_words),
                    phone_groups=len(groups),
                )
            for word, phones in zip(record.target_words, groups, strict=True):
                observed.setdefault(word, Counter())[tuple(phones)] += 1
                counts[word] += 1
        prons = {
            word: [pron for pron, _ in sorted(variants.items(), key=lambda item: (-item[1], item[0]))]
            for word, variants in sorted(observed.items())
        }
        logger.info("lexicon_built", words=len(prons), pronunciations=sum(len(v) for v in prons.values()))
        return cls(prons=prons, counts=dict(sorted(counts.items())))

    @classmethod
    def from_lines(cls, lines: Iterable[str], counts: dict[str, int] | None = None) -> PronLexicon:
        """Parse ``WORD  PH PH PH`` lines; repeated words add alternate pronunciations.

        Blank lines and ``#`` comments are skipped. Words without a count in
        ``counts`` get count 1.
        """
        prons: dict[str, list[Pronunciation]] = {}
        for number, line in enumerate(lines, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split()
            if len(parts) < 2:
                raise StructuralInputError("lexicon line has no pronunciation", line=number)
            variants = prons.setdefault(parts[0], [])
            pron = tuple(parts[1:])
            if pron not in variants:
                variants.append(pron)
        given = counts or {}
        return cls(prons=prons, counts={word: given.get(word, 1) for word in prons})

    def to_lines(self) -> list[str]:
        """Lexicon file lines, words sorted, variants in frequency order."""
        return [f"{word}  {' '.join(pron)}" for word in sorted(self.prons) for pron in self.prons[word]]

    @cached_property
    def inverse(self) -> dict[Pronunciation, set[str]]:
        """Exact pronunciation to candidate words."""
        return invert_lexicon(self)

    @cached_property
    def _stripped(self) -> list[tuple[Pronunciation, str]]:
        return sorted(
            (tuple(strip_stress(ph) for ph in pron), word) for word, variants in self.prons.items() for pron in variants
        )


def invert_lexicon(lexicon: PronLexicon) -> dict[Pronunciation, set[str]]:
    """Exact-string inverse multimap: pronunciation to the words that have it."""
    inverse: dict[Pronunciation, set[str]] = {}
    for word, variants in lexicon.prons.items():
        for pron in variants:
            inverse.setdefault(pron, set()).add(word)
    return inverse


def _most_frequent(words: Iterable[str], lexicon: PronLexicon) -> str:
    return min(words, key=lambda word: (-lexicon.count(word), word))


def phone_group_to_word(phones: Sequence[str], lexicon: PronLexicon) -> str:
    """Resolve one word's phones to a word, falling back to an OOV marker."""
    pron = tuple(phones)
    candidates = lexicon.inverse.get(pron)
    if candidates:
        return _most_frequent(candidates, lexicon)

    target = tuple(strip_stress(ph) for ph in pron)
    best: tuple[int, int, str] | None = None
    for stripped, word in lexicon._stripped:
        distance = Levenshtein.distance(stripped, target, score_cutoff=MAX_EDIT_DISTANCE)
        if distance > MAX_EDIT_DISTANCE:
            continue
        key = (distance, -lexicon.count(word), word)
        if best is None or key < best:
            best = key
    if best is not None:
        return best[2]
    return OOV_JOINER.join(ph.lower() for ph in pron)


def phones_to_words(groups: Sequence[Sequence[str]], lexicon: PronLexicon) -> list[str]:
    """Map word-grouped phonemes (as delimited by EOW) to words.

    Total: every group yields exactly one output token.
    """
    return [phone_group_to_word(group, lexicon) for group in groups]


def recovery_rate(lexicon: PronLexicon) -> tuple[int, int, float]:
    """Exact word recovery over the unambiguous vocabulary.

    A word is unambiguous when its primary pronunciation belongs to no other
    word. Returns ``(recovered, total, rate)``; the rate is 1.0 on an empty set.
    """
    recovered = total = 0
    for word in sorted(lexicon.prons):
        pron = lexicon.primary(word)
        if pron is None or lexicon.inverse.get(pron) != {word}:
            continue
        total += 1
        recovered += phone_group_to_word(pron, lexicon) == word
    rate = recovered / total if total else 1.0
    return recovered, total, rate

"""Synthetic duration-annotated corpus for tests and trend experiments.

Sentences are drawn from a tiny German-to-English grammar and translated word
by word, with random target synonyms of different lengths. Each target word
is spoken with a toy ARPAbet pronunciation. Phone durations depend on the
phone class, a per-utterance speaking rate and per-phone jitter. Some word
boundaries carry pauses of 350-700 ms, so segment timing is only predictable
from the source durations, not from the text.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from aumos_dubbing.core.models import AlignedUtterance, PhoneEvent
from aumos_dubbing.core.p2w import PronLexicon, Pronunciation

# source word -> target synonyms
_NOUNS = {
    "katze": ("cat",),
    "katzen": ("cats",),
    "katzes": ("cat's",),
    "hund": ("dog",),
    "hunde": ("dogs",),
    "haus": ("house", "home"),
    "baum": ("tree",),
    "wasser": ("water",),
    "garten": ("garden",),
}
_ADJECTIVES = {
    "gut": ("good", "fine"),
    "gross": ("big", "large"),
    "klein": ("small", "little"),
    "rot": ("red",),
    "alt": ("old",),
    "neu": ("new",),
}
_VERBS = {
    "sieht": ("sees", "watches"),
    "mag": ("likes", "enjoys"),
    "trinkt": ("drinks",),
    "läuft": ("runs",),
    "schläft": ("sleeps",),
}
_ADVERBS = {
    "heute": ("today",),
    "morgen": ("tomorrow",),
    "schnell": ("quickly", "fast"),
    "langsam": ("slowly",),
}
_CONJUNCTION = ("und", "and")
_PLACE = ("im garten", "in the garden")
_IDIOM = ("lass es gut sein", ("let", "well", "alone"))

TOY_LEXICON: dict[str, tuple[Pronunciation, ...]] = {
    "the": (("DH", "AH0"),),
    "cat": (("K", "AE1", "T"),),
    "cats": (("K", "AE1", "T", "S"),),
    "cat's": (("K", "AE1", "T", "S"),),
    "dog": (("D", "AO1", "G"),),
    "dogs": (("D", "AO1", "G", "Z"),),
    "house": (("HH", "AW1", "S"),),
    "home": (("HH", "OW1", "M"),),
    "tree": (("T", "R", "IY1"),),
    "water": (("W", "AO1", "T", "ER0"),),
    "garden": (("G", "AA1", "R", "D", "AH0", "N"),),
    "good": (("G", "UH1", "D"),),
    "fine": (("F", "AY1", "N"),),
    "big": (("B", "IH1", "G"),),
    "large": (("L", "AA1", "R", "JH"),),
    "small": (("S", "M", "AO1", "L"),),
    "little": (("L", "IH1", "T", "AH0", "L"),),
    "red": (("R", "EH1", "D"),),
    "old": (("OW1", "L", "D"),),
    "new": (("N", "UW1"),),
    "sees": (("S", "IY1", "Z"),),
    "watches": (("W", "AA1", "CH", "AH0", "Z"),),
    "likes": (("L", "AY1", "K", "S"),),
    "enjoys": (("EH0", "N", "JH", "OY1", "Z"),),
    "drinks": (("D", "R", "IH1", "NG", "K", "S"),),
    "runs": (("R", "AH1", "N", "Z"),),
    "sleeps": (("S", "L", "IY1", "P", "S"),),
    "today": (("T", "AH0", "D", "EY1"),),
    "tomorrow": (("T", "AH0", "M", "AA1", "R", "OW2"),),
    "quickly": (("K", "W", "IH1", "K", "L", "IY0"),),
    "fast": (("F", "AE1", "S", "T"),),
    "slowly": (("S", "L", "OW1", "L", "IY0"),),
    "in": (("IH0", "N"),),
    "and": (("AE1", "N", "D"), ("AH0", "N", "D")),
    "let": (("L", "EH1", "T"),),
    "well": (("W", "EH1", "L"),),
    "alone": (("AH0", "L", "OW1", "N"),),
}

VOWEL_MS = 85.0
CONSONANT_MS = 55.0
PHONE_JITTER = 0.15
RATE_RANGE = (0.6, 1.5)
PAUSE_MS_RANGE = (350, 700)
PAUSE_COUNT_PROBS = (0.6, 0.3, 0.1)
IDIOM_PROB = 0.05


@dataclass(frozen=True)
class ToyCorpus:
    """Generated utterances plus the lexicon their phones were drawn from."""

    utterances: tuple[AlignedUtterance, ...]
    lexicon: PronLexicon


def toy_lexicon() -> PronLexicon:
    """The toy pronunciation lexicon, every word with count 1."""
    return PronLexicon(
        prons={word: list(prons) for word, prons in TOY_LEXICON.items()},
        counts=dict.fromkeys(TOY_LEXICON, 1),
    )


def _pick(rng: np.random.Generator, options: Sequence[str]) -> str:
    return options[int(rng.integers(len(options)))]


def _clause(rng: np.random.Generator) -> list[tuple[str, str]]:
    pairs: list[tuple[str, str]] = [("der", "the")]
    if rng.random() < 0.5:
        adjective = _pick(rng, sorted(_ADJECTIVES))
        pairs.append((adjective, _pick(rng, _ADJECTIVES[adjective])))
    noun = _pick(rng, sorted(_NOUNS))
    pairs.append((noun, _pick(rng, _NOUNS[noun])))
    verb = _pick(rng, sorted(_VERBS))
    pairs.append((verb, _pick(rng, _VERBS[verb])))
    if rng.random() < 0.4:
        adverb = _pick(rng, sorted(_ADVERBS))
        pairs.append((adverb, _pick(rng, _ADVERBS[adverb])))
    if rng.random() < 0.2:
        pairs.append(_PLACE)
    return pairs


def _sentence(rng: np.random.Generator) -> tuple[str, list[str]]:
    if rng.random() < IDIOM_PROB:
        return _IDIOM[0], list(_IDIOM[1])
    pairs = _clause(rng)
    if rng.random() < 0.35:
        pairs.append(_CONJUNCTION)
        pairs.extend(_clause(rng))
    source = " ".join(src for src, _ in pairs)
    return source, " ".join(tgt for _, tgt in pairs).split()


def _phone_ms(rng: np.random.Generator, phoneme: str, rate: float) -> int:
    base = VOWEL_MS if phoneme[-1].isdigit() else CONSONANT_MS
    return max(20, int(round(base * rate * rng.lognormal(0.0, PHONE_JITTER))))


def _utterance(rng: np.random.Generator, index: int) -> AlignedUtterance:
    source, words = _sentence(rng)
    rate = float(rng.uniform(*RATE_RANGE))
    boundaries = len(words) - 1
    n_pauses = min(boundaries, int(rng.choice(len(PAUSE_COUNT_PROBS), p=PAUSE_COUNT_PROBS)))
    pause_after = set(rng.choice(boundaries, size=n_pauses, replace=False).tolist()) if n_pauses else set()

    phones: list[PhoneEvent] = []
    clock = int(rng.integers(100, 300))
    for word_idx, word in enumerate(words):
        variants = TOY_LEXICON[word]
        pron = variants[int(rng.integers(len(variants)))]
        for phoneme in pron:
            duration = _phone_ms(rng, phoneme, rate)
            phones.append(PhoneEvent(label=phoneme, start_ms=clock, end_ms=clock + duration, word_idx=word_idx))
            clock += duration
        if word_idx in pause_after:
            clock += int(rng.integers(PAUSE_MS_RANGE[0], PAUSE_MS_RANGE[1] + 1))
        else:
            clock += int(rng.integers(0, 40))
    return AlignedUtterance(id=f"toy-{index:05d}", source_text=source, target_words=tuple(words), phones=tuple(phones))


def generate_toy_corpus(n: int, seed: int = 1) -> ToyCorpus:
    """Generate ``n`` aligned utterances, deterministic in ``seed``."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    rng = np.random.default_rng(seed)
    utterances = tuple(_utterance(rng, index) for index in range(n))
    return ToyCorpus(utterances=utterances, lexicon=toy_lexicon())

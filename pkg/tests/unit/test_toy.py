"""Tests for aumos_dubbing.core.toy.

Covers:
- Determinism in the seed
- Every generated utterance passes alignment validation
- Pauses appear in a share of utterances at the default threshold
- Every target word is in the toy lexicon
"""
from __future__ import annotations

import pytest

from aumos_dubbing.core.corpus import detect_pauses, validate_utterance
from aumos_dubbing.core.toy import TOY_LEXICON, ToyCorpus, generate_toy_corpus


class TestGenerateToyCorpus:
    """Synthetic corpus generation."""

    def test_same_seed_same_corpus(self) -> None:
        """Generation is a pure function of (n, seed)."""
        assert generate_toy_corpus(20, seed=4) == generate_toy_corpus(20, seed=4)
        assert generate_toy_corpus(20, seed=4) != generate_toy_corpus(20, seed=5)

    def test_ids_are_sequential(self, toy_corpus: ToyCorpus) -> None:
        """Ids are toy-00000, toy-00001, ..."""
        assert [u.id for u in toy_corpus.utterances[:3]] == ["toy-00000", "toy-00001", "toy-00002"]

    def test_utterances_are_valid(self, toy_corpus: ToyCorpus) -> None:
        """Every utterance satisfies the alignment invariants."""
        for utt in toy_corpus.utterances:
            validate_utterance(utt)

    def test_some_utterances_pause(self, toy_corpus: ToyCorpus) -> None:
        """Roughly 40% of utterances carry a pause of 350 ms or more."""
        paused = sum(1 for utt in toy_corpus.utterances if detect_pauses(utt.phones, 300))
        assert 0 < paused < len(toy_corpus.utterances)

    def test_target_words_are_in_lexicon(self, toy_corpus: ToyCorpus) -> None:
        """Phones were drawn from lexicon pronunciations."""
        for utt in toy_corpus.utterances:
            for index, word in enumerate(utt.target_words):
                phones = tuple(p.label for p in utt.phones if p.word_idx == index)
                assert phones in TOY_LEXICON[word]
        assert len(toy_corpus.lexicon) == len(TOY_LEXICON)

    def test_non_positive_size_raises(self) -> None:
        """At least one utterance is generated."""
        with pytest.raises(ValueError):
            generate_toy_corpus(0)

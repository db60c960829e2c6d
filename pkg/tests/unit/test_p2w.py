"""Tests for aumos_dubbing.core.p2w.

Covers:
- Lexicon construction from records and from lexicon lines
- Homophone resolution by unigram count, ties lexicographic
- Nearest-entry fallback within one phoneme edit, stress ignored
- OOV marker for unknown pronunciations
- Exact recovery rate on the toy lexicon
"""
from __future__ import annotations

import pytest

from aumos_dubbing.core.models import TargetPhone, TrainingRecord
from aumos_dubbing.core.p2w import (
    PronLexicon,
    invert_lexicon,
    phone_group_to_word,
    phones_to_words,
    recovery_rate,
    strip_stress,
)
from aumos_dubbing.core.toy import toy_lexicon
from aumos_dubbing.errors import StructuralInputError


def _lexicon(counts: dict[str, int] | None = None) -> PronLexicon:
    """Small lexicon with the cats / cat's homophone pair."""
    lines = [
        "cat  K AE1 T",
        "cats  K AE1 T S",
        "cat's  K AE1 T S",
        "dog  D AO1 G",
        "and  AE1 N D",
        "and  AH0 N D",
    ]
    return PronLexicon.from_lines(lines, counts)


def _record(record_id: str, words: list[tuple[str, list[str]]]) -> TrainingRecord:
    """Helper to build a record from (word, phones) pairs."""
    phones = tuple(TargetPhone(ph, 5, i) for i, (_, pron) in enumerate(words) for ph in pron)
    return TrainingRecord(
        id=record_id,
        source_text="x",
        segment_durations_ms=(100,),
        target_phones=phones,
        target_words=tuple(word for word, _ in words),
    )


class TestHelpers:
    """Stress stripping."""

    def test_strip_stress(self) -> None:
        """Trailing stress digits are dropped."""
        assert [strip_stress(p) for p in ("EH1", "AH0", "OW2", "K")] == ["EH", "AH", "OW", "K"]


class TestPronLexicon:
    """Building and serializing lexicons."""

    def test_from_lines_collects_variants(self) -> None:
        """Repeated words add alternate pronunciations in file order."""
        lexicon = _lexicon()
        assert lexicon.prons["and"] == [("AE1", "N", "D"), ("AH0", "N", "D")]
        assert lexicon.count("cat") == 1
        assert lexicon.count("zebra") == 0

    def test_line_without_pronunciation_raises(self) -> None:
        """Every line needs a word and at least one phoneme."""
        with pytest.raises(StructuralInputError):
            PronLexicon.from_lines(["cat"])

    def test_to_lines_round_trip(self) -> None:
        """to_lines output parses back to the same lexicon."""
        lexicon = _lexicon()
        assert PronLexicon.from_lines(lexicon.to_lines()).prons == lexicon.prons

    def test_from_records_orders_variants_by_frequency(self) -> None:
        """The most observed pronunciation becomes primary."""
        records = [
            _record("a", [("and", ["AH0", "N", "D"]), ("dog", ["D", "AO1", "G"])]),
            _record("b", [("and", ["AH0", "N", "D"])]),
            _record("c", [("and", ["AE1", "N", "D"])]),
        ]
        lexicon = PronLexicon.from_records(records)
        assert lexicon.primary("and") == ("AH0", "N", "D")
        assert lexicon.prons["and"][1] == ("AE1", "N", "D")
        assert lexicon.count("and") == 3
        assert lexicon.count("dog") == 1

    def test_from_records_rejects_uncovered_words(self) -> None:
        """Every target word needs a phone group."""
        record = TrainingRecord(
            id="bad",
            source_text="x",
            segment_durations_ms=(100,),
            target_phones=(TargetPhone("K", 3, 0),),
            target_words=("cat", "dog"),
        )
        with pytest.raises(StructuralInputError):
            PronLexicon.from_records([record])

    def test_inverse_is_a_multimap(self) -> None:
        """Homophones share one inverse entry."""
        inverse = invert_lexicon(_lexicon())
        assert inverse[("K", "AE1", "T", "S")] == {"cats", "cat's"}
        assert inverse[("AH0", "N", "D")] == {"and"}


class TestPhonesToWords:
    """Resolving phone groups to words."""

    def test_homophone_tie_breaks_lexicographically(self) -> None:
        """With equal counts, cat's sorts before cats."""
        assert phone_group_to_word(["K", "AE1", "T", "S"], _lexicon()) == "cat's"

    def test_homophone_resolved_by_count(self) -> None:
        """The more frequent homophone wins."""
        lexicon = _lexicon({"cats": 5, "cat's": 1})
        assert phone_group_to_word(["K", "AE1", "T", "S"], lexicon) == "cats"

    def test_any_variant_maps_back(self) -> None:
        """Both pronunciations of 'and' resolve to 'and'."""
        assert phones_to_words([["AE1", "N", "D"], ["AH0", "N", "D"]], _lexicon()) == ["and", "and"]

    def test_stress_mismatch_falls_back_to_nearest(self) -> None:
        """K AE0 T matches cat once stress is ignored."""
        assert phone_group_to_word(["K", "AE0", "T"], _lexicon()) == "cat"

    def test_one_edit_falls_back_to_nearest(self) -> None:
        """D AO1 G Z is one insertion away from dog."""
        assert phone_group_to_word(["D", "AO1", "G", "Z"], _lexicon()) == "dog"

    def test_substitution_falls_back_to_nearest(self) -> None:
        """K AE1 D is one substitution away from cat and two from and."""
        assert phone_group_to_word(["K", "AE1", "D"], _lexicon()) == "cat"

    def test_two_edits_stay_oov(self) -> None:
        """A swapped pair costs two edits, beyond the fallback radius."""
        assert phone_group_to_word(["D", "G", "AO1"], _lexicon()) == "d_g_ao1"

    def test_unknown_pronunciation_becomes_oov_marker(self) -> None:
        """Far-off groups are spelled out."""
        assert phone_group_to_word(["Z", "Z", "Z"], _lexicon()) == "z_z_z"

    def test_mapping_is_total(self) -> None:
        """One output word per group, whatever the groups are."""
        groups = [["K", "AE1", "T"], ["Q"], ["D", "AO1", "G"]]
        assert len(phones_to_words(groups, _lexicon())) == 3


class TestRecoveryRate:
    """Word recovery over the unambiguous vocabulary."""

    def test_toy_lexicon_recovers_every_unambiguous_word(self) -> None:
        """Only the cats / cat's pair is ambiguous in the toy lexicon."""
        recovered, total, rate = recovery_rate(toy_lexicon())
        assert total == 35
        assert recovered == 35
        assert rate == 1.0

    def test_empty_lexicon_rate_is_one(self) -> None:
        """Nothing to recover counts as full recovery."""
        assert recovery_rate(PronLexicon()) == (0, 0, 1.0)

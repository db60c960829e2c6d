"""Token vocabularies, BPE and the interleaved phoneme/duration target format.

Source side: BPE-encoded text, then ``DELIM`` and one ``BIN<i>`` token per
segment, then EOS. Target side (phoneme modes): a closed vocabulary of
phonemes and integer duration tokens, interleaved as

    L 10 EH1 6 T 15 EOW W 4 EH1 6 L 7 EOW ... PAUSE ... EOS

Every phoneme is followed by exactly one duration token, each word is closed
by EOW and segments are separated by PAUSE. The decoder accepts this grammar
and repairs malformed model output instead of failing.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

from aumos_dubbing.core.binning import DEFAULT_BIN_COUNT, bin_token, bin_tokens
from aumos_dubbing.core.models import DecodedTarget, TrainingRecord
from aumos_dubbing.errors import InsufficientDataError, VocabularyError
from aumos_dubbing.observability import get_logger

logger = get_logger(__name__)

PAD = "<pad>"
BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
DELIM = "DELIM"
EOW = "EOW"
PAUSE = "PAUSE"

SPECIALS: tuple[str, ...] = (PAD, BOS, EOS, UNK, DELIM, EOW, PAUSE)
PAD_ID, BOS_ID, EOS_ID, UNK_ID, DELIM_ID, EOW_ID, PAUSE_ID = range(len(SPECIALS))

END_OF_WORD = "</w>"
DEFAULT_MAX_FRAMES = 128


class VocabKind(str, Enum):
    """Whether a vocabulary is open (BPE text, unknowns map to UNK) or closed."""

    TEXT_BPE = "text-bpe"
    PHONEME_CLOSED = "phoneme-closed"


class Vocabulary:
    """Token to id bijection with the special tokens at ids 0..6.

    Args:
        tokens: Non-special tokens in id order; duplicates and specials are skipped.
        kind: Open BPE text vocabulary or closed phoneme vocabulary.
    """

    def __init__(self, tokens: Iterable[str], kind: VocabKind) -> None:
        self.kind = kind
        ordered: list[str] = list(SPECIALS)
        seen = set(ordered)
        for token in tokens:
            if token not in seen:
                ordered.append(token)
                seen.add(token)
        self._tokens: tuple[str, ...] = tuple(ordered)
        self._ids: dict[str, int] = {token: index for index, token in enumerate(self._tokens)}

    @classmethod
    def from_file_tokens(cls, tokens: Sequence[str], kind: VocabKind) -> Vocabulary:
        """Rebuild a vocabulary from its file form (specials first, one token per id).

        Raises:
            VocabularyError: If the file does not start with the special tokens.
        """
        if tuple(tokens[: len(SPECIALS)]) != SPECIALS:
            raise VocabularyError("vocabulary file does not start with the special tokens")
        return cls(tokens[len(SPECIALS) :], kind)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: object) -> bool:
        return token in self._ids

    @property
    def tokens(self) -> tuple[str, ...]:
        """All tokens in id order, specials included."""
        return self._tokens

    def id_of(self, token: str) -> int:
        """Return the id of a token; unknown tokens map to UNK in open vocabularies.

        Raises:
            VocabularyError: For unknown tokens in a closed vocabulary.
        """
        index = self._ids.get(token)
        if index is not None:
            return index
        if self.kind is VocabKind.PHONEME_CLOSED:
            raise VocabularyError("token not in closed vocabulary", token=token)
        return UNK_ID

    def encode(self, tokens: Iterable[str]) -> list[int]:
        """Map tokens to ids."""
        return [self.id_of(token) for token in tokens]

    def token_of(self, index: int) -> str:
        """Return the token for an id; out-of-range ids decode to UNK."""
        if 0 <= index < len(self._tokens):
            return self._tokens[index]
        return UNK

    def decode(self, ids: Iterable[int]) -> list[str]:
        """Map ids to tokens."""
        return [self.token_of(int(index)) for index in ids]

    def digest(self) -> str:
        """Content hash pinning checkpoints to this vocabulary."""
        payload = "\n".join((self.kind.value, *self._tokens))
        return hashlib.sha256(payload.encode()).hexdigest()


def _word_symbols(word: str) -> tuple[str, ...]:
    return (*word[:-1], word[-1] + END_OF_WORD)


@dataclass(frozen=True)
class BpeModel:
    """Ordered BPE merge rules over characters with an end-of-word marker.

    Attributes:
        merges: Merge rules in priority order.
        vocab_size: Symbol budget the model was trained with.
        alphabet: Initial character symbols seen in training.
    """

    merges: tuple[tuple[str, str], ...]
    vocab_size: int
    alphabet: tuple[str, ...] = ()
    _cache: dict[str, tuple[str, ...]] = field(default_factory=dict, init=False, repr=False, compare=False)

    @cached_property
    def _ranks(self) -> dict[tuple[str, str], int]:
        return {pair: rank for rank, pair in enumerate(self.merges)}

    def symbols(self) -> list[str]:
        """Alphabet followed by merged symbols, without duplicates."""
        ordered = list(self.alphabet)
        seen = set(ordered)
        for left, right in self.merges:
            merged = left + right
            if merged not in seen:
                ordered.append(merged)
                seen.add(merged)
        return ordered

    def encode_word(self, word: str) -> tuple[str, ...]:
        """Apply the merges to one whitespace-free word."""
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        symbols = list(_word_symbols(word))
        ranks = self._ranks
        while len(symbols) > 1:
            candidates = [
                (ranks[pair], i)
                for i, pair in enumerate(zip(symbols, symbols[1:], strict=False))
                if pair in ranks
            ]
            if not candidates:
                break
            best_rank = min(candidates)[0]
            symbols = list(_merge_pair(tuple(symbols), self.merges[best_rank]))
        result = tuple(symbols)
        self._cache[word] = result
        return result

    def encode(self, text: str) -> list[str]:
        """Split text on whitespace and BPE-encode every word."""
        return [symbol for word in text.split() for symbol in self.encode_word(word)]

    @staticmethod
    def decode(symbols: Iterable[str]) -> str:
        """Detokenize BPE symbols back to whitespace-joined text."""
        text = "".join(symbol for symbol in symbols if symbol not in SPECIALS)
        return " ".join(text.replace(END_OF_WORD, " ").split())


def train_bpe(corpus_lines: Iterable[str], vocab_size: int) -> BpeModel:
    """Learn BPE merges greedily by pair frequency.

    Merges the most frequent adjacent symbol pair (ties broken by the
    lexicographically smallest pair) until the symbol inventory reaches
    ``vocab_size`` or no pair occurs at least twice.

    Args:
        corpus_lines: Training text, one sentence per line.
        vocab_size: Maximum number of symbols (alphabet plus merges).

    Returns:
        The trained BpeModel.

    Raises:
        InsufficientDataError: On an empty corpus.
        VocabularyError: If ``vocab_size`` is smaller than the character inventory.
    """
    word_counts: Counter[str] = Counter(word for line in corpus_lines for word in line.split())
    if not word_counts:
        raise InsufficientDataError("cannot train BPE on an empty corpus")

    words: dict[tuple[str, ...], int] = {}
    for word, count in word_counts.items():
        symbols = _word_symbols(word)
        words[symbols] = words.get(symbols, 0) + count
    alphabet = sorted({symbol for symbols in words for symbol in symbols})
    if vocab_size < len(alphabet):
        raise VocabularyError(
            "BPE vocabulary smaller than the character inventory",
            vocab_size=vocab_size,
            alphabet=len(alphabet),
        )

    inventory = set(alphabet)
    merges: list[tuple[str, str]] = []
    while len(inventory) < vocab_size:
        pairs: Counter[tuple[str, str]] = Counter()
        for symbols, count in words.items():
            for pair in zip(symbols, symbols[1:], strict=False):
                pairs[pair] += count
        if not pairs:
            break
        best, frequency = min(pairs.items(), key=lambda item: (-item[1], item[0]))
        if frequency < 2:
            break
        merges.append(best)
        inventory.add(best[0] + best[1])
        words = {_merge_pair(symbols, best): count for symbols, count in words.items()}

    logger.info("bpe_trained", merges=len(merges), alphabet=len(alphabet), vocab_size=vocab_size)
    return BpeModel(merges=tuple(merges), vocab_size=vocab_size, alphabet=tuple(alphabet))


def _merge_pair(symbols: tuple[str, ...], pair: tuple[str, str]) -> tuple[str, ...]:
    merged: list[str] = []
    i = 0
    while i < len(symbols):
        if i < len(symbols) - 1 and (symbols[i], symbols[i + 1]) == pair:
            merged.append(pair[0] + pair[1])
            i += 2
        else:
            merged.append(symbols[i])
            i += 1
    return tuple(merged)


def build_source_vocab(bpe: BpeModel, k: int = DEFAULT_BIN_COUNT) -> Vocabulary:
    """Open source vocabulary: specials, BPE symbols and all k bin tokens."""
    return Vocabulary([*bpe.symbols(), *bin_tokens(k)], VocabKind.TEXT_BPE)


def build_text_vocab(bpe: BpeModel) -> Vocabulary:
    """Open target vocabulary for text output (StdMT)."""
    return Vocabulary(bpe.symbols(), VocabKind.TEXT_BPE)


def build_phoneme_vocab(phonemes: Iterable[str], max_frames: int = DEFAULT_MAX_FRAMES) -> Vocabulary:
    """Closed target vocabulary: specials, phonemes, then duration tokens 1..max_frames."""
    return Vocabulary(
        [*sorted(set(phonemes)), *(str(frames) for frames in range(1, max_frames + 1))],
        VocabKind.PHONEME_CLOSED,
    )


def encode_source(
    text: str,
    bins: Sequence[int],
    bpe: BpeModel,
    vocab: Vocabulary,
    k: int = DEFAULT_BIN_COUNT,
) -> list[int]:
    """Encode ``BPE(text) DELIM BIN<b1> ... BIN<bn> EOS``.

    Unknown characters become UNK; this never fails on text.

    Raises:
        InsufficientDataError: If ``bins`` is empty.
        VocabularyError: If a bin index is outside the k-bin vocabulary.
    """
    if not bins:
        raise InsufficientDataError("a duration-conditioned source needs at least one bin")
    tokens = [*bpe.encode(text), DELIM, *(bin_token(index, k) for index in bins), EOS]
    return vocab.encode(tokens)


def encode_plain_source(text: str, bpe: BpeModel, vocab: Vocabulary) -> list[int]:
    """Encode ``BPE(text) EOS`` for modes without duration input."""
    return vocab.encode([*bpe.encode(text), EOS])


@dataclass(frozen=True)
class TargetSequence:
    """Flat interleaved target tokens, EOS included."""

    tokens: tuple[str, ...]

    def ids(self, vocab: Vocabulary) -> list[int]:
        """Token ids in the given (closed) vocabulary."""
        return vocab.encode(self.tokens)

    def __str__(self) -> str:
        return " ".join(token for token in self.tokens if token not in (BOS, EOS, PAD))


def encode_target(
    record: TrainingRecord,
    vocab: Vocabulary | None = None,
    max_frames: int = DEFAULT_MAX_FRAMES,
) -> TargetSequence:
    """Interleave phonemes and frame counts with EOW and PAUSE markers.

    Durations above ``max_frames`` are clipped with a warning.

    Raises:
        VocabularyError: If a phoneme is not in the closed vocabulary.
    """
    breaks = set(record.segment_breaks)
    tokens: list[str] = []
    phones = record.target_phones
    for index, phone in enumerate(phones):
        if index in breaks:
            tokens.append(PAUSE)
        if vocab is not None and phone.phoneme not in vocab:
            raise VocabularyError("phoneme not in closed vocabulary", phoneme=phone.phoneme, record_id=record.id)
        frames = phone.frames
        if frames > max_frames:
            logger.warning(
                "duration_clipped", record_id=record.id, phoneme=phone.phoneme, frames=frames, max_frames=max_frames
            )
            frames = max_frames
        tokens.extend((phone.phoneme, str(frames)))
        if index == len(phones) - 1 or phones[index + 1].word_idx != phone.word_idx:
            tokens.append(EOW)
    tokens.append(EOS)
    return TargetSequence(tokens=tuple(tokens))


def encode_text_target(words: Sequence[str], bpe: BpeModel, vocab: Vocabulary) -> list[int]:
    """Encode target words as BPE text plus EOS (StdMT)."""
    return vocab.encode([*bpe.encode(" ".join(words)), EOS])


def _is_duration(token: str) -> bool:
    return token.isdigit()


def decode_target(seq: TargetSequence | Sequence[str]) -> DecodedTarget:
    """Parse an interleaved target back into words, frames and segment breaks.

    Decoding stops at the first EOS. Malformed output is repaired: a phoneme
    without a duration gets one frame, a duration without a phoneme is dropped,
    a word left open before PAUSE or at the end is closed, stray markers and
    unexpected special tokens are dropped. Each repair is counted.
    """
    tokens = seq.tokens if isinstance(seq, TargetSequence) else seq
    result = DecodedTarget()
    repairs = result.repairs
    current: list[tuple[str, int]] = []
    pending: str | None = None

    def flush_pending() -> None:
        nonlocal pending
        if pending is not None:
            current.append((pending, 1))
            repairs.missing_duration += 1
            pending = None

    def close_word() -> bool:
        nonlocal current
        if not current:
            return False
        result.words.append(current)
        current = []
        return True

    for token in tokens:
        if token == EOS:
            break
        if token in (PAD, BOS):
            continue
        if _is_duration(token):
            if pending is None:
                repairs.dangling_duration += 1
            else:
                current.append((pending, int(token)))
                pending = None
        elif token == EOW:
            flush_pending()
            if not close_word():
                repairs.stray_marker += 1
        elif token == PAUSE:
            flush_pending()
            if close_word():
                repairs.missing_eow += 1
            if result.words and (not result.segment_breaks or result.segment_breaks[-1] != len(result.words)):
                result.segment_breaks.append(len(result.words))
            else:
                repairs.stray_marker += 1
        elif token in SPECIALS:
            repairs.unknown_token += 1
        else:
            flush_pending()
            pending = token

    flush_pending()
    if close_word():
        repairs.missing_eow += 1
    if result.segment_breaks and result.segment_breaks[-1] == len(result.words):
        result.segment_breaks.pop()
        repairs.stray_marker += 1
    return result


def render_timing(seq: TargetSequence | Sequence[str] | DecodedTarget, frame_ms: int) -> list[int]:
    """Dub duration per segment: summed predicted frames times ``frame_ms``.

    This is the virtual synthesizer: speech is assumed to last exactly as long
    as the predicted phoneme durations.
    """
    decoded = seq if isinstance(seq, DecodedTarget) else decode_target(seq)
    if not decoded.words:
        return []
    return [frames * frame_ms for frames in decoded.segment_frames()]

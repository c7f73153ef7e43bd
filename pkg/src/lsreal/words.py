"""Mode alphabets and the canonical length-lexicographic word order.

Every matrix-valued object in this package (Markov families, Hankel blocks,
truncated series) lays its word axis out in length-lexicographic order:
words sorted by length first, then lexicographically by the alphabet's mode
order.  ``word_rank`` is the bijection from words to positions in that
layout; concatenation ranks are computed arithmetically from it, which is
what makes vectorized Hankel assembly possible.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

Word = tuple[str, ...]

EPSILON: Word = ()


@dataclass(frozen=True)
class Alphabet:
    """Ordered set of discrete modes.

    The order of ``modes`` is the fixed enumeration used for stacking output
    blocks, for word ranking and for every canonical index layout downstream.
    """

    modes: tuple[str, ...]

    def __post_init__(self):
        if len(self.modes) == 0:
            raise ValueError("alphabet needs at least one mode")
        if any(not isinstance(q, str) or not q for q in self.modes):
            raise ValueError("mode names must be nonempty strings")
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("mode names must be unique")

    @property
    def size(self) -> int:
        return len(self.modes)

    def index(self, mode: str) -> int:
        try:
            return self.modes.index(mode)
        except ValueError:
            raise KeyError(f"unknown mode {mode!r}") from None

    def __contains__(self, mode: str) -> bool:
        return mode in self.modes

    def __iter__(self) -> Iterator[str]:
        return iter(self.modes)

    def check_word(self, word: Sequence[str]) -> Word:
        w = tuple(word)
        for q in w:
            if q not in self.modes:
                raise KeyError(f"unknown mode {q!r} in word")
        return w


def word_count(n_modes: int, max_len: int) -> int:
    """Number of words of length at most ``max_len`` over ``n_modes`` symbols."""
    if max_len < 0:
        return 0
    return sum(n_modes ** k for k in range(max_len + 1))


def level_offsets(n_modes: int, max_len: int) -> np.ndarray:
    """Start position of each length level; ``offsets[k]`` is the rank of the
    first word of length ``k`` and ``offsets[max_len+1]`` the total count."""
    counts = [n_modes ** k for k in range(max_len + 1)]
    return np.concatenate(([0], np.cumsum(counts)))


def word_value(word: Word, alphabet: Alphabet) -> int:
    """Lexicographic position of ``word`` within its own length level."""
    val = 0
    for q in word:
        val = val * alphabet.size + alphabet.index(q)
    return val


def word_rank(word: Word, alphabet: Alphabet) -> int:
    """Position of ``word`` in the length-lexicographic enumeration."""
    return word_count(alphabet.size, len(word) - 1) + word_value(word, alphabet)


def word_from_rank(rank: int, alphabet: Alphabet) -> Word:
    """Inverse of :func:`word_rank`."""
    if rank < 0:
        raise ValueError("rank must be non-negative")
    d = alphabet.size
    length = 0
    while rank >= d ** length:
        rank -= d ** length
        length += 1
    digits = []
    for _ in range(length):
        rank, r = divmod(rank, d)
        digits.append(r)
    return tuple(alphabet.modes[i] for i in reversed(digits))


def enumerate_words(alphabet: Alphabet, maxlen: int) -> list[Word]:
    """All words of length at most ``maxlen`` in length-lexicographic order.

    The order is deterministic: length first, then lexicographic by the
    alphabet's mode order.  ``maxlen = 0`` yields ``[()]``.
    """
    if maxlen < 0:
        raise ValueError("maxlen must be non-negative")
    words: list[Word] = [EPSILON]
    level: list[Word] = [EPSILON]
    for _ in range(maxlen):
        level = [w + (q,) for w in level for q in alphabet.modes]
        words.extend(level)
    return words

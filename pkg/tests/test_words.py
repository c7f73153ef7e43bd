import pytest

from lsreal import Alphabet, enumerate_words
from lsreal.words import word_count, word_from_rank, word_rank


def test_enumeration_is_length_lex():
    ab = Alphabet(("a", "b"))
    assert enumerate_words(ab, 2) == [
        (),
        ("a",),
        ("b",),
        ("a", "a"),
        ("a", "b"),
        ("b", "a"),
        ("b", "b"),
    ]


def test_maxlen_zero():
    assert enumerate_words(Alphabet(("a",)), 0) == [()]


def test_two_symbol_count():
    # (2^4 - 1) / (2 - 1) words of length <= 3
    assert len(enumerate_words(Alphabet(("a", "b")), 3)) == 15
    assert word_count(2, 3) == 15


def test_single_symbol_count():
    assert word_count(1, 4) == 5
    assert enumerate_words(Alphabet(("a",)), 3) == [
        (),
        ("a",),
        ("a", "a"),
        ("a", "a", "a"),
    ]


@pytest.mark.parametrize("D", [1, 2, 3])
def test_rank_matches_enumeration(D):
    ab = Alphabet(tuple("abc"[:D]))
    for pos, w in enumerate(enumerate_words(ab, 4)):
        assert word_rank(w, ab) == pos
        assert word_from_rank(pos, ab) == w


def test_unknown_mode_rejected():
    ab = Alphabet(("a",))
    with pytest.raises(KeyError):
        ab.check_word(("a", "z"))


def test_alphabet_validation():
    with pytest.raises(ValueError):
        Alphabet(())
    with pytest.raises(ValueError):
        Alphabet(("a", "a"))

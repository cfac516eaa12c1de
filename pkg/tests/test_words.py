import itertools

import numpy as np
import pytest

from returnspectra.core.words import (
    Word,
    concat_prefix,
    enumerate_words,
    failure_function,
    kmp_transitions,
    map_word_blocks,
    tau,
    tau_block,
    word_block,
)
from returnspectra.utils.config import override_compute_config
from returnspectra.utils.errors import BudgetExceededError, DomainError


def w(text: str, K: int = 2) -> Word:
    return Word.from_string(text, K)


def brute_tau(symbols) -> int:
    n = len(symbols)
    for k in range(1, n + 1):
        if all(symbols[i + k] == symbols[i] for i in range(n - k)):
            return k
    return n


@pytest.mark.parametrize("text, expected", [("000", 1), ("010", 2), ("011", 3), ("0", 1), ("0110", 3)])
def test_tau_examples(text, expected):
    assert tau(w(text)) == expected


def test_tau_matches_overlap_definition():
    for n in range(1, 13):
        block = word_block(2, n, 0, 2 ** n)
        fast = tau_block(block)
        for row, value in zip(block, fast):
            symbols = tuple(int(a) for a in row)
            expected = brute_tau(symbols)
            assert tau(Word(symbols, 2)) == expected
            assert value == expected


def test_tau_is_one_only_for_constant_words():
    for symbols in itertools.product(range(3), repeat=4):
        word = Word(symbols, 3)
        assert 1 <= tau(word) <= 4
        assert (tau(word) == 1) == (len(set(symbols)) == 1)


def test_tau_of_self_concatenation_stays_within_length():
    for symbols in itertools.product(range(2), repeat=5):
        repeated = Word(symbols * 3, 2)
        assert tau(repeated) <= 5


def test_enumerate_words_order_and_count():
    assert [str(x) for x in enumerate_words(2, 1)] == ["0", "1"]
    assert len(list(enumerate_words(2, 2))) == 4
    words = [str(x) for x in enumerate_words(3, 3)]
    assert len(words) == 27
    assert words[0] == "000"
    assert words[-1] == "222"
    assert words == sorted(words)


def test_enumerate_words_range_split_matches_full_order():
    full = [x.symbols for x in enumerate_words(2, 6)]
    parts = [x.symbols for x in enumerate_words(2, 6, start=0, stop=20)]
    parts += [x.symbols for x in enumerate_words(2, 6, start=20, stop=64)]
    assert parts == full


def test_enumerate_words_budget():
    with pytest.raises(BudgetExceededError):
        list(enumerate_words(2, 30, budget=1000))


@pytest.mark.parametrize("text, expected", [("00", "000"), ("01", "0101"), ("0", "00")])
def test_concat_prefix_examples(text, expected):
    assert str(concat_prefix(w(text))) == expected


def test_concat_prefix_overlap_consistency():
    for symbols in itertools.product(range(2), repeat=6):
        word = Word(symbols, 2)
        out = concat_prefix(word)
        assert len(out) == 6 + tau(word)
        assert out.symbols[-6:] == symbols
        assert out.symbols[:6] == symbols


def test_word_validation():
    with pytest.raises(DomainError):
        Word((0, 2), 2)
    with pytest.raises(DomainError):
        Word((), 2)
    with pytest.raises(DomainError):
        Word.from_string("0a1", 2)


def test_word_rendering_large_alphabet():
    word = Word.from_string("0,11,3", 12)
    assert word.symbols == (0, 11, 3)
    assert str(word) == "0,11,3"
    assert str(w("0110")) == "0110"
    assert w("0110").index == 6


def test_failure_function_and_transitions():
    assert failure_function((0, 1, 0, 1)) == [-1, 0, 0, 1, 2]
    delta = kmp_transitions((0, 1), 2)
    np.testing.assert_array_equal(delta, [[1, 0], [1, 2]])
    delta = kmp_transitions((0, 0, 1), 2)
    # "00" 다음 0 이면 일치 길이 2 유지
    assert delta[2, 0] == 2
    assert delta[2, 1] == 3


def test_map_word_blocks_is_independent_of_workers():
    def block_fn(block):
        return int(block.sum())

    with override_compute_config(word_block_size=16):
        single = map_word_blocks(2, 9, block_fn, workers=1)
        threaded = map_word_blocks(2, 9, block_fn, workers=4)
    assert single == threaded
    assert len(single) == 2 ** 9 // 16
    assert sum(single) == 9 * 2 ** 8

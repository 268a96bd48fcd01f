"""Tests for src/evaluation/alignment.py - Levenshtein word alignment."""

import itertools
import random
from functools import lru_cache

import pytest

from src.evaluation.alignment import OpKind, align, edit_distance_table


def brute_force_distance(ref: tuple[str, ...], hyp: tuple[str, ...]) -> int:
    """Plain recursive edit distance."""

    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(ref):
            return len(hyp) - j
        if j == len(hyp):
            return len(ref) - i
        return min(
            go(i + 1, j + 1) + (ref[i] != hyp[j]),
            go(i + 1, j) + 1,
            go(i, j + 1) + 1,
        )

    return go(0, 0)


def all_sequences(alphabet: str, max_len: int):
    for n in range(max_len + 1):
        yield from itertools.product(alphabet, repeat=n)


class TestAlign:
    """Tests for align."""

    def test_identical(self):
        """Test identical inputs align as matches at zero cost."""
        alignment = align(["a", "b"], ["a", "b"])
        assert alignment.cost == 0
        assert alignment.count(OpKind.MATCH) == 2

    def test_empty_hypothesis(self):
        """Test every reference word is deleted against an empty hypothesis."""
        alignment = align(["a", "b", "c"], [])
        assert alignment.count(OpKind.DELETION) == 3
        assert alignment.cost == 3

    def test_empty_reference(self):
        """Test every hypothesis word is inserted against an empty reference."""
        alignment = align([], ["x", "y"])
        assert alignment.count(OpKind.INSERTION) == 2

    def test_both_empty(self):
        """Test two empty sequences give an empty script."""
        assert align([], []).ops == ()

    def test_single_substitution(self):
        """Test a one-word change is one substitution."""
        alignment = align("de kat zat".split(), "de kat zit".split())
        assert alignment.cost == 1
        assert alignment.count(OpKind.SUBSTITUTION) == 1
        sub = next(op for op in alignment.ops if op.kind is OpKind.SUBSTITUTION)
        assert (sub.ref, sub.hyp) == ("zat", "zit")

    def test_tie_prefers_substitution_over_deletion(self):
        """Test a cost tie keeps the substitution at the end of the script."""
        alignment = align(["a", "b"], ["c"])
        assert [op.kind for op in alignment.ops] == [OpKind.DELETION, OpKind.SUBSTITUTION]

    def test_tie_prefers_substitution_over_insertion(self):
        """Test a cost tie keeps the substitution and inserts earlier."""
        alignment = align(["a"], ["b", "c"])
        assert [op.kind for op in alignment.ops] == [OpKind.INSERTION, OpKind.SUBSTITUTION]

    def test_leading_deletions(self):
        """Test deletions before the first aligned word are counted."""
        alignment = align(["a", "b", "c"], ["c"])
        assert alignment.leading_deletions == 2

    def test_no_leading_deletions_after_match(self):
        """Test deletions after a match are not leading."""
        alignment = align(["a", "b", "c"], ["a"])
        assert alignment.count(OpKind.DELETION) == 2
        assert alignment.leading_deletions == 0

    def test_exhaustive_small_inputs(self):
        """Test cost and reconstruction against brute force for short sequences."""
        sequences = list(all_sequences("abc", 4))
        for ref in sequences:
            for hyp in sequences:
                alignment = align(list(ref), list(hyp))
                assert alignment.cost == brute_force_distance(ref, hyp)
                assert alignment.ref_words == list(ref)
                assert alignment.hyp_words == list(hyp)

    @pytest.mark.slow
    def test_exhaustive_up_to_six_words(self):
        """Test cost against brute force for every pair up to six words."""
        sequences = list(all_sequences("abc", 6))
        for ref in sequences:
            for hyp in sequences:
                assert align(list(ref), list(hyp)).cost == brute_force_distance(ref, hyp)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_inputs(self, seed):
        """Test random length-6 sequences against brute force."""
        rng = random.Random(seed)
        for _ in range(100):
            ref = tuple(rng.choice("abcd") for _ in range(rng.randint(0, 6)))
            hyp = tuple(rng.choice("abcd") for _ in range(rng.randint(0, 6)))
            alignment = align(list(ref), list(hyp))
            assert alignment.cost == brute_force_distance(ref, hyp)
            assert alignment.ref_words == list(ref)
            assert alignment.hyp_words == list(hyp)


class TestEditDistanceTable:
    """Tests for edit_distance_table."""

    def test_borders(self):
        """Test first row and column count insertions and deletions."""
        table = edit_distance_table(["a", "b"], ["x", "y", "z"])
        assert table[0] == [0, 1, 2, 3]
        assert [row[0] for row in table] == [0, 1, 2]

    def test_corner_is_distance(self):
        """Test the last cell holds the edit distance."""
        table = edit_distance_table(list("kitten"), list("sitting"))
        assert table[-1][-1] == 3

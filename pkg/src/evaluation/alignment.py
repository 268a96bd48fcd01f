"""Levenshtein word alignment with a fixed tie-break order."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence


class OpKind(str, Enum):
    MATCH = "match"
    SUBSTITUTION = "substitution"
    DELETION = "deletion"
    INSERTION = "insertion"


@dataclass(frozen=True)
class AlignmentOp:
    kind: OpKind
    ref: Optional[str] = None
    hyp: Optional[str] = None


@dataclass(frozen=True)
class Alignment:
    """Edit script turning a reference word list into a hypothesis."""

    ops: tuple[AlignmentOp, ...]

    def count(self, kind: OpKind) -> int:
        return sum(1 for op in self.ops if op.kind is kind)

    @property
    def cost(self) -> int:
        return sum(1 for op in self.ops if op.kind is not OpKind.MATCH)

    @property
    def ref_words(self) -> list[str]:
        return [op.ref for op in self.ops if op.ref is not None]

    @property
    def hyp_words(self) -> list[str]:
        return [op.hyp for op in self.ops if op.hyp is not None]

    @property
    def leading_deletions(self) -> int:
        """Deletions before the first match or substitution."""
        n = 0
        for op in self.ops:
            if op.kind in (OpKind.MATCH, OpKind.SUBSTITUTION):
                break
            if op.kind is OpKind.DELETION:
                n += 1
        return n


def edit_distance_table(ref: Sequence[str], hyp: Sequence[str]) -> list[list[int]]:
    """Full (len(ref)+1) x (len(hyp)+1) unit-cost edit distance table."""
    m, n = len(ref), len(hyp)
    table = [[0] * (n + 1) for _ in range(m + 1)]
    for i in range(m + 1):
        table[i][0] = i
    for j in range(n + 1):
        table[0][j] = j
    for i in range(1, m + 1):
        row, above = table[i], table[i - 1]
        for j in range(1, n + 1):
            diagonal = above[j - 1] + (ref[i - 1] != hyp[j - 1])
            row[j] = min(diagonal, above[j] + 1, row[j - 1] + 1)
    return table


def align(ref_words: Sequence[str], hyp_words: Sequence[str]) -> Alignment:
    """Minimal-cost alignment of two word lists.

    Ties are broken match > substitution > deletion > insertion while
    tracing back from the end of both sequences.

    Args:
        ref_words: Reference words
        hyp_words: Hypothesis words

    Returns:
        Alignment whose ref side reproduces ref_words and hyp side hyp_words
    """
    table = edit_distance_table(ref_words, hyp_words)
    i, j = len(ref_words), len(hyp_words)
    ops: list[AlignmentOp] = []
    while i > 0 or j > 0:
        here = table[i][j]
        if i > 0 and j > 0:
            same = ref_words[i - 1] == hyp_words[j - 1]
            if same and here == table[i - 1][j - 1]:
                ops.append(AlignmentOp(OpKind.MATCH, ref_words[i - 1], hyp_words[j - 1]))
                i, j = i - 1, j - 1
                continue
            if not same and here == table[i - 1][j - 1] + 1:
                ops.append(AlignmentOp(OpKind.SUBSTITUTION, ref_words[i - 1], hyp_words[j - 1]))
                i, j = i - 1, j - 1
                continue
        if i > 0 and here == table[i - 1][j] + 1:
            ops.append(AlignmentOp(OpKind.DELETION, ref=ref_words[i - 1]))
            i -= 1
            continue
        ops.append(AlignmentOp(OpKind.INSERTION, hyp=hyp_words[j - 1]))
        j -= 1
    ops.reverse()
    return Alignment(ops=tuple(ops))

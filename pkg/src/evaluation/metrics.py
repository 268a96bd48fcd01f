"""Corpus WER and rare-word / out-of-vocabulary breakdowns."""

from collections import Counter
from typing import Iterable, Mapping, Optional, Sequence

from pydantic import BaseModel, Field

from ..core.constants import DEFAULT_RARE_THRESHOLD
from ..core.errors import EvaluationError
from ..text.tokenizer import tokenize
from .alignment import Alignment, OpKind, align


class ErrorCounts(BaseModel):
    """Pooled alignment operation counts."""

    matches: int = 0
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    leading_deletions: int = 0

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def shares(self) -> dict[str, Optional[float]]:
        """Fraction of all errors contributed by each error type."""
        total = self.errors
        if total == 0:
            return {"substitutions": None, "deletions": None, "insertions": None}
        return {
            "substitutions": self.substitutions / total,
            "deletions": self.deletions / total,
            "insertions": self.insertions / total,
        }


class Totals(BaseModel):
    utterances: int = 0
    ref_words: int = 0
    hyp_words: int = 0
    rare_words: int = 0
    oov_words: int = 0
    rare_errors: int = 0
    oov_errors: int = 0


class EvalReport(BaseModel):
    """WER with optional rare/OOV rates; rates are None when their class is empty."""

    wer: float
    rwer: Optional[float] = None
    ower: Optional[float] = None
    counts: ErrorCounts = Field(default_factory=ErrorCounts)
    totals: Totals = Field(default_factory=Totals)

    @property
    def total_ref_words(self) -> int:
        return self.totals.ref_words

    @property
    def rare_word_count(self) -> int:
        return self.totals.rare_words

    @property
    def oov_word_count(self) -> int:
        return self.totals.oov_words

    @property
    def deletion_share(self) -> Optional[float]:
        return self.counts.shares()["deletions"]


def word_frequencies(training_corpus: Iterable[str]) -> dict[str, int]:
    """Normalized word counts, keys in sorted order."""
    counts = Counter(word for line in training_corpus for word in tokenize(line))
    return dict(sorted(counts.items()))


def _percent(errors: int, total: int) -> Optional[float]:
    return 100.0 * errors / total if total else None


def _align_pairs(pairs: Sequence[tuple[str, str]]) -> list[Alignment]:
    if not pairs:
        raise EvaluationError("No (reference, hypothesis) pairs to score")
    alignments = [align(tokenize(ref), tokenize(hyp)) for ref, hyp in pairs]
    if not any(a.ref_words for a in alignments):
        raise EvaluationError("All references are empty")
    return alignments


def _pool(alignments: Sequence[Alignment]) -> tuple[ErrorCounts, Totals]:
    counts = ErrorCounts()
    totals = Totals(utterances=len(alignments))
    for alignment in alignments:
        counts.matches += alignment.count(OpKind.MATCH)
        counts.substitutions += alignment.count(OpKind.SUBSTITUTION)
        counts.deletions += alignment.count(OpKind.DELETION)
        counts.insertions += alignment.count(OpKind.INSERTION)
        counts.leading_deletions += alignment.leading_deletions
        totals.ref_words += len(alignment.ref_words)
        totals.hyp_words += len(alignment.hyp_words)
    return counts, totals


def corpus_wer(pairs: Sequence[tuple[str, str]]) -> EvalReport:
    """Pooled WER: all errors over all reference words.

    Args:
        pairs: (reference, hypothesis) strings, normalized before scoring

    Raises:
        EvaluationError: If there are no pairs or every reference is empty
    """
    counts, totals = _pool(_align_pairs(pairs))
    return EvalReport(wer=_percent(counts.errors, totals.ref_words), counts=counts, totals=totals)


def breakdown_wer(
    pairs: Sequence[tuple[str, str]],
    freqs: Mapping[str, int],
    rare_threshold: int = DEFAULT_RARE_THRESHOLD,
) -> EvalReport:
    """WER plus rWER and oWER by training-set frequency of reference words.

    A reference word is OOV when its training count is 0 and rare when the
    count is below ``rare_threshold``. It is an error for its class when
    aligned to a substitution or deletion; insertions belong to no class.

    Args:
        pairs: (reference, hypothesis) strings
        freqs: Training word counts (from ``word_frequencies``)
        rare_threshold: Rarity cut-off (count < threshold)

    Raises:
        EvaluationError: If there are no pairs or every reference is empty
    """
    if rare_threshold < 1:
        raise ValueError(f"rare_threshold must be >= 1, got {rare_threshold}")
    alignments = _align_pairs(pairs)
    counts, totals = _pool(alignments)

    for alignment in alignments:
        for op in alignment.ops:
            if op.ref is None:
                continue
            freq = freqs.get(op.ref, 0)
            wrong = op.kind in (OpKind.SUBSTITUTION, OpKind.DELETION)
            if freq == 0:
                totals.oov_words += 1
                totals.oov_errors += wrong
            elif freq < rare_threshold:
                totals.rare_words += 1
                totals.rare_errors += wrong

    return EvalReport(
        wer=_percent(counts.errors, totals.ref_words),
        rwer=_percent(totals.rare_errors, totals.rare_words),
        ower=_percent(totals.oov_errors, totals.oov_words),
        counts=counts,
        totals=totals,
    )

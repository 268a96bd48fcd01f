"""Word alignment and error-rate reports."""

from .alignment import Alignment, AlignmentOp, OpKind, align
from .metrics import EvalReport, breakdown_wer, corpus_wer, word_frequencies

__all__ = [
    "Alignment",
    "AlignmentOp",
    "OpKind",
    "align",
    "EvalReport",
    "corpus_wer",
    "breakdown_wer",
    "word_frequencies",
]

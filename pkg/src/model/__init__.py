"""Toy encoder-decoder with subtitle prompting and weighted-attention decoding."""

from .decoding import DecodeOutput, greedy_decode
from .seq2seq import SubtitlePromptedSeq2Seq, forward, loss
from .training import TrainingExample, backward, gradient_check, train

__all__ = [
    "SubtitlePromptedSeq2Seq",
    "forward",
    "loss",
    "backward",
    "train",
    "gradient_check",
    "TrainingExample",
    "greedy_decode",
    "DecodeOutput",
]

"""Vocabulary, decoder-input layout and transcript filtering."""

from .prompt import DecoderInput, FilterVerdict, Role, assemble_decoder_input, hallucination_filter
from .tokenizer import Vocab, build_vocab, normalize_text, tokenize

__all__ = [
    "Vocab",
    "build_vocab",
    "normalize_text",
    "tokenize",
    "DecoderInput",
    "Role",
    "FilterVerdict",
    "assemble_decoder_input",
    "hallucination_filter",
]

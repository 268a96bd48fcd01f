"""Centralized constants shared by the toolkit modules.

These values are the defaults the configuration models fall back to and the
fixed vocabulary/format constants every stage agrees on.
"""

# Special tokens, in id order (specials occupy the lowest ids)
SOP_TOKEN = "<|sop|>"
SOT_TOKEN = "<|sot|>"
LANG_TOKEN = "<|lang|>"
TRANSCRIBE_TOKEN = "<|transcribe|>"
NOTIMESTAMPS_TOKEN = "<|notimestamps|>"
EOT_TOKEN = "<|eot|>"
UNK_TOKEN = "<|unk|>"
PAD_TOKEN = "<|pad|>"

SPECIAL_TOKENS = [
    SOP_TOKEN,
    SOT_TOKEN,
    LANG_TOKEN,
    TRANSCRIBE_TOKEN,
    NOTIMESTAMPS_TOKEN,
    EOT_TOKEN,
    UNK_TOKEN,
    PAD_TOKEN,
]

# Control block between the prompt and the transcript
TASK_TOKENS = [SOT_TOKEN, LANG_TOKEN, TRANSCRIBE_TOKEN, NOTIMESTAMPS_TOKEN]

# <|sop|> + 4 task tokens + <|eot|>
LAYOUT_OVERHEAD = 6

# Utterance limits
MAX_UTTERANCE_MS = 30_000

# Hallucination filter defaults
FILTER_MAX_TOKENS = 100
FILTER_MAX_REP_RATIO = 0.5
FILTER_MIN_TOKENS_FOR_REPETITION = 5

# Evaluation
DEFAULT_RARE_THRESHOLD = 10

# Feature sidecar format
FEATURE_MAGIC = b"SBRF"
FEATURE_SUFFIX = ".sbrf"

# Relevance weighting strategies
WA_STRATEGIES = ("none", "gini", "max", "entropy")

# Run directory layout
ITERATION_DIR_TEMPLATE = "iter{t}"
CHECKPOINT_DIR_NAME = "checkpoint"
MANIFEST_FILE_NAME = "manifest.jsonl"
METRICS_FILE_NAME = "metrics.json"
VOCAB_FILE_NAME = "vocab.json"
HYPOTHESES_FILE_NAME = "hypotheses.jsonl"
EVAL_REPORT_FILE_NAME = "report.json"


def is_valid_strategy(strategy: str) -> bool:
    """Check if a relevance weighting strategy name is supported.

    Args:
        strategy: Strategy name (e.g., "gini")

    Returns:
        True if supported, False otherwise
    """
    return strategy.lower() in WA_STRATEGIES


def normalize_strategy(strategy: str) -> str:
    """Normalize a weighting strategy name.

    Args:
        strategy: Strategy name in any case

    Returns:
        Lowercase strategy name

    Raises:
        ValueError: If the strategy is not supported
    """
    strategy_lower = strategy.lower()
    if strategy_lower in WA_STRATEGIES:
        return strategy_lower

    supported = ", ".join(WA_STRATEGIES)
    raise ValueError(f"Unsupported weighting strategy: {strategy}. Supported: {supported}")

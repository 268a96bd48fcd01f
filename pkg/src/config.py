"""Global configuration for the subrefine toolkit."""

import os
from pathlib import Path
from typing import Optional

from dotenv import dotenv_values, load_dotenv

from .core.errors import ConfigError
from .core.models import (
    ExperimentConfig,
    FilterConfig,
    IterationConfig,
    ModelConfig,
    OptimConfig,
    SynthConfig,
    WAConfig,
)

# Load environment variables from .env file
load_dotenv()

# Project root
PROJECT_ROOT = Path(__file__).parent.parent

# Data directories - configurable via environment variables
DATA_DIR = Path(os.getenv("SUBREFINE_DATA_DIR", str(PROJECT_ROOT / "data")))
RUNS_DIR = DATA_DIR / "runs"

LOG_LEVEL = os.getenv("SUBREFINE_LOG_LEVEL", "INFO").upper()

# Single-threaded torch keeps float reductions in a fixed order
TORCH_THREADS = int(os.getenv("SUBREFINE_TORCH_THREADS", "1"))

# Key-value config file sections -> model classes
CONFIG_SECTIONS = {
    "synth": SynthConfig,
    "model": ModelConfig,
    "optim": OptimConfig,
    "filter": FilterConfig,
    "wa": WAConfig,
    "iter": IterationConfig,
    "exp": ExperimentConfig,
}

# Experiment-level fields settable from the EXP section
_EXPERIMENT_SCALARS = {
    "strategies",
    "wa_layers",
    "include_no_prompt",
    "layer_sweep",
    "n_folds",
    "rare_threshold",
    "seed",
}


def ensure_directories():
    """Create required directories if they don't exist."""
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    RUNS_DIR.mkdir(parents=True, exist_ok=True)


def read_config_file(path: Path) -> dict[str, dict[str, str]]:
    """Read a KEY=VALUE config file into per-section overrides.

    Keys are ``<SECTION>_<FIELD>`` (case-insensitive), e.g. ``SYNTH_N_TRAIN=500``
    or ``OPTIM_LR=0.001``.

    Args:
        path: Path to the config file

    Returns:
        Mapping of section name to {field: raw string value}

    Raises:
        ConfigError: If the file is missing or a key is unknown
    """
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")

    sections: dict[str, dict[str, str]] = {}
    for key, value in dotenv_values(path).items():
        if value is None:
            raise ConfigError(f"Config key {key!r} has no value")
        section, _, field = key.lower().partition("_")
        model_cls = CONFIG_SECTIONS.get(section)
        if model_cls is None or not field:
            raise ConfigError(f"Unknown config key: {key}")
        if section == "exp":
            if field not in _EXPERIMENT_SCALARS:
                raise ConfigError(f"Unknown config key: {key}")
        elif field not in model_cls.model_fields:
            raise ConfigError(f"Unknown config key: {key}")
        sections.setdefault(section, {})[field] = value
    return sections


def _apply(model, overrides: dict[str, str]):
    try:
        return type(model).model_validate({**model.model_dump(), **overrides})
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _wa_grid(overrides: dict[str, str]) -> dict:
    """Grid fields implied by a WA section: one strategy, its layers, or no prompt at all."""
    wa = _apply(WAConfig(), overrides)
    updates = {}
    if "layers" in overrides:
        updates["wa_layers"] = wa.layers
    if "strategy" in overrides:
        updates["strategies"] = [wa.strategy]
    if not wa.use_prompt:
        updates.update(strategies=[], include_no_prompt=True)
    return updates


def load_experiment_config(
    config_path: Optional[Path] = None,
    seed: Optional[int] = None,
) -> ExperimentConfig:
    """Build the experiment configuration from defaults, a config file and a seed.

    A WA section narrows the grid (see ``_wa_grid``); EXP keys still win.

    Args:
        config_path: Optional KEY=VALUE config file
        seed: Optional seed propagated to every stage

    Returns:
        Validated experiment configuration
    """
    config = ExperimentConfig()
    if config_path is not None:
        sections = read_config_file(config_path)
        updates = {}
        for section in ("synth", "model", "optim", "filter"):
            if section in sections:
                updates[section] = _apply(getattr(config, section), sections[section])
        if "iter" in sections:
            updates["iteration"] = _apply(config.iteration, sections["iter"])
        if "wa" in sections:
            updates.update(_wa_grid(sections["wa"]))
        config = _apply(config.model_copy(update=updates), sections.get("exp", {}))
    if seed is not None:
        config = config.with_seed(seed)
    return config


def load_wa_config(config_path: Optional[Path] = None, **overrides) -> WAConfig:
    """Build a WA configuration from a config file's WA section plus overrides."""
    wa = WAConfig()
    if config_path is not None:
        wa = _apply(wa, read_config_file(config_path).get("wa", {}))
    cleaned = {k: v for k, v in overrides.items() if v is not None}
    return _apply(wa, cleaned) if cleaned else wa


def get_run_dir(name: str) -> Path:
    """Get the directory for a named run.

    Args:
        name: Run name

    Returns:
        Path under RUNS_DIR
    """
    return RUNS_DIR / name

"""Typed configuration models for every pipeline stage.

Each model validates its own bounds on construction; the CLI builds them from
defaults, an optional key-value config file and command-line overrides.
"""

from typing import Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from .constants import (
    DEFAULT_RARE_THRESHOLD,
    FILTER_MAX_REP_RATIO,
    FILTER_MAX_TOKENS,
    normalize_strategy,
)
from .errors import ConfigError


def _parse_layers(v):
    """Accept "all", a comma list ("0,1") or a list of ints."""
    if isinstance(v, str):
        v = v.strip().lower()
        if v == "all":
            return "all"
        return [int(part) for part in v.split(",") if part.strip()]
    return v


class SynthConfig(BaseModel):
    """Synthetic corpus generator settings."""

    n_word_types: int = Field(200, ge=2)
    zipf_exponent: float = Field(1.1, gt=0.0)
    n_train: int = Field(1000, ge=1)
    n_heldout: int = Field(200, ge=1)
    words_per_utt_min: int = Field(3, ge=1)
    words_per_utt_max: int = Field(12, ge=1)
    frames_per_word_min: int = Field(2, ge=1)
    frames_per_word_max: int = Field(6, ge=1)
    d_feat: int = Field(16, ge=1)
    feature_noise_sigma: float = Field(0.3, ge=0.0)
    frame_shift_ms: int = Field(40, ge=1)

    # Subtitle channel
    p_drop: float = Field(0.2, ge=0.0, le=1.0)
    p_sub: float = Field(0.1, ge=0.0, le=1.0)
    p_ins: float = Field(0.05, ge=0.0, le=1.0)
    rare_keep_boost: float = Field(0.5, ge=0.0, le=1.0)

    # Base-model (pseudo label) channel
    pseudo_p_del: float = Field(0.05, ge=0.0, le=1.0)
    pseudo_p_sub: float = Field(0.08, ge=0.0, le=1.0)
    pseudo_p_ins: float = Field(0.02, ge=0.0, le=1.0)
    pseudo_rare_sub: float = Field(0.4, ge=0.0, le=1.0)
    p_lead_del: float = Field(0.1, ge=0.0, le=1.0)

    rare_threshold: int = Field(DEFAULT_RARE_THRESHOLD, ge=1)
    seed: int = 42

    @model_validator(mode="after")
    def check_ranges(self) -> "SynthConfig":
        if self.words_per_utt_min > self.words_per_utt_max:
            raise ValueError("words_per_utt_min must not exceed words_per_utt_max")
        if self.frames_per_word_min > self.frames_per_word_max:
            raise ValueError("frames_per_word_min must not exceed frames_per_word_max")
        return self

    def expected_pseudo_wer(self) -> float:
        """Per-word corruption level of the base channel, in percent.

        Exact only when the rare-word and leading-deletion terms are disabled
        (pseudo_rare_sub == pseudo_p_sub and p_lead_del == 0).
        """
        return 100.0 * (self.pseudo_p_del + (1 - self.pseudo_p_del) * self.pseudo_p_sub + self.pseudo_p_ins)


class ModelConfig(BaseModel):
    """Toy encoder-decoder dimensions."""

    d_model: int = Field(64, ge=1)
    n_heads: int = Field(4, ge=1)
    n_enc_layers: int = Field(2, ge=1)
    n_dec_layers: int = Field(2, ge=1)
    d_ff: Optional[int] = Field(None, ge=1)
    d_feat: int = Field(16, ge=1)
    max_seq: int = Field(256, ge=8)
    dtype: Literal["float32", "float64"] = "float32"
    head_reduction: Union[Literal["mean"], int] = "mean"
    scale_keys: bool = True
    seed: int = 42

    @model_validator(mode="after")
    def check_heads(self) -> "ModelConfig":
        if self.d_model % self.n_heads != 0:
            raise ValueError(f"d_model ({self.d_model}) must be divisible by n_heads ({self.n_heads})")
        if isinstance(self.head_reduction, int) and not 0 <= self.head_reduction < self.n_heads:
            raise ValueError(f"head_reduction index {self.head_reduction} out of range")
        return self

    @property
    def ff_width(self) -> int:
        return self.d_ff or 4 * self.d_model


class OptimConfig(BaseModel):
    """Adam with linear warmup."""

    lr: float = Field(3e-4, ge=0.0)
    warmup_steps: int = Field(100, ge=0)
    batch_size: int = Field(8, ge=1)
    epochs: int = Field(5, ge=0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    eps: float = Field(1e-8, gt=0.0)
    grad_clip: float = Field(1.0, ge=0.0)
    seed: int = 42

    @classmethod
    def full_scale(cls, **overrides) -> "OptimConfig":
        """Full-scale hyperparameters (1e-5, 1000 warmup steps)."""
        return cls(**{"lr": 1e-5, "warmup_steps": 1000, **overrides})


class WAConfig(BaseModel):
    """Weighted-attention decoding settings."""

    strategy: str = "none"
    layers: Union[Literal["all"], list[int]] = "all"
    use_prompt: bool = True

    @field_validator("strategy")
    @classmethod
    def validate_strategy(cls, v: str) -> str:
        return normalize_strategy(v)

    @field_validator("layers", mode="before")
    @classmethod
    def parse_layers(cls, v):
        return _parse_layers(v)

    def layer_indices(self, n_layers: int) -> list[int]:
        """Resolve the layer set against a decoder depth."""
        if self.layers == "all":
            return list(range(n_layers))
        bad = [i for i in self.layers if not 0 <= i < n_layers]
        if bad:
            raise ConfigError(f"WA layer indices {bad} out of range for {n_layers} decoder layers")
        return sorted(set(self.layers))

    @property
    def label(self) -> str:
        if not self.use_prompt:
            return "no-prompt"
        if self.strategy == "none":
            return "sp"
        layers = "all" if self.layers == "all" else "-".join(str(i) for i in self.layers)
        return f"sp+{self.strategy}@{layers}"


class FilterConfig(BaseModel):
    """Hallucination filter thresholds."""

    max_tokens: int = Field(FILTER_MAX_TOKENS, ge=1)
    max_rep_ratio: float = Field(FILTER_MAX_REP_RATIO, gt=0.0, le=1.0)


class IterationConfig(BaseModel):
    """Pseudo-label refinement loop settings."""

    iterations: int = Field(3, ge=0)
    cold_start: bool = False
    regen_wa: Optional[WAConfig] = None
    bootstrap_mode: Literal["channel", "model"] = "channel"
    base_epochs: int = Field(2, ge=0)


class ExperimentConfig(BaseModel):
    """Grid of {no-prompt, SP} x WA strategies x iterations."""

    synth: SynthConfig = Field(default_factory=SynthConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    optim: OptimConfig = Field(default_factory=OptimConfig)
    filter: FilterConfig = Field(default_factory=FilterConfig)
    iteration: IterationConfig = Field(default_factory=IterationConfig)
    strategies: list[str] = Field(default_factory=lambda: ["none", "gini", "max", "entropy"])
    wa_layers: Union[Literal["all"], list[int]] = "all"
    include_no_prompt: bool = True
    layer_sweep: bool = False
    n_folds: int = Field(5, ge=1)
    rare_threshold: int = Field(DEFAULT_RARE_THRESHOLD, ge=1)
    seed: int = 42

    @field_validator("strategies", mode="before")
    @classmethod
    def parse_strategies(cls, v):
        if isinstance(v, str):
            v = [part.strip() for part in v.split(",") if part.strip()]
        return [normalize_strategy(s) for s in v]

    @field_validator("wa_layers", mode="before")
    @classmethod
    def parse_wa_layers(cls, v):
        return _parse_layers(v)

    @model_validator(mode="after")
    def align_dimensions(self) -> "ExperimentConfig":
        if self.model.d_feat != self.synth.d_feat:
            self.model = self.model.model_copy(update={"d_feat": self.synth.d_feat})
        return self

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Copy with one seed propagated to every stage."""
        return self.model_copy(
            update={
                "seed": seed,
                "synth": self.synth.model_copy(update={"seed": seed}),
                "model": self.model.model_copy(update={"seed": seed}),
                "optim": self.optim.model_copy(update={"seed": seed}),
            }
        )

    def cells(self) -> list[WAConfig]:
        """WA settings of every grid cell, no-prompt first."""
        cells = []
        if self.include_no_prompt:
            cells.append(WAConfig(strategy="none", use_prompt=False))
        for strategy in self.strategies:
            cells.append(WAConfig(strategy=strategy, layers=self.wa_layers, use_prompt=True))
        return cells

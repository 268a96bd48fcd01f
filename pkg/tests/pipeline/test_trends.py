"""End-to-end trend checks on the default synthetic corpus.

These train every grid cell at full desk scale and take minutes; run them
with ``pytest -m slow``.
"""

import pytest

from src.core.models import ExperimentConfig, IterationConfig
from src.pipeline.experiment import run_experiment

TOLERANCE = 0.1

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def default_report(tmp_path_factory):
    config = ExperimentConfig(strategies=["none", "gini"]).with_seed(42)
    return run_experiment(config, tmp_path_factory.mktemp("trend"))


def cell(report, label):
    return next(c for c in report.cells if c.label == label)


class TestTrends:
    """Trend-level behaviour of the refinement loop."""

    def test_prompting_beats_no_prompt_beats_bootstrap(self, default_report):
        """Test SP fine-tuning < no-prompt fine-tuning < bootstrap pseudo labels."""
        sp = cell(default_report, "sp").iterations[0].sp.wer
        no_prompt = cell(default_report, "no-prompt").iterations[0].sp.wer
        assert sp < no_prompt < default_report.bootstrap.wer

    def test_wer_non_increasing_over_iterations(self, default_report):
        """Test held-out WER does not rise across three iterations."""
        wers = [m.wa.wer for m in cell(default_report, "sp+gini@all").iterations]
        assert len(wers) == 3
        for before, after in zip(wers, wers[1:]):
            assert after <= before + TOLERANCE

    def test_gini_not_worse_than_sp(self, default_report):
        """Test gini weighting on all layers is no worse than prompting alone."""
        for metrics in cell(default_report, "sp+gini@all").iterations:
            assert metrics.wa.wer <= metrics.sp.wer + TOLERANCE

    def test_clean_subtitles_improve_first_iteration(self, tmp_path):
        """Test verbatim subtitles lower WER below the pseudo labels after one iteration."""
        config = ExperimentConfig(
            strategies=["none"],
            include_no_prompt=False,
            iteration=IterationConfig(iterations=1),
        ).with_seed(42)
        config = config.model_copy(
            update={"synth": config.synth.model_copy(update={"p_drop": 0.0, "p_sub": 0.0, "p_ins": 0.0})}
        )
        report = run_experiment(config, tmp_path)
        assert cell(report, "sp").iterations[0].sp.wer < report.bootstrap.wer

    def test_rare_words_gain_most_from_prompting(self, tmp_path):
        """Test prompting helps rare words relatively more than words overall."""
        config = ExperimentConfig(strategies=["none"], iteration=IterationConfig(iterations=1)).with_seed(42)
        config = config.model_copy(update={"synth": config.synth.model_copy(update={"rare_keep_boost": 1.0})})
        report = run_experiment(config, tmp_path)
        no_prompt = cell(report, "no-prompt").iterations[0].sp
        sp = cell(report, "sp").iterations[0].sp
        rare_gain = (no_prompt.rwer - sp.rwer) / no_prompt.rwer
        overall_gain = (no_prompt.wer - sp.wer) / no_prompt.wer
        assert rare_gain > overall_gain

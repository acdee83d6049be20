"""Offline experiment harness: splitting, tuning, synthetic data and the CLI."""

from .config import ExperimentConfig
from .experiment import ExperimentResult, run_experiment, write_outputs
from .split import SplitPlan, check_no_leakage, make_validation_split, partition_split
from .synth import SynthParams, generate_synthetic, write_synthetic
from .tuning import SearchSpace, select_approach, tune, tune_mmr_lambda

"""Pipeline orchestration, configuration, synthesis, and the command line."""

from .config import PipelineConfig, SyntheticSpec, load_config, slot_seed
from .pipeline import PipelineError, report_author, run_pipeline
from .synth import gen_careers, gen_synthetic

__all__ = [
    "PipelineConfig",
    "SyntheticSpec",
    "load_config",
    "slot_seed",
    "PipelineError",
    "run_pipeline",
    "report_author",
    "gen_careers",
    "gen_synthetic",
]

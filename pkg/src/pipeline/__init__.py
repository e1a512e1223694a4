from src.pipeline.experiment import (
    AnchorConfig,
    AreaConfig,
    ExperimentConfig,
    IngestConfig,
    PlanConfig,
    PlotConfig,
    RawCorpusConfig,
    SweepConfig,
    SynthConfig,
    apply_overrides,
    config_from_dict,
    load_config,
)
from src.pipeline.runner import (
    RunContext,
    cmd_baseline_1nn,
    cmd_extend,
    cmd_geodesic_demo,
    cmd_ingest,
    cmd_run,
    cmd_sweep,
    cmd_synth,
)

__all__ = [
    "AnchorConfig",
    "AreaConfig",
    "ExperimentConfig",
    "IngestConfig",
    "PlanConfig",
    "PlotConfig",
    "RawCorpusConfig",
    "RunContext",
    "SweepConfig",
    "SynthConfig",
    "apply_overrides",
    "cmd_baseline_1nn",
    "cmd_extend",
    "cmd_geodesic_demo",
    "cmd_ingest",
    "cmd_run",
    "cmd_sweep",
    "cmd_synth",
    "config_from_dict",
    "load_config",
]

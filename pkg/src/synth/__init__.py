from src.synth.generator import (
    SynthScenario,
    build_signal_sets,
    generate_geodesic,
    generate_radial,
    median_signal,
    median_signals,
    radial_signals,
)

__all__ = [
    "SynthScenario",
    "build_signal_sets",
    "generate_geodesic",
    "generate_radial",
    "median_signal",
    "median_signals",
    "radial_signals",
]

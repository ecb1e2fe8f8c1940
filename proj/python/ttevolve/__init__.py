"""Particle evolution with tensor-train re-estimation by sketching."""

from ._core import (
    ConfigError,
    NumericalError,
    TensorTrain,
    estimate_from_indices,
    ising_ground_energy,
    parse_config,
    plot_csv,
    random_tt,
    run_config,
    sample_indices,
    tt_add,
    tt_hadamard,
    tt_inner,
    tt_round,
    tt_scale,
)

__all__ = [
    "ConfigError",
    "NumericalError",
    "TensorTrain",
    "estimate_from_indices",
    "ising_ground_energy",
    "parse_config",
    "plot_csv",
    "random_tt",
    "run_config",
    "sample_indices",
    "tt_add",
    "tt_hadamard",
    "tt_inner",
    "tt_round",
    "tt_scale",
]

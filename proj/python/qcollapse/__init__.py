"""Conditional atom-number collapse of lattice atoms under cavity photodetection."""

from ._qcollapse import (
    ConfigError,
    ConsistencyError,
    DomainError,
    Error,
    InitialDistribution,
    IoError,
    closed_form_distribution,
    coherence_proxy,
    derive_stream_seed,
    fwhm_estimate,
    initial_distribution,
    peak_estimate,
    run_ensemble,
    run_trajectory,
)

__all__ = [
    "ConfigError",
    "ConsistencyError",
    "DomainError",
    "Error",
    "InitialDistribution",
    "IoError",
    "closed_form_distribution",
    "coherence_proxy",
    "derive_stream_seed",
    "fwhm_estimate",
    "initial_distribution",
    "peak_estimate",
    "run_ensemble",
    "run_trajectory",
]

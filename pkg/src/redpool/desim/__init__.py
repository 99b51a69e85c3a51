"""Discrete-event simulation of the replicated two-provider systems."""
from .simulation import (
    CSV_COLUMNS,
    Estimate,
    SimResult,
    SimScenario,
    child_seed,
    results_to_csv,
    simulate,
    simulate_mixed,
    splitmix64,
)

__all__ = [
    "CSV_COLUMNS",
    "Estimate",
    "SimResult",
    "SimScenario",
    "child_seed",
    "results_to_csv",
    "simulate",
    "simulate_mixed",
    "splitmix64",
]

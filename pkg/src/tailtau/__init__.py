"""Asymmetric tail Kendall's tau for directional extremal dependence."""

__version__ = "0.1.0"

from .core import (
    InsufficientDataError,
    PairedSample,
    ThresholdSpec,
    kendall_tau,
    rank_transform,
    select_top_k,
)
from .rng import RngStream
from .tail import (
    ChiEstimate,
    TailTauPair,
    chi_hat,
    symmetric_tail_tau,
    tail_tau,
    tail_tau_pair,
    threshold_sweep,
)

__all__ = [
    "ChiEstimate",
    "InsufficientDataError",
    "PairedSample",
    "RngStream",
    "TailTauPair",
    "ThresholdSpec",
    "chi_hat",
    "kendall_tau",
    "rank_transform",
    "select_top_k",
    "symmetric_tail_tau",
    "tail_tau",
    "tail_tau_pair",
    "threshold_sweep",
]

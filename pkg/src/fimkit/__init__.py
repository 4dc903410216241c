"""Fractional Ito motion, fractional Brownian motion and their Langevin image."""

from ._version import __version__
from .core import DomainError, HurstExponent, RngStream, TimeGrid
from .dlp import DlpParams, simulate_dlp_ensemble, simulate_dlp_langevin
from .fbm import FbmParams, simulate_fbm_cholesky, simulate_fbm_circulant, simulate_fbm_ensemble
from .fim import (
    EmScheme,
    FimParams,
    sample_fim_marginal,
    simulate_fim_em,
    simulate_fim_em_ensemble,
    simulate_fim_exact,
    simulate_fim_exact_ensemble,
)
from .paths import Ensemble, IntegrationError, Model, Trajectory

__all__ = [
    "__version__",
    "DomainError",
    "HurstExponent",
    "RngStream",
    "TimeGrid",
    "DlpParams",
    "simulate_dlp_ensemble",
    "simulate_dlp_langevin",
    "FbmParams",
    "simulate_fbm_cholesky",
    "simulate_fbm_circulant",
    "simulate_fbm_ensemble",
    "EmScheme",
    "FimParams",
    "sample_fim_marginal",
    "simulate_fim_em",
    "simulate_fim_em_ensemble",
    "simulate_fim_exact",
    "simulate_fim_exact_ensemble",
    "Ensemble",
    "IntegrationError",
    "Model",
    "Trajectory",
]

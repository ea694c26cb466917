"""Bayesian clustering and smoothing of panels of time series.

Arrays are series-by-time; NaN marks a missing cell. Partitions use 0-based labels.
"""

from ._core import (
    DegenerateVarianceError,
    Error,
    FormatError,
    NumericError,
    ParameterError,
    cli,
    credible_bands,
    dahl_select,
    fit_gp,
    fit_igmrf,
    gp_marginal_loglik,
    misclustering_rate,
    normalized_mspe,
    pairwise_probability,
    rq_covariance,
    rw2_precision,
    se_covariance,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateVarianceError",
    "Error",
    "FormatError",
    "NumericError",
    "ParameterError",
    "cli",
    "credible_bands",
    "dahl_select",
    "fit_gp",
    "fit_igmrf",
    "gp_marginal_loglik",
    "misclustering_rate",
    "normalized_mspe",
    "pairwise_probability",
    "rq_covariance",
    "rw2_precision",
    "se_covariance",
    "simulate",
]

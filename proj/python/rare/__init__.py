"""Risk-aware recommendation with prospect-theoretic utilities."""

from ._core import (
    COMMANDS,
    __version__,
    f1_at_k,
    fit_weibull,
    mnl_probability,
    ndcg_at_k,
    outcome,
    parameter_count,
    prospect_value,
    resolve_distribution,
    run,
    spearman,
    value,
    weibull_interval_probs,
    weight,
)

__all__ = [
    "COMMANDS",
    "__version__",
    "f1_at_k",
    "fit_weibull",
    "mnl_probability",
    "ndcg_at_k",
    "outcome",
    "parameter_count",
    "prospect_value",
    "resolve_distribution",
    "run",
    "spearman",
    "value",
    "weibull_interval_probs",
    "weight",
]

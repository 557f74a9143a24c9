"""Mode decay experiments on model manifolds with long necks."""

from ._z2neck import (
    ConfigError,
    DomainError,
    Error,
    alpha,
    cn_constant,
    experiments,
    metric,
    mode_coefficient,
    r_total,
    ratio_bound,
    run_experiment,
)


def _strings(d):
    return {str(k): ",".join(map(str, v)) if isinstance(v, (list, tuple)) else str(v) for k, v in d.items()}


def run(experiment, **keys):
    """Run an experiment; keyword values may be numbers or sequences."""
    return run_experiment(_strings({"experiment": experiment, **keys}))


__all__ = [
    "ConfigError",
    "DomainError",
    "Error",
    "alpha",
    "cn_constant",
    "experiments",
    "metric",
    "mode_coefficient",
    "r_total",
    "ratio_bound",
    "run",
    "run_experiment",
]

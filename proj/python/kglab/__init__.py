"""Klein-Gordon numerical laboratory."""

from ._kglab import (
    KglabError,
    __version__,
    default_config,
    fnv1a64,
    gaussian_expected_abs_max,
    kinds,
    loglog_fit,
    read_field,
    regularity_threshold,
    regularity_threshold_limit,
    run_experiment,
    validate_config,
)

__all__ = [
    "KglabError",
    "__version__",
    "default_config",
    "fnv1a64",
    "gaussian_expected_abs_max",
    "kinds",
    "loglog_fit",
    "read_field",
    "regularity_threshold",
    "regularity_threshold_limit",
    "run_experiment",
    "validate_config",
]

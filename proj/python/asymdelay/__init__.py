"""Asymmetric delay attack simulator and analysis toolkit."""

from ._core import (
    ConfigError,
    DomainError,
    Error,
    GapError,
    __version__,
    builtin_names,
    builtin_scenario_json,
    default_m_grid,
    gradual_linear,
    jump,
    run_scenario,
    scheme_coefficients,
    spike,
    tampered_clock_difference,
    tdev,
    validate_scenario,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "Error",
    "GapError",
    "__version__",
    "builtin_names",
    "builtin_scenario_json",
    "default_m_grid",
    "gradual_linear",
    "jump",
    "run_scenario",
    "scheme_coefficients",
    "spike",
    "tampered_clock_difference",
    "tdev",
    "validate_scenario",
]

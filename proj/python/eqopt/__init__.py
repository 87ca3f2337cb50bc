"""Python bindings for the eqopt solvers, certificates and experiment commands."""

from ._eqopt import (
    ConfigError,
    Instance,
    PoleError,
    certify,
    fit_rate,
    generate_instance,
    hbar,
    mode_radius,
    oracle_solve,
    rate_rho_star,
    run_command,
    solve,
    transfer_reduce,
)

__all__ = [
    "ConfigError",
    "Instance",
    "PoleError",
    "certify",
    "fit_rate",
    "generate_instance",
    "hbar",
    "mode_radius",
    "oracle_solve",
    "rate_rho_star",
    "run_command",
    "solve",
    "transfer_reduce",
]

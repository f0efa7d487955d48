"""Layered interference alignment and hybrid zero-forcing toolkit.

Thin wrapper around the C++ core. Exact quantities come back as
``fractions.Fraction``; sweeps take and return plain dicts mirroring the
CLI's JSON config and report documents.
"""

import json as _json

from ._ciasim import (
    Channel,
    Codec,
    ConfigError,
    Constellation,
    DiagnosticError,
    Hybrid,
    InfeasibleError,
    __version__,
    check_outer_bounds,
    choose_n,
    dof_profile,
    dof_reference,
    floored_power,
    hybrid_dof_profile,
    hybrid_dof_reference,
    hybrid_nominal_dof,
    kappa,
    layer_count,
    nominal_dof,
    pe_bound,
    rng_algorithm,
    run_sweep_csv as _run_sweep_csv,
    run_sweep_json as _run_sweep_json,
    verify_alignment,
    xi,
)

__all__ = [
    "Channel",
    "Codec",
    "ConfigError",
    "Constellation",
    "DiagnosticError",
    "Hybrid",
    "InfeasibleError",
    "__version__",
    "check_outer_bounds",
    "choose_n",
    "dof_profile",
    "dof_reference",
    "floored_power",
    "hybrid_dof_profile",
    "hybrid_dof_reference",
    "hybrid_nominal_dof",
    "kappa",
    "layer_count",
    "nominal_dof",
    "pe_bound",
    "rng_algorithm",
    "run_sweep",
    "run_sweep_csv",
    "verify_alignment",
    "xi",
]


def run_sweep(config, fit=True):
    """Run a power sweep. ``config`` is a dict in the CLI config schema;
    returns the report as a dict."""
    return _json.loads(_run_sweep_json(_json.dumps(config), fit))


def run_sweep_csv(config, fit=True):
    """Run a power sweep and return the per-point rows as CSV text."""
    return _run_sweep_csv(_json.dumps(config), fit)

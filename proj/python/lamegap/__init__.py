"""Gradient blow-up analysis for Lame systems with a hard inclusion near the boundary.

Thin wrapper over the compiled ``_core`` module. Configs are plain dicts in the
same JSON layout the ``lamegap`` command line tool reads.
"""

import json

from ._core import (
    HypothesisViolation,
    LamegapError,
    builtin_config_names,
    criterion_count,
    flat_contact_integral,
    gap_integral,
    rho,
    rho_form,
    run_criterion,
    verify_rate_equivalence,
)
from . import _core

__all__ = [
    "HypothesisViolation",
    "LamegapError",
    "builtin_config",
    "builtin_config_names",
    "classify",
    "criterion_count",
    "flat_contact_integral",
    "gap_integral",
    "normalize_config",
    "rho",
    "rho_form",
    "run_criterion",
    "run_sweep",
    "solve",
    "sweep_report",
    "verify_rate_equivalence",
]


def _dump(config):
    return config if isinstance(config, str) else json.dumps(config)


def builtin_config(name):
    """Built-in experiment config as a dict."""
    return json.loads(_core._builtin_config(name))


def normalize_config(config):
    """Validate key names and fill defaults; returns the complete config dict."""
    return json.loads(_core._normalize_config(_dump(config)))


def classify(preset, m, k=1, eta=1.0, variant="pure_power", parity="A1"):
    """Locus and lower-rate prediction for n = 2 with point contact."""
    return json.loads(_core._classify(preset, m, k, eta, variant, parity))


def run_sweep(config, workers=1, slow=False):
    """One dict per eps with probe gradients, C, Q (numpy arrays) and the Gram matrix."""
    return _core._run_sweep(_dump(config), workers, slow)


def sweep_report(config, fmt="csv", workers=1, slow=False):
    """The sweep report text the command line tool writes."""
    return _core._sweep_report(_dump(config), fmt, workers, slow)


def solve(config, eps):
    """Single decomposition at one eps; returns the versioned result record."""
    return json.loads(_core._solve(_dump(config), eps))

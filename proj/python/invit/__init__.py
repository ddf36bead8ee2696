"""Inexact inverse iteration with a per-step bounds ledger."""

import json as _json

from . import _core
from ._core import (
    InvitError,
    Problem,
    admissible_start,
    exact_correction,
    kn_optimal_rate,
    lemma31_bound,
    lemma32_bound,
    lemma33_bound,
    lemma34_constant,
    m_normalize,
    q_factor,
    q_limit,
    rayleigh_quotient,
    thm32_bound,
)

__all__ = [
    "InvitError",
    "Problem",
    "admissible_start",
    "exact_correction",
    "kn_optimal_rate",
    "lemma31_bound",
    "lemma32_bound",
    "lemma33_bound",
    "lemma34_constant",
    "m_normalize",
    "metadata",
    "perturbed_correction",
    "q_factor",
    "q_limit",
    "rayleigh_quotient",
    "run",
    "thm32_bound",
    "verify",
]


def metadata(problem):
    """Spectral metadata of a problem as a dict. Needs metadata attached."""
    return _json.loads(problem.metadata_json())


def perturbed_correction(problem, u, eta, policy=None):
    """(v, w, eta_actual) for one inexact correction.

    policy is a dict such as {"kind": "random", "seed": 3}.
    """
    return _core.perturbed_correction(problem, u, eta, _json.dumps(policy or {"kind": "random"}))


def run(problem, u0, **config):
    """Run the iteration. Keyword arguments are the run config fields
    (eta, solver_mode, policy, max_steps, stop_tol, ...). Returns the
    trajectory as a dict with a "records" list."""
    return _json.loads(_core.run_json(problem, u0, _json.dumps(config)))


def verify(trajectory, meta, eta=None):
    """Check a trajectory (dict or list of records) against metadata.

    meta may be a Problem with metadata or a metadata dict.
    """
    if isinstance(meta, Problem):
        meta = metadata(meta)
    return _json.loads(_core.verify_json(_json.dumps(trajectory), _json.dumps(meta), eta))

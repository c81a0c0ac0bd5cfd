"""Python interface to the trajectory simulator.

The heavy lifting happens in the compiled ``_nrulesim`` module; results cross
the boundary as JSON and are handed out as plain dicts.
"""

import json as _json

from ._nrulesim import __version__  # noqa: F401
from . import _nrulesim as _core

__all__ = [
    "build_scenario",
    "load_scenario",
    "list_scenarios",
    "validate",
    "run_trajectory",
    "run_ensemble",
    "race_probabilities",
    "unitary_populations",
]


def list_scenarios():
    """Registered scenario ids with their parameter schemas."""
    return _json.loads(_core.registry_json())


def build_scenario(scenario_id, **params):
    return _core.build(scenario_id, {k: float(v) for k, v in params.items()})


def load_scenario(path):
    with open(path, "r", encoding="utf-8") as fh:
        return _core.loads(fh.read(), str(path))


def validate(scenario):
    """List of violations; empty means the scenario is well formed."""
    return _json.loads(_core.validate(scenario))


def run_trajectory(scenario, seed=1, tmax=0.0, policy="zero", tol=1e-9, samples=0.0):
    return _json.loads(_core.run(scenario, seed, tmax, policy, tol, samples))


def run_ensemble(scenario, trials, seed=1, workers=0, tmax=0.0, policy="zero",
                 tol=1e-9, compare=True, oracle_steps=2 ** 14):
    return _json.loads(
        _core.ensemble(scenario, trials, seed, workers, tmax, policy, tol, compare, oracle_steps)
    )


def race_probabilities(scenario, tmax=0.0, steps=2 ** 14):
    return _json.loads(_core.race(scenario, tmax, steps))


def unitary_populations(scenario, t):
    return _json.loads(_core.unitary(scenario, t))

"""ODE-augmented LSTM anomaly detection."""

import json

from ._odeaug import *  # noqa: F401,F403
from ._odeaug import fit_ode as _fit_ode, run_experiment as _run_experiment


def fit_ode(control, dependent, dt=1.0, config=None, structure="linear1"):
    return json.loads(_fit_ode(control, dependent, dt, json.dumps(config or {}), structure))


def run_experiment(config=None):
    return json.loads(_run_experiment(json.dumps(config or {})))

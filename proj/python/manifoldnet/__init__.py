"""Weighted Fréchet mean layers on manifold-valued data.

Points are numpy arrays tagged by a manifold name: "spd", "spd-le",
"grassmann", "sphere" or "euclidean".
"""

import csv
import io
import json

from ._core import (
    ConfigError,
    FormatError,
    InvalidArgument,
    NumericalError,
    distance,
    exp_map,
    geodesic,
    grassmann_avg_layer,
    ifme_wfm,
    log_map,
    pca_oracle,
    stream_principal_subspace,
    weight_map,
    wfm_oracle,
)
from . import _core


def validate_config(config):
    """Return the config (dict) with defaults filled in."""
    return json.loads(_core.validate_config(json.dumps(config)))


def run_experiment(config, seed=0):
    """Run an experiment; returns the metrics rows as a list of dicts."""
    text = _core.run_experiment(json.dumps(config), seed)
    return list(csv.DictReader(io.StringIO(text)))


__all__ = [
    "ConfigError",
    "FormatError",
    "InvalidArgument",
    "NumericalError",
    "distance",
    "exp_map",
    "geodesic",
    "grassmann_avg_layer",
    "ifme_wfm",
    "log_map",
    "pca_oracle",
    "run_experiment",
    "stream_principal_subspace",
    "validate_config",
    "weight_map",
    "wfm_oracle",
]

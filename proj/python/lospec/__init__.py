"""Cross-stage attention sparsity prediction with leading-one codes.

Experiment functions take a config as a dict (same layout as the JSON config
file accepted by the command-line tool) or None for defaults.
"""

import csv
import io
import json

from . import _lospec
from ._lospec import ConfigError, DimensionError, aloc_mul

__all__ = [
    "ConfigError",
    "DimensionError",
    "aloc_mul",
    "normalize_config",
    "gen_workload",
    "predict",
    "compare",
    "sweep",
    "tune",
]


def _dump(config):
    if config is None:
        return ""
    if "schema_version" not in config:
        config = {"schema_version": 1, **config}
    return json.dumps(config)


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def normalize_config(config=None):
    return json.loads(_lospec.normalize_config(_dump(config)))


def gen_workload(config=None):
    return _lospec.gen_workload(_dump(config))


def predict(config=None):
    out = _lospec.predict(_dump(config))
    out["metrics"] = json.loads(out["metrics"])
    out["cost_summary"] = json.loads(out["cost_summary"])
    out["cost_rows"] = _rows(out["cost_csv"])
    return out


def compare(config=None, head=0):
    return _rows(_lospec.compare(_dump(config), head))


def sweep(config=None):
    return _rows(_lospec.sweep(_dump(config)))


def tune(config=None):
    return json.loads(_lospec.tune(_dump(config)))

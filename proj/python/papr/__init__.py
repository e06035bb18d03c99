"""PAPR-aware precoding for OFDM massive-MIMO downlinks.

The heavy lifting happens in the compiled ``_core`` module; this wrapper
accepts plain dicts or file paths for experiment configs.
"""

import json
from os import PathLike
from pathlib import Path
from typing import Any, Union

from . import _core
from ._core import ccdf, ccdf_quantile, child_seed, digamma, log_gamma, papr_db, to_db, truncated_moments

ConfigLike = Union[dict, str, PathLike]

__all__ = [
    "ccdf",
    "ccdf_quantile",
    "child_seed",
    "digamma",
    "load_config",
    "log_gamma",
    "papr_db",
    "run_experiment",
    "run_trial",
    "to_db",
    "truncated_moments",
]


def load_config(config: ConfigLike) -> dict:
    """Return the config as a dict; strings and paths are read as JSON files."""
    if isinstance(config, dict):
        return config
    return json.loads(Path(config).read_text())


def run_experiment(config: ConfigLike, **overrides: Any) -> dict:
    """Run every trial and return the results document (config, summary, trace, ser, trials).

    Keyword overrides replace top-level config keys, e.g. ``trials=3``.
    """
    cfg = {**load_config(config), **overrides}
    return json.loads(_core.run_experiment(json.dumps(cfg)))


def run_trial(config: ConfigLike, trial: int = 0) -> dict:
    """Run a single trial; the record matches one entry of ``run_experiment(...)["trials"]``."""
    return json.loads(_core.run_trial(json.dumps(load_config(config)), trial))

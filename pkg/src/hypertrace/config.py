"""Runtime configuration and frozen calibration constants."""

from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path

import numpy as np

_DEFAULTS = None
_CALIB = None


def _load_packaged(name: str) -> dict:
    with resources.files("hypertrace.data").joinpath(name).open("r") as fh:
        return json.load(fh)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: str | Path | None = None) -> dict:
    global _DEFAULTS
    if _DEFAULTS is None:
        _DEFAULTS = _load_packaged("config.json")
    if path is None:
        return copy.deepcopy(_DEFAULTS)
    with open(path) as fh:
        return _merge(_DEFAULTS, json.load(fh))


def use_config(path: str | Path | None) -> dict:
    """Make an override file the process-wide configuration."""
    global _DEFAULTS
    merged = load_config(path)
    _DEFAULTS = merged
    return copy.deepcopy(merged)


def load_calibration(path: str | Path | None = None) -> dict:
    global _CALIB
    if path is not None:
        with open(path) as fh:
            return json.load(fh)
    if _CALIB is None:
        _CALIB = _load_packaged("calib.json")
    return copy.deepcopy(_CALIB)


def calib_constant(name: str, calib: dict | None = None) -> float:
    calib = calib or load_calibration()
    return float(calib["constants"][name]["value"])


_GENERATORS = {"philox": np.random.Philox}


def make_rng(seed, config: dict | None = None) -> np.random.Generator:
    """Counter-based generator named in the config; ``seed`` may be a tuple."""
    if config is None:
        if _DEFAULTS is None:
            load_config()
        config = _DEFAULTS
    name = config["rng"]
    bitgen = _GENERATORS.get(name)
    if bitgen is None:
        raise ValueError(f"unsupported generator {name!r}")
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(bitgen(seed))
    if isinstance(seed, (tuple, list)):
        return np.random.Generator(bitgen(np.random.SeedSequence(list(seed))))
    return np.random.Generator(bitgen(int(seed) & 0xFFFFFFFFFFFFFFFF))

"""Experiment configuration, schema validation, and run manifests.

Configurations are JSON documents with ``schema_version: 1``, validated
strictly (unknown keys rejected) against the packaged schema before any
computation. All randomness flows from the single top-level seed; no command
reads wall-clock entropy. Every completed run writes a RunManifest listing
its output files, written atomically so a present manifest implies a
completed run.
"""

from __future__ import annotations

import json
import os
import tempfile
from datetime import datetime, timezone
from importlib import resources

import jsonschema

from . import __version__, model

__all__ = [
    "ConfigError",
    "load_schema",
    "validate_config",
    "load_config",
    "probe_from_config",
    "bath_from_config",
    "write_manifest",
]


class ConfigError(ValueError):
    """Configuration rejected; ``path`` points at the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


COMMAND_DEFAULTS = {
    "spectrum": {},
    "evolve": {"state": "ground", "t_max": None, "n_points": 200},
    "optimal": {"n_samples": 1000},
    "mpemba": {"n_samples": 20, "alpha": 0.2, "t_max": None, "n_points": 200},
    "montecarlo": {
        "n_samples": 100,
        "alpha": 0.2,
        "t_max": None,
        "n_points": 200,
        "parallel_width": 1,
    },
    "lemmas": {
        "n_instances": 10000,
        "dims": [2, 3, 4, 5, 6, 7, 8],
        "n_conditions": 1000,
    },
    # Reproduction defaults: d=10, gap 1, eps 0.05, beta 1, gamma 1, alpha 0.2,
    # dt 0.1, rate fit on [0, 1/gamma].
    "figure3": {
        "n_random": 20,
        "n_scatter": 200,
        "dt": 0.1,
        "dbeta": None,
        "alpha": 0.2,
        "fit_window": [0.0, 1.0],
    },
}

MODEL_DEFAULTS = {
    "epsilon": 0.0,
    "spectral_density": {"kind": "flat", "params": {}},
}


def load_schema(name: str) -> dict:
    with resources.files("qmpe_lab.schemas").joinpath(name).open() as fh:
        return json.load(fh)


def validate_config(cfg: dict) -> None:
    """Strict schema validation; raises ConfigError naming the field path."""
    schema = load_schema("config.schema.json")
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = "/".join(str(p) for p in err.absolute_path) or "(root)"
        raise ConfigError(err.message, path)


def _merged(cfg: dict) -> dict:
    out = json.loads(json.dumps(cfg))  # deep copy, JSON-native types only
    out.setdefault("seed", 0)
    mdl = out["model"]
    for key, val in MODEL_DEFAULTS.items():
        mdl.setdefault(key, json.loads(json.dumps(val)))
    mdl["spectral_density"].setdefault("params", {})
    for command, defaults in COMMAND_DEFAULTS.items():
        block = out.setdefault(command, {})
        for key, val in defaults.items():
            block.setdefault(key, json.loads(json.dumps(val)))
    return out


def load_config(path: str) -> dict:
    """Read, validate, and default-fill a configuration file."""
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    validate_config(cfg)
    return _merged(cfg)


def probe_from_config(model_cfg: dict) -> model.ProbeSpec:
    if "detunings" in model_cfg:
        return model.ProbeSpec(
            d=model_cfg["d"],
            gap=model_cfg["gap"],
            detunings=tuple(model_cfg["detunings"]),
        )
    return model.ProbeSpec.with_ramp(
        d=model_cfg["d"], gap=model_cfg["gap"], epsilon=model_cfg["epsilon"]
    )


def bath_from_config(model_cfg: dict) -> model.BathSpec:
    sd_cfg = model_cfg["spectral_density"]
    sd = model.SpectralDensity(
        kind=sd_cfg["kind"],
        omega_ref=sd_cfg.get("params", {}).get("omega_ref", 1.0),
    )
    return model.BathSpec(
        beta=model_cfg["beta"], gamma=model_cfg["gamma"], spectral_density=sd
    )


def _atomic_write_json(path: str, payload: dict) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_manifest(out_dir: str, command: str, cfg: dict, seed: int,
                   outputs: list, started_at: str) -> str:
    """Write the run manifest; called only after all outputs exist."""
    for name in outputs:
        if not os.path.exists(os.path.join(out_dir, name)):
            raise RuntimeError(f"manifest lists missing output {name}")
    payload = {
        "schema_version": 1,
        "command": command,
        "artifact_version": __version__,
        "config": cfg,
        "seed": seed,
        "started_at": started_at,
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "outputs": sorted(outputs),
    }
    path = os.path.join(out_dir, "manifest.json")
    _atomic_write_json(path, payload)
    return path


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()

"""JSON run configuration: strict parsing with defaults, unknown keys rejected."""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

from .errors import ConfigError
from .measures import StationaryGaussianMeasure
from .model import CorrelationKernel, GainFunction, InitLaw, ModelParams, validate_params

REQUIRED = object()

MODEL_KEYS = {
    "n": REQUIRED,
    "T": REQUIRED,
    "gamma": 0.5,
    "sigma": 1.0,
    "theta_bar": 0.0,
    "theta_std": 0.0,
    "j_bar": 1.0,
    "gain": {"kind": "logistic", "slope": 1.0},
    "init_law": None,
}
GAIN_KEYS = {"kind": "logistic", "slope": 1.0}
INIT_KEYS = {"kind": "gaussian", "mean": 0.0, "std": None, "value": 0.0}
KERNEL_KEYS = {
    "dirac": {"kind": "dirac", "j_var": 1.0},
    "separable_geometric": {"kind": "separable_geometric", "a": 1.0, "rho1": 0.5, "rho2": 0.5},
    "table": {"kind": "table", "values": REQUIRED},
}
MEASURE_KEYS = {
    "empirical": {"kind": "empirical", "source": "network", "replicate": 0},
    "reference": {"kind": "reference"},
    "gaussian": {
        "kind": "gaussian",
        "init_mean": 0.0,
        "init_std": 1.0,
        "drift": 0.0,
        "noise_std": 1.0,
        "time_corr": 0.0,
        "neuron_taps": [1.0],
    },
}
FUNCTIONAL_KEYS = {"kind": "mean_f", "t": 1, "lag": 1, "weights": [], "offset": 0.0}
COMMAND_KEYS = {
    "simulate": {"replicates": 1},
    "rate": {"measure": {"kind": "empirical"}, "tol": 1e-8, "quadrature_order": 32},
    "rncheck": {
        "samples": 100000,
        "configurations": 1,
        "functional": {"kind": "one"},
        "pushforward_samples": None,
        "warn_nats": 50.0,
    },
    "entropy": {
        "schedule": [4, 8, 16, 32],
        "measure": {"kind": "reference"},
        "tol": 1e-8,
        "quadrature_order": 32,
    },
    "converge": {
        "schedule": [4, 8, 16, 32],
        "measure": {"kind": "gaussian"},
        "tol": 1e-10,
        "quadrature_order": 32,
    },
    "sample_weights": {"samples": 1000},
}
TOP_KEYS = {"model", "kernel", "seed", *COMMAND_KEYS}


def _fill(block, defaults: dict, where: str) -> dict:
    if block is None:
        block = {}
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = sorted(set(block) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    out = {}
    for key, default in defaults.items():
        if key in block:
            out[key] = block[key]
        elif default is REQUIRED:
            raise ConfigError(f"{where}.{key} is required")
        else:
            out[key] = copy.deepcopy(default)
    return out


def _keyed(block, table: dict, where: str, default_kind: str) -> dict:
    block = block or {}
    kind = block.get("kind", default_kind)
    if kind not in table:
        raise ConfigError(f"{where}.kind must be one of {sorted(table)}, got {kind!r}")
    return _fill({**block, "kind": kind}, table[kind], where)


def normalize(raw: dict) -> dict:
    """Fully resolved configuration with every default made explicit."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(raw) - TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    if "model" not in raw:
        raise ConfigError("model block is required")
    model = _fill(raw["model"], MODEL_KEYS, "model")
    model["gain"] = _fill(model["gain"], GAIN_KEYS, "model.gain")
    if model["init_law"] is not None:
        model["init_law"] = _fill(model["init_law"], INIT_KEYS, "model.init_law")
    cfg = {
        "model": model,
        "kernel": _keyed(raw.get("kernel"), KERNEL_KEYS, "kernel", "dirac"),
        "seed": raw.get("seed", 0),
    }
    for cmd, defaults in COMMAND_KEYS.items():
        block = _fill(raw.get(cmd), defaults, cmd)
        if "measure" in block:
            block["measure"] = _keyed(block["measure"], MEASURE_KEYS, f"{cmd}.measure", "empirical")
        if "functional" in block:
            block["functional"] = _fill(block["functional"], FUNCTIONAL_KEYS, f"{cmd}.functional")
        cfg[cmd] = block
    seed = cfg["seed"]
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return cfg


def load(path) -> dict:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    return normalize(raw)


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def build_params(cfg: dict) -> ModelParams:
    m = cfg["model"]
    for key in ("n", "T"):
        if not isinstance(m[key], int) or isinstance(m[key], bool):
            raise ConfigError(f"model.{key} must be an integer")
    law = None
    if m["init_law"] is not None:
        il = m["init_law"]
        if il["kind"] == "gaussian":
            law = InitLaw.gaussian(il["mean"], m["sigma"] if il["std"] is None else il["std"])
        elif il["kind"] == "point_mass":
            law = InitLaw.point_mass(il["value"])
        else:
            raise ConfigError(f"model.init_law.kind: unknown kind {il['kind']!r}")
    try:
        p = ModelParams(
            n=m["n"],
            T=m["T"],
            gamma=float(m["gamma"]),
            sigma=float(m["sigma"]),
            theta_bar=float(m["theta_bar"]),
            theta_std=float(m["theta_std"]),
            j_bar=float(m["j_bar"]),
            gain=GainFunction(m["gain"]["kind"], float(m["gain"]["slope"])),
            init_law=law,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"model: {exc}") from exc
    problems = validate_params(p)
    if problems:
        raise ConfigError("; ".join(f"model.{v['field']}: {v['message']}" for v in problems))
    return p


def build_kernel(cfg: dict) -> CorrelationKernel:
    k = cfg["kernel"]
    try:
        if k["kind"] == "dirac":
            kern = CorrelationKernel.dirac(k["j_var"])
        elif k["kind"] == "separable_geometric":
            kern = CorrelationKernel.separable_geometric(k["a"], k["rho1"], k["rho2"])
        else:
            kern = CorrelationKernel.from_table(k["values"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"kernel: {exc}") from exc
    problems = kern.violations()
    if problems:
        raise ConfigError("; ".join(problems))
    return kern


def build_gaussian(block: dict, p: ModelParams) -> StationaryGaussianMeasure:
    if block["kind"] == "reference":
        return StationaryGaussianMeasure.reference(p)
    if block["kind"] != "gaussian":
        raise ConfigError(f"expected a Gaussian measure, got kind {block['kind']!r}")
    try:
        return StationaryGaussianMeasure.from_innovations(
            p,
            init_mean=float(block["init_mean"]),
            init_std=float(block["init_std"]),
            drift=block["drift"],
            noise_std=float(block["noise_std"]),
            time_corr=float(block["time_corr"]),
            neuron_taps=block["neuron_taps"],
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"measure: {exc}") from exc

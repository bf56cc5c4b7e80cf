"""YAML experiment configs: strict parsing, defaults, and canonical emission.

Unknown keys are rejected so parameter-name typos surface immediately.  Every
omitted value falls back to the default simulation parameters, so an empty
file describes the full canonical comparison grid.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from . import experiment
from .estimators import PenaltyConfig, StepSchedule
from .experiment import EstimatorSpec, ExperimentConfig, canonical_estimator_specs

__all__ = ["ConfigError", "parse_config", "write_config"]

_SCHEDULE_ALIASES = {
    "iss": "invariant",
    "invariant": "invariant",
    "ipvss": "iterative_promoting",
    "iterative_promoting": "iterative_promoting",
}
_SCHEDULE_TAGS = {"invariant": "iss", "iterative_promoting": "ipvss"}
_ALGO_NAMES = {"none": "LMS", "za": "ZA", "rza": "RZA", "rl1": "RL1"}

_TOP_KEYS = {
    "n_taps",
    "k_nonzero",
    "snr_db",
    "iterations",
    "trials",
    "master_seed",
    "normalize_channel",
    "estimators",
}
_ESTIMATOR_KEYS = {"label", "penalty", "schedule"}
_PENALTY_KEYS = {"kind", "lambda", "epsilon", "delta"}
_SCHEDULE_KEYS = {"kind", "mu0", "phi"}

_DEFAULT_LAMBDAS = {
    "za": experiment.DEFAULT_LAM_ZA,
    "rza": experiment.DEFAULT_LAM_RZA,
    "rl1": experiment.DEFAULT_LAM_RL1,
}


class ConfigError(ValueError):
    """A config file failed to parse or validate."""


def _require_mapping(value, where: str) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be a mapping, got {type(value).__name__}")
    return value


def _check_keys(mapping: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(map(str, unknown))}")


def _as_int(mapping: dict, key: str, default: int, where: str) -> int:
    value = mapping.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}.{key} must be an integer, got {value!r}")
    return value


def _as_float(mapping: dict, key: str, default: float, where: str) -> float:
    value = mapping.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    return float(value)


def _as_bool(mapping: dict, key: str, default: bool, where: str) -> bool:
    value = mapping.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{where}.{key} must be a boolean, got {value!r}")
    return value


def _parse_penalty(raw, where: str) -> PenaltyConfig:
    if raw is None:
        return PenaltyConfig.none()
    mapping = _require_mapping(raw, where)
    _check_keys(mapping, _PENALTY_KEYS, where)
    if "kind" not in mapping:
        raise ConfigError(f"{where}.kind is required")
    kind = mapping["kind"]
    if kind not in _ALGO_NAMES:
        raise ConfigError(
            f"{where}.kind must be one of {sorted(_ALGO_NAMES)}, got {kind!r}"
        )
    if kind == "none":
        extras = sorted(set(mapping) - {"kind"})
        if extras:
            raise ConfigError(f"penalty kind 'none' takes no parameters, got {', '.join(extras)}")
        return PenaltyConfig.none()
    lam = _as_float(mapping, "lambda", _DEFAULT_LAMBDAS[kind], where)
    if kind == "za":
        if "epsilon" in mapping or "delta" in mapping:
            raise ConfigError(f"penalty kind 'za' only accepts 'lambda' in {where}")
        return PenaltyConfig.za(lam)
    if kind == "rza":
        if "delta" in mapping:
            raise ConfigError(f"penalty kind 'rza' does not accept 'delta' in {where}")
        return PenaltyConfig.rza(lam, _as_float(mapping, "epsilon", experiment.DEFAULT_EPSILON, where))
    if "epsilon" in mapping:
        raise ConfigError(f"penalty kind 'rl1' does not accept 'epsilon' in {where}")
    return PenaltyConfig.rl1(lam, _as_float(mapping, "delta", experiment.DEFAULT_DELTA, where))


def _parse_schedule(raw, where: str) -> StepSchedule:
    if raw is None:
        return StepSchedule.iterative_promoting(experiment.DEFAULT_MU_UPPER, experiment.DEFAULT_PHI)
    mapping = _require_mapping(raw, where)
    _check_keys(mapping, _SCHEDULE_KEYS, where)
    if "kind" not in mapping:
        raise ConfigError(f"{where}.kind is required")
    kind = mapping["kind"]
    if kind not in _SCHEDULE_ALIASES:
        raise ConfigError(
            f"{where}.kind must be one of {sorted(set(_SCHEDULE_ALIASES))}, got {kind!r}"
        )
    canonical = _SCHEDULE_ALIASES[kind]
    mu0 = _as_float(mapping, "mu0", experiment.DEFAULT_MU_UPPER, where)
    if canonical == "invariant":
        if "phi" in mapping:
            raise ConfigError(f"invariant schedule does not accept 'phi' in {where}")
        return StepSchedule.invariant(mu0)
    return StepSchedule.iterative_promoting(mu0, _as_float(mapping, "phi", experiment.DEFAULT_PHI, where))


def _derive_label(penalty: PenaltyConfig, schedule: StepSchedule) -> str:
    algo = _ALGO_NAMES[penalty.kind]
    tag = "IPVSS" if schedule.kind == "iterative_promoting" else f"ISS-{schedule.mu0:g}"
    return f"{algo}-{tag}"


def _parse_estimator(raw, index: int) -> EstimatorSpec:
    where = f"estimators[{index}]"
    mapping = _require_mapping(raw, where)
    _check_keys(mapping, _ESTIMATOR_KEYS, where)
    penalty = _parse_penalty(mapping.get("penalty"), f"{where}.penalty")
    schedule = _parse_schedule(mapping.get("schedule"), f"{where}.schedule")
    label = mapping.get("label")
    if label is None:
        label = _derive_label(penalty, schedule)
    elif not isinstance(label, str):
        raise ConfigError(f"{where}.label must be a string, got {label!r}")
    return EstimatorSpec(label=label, penalty=penalty, schedule=schedule)


def parse_config(path: str | Path) -> ExperimentConfig:
    """Load and validate an experiment config; empty files mean all defaults."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    mapping = _require_mapping(raw, str(path))
    _check_keys(mapping, _TOP_KEYS, str(path))

    where = "config"
    if "estimators" in mapping:
        entries = mapping["estimators"]
        if not isinstance(entries, list) or not entries:
            raise ConfigError("config.estimators must be a non-empty list")
        specs = tuple(_parse_estimator(entry, i) for i, entry in enumerate(entries))
    else:
        specs = canonical_estimator_specs()

    try:
        return ExperimentConfig(
            n_taps=_as_int(mapping, "n_taps", experiment.DEFAULT_N_TAPS, where),
            k_nonzero=_as_int(mapping, "k_nonzero", experiment.DEFAULT_K_NONZERO, where),
            snr_db=_as_float(mapping, "snr_db", experiment.DEFAULT_SNR_DB, where),
            iterations=_as_int(mapping, "iterations", experiment.DEFAULT_ITERATIONS, where),
            trials=_as_int(mapping, "trials", experiment.DEFAULT_TRIALS, where),
            master_seed=_as_int(mapping, "master_seed", experiment.DEFAULT_MASTER_SEED, where),
            normalize_channel=_as_bool(mapping, "normalize_channel", True, where),
            estimator_specs=specs,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc


def _penalty_dict(penalty: PenaltyConfig) -> dict:
    out: dict = {"kind": penalty.kind}
    if penalty.kind != "none":
        out["lambda"] = penalty.lam
    if penalty.kind == "rza":
        out["epsilon"] = penalty.epsilon
    if penalty.kind == "rl1":
        out["delta"] = penalty.delta
    return out


def _schedule_dict(schedule: StepSchedule) -> dict:
    out: dict = {"kind": _SCHEDULE_TAGS[schedule.kind], "mu0": schedule.mu0}
    if schedule.kind == "iterative_promoting":
        out["phi"] = schedule.phi
    return out


def write_config(config: ExperimentConfig, path: str | Path) -> Path:
    """Emit the canonical YAML form; parse_config reproduces ``config`` exactly."""
    path = Path(path)
    doc = {
        "n_taps": config.n_taps,
        "k_nonzero": config.k_nonzero,
        "snr_db": config.snr_db,
        "iterations": config.iterations,
        "trials": config.trials,
        "master_seed": config.master_seed,
        "normalize_channel": config.normalize_channel,
        "estimators": [
            {
                "label": spec.label,
                "penalty": _penalty_dict(spec.penalty),
                "schedule": _schedule_dict(spec.schedule),
            }
            for spec in config.estimator_specs
        ],
    }
    path.write_text(yaml.safe_dump(doc, sort_keys=False))
    return path

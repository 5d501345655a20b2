#!/usr/bin/env python3
"""
Experiment configuration.

A config is a preset (one per experiment protocol) optionally overridden by a
flat key=value file and by command-line flags. Files are read with
python-dotenv; keys are case-insensitive and unknown keys are rejected.
"""

import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import NamedTuple

from dotenv import dotenv_values

from oracles import NOISE_PATTERNS, ORACLE_KINDS, OracleKind

FAMILIES = ('radial', 'glm', 'quadfrac')
STEP_POLICIES = ('lipschitz-optimal', 'weakly-smooth', 'constant')
ERROR_METRICS = ('gap', 'avg')
DEFAULT_OUT_DIR = 'results'
DEFAULT_WORKERS = 4


class ConfigError(ValueError):
    """Invalid or unknown configuration"""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = 'custom'
    family: str = 'radial'
    horizon: int = 20000
    dim: int = 100
    radius: float = 100.0
    delays: tuple = (1, 5, 10, 20)
    reps: int = 20
    seed: int = 0
    oracle: str = 'exact'
    noise_scale: float = 0.0
    noise_exponent: float = 1.0
    noise_pattern: str = 'fixed'
    h_scale: float = 1.0
    h_exponents: tuple = (1.0,)
    include_full_gradient: bool = False
    drift_scale: float = 0.1
    drift_exponents: tuple = (0.5,)
    samples: int = 1000
    amplitude_max: float = 1.0
    frequency_max: float = 2.5
    qf_factor: float = 0.01
    solver_tol: float = 1e-6
    solver_max_iter: int = 100000
    step_policy: str = 'lipschitz-optimal'
    eta: float = 0.0
    step_factor: float = 0.99
    threshold: float = 0.1
    error_metric: str = 'gap'
    # 0 picks max(1, T // 2000)
    stride: int = 0
    timing: bool = True
    # store the full-resolution per-round series as Parquet
    series: bool = True
    workers: int = DEFAULT_WORKERS
    out_dir: str = DEFAULT_OUT_DIR

    @property
    def record_stride(self):
        return self.stride if self.stride > 0 else max(1, self.horizon // 2000)


CONFIG_KEYS = tuple(f.name for f in fields(ExperimentConfig))

PRESETS = {
    'radial': dict(
        family='radial', horizon=20000, dim=100, radius=100.0, delays=(1, 5, 10, 20),
        step_policy='lipschitz-optimal', threshold=0.1),
    'high-delay-radial': dict(
        family='radial', horizon=200000, dim=100, radius=100.0, delays=(20, 50, 100, 150, 200),
        step_policy='lipschitz-optimal', threshold=0.1, series=False),
    'glm': dict(
        family='glm', horizon=20000, dim=100, radius=1.0, delays=(1, 5, 10, 20), samples=1000,
        drift_scale=0.1, drift_exponents=(0.5,), step_policy='weakly-smooth', threshold=1e-4),
    'glm-vt-sweep': dict(
        family='glm', horizon=20000, dim=100, radius=1.0, delays=(5,), samples=1000,
        drift_scale=0.1, drift_exponents=(0.0625, 0.125, 0.25, 0.5, 1.0),
        step_policy='weakly-smooth', threshold=1e-4),
    'quadfrac': dict(
        family='quadfrac', horizon=20000, dim=50, radius=10.0, delays=(1, 5, 10, 20),
        step_policy='weakly-smooth', threshold=1e-5),
    'quadfrac-bandit': dict(
        family='quadfrac', horizon=20000, dim=50, radius=10.0, delays=(5,), oracle='fd',
        h_scale=1.0, h_exponents=(1.0, 0.8, 0.6, 0.4), include_full_gradient=True,
        step_policy='weakly-smooth', threshold=1e-5),
}


class Variant(NamedTuple):
    """One curve family within an experiment: label, oracle and drift exponent"""
    label: str
    oracle: OracleKind
    drift_exponent: float


def _parse_bool(key, raw):
    value = raw.strip().lower()
    if value in ('1', 'true', 'yes', 'on'):
        return True
    if value in ('0', 'false', 'no', 'off'):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _coerce(key, raw):
    """Convert a text value to the type of the field's default"""
    if raw is None:
        raise ConfigError(f"{key}: missing value")
    default = getattr(ExperimentConfig, key)
    try:
        if isinstance(default, bool):
            return _parse_bool(key, raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            cast = int if all(isinstance(v, int) for v in default) else float
            return tuple(cast(v) for v in raw.replace(' ', '').split(',') if v)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None
    return raw.strip()


def from_preset(name, **overrides):
    if name not in PRESETS and name != 'custom':
        raise ConfigError(f"unknown experiment: {name} (choices: {', '.join(list(PRESETS) + ['custom'])})")
    return validate(ExperimentConfig(experiment=name, **{**PRESETS.get(name, {}), **overrides}))


def load_config(path, defaults=None):
    """Read a key=value file; an `experiment` key selects the preset it starts from.

    `defaults` (e.g. environment values) sit between the preset and the file keys.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for key, raw in dotenv_values(path).items():
        key = key.strip().lower()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    name = values.pop('experiment', 'custom')
    print(f'[INFO] Loaded {len(values)} keys from {path} (experiment={name})', file=sys.stderr)
    return from_preset(name, **{**(defaults or {}), **values})


def environment_defaults():
    """Output directory and worker count from DOGD_OUT_DIR / DOGD_WORKERS"""
    defaults = {}
    if os.getenv('DOGD_OUT_DIR'):
        defaults['out_dir'] = os.getenv('DOGD_OUT_DIR')
    if os.getenv('DOGD_WORKERS'):
        defaults['workers'] = _coerce('workers', os.getenv('DOGD_WORKERS'))
    return defaults


def apply_overrides(config, **overrides):
    """Replace the given (non-None) fields and re-validate"""
    overrides = {k: v for k, v in overrides.items() if v is not None}
    unknown = set(overrides) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown override keys: {', '.join(sorted(unknown))}")
    if 'delays' in overrides:
        overrides['delays'] = tuple(int(d) for d in overrides['delays'])
    return validate(replace(config, **overrides))


def validate(config):
    def check(ok, message):
        if not ok:
            raise ConfigError(message)

    check(config.family in FAMILIES, f"family must be one of {FAMILIES}, got {config.family!r}")
    check(config.oracle in ORACLE_KINDS, f"oracle must be one of {ORACLE_KINDS}, got {config.oracle!r}")
    check(config.noise_pattern in NOISE_PATTERNS, f"noise_pattern must be one of {NOISE_PATTERNS}")
    check(config.step_policy in STEP_POLICIES, f"step_policy must be one of {STEP_POLICIES}")
    check(config.error_metric in ERROR_METRICS, f"error_metric must be one of {ERROR_METRICS}")
    check(config.reps >= 1, f"reps must be >= 1, got {config.reps}")
    check(config.horizon >= 1, f"horizon must be >= 1, got {config.horizon}")
    check(config.dim >= 1, f"dim must be >= 1, got {config.dim}")
    check(config.radius > 0, f"radius must be positive, got {config.radius}")
    check(len(config.delays) > 0 and min(config.delays) >= 1, f"delays must be >= 1, got {config.delays}")
    check(len(set(config.delays)) == len(config.delays), f"duplicate delay levels in {config.delays}")
    check(config.threshold > 0, f"threshold must be positive, got {config.threshold}")
    check(config.stride >= 0, f"stride must be >= 0, got {config.stride}")
    check(config.workers >= 1, f"workers must be >= 1, got {config.workers}")
    check(config.noise_scale >= 0, f"noise_scale must be >= 0, got {config.noise_scale}")
    check(config.drift_scale >= 0 and min(config.drift_exponents, default=0) >= 0,
          "drift scale and exponents must be non-negative")
    check(config.drift_scale == 0 or min(config.drift_exponents, default=1) > 0,
          "drift exponents must be positive when drift_scale > 0")
    check(len(config.drift_exponents) > 0, "drift_exponents must not be empty")
    check(config.samples >= 1, f"samples must be >= 1, got {config.samples}")
    check(config.solver_tol > 0, f"solver_tol must be positive, got {config.solver_tol}")
    check(config.solver_max_iter >= 1, f"solver_max_iter must be >= 1, got {config.solver_max_iter}")
    check(0 < config.step_factor < 1, f"step_factor must lie in (0, 1), got {config.step_factor}")
    if config.oracle in ('fd', 'sym'):
        check(len(config.h_exponents) > 0 and min(config.h_exponents) >= 0, "h_exponents must be >= 0")
        check(0 < config.h_scale < config.radius, f"h_scale must lie in (0, radius), got {config.h_scale}")
    if config.step_policy == 'lipschitz-optimal':
        check(config.family == 'radial', "lipschitz-optimal steps need a Lipschitz constant (radial family)")
    if config.step_policy == 'weakly-smooth':
        check(config.family in ('glm', 'quadfrac'), "weakly-smooth steps need a Gamma certificate (glm or quadfrac)")
    if config.step_policy == 'constant':
        check(config.eta > 0, f"constant step policy needs eta > 0, got {config.eta}")
    return config


def variants(config):
    """Curve families of the experiment, in output order"""
    multi_drift = config.family == 'glm' and len(config.drift_exponents) > 1
    result = []
    if config.oracle in ('fd', 'sym'):
        if config.include_full_gradient:
            result.append(Variant(f'{config.experiment}:full', OracleKind('exact'), config.drift_exponents[0]))
        for a in config.h_exponents:
            label = f'{config.experiment}:a={a:g}' if len(config.h_exponents) > 1 or config.include_full_gradient \
                else config.experiment
            result.append(Variant(label, OracleKind(config.oracle, h_scale=config.h_scale, h_exponent=a),
                                  config.drift_exponents[0]))
        return result
    oracle = OracleKind(config.oracle, delta_scale=config.noise_scale, delta_exponent=config.noise_exponent,
                        pattern=config.noise_pattern)
    for a in config.drift_exponents:
        label = f'{config.experiment}:a={a:g}' if multi_drift else config.experiment
        result.append(Variant(label, oracle, a))
        if not multi_drift:
            break
    return result

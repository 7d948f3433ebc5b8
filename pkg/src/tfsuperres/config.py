"""Run configuration: a flat TOML file with unit-suffixed keys.

Example::

    sigma_nu_ghz = 182.0
    pm_sigma_ghz = 28.0
    total_counts = [5000, 10000, 20000]
    trials = 60
    seed = 7

Unknown keys are rejected. Optional quantities are simply left out.
"""

from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigurationError
from .montecarlo import ESTIMATORS, SCHEMES, ExperimentSpec
from .pulsegate import PM_MODELS, PulseGateConfig
from .units import domain_sigma, normalize_domain

DEFAULT_PM_SIGMA_GHZ = 28.0


@dataclass(frozen=True)
class RunConfig:
    # source and device, physical units
    sigma_nu_ghz: float = 182.0
    pump_sigma_ghz: Optional[float] = None  # defaults to sigma_nu_ghz
    pm_sigma_ghz: Optional[float] = None  # 28 GHz unless walkoff or slownesses are given
    walkoff_ps: Optional[float] = None
    length_mm: float = 17.0
    slowness_in_ps_per_mm: Optional[float] = None
    slowness_pump_ps_per_mm: Optional[float] = None
    slowness_out_ps_per_mm: Optional[float] = None
    pm_model: str = "gaussian"
    coupling: float = 1.0
    # experiment
    domain: str = "frequency"
    scheme: str = "pulse_gate"
    estimator: str = "ml"
    separation_points: int = 20
    separation_max_sigma: float = 2.0
    total_counts: tuple = (5000, 10000, 20000)
    trials: int = 60
    seed: int = 0
    calibration_counts: int = 1_200_000  # 0: use exact model probabilities
    basis_size: int = 4
    bins: int = 512
    bin_range_sigma: float = 8.0
    workers: int = 1
    # outputs
    bound_photons: int = 20000
    out_dir: str = "out"
    plots: bool = True

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            object.__setattr__(self, f.name, _coerce(f.name, f.type, value))
        try:
            object.__setattr__(self, "domain", normalize_domain(self.domain))
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}")
        if self.estimator not in ESTIMATORS:
            raise ConfigurationError(f"estimator must be one of {ESTIMATORS}")
        if self.pm_model not in PM_MODELS:
            raise ConfigurationError(f"pm_model must be one of {PM_MODELS}")
        if not self.sigma_nu_ghz > 0:
            raise ConfigurationError("sigma_nu_ghz must be positive")
        if self.separation_points < 2 or not self.separation_max_sigma > 0:
            raise ConfigurationError("need >= 2 separation points and a positive maximum")
        if self.calibration_counts < 0:
            raise ConfigurationError("calibration_counts must be >= 0")
        if self.bound_photons < 1:
            raise ConfigurationError("bound_photons must be >= 1")
        # validates the device parameters
        try:
            self.gate_config()
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None

    # construction helpers

    @classmethod
    def from_mapping(cls, mapping):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {', '.join(unknown)}")
        return cls(**mapping)

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            with path.open("rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"{path}: {exc}") from None
        return cls.from_mapping(data)

    def to_mapping(self):
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    def dumps(self):
        return tomli_w.dumps(self.to_mapping())

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    # derived objects

    @property
    def sigma(self):
        """PSF width in the physical unit of the configured domain."""
        return domain_sigma(self.domain, self.sigma_nu_ghz)

    def separations(self):
        return tuple(np.linspace(0.0, self.separation_max_sigma, self.separation_points))

    def gate_config(self) -> PulseGateConfig:
        pm_sigma = self.pm_sigma_ghz
        if pm_sigma is None and self.walkoff_ps is None and self.slowness_out_ps_per_mm is None:
            pm_sigma = DEFAULT_PM_SIGMA_GHZ
        return PulseGateConfig(
            pump_sigma=self.pump_sigma_ghz or self.sigma_nu_ghz,
            pm_sigma=pm_sigma,
            length=self.length_mm,
            walkoff=self.walkoff_ps,
            slowness_in=self.slowness_in_ps_per_mm,
            slowness_pump=self.slowness_pump_ps_per_mm,
            slowness_out=self.slowness_out_ps_per_mm,
            pm_model=self.pm_model,
            coupling=self.coupling,
        )

    def experiment(self, **overrides) -> ExperimentSpec:
        kwargs = dict(
            true_separations=self.separations(),
            total_counts=self.total_counts,
            trials=self.trials,
            scheme=self.scheme,
            estimator=self.estimator,
            domain=self.domain,
            seed=self.seed,
            gate_config=self.gate_config(),
            sigma_nu=self.sigma_nu_ghz,
            calibration_counts=self.calibration_counts or None,
            basis_size=self.basis_size,
            bins=self.bins,
            bin_range=self.bin_range_sigma,
            workers=self.workers,
        )
        kwargs.update(overrides)
        return ExperimentSpec(**kwargs)


def _coerce(name, annotation, value):
    ann = str(annotation)
    optional = "Optional" in ann
    if value is None:
        if optional:
            return None
        raise ConfigurationError(f"{name} is required")
    try:
        if "tuple" in ann:
            if not isinstance(value, (list, tuple)) or not value:
                raise TypeError
            return tuple(_as_int(v) for v in value)
        if "bool" in ann:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if "float" in ann:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError
            return float(value)
        if "int" in ann:
            return _as_int(value)
        if "str" in ann:
            if not isinstance(value, str):
                raise TypeError
            return value
    except TypeError:
        raise ConfigurationError(f"{name}: invalid value {value!r} (expected {ann})") from None
    return value


def _as_int(v):
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
        raise TypeError
    return int(v)

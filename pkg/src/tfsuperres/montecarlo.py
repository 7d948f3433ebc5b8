"""Seeded Monte Carlo experiments on simulated photon counts.

Every trial draws its counts from its own generator, derived from the
experiment seed and the trial's (separation index, count index, trial index)
through ``numpy.random.SeedSequence`` spawn keys. Results therefore do not
depend on execution order or on the number of worker threads.

Separations, estimates and variances are in units of the PSF width of the
chosen domain.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import fisher
from .errors import ConfigurationError, DomainError, InsufficientDataError
from .modes import SourceMixture, binned_mixture_probs, ideal_hg_probs
from .pulsegate import GateModel, PulseGateConfig, corrected_estimator, raw_estimator
from .tomography import (RANGE_FACTOR, CalibrationSet, TomographyModel, fit_coefficients,
                         grid_golden_max, ml_fit, GRID_POINTS, GOLDEN_TOL)
from .units import normalize_domain

log = logging.getLogger(__name__)

SCHEMES = ("pulse_gate", "ideal_hg", "direct_spectrometer")
ESTIMATORS = ("ml", "raw", "corrected")
DEFAULT_SEPARATIONS = tuple(np.linspace(0.0, 2.0, 20))
DEFAULT_COUNTS = (5000, 10000, 20000)
# Spawn-key prefix for calibration streams; trial keys are small indices.
_CALIBRATION_KEY = 2**31


@dataclass(frozen=True)
class ExperimentSpec:
    true_separations: tuple = DEFAULT_SEPARATIONS
    total_counts: tuple = DEFAULT_COUNTS
    trials: int = 60
    scheme: str = "pulse_gate"
    estimator: str = "ml"
    domain: str = "frequency"
    seed: int = 0
    gate_config: Optional[PulseGateConfig] = None
    sigma_nu: float = 182.0
    calibration_separations: Optional[tuple] = None
    calibration_counts: Optional[int] = 1_200_000
    basis_size: int = 4
    bins: int = 512
    bin_range: float = 8.0
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "true_separations", tuple(float(s) for s in self.true_separations))
        object.__setattr__(self, "total_counts", tuple(int(n) for n in self.total_counts))
        object.__setattr__(self, "domain", normalize_domain(self.domain))
        if self.trials < 2:
            raise ConfigurationError("trials must be >= 2")
        if not self.total_counts or min(self.total_counts) < 1:
            raise ConfigurationError("total_counts must be >= 1")
        if not self.true_separations or min(self.true_separations) < 0:
            raise ConfigurationError("separations must be non-negative")
        if max(self.true_separations) > RANGE_FACTOR:
            raise ConfigurationError(f"separations above {RANGE_FACTOR} sigma are outside the search range")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}")
        if self.estimator not in ESTIMATORS:
            raise ConfigurationError(f"estimator must be one of {ESTIMATORS}")
        if self.scheme == "pulse_gate" and self.gate_config is None:
            raise ConfigurationError("the pulse_gate scheme needs a gate_config")
        if self.scheme == "direct_spectrometer" and self.estimator != "ml":
            raise ConfigurationError("direct detection supports only the ml estimator")
        if self.estimator == "corrected" and self.scheme != "pulse_gate":
            raise ConfigurationError("the corrected estimator needs a pulse gate")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")


@dataclass(frozen=True)
class SummaryStats:
    """Per-(separation, total count) estimator statistics.

    Arrays are indexed ``[i_separation, i_count]``. ``variance`` is the
    population variance of the estimates, so ``mse == variance + bias**2``.
    """

    separations: np.ndarray
    total_counts: np.ndarray
    mean: np.ndarray
    mse: np.ndarray
    variance: np.ndarray
    clamp_rate: np.ndarray
    trials: int
    scheme: str = ""
    estimates: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def bias(self):
        return self.mean - self.separations[:, None]

    def rows(self):
        for i, s in enumerate(self.separations):
            for k, n in enumerate(self.total_counts):
                yield {"s_over_sigma": float(s), "total_counts": int(n),
                       "mean": float(self.mean[i, k]), "mse": float(self.mse[i, k]),
                       "variance": float(self.variance[i, k]),
                       "clamp_rate": float(self.clamp_rate[i, k]), "trials": self.trials}


def trial_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the stream identified by ``key``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def sample_counts(probs, total: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial draw of exactly ``total`` events over the (renormalized) outcomes."""
    p = np.asarray(probs, dtype=float)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise DomainError("probabilities must be finite and non-negative")
    s = p.sum()
    if not s > 0:
        raise DomainError("probabilities sum to zero")
    if total < 1:
        raise DomainError("total must be >= 1")
    return rng.multinomial(int(total), p / s)


class DirectDetectionFitter:
    """Binned maximum-likelihood separation fit for spectrometer data.

    Centroid and width are known; the likelihood is multinomial over bins of
    width ``2 * half_range / bins`` centred on the mixture.
    """

    def __init__(self, bins: int = 512, half_range: float = 8.0, sigma: float = 1.0):
        if bins < 16:
            raise ConfigurationError("need at least 16 bins")
        self.bins = int(bins)
        self.half_range = float(half_range)
        self.sigma = float(sigma)
        self.edges = np.linspace(-half_range, half_range, self.bins + 1)
        self.max_separation = RANGE_FACTOR * sigma
        if half_range < 0.5 * self.max_separation + 6 * sigma:
            raise ConfigurationError(
                f"bin range +-{half_range} does not cover the search range plus 6 sigma")
        self.grid = np.linspace(0.0, self.max_separation, GRID_POINTS)
        self.logp_grid = np.log(self._probs(self.grid))

    def _probs(self, separation):
        p = binned_mixture_probs(separation, self.sigma, self.edges)
        p = np.maximum(p, 1e-300)
        return p / p.sum(axis=-1, keepdims=True)

    def probs(self, separation):
        return self._probs(separation)

    def fit(self, counts) -> tuple:
        counts = np.asarray(counts, dtype=float)
        if counts.sum() <= 0:
            raise InsufficientDataError("no photons")
        nz = counts > 0
        cnz = counts[nz]

        def f(s):
            return float(np.log(self._probs(s)[nz]) @ cnz)

        s_hat, _ = grid_golden_max(self.logp_grid[:, nz] @ cnz, self.grid, f,
                                   GOLDEN_TOL * self.sigma)
        tol = 10 * GOLDEN_TOL * self.sigma
        return s_hat, bool(s_hat <= tol or s_hat >= self.max_separation - tol)


@lru_cache(maxsize=16)
def _direct_fitter(bins, half_range, sigma):
    return DirectDetectionFitter(bins, half_range, sigma)


def direct_detection_trial(mix: SourceMixture, bins: int, half_range: float, total: int,
                           rng: np.random.Generator) -> float:
    """One spectrometer experiment: bin ``total`` photons from the mixture and fit the separation."""
    sigma = mix.psf.sigma
    if half_range < 0.5 * mix.separation + 6 * sigma:
        raise ConfigurationError("bin range must cover +-(s/2 + 6 sigma)")
    fitter = _direct_fitter(int(bins), float(half_range), float(sigma))
    counts = sample_counts(fitter.probs(mix.separation), total, rng)
    return fitter.fit(counts)[0]


def gate_model_for(spec: ExperimentSpec) -> GateModel:
    cfg = spec.gate_config
    return GateModel(spec.sigma_nu, cfg.pm_sigma, cfg.pump_sigma, spec.domain, points=257)


def probability_model(spec: ExperimentSpec) -> Callable[[float], np.ndarray]:
    """Outcome probabilities of the scheme as a function of ``s / sigma``."""
    if spec.scheme == "ideal_hg":
        return lambda s: ideal_hg_probs(s, 1.0, 3)
    if spec.scheme == "pulse_gate":
        return gate_model_for(spec)
    fitter = _direct_fitter(spec.bins, spec.bin_range, 1.0)
    return lambda s: fitter.probs(s)


def calibrate(spec: ExperimentSpec, probs=None) -> TomographyModel:
    """Fit the tomography model for the scheme from synthetic calibration data."""
    return fit_coefficients(calibration_set(spec, probs), 1.0, spec.basis_size)


def calibration_set(spec: ExperimentSpec, probs=None) -> CalibrationSet:
    """Synthetic calibration frequencies (separations in units of sigma).

    Calibration uses ``calibration_separations`` (default: 20 points on
    [0, 2 sigma]). With ``calibration_counts`` unset the exact model probabilities are used;
    otherwise each calibration separation is measured with that many events,
    drawn from streams disjoint from the trial streams.
    """
    probs = probs or probability_model(spec)
    seps = spec.calibration_separations or DEFAULT_SEPARATIONS
    seps = np.array(sorted(set(float(s) for s in seps)))
    exact = np.array([probs(s) for s in seps])
    if spec.calibration_counts is None:
        freqs = exact / exact.sum(axis=1, keepdims=True)
    else:
        counts = np.array([sample_counts(p, spec.calibration_counts,
                                         trial_rng(spec.seed, _CALIBRATION_KEY, i))
                           for i, p in enumerate(exact)])
        freqs = counts / counts.sum(axis=1, keepdims=True)
    return CalibrationSet(seps, freqs)


class _Trial(NamedTuple):
    estimate: float
    clamped: bool


def _make_estimator(spec: ExperimentSpec, tomo: Optional[TomographyModel]):
    if spec.scheme == "direct_spectrometer":
        fitter = _direct_fitter(spec.bins, spec.bin_range, 1.0)
        return lambda counts: _Trial(*fitter.fit(counts))
    if spec.estimator == "ml":
        def est(counts):
            r = ml_fit(tomo, counts)
            return _Trial(r.separation, r.at_boundary)
        return est
    if spec.estimator == "raw":
        def est(counts):
            if counts[0] == 0:
                raise InsufficientDataError("no counts in the fundamental mode")
            value = raw_estimator(counts[1], counts[0])
            return _Trial(value, value == 0.0)
        return est
    cfg = spec.gate_config
    # floor term pm^2 / (4 sigma_nu^2) is domain independent
    def est(counts):
        if counts[0] == 0:
            raise InsufficientDataError("no counts in the fundamental mode")
        r = corrected_estimator(counts[1], counts[0], 1.0, cfg.pm_sigma / spec.sigma_nu, 1.0)
        return _Trial(r.separation, r.clamped)
    return est


def run_experiment(spec: ExperimentSpec, tomography_model: Optional[TomographyModel] = None,
                   workers: Optional[int] = None) -> SummaryStats:
    """Run ``trials`` simulated measurements at every (separation, total count) pair."""
    probs = probability_model(spec)
    tomo = tomography_model
    if tomo is None and spec.estimator == "ml":
        if spec.scheme == "pulse_gate":
            tomo = calibrate(spec, probs)
        elif spec.scheme == "ideal_hg":
            tomo = TomographyModel.perfect(1.0, spec.basis_size)
    estimator = _make_estimator(spec, tomo)

    seps = spec.true_separations
    counts_list = spec.total_counts
    R = spec.trials
    # evaluate the (memoized) probability model before fanning out
    cell_probs = [probs(s) for s in seps]
    estimates = np.empty((len(seps), len(counts_list), R))
    clamped = np.zeros_like(estimates, dtype=bool)

    def run_cell(cell):
        i, k = cell
        for r in range(R):
            rng = trial_rng(spec.seed, i, k, r)
            counts = sample_counts(cell_probs[i], counts_list[k], rng)
            t = estimator(counts)
            estimates[i, k, r] = t.estimate
            clamped[i, k, r] = t.clamped

    cells = [(i, k) for i in range(len(seps)) for k in range(len(counts_list))]
    n_workers = workers or spec.workers
    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            list(pool.map(run_cell, cells))
    else:
        for cell in cells:
            run_cell(cell)
    log.debug("ran %d cells x %d trials (%s)", len(cells), R, spec.scheme)
    return summarize(np.asarray(seps), np.asarray(counts_list), estimates, clamped, spec.scheme)


def summarize(separations, total_counts, estimates, clamped, scheme="") -> SummaryStats:
    truth = separations[:, None, None]
    mean = estimates.mean(axis=2)
    mse = ((estimates - truth) ** 2).mean(axis=2)
    variance = ((estimates - mean[..., None]) ** 2).mean(axis=2)
    return SummaryStats(separations, total_counts, mean, mse, variance,
                        clamped.mean(axis=2), estimates.shape[2], scheme, estimates)


class BoundRow(NamedTuple):
    s_over_sigma: float
    total_counts: int
    mse: float
    std_crlb: float
    quantum_limit: float
    model_crlb: float
    mse_over_std_crlb: float
    mse_over_quantum_limit: float
    below_std_crlb: bool
    below_half_model_crlb: bool


def compare_bounds(stats: SummaryStats, sigma: float = 1.0,
                   model: Optional[Callable[[float], np.ndarray]] = None) -> list:
    """Tabulate empirical MSE against the standard, quantum and model bounds.

    ``below_std_crlb`` marks the headline result (MSE under the intensity-only
    bound); ``below_half_model_crlb`` marks a sanity violation. Without a
    model, the model bound defaults to the standard bound.
    """
    if stats.mse.size == 0:
        raise ValueError("empty statistics")
    rows = []
    for i, s in enumerate(stats.separations):
        info_std = fisher.fisher_direct(s, 1.0, 1)
        info_model = info_std if model is None else fisher.fisher_model(
            model, max(float(s), fisher.FD_STEP), 1)
        for k, n in enumerate(stats.total_counts):
            n = int(n)
            std = np.inf if info_std <= 0 else sigma**2 / (n * info_std)
            mod = np.inf if info_model <= 0 else sigma**2 / (n * info_model)
            ql = fisher.quantum_limit_variance(sigma, n)
            mse = float(stats.mse[i, k]) * sigma**2
            rows.append(BoundRow(float(s), n, mse, std, ql, mod, mse / std, mse / ql,
                                 bool(mse < std), bool(mse < 0.5 * mod)))
    return rows

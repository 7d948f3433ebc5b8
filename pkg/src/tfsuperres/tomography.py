"""Measurement tomography and constrained maximum-likelihood estimation.

The real detection probabilities of a three-outcome mode sorter are expanded
in the ideal Hermite-Gauss projection probabilities,

    p_j(s) = sum_k c_jk q_k(s),    k = 0..M,

with the coefficients fitted to calibration frequencies by an SVD
pseudo-inverse. Separations are then estimated by maximizing the multinomial
log-likelihood ``sum_j n_j log(p_j / sum p)`` over ``s >= 0``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import (DomainError, ExtrapolationError, InsufficientDataError,
                     SingularCalibrationError, UnderdeterminedError)
from .modes import ideal_projection_prob

OUTCOMES = 3
PROB_FLOOR = 1e-12
RANGE_FACTOR = 2.5
GRID_POINTS = 256
GOLDEN_TOL = 1e-6
RCOND = 1e-10
MIN_SINGULAR_VALUE = 1e-12


@dataclass(frozen=True)
class CountRecord:
    counts: tuple

    def __post_init__(self):
        counts = tuple(int(n) for n in self.counts)
        if len(counts) != OUTCOMES:
            raise DomainError(f"expected {OUTCOMES} counts, got {len(counts)}")
        if any(n < 0 for n in counts):
            raise DomainError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self):
        return sum(self.counts)


@dataclass(frozen=True)
class CalibrationSet:
    """Known separations and the measured relative frequencies at each of them.

    ``frequencies`` has shape (len(separations), 3). Measured rows sum to one;
    model-generated rows may sum to less (e.g. the ideal ``q_0..q_2``, whose
    remaining mass sits in higher-order modes), never to more.
    """

    separations: np.ndarray
    frequencies: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.separations, dtype=float)
        f = np.atleast_2d(np.asarray(self.frequencies, dtype=float))
        if s.ndim != 1 or f.shape != (s.size, OUTCOMES):
            raise DomainError(f"frequencies must have shape ({s.size}, {OUTCOMES})")
        if np.any(s < 0):
            raise DomainError("calibration separations must be non-negative")
        if np.any(np.diff(s) <= 0):
            raise DomainError("calibration separations must be strictly increasing")
        if np.any(f < 0):
            raise DomainError("frequencies must be non-negative")
        sums = f.sum(axis=1)
        if np.any(sums > 1.0 + 1e-9) or np.any(sums <= 0):
            raise DomainError("each frequency vector must sum to a value in (0, 1]")
        object.__setattr__(self, "separations", s)
        object.__setattr__(self, "frequencies", f)

    @classmethod
    def from_counts(cls, separations, counts):
        counts = np.asarray(counts, dtype=float)
        totals = counts.sum(axis=1, keepdims=True)
        if np.any(totals <= 0):
            raise InsufficientDataError("calibration point without counts")
        return cls(separations, counts / totals)


@dataclass(frozen=True)
class TomographyModel:
    coefficients: np.ndarray  # shape (3, M + 1)
    sigma: float = 1.0
    singular_values: Optional[np.ndarray] = field(default=None, compare=False)
    residual_rms: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coefficients, dtype=float))
        if c.shape[0] != OUTCOMES or c.shape[1] < 3:
            raise DomainError(f"coefficients must have shape ({OUTCOMES}, M+1) with M >= 2")
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        object.__setattr__(self, "coefficients", c)

    @property
    def basis_size(self):
        return self.coefficients.shape[1] - 1

    @property
    def max_separation(self):
        return RANGE_FACTOR * self.sigma

    @classmethod
    def perfect(cls, sigma=1.0, basis_size=4):
        c = np.zeros((OUTCOMES, basis_size + 1))
        c[:, :OUTCOMES] = np.eye(OUTCOMES)
        return cls(c, sigma)

    def to_dict(self):
        d = {"basis_size": self.basis_size, "sigma": self.sigma,
             "coefficients": self.coefficients.tolist()}
        if self.singular_values is not None:
            d["singular_values"] = np.asarray(self.singular_values).tolist()
        if self.residual_rms is not None:
            d["residual_rms"] = np.asarray(self.residual_rms).tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        c = np.asarray(d["coefficients"], dtype=float)
        if "basis_size" in d and c.shape[1] != d["basis_size"] + 1:
            raise DomainError("basis_size does not match the coefficient matrix")
        sv = d.get("singular_values")
        rms = d.get("residual_rms")
        return cls(c, float(d["sigma"]),
                   None if sv is None else np.asarray(sv, dtype=float),
                   None if rms is None else np.asarray(rms, dtype=float))


def design_matrix(separations: Sequence[float], sigma: float = 1.0, basis_size: int = 4):
    """Matrix ``Q[alpha, k] = q_k(s_alpha)`` for k = 0..basis_size."""
    if basis_size < 2:
        raise DomainError("basis_size must be at least 2")
    s = np.atleast_1d(np.asarray(separations, dtype=float))
    if s.size == 0:
        raise DomainError("no calibration separations")
    if s.size < basis_size + 1:
        raise UnderdeterminedError(
            f"{s.size} calibration points for {basis_size + 1} basis functions")
    return np.column_stack([ideal_projection_prob(k, s, sigma) for k in range(basis_size + 1)])


def _pseudo_inverse(q, rcond=RCOND):
    u, sv, vt = np.linalg.svd(q, full_matrices=False)
    if sv[-1] <= MIN_SINGULAR_VALUE or sv[-1] <= rcond * sv[0]:
        raise SingularCalibrationError(
            f"calibration design matrix is rank deficient (smallest singular value {sv[-1]:.3g})",
            smallest_singular_value=float(sv[-1]))
    return (vt.T / sv) @ u.T, sv


def fit_coefficients(cal: CalibrationSet, sigma: float = 1.0, basis_size: int = 4) -> TomographyModel:
    """Least-squares coefficients ``c_j = Q^+ f_j`` for each outcome j."""
    q = design_matrix(cal.separations, sigma, basis_size)
    q_pinv, sv = _pseudo_inverse(q)
    coefficients = (q_pinv @ cal.frequencies).T
    residual = q @ coefficients.T - cal.frequencies
    rms = np.sqrt(np.mean(residual**2, axis=0))
    return TomographyModel(coefficients, sigma, sv, rms)


def _raw_probs(model: TomographyModel, separation):
    s = np.asarray(separation, dtype=float)
    q = np.stack([ideal_projection_prob(k, s, model.sigma)
                  for k in range(model.basis_size + 1)], axis=-1)
    return np.clip(q @ model.coefficients.T, PROB_FLOOR, 1.0)


def predicted_probs(model: TomographyModel, separation: float) -> np.ndarray:
    """Clamped, unnormalized outcome probabilities at ``separation``."""
    if separation < 0 or separation > model.max_separation * (1 + 1e-12):
        raise ExtrapolationError(
            f"separation {separation} outside calibrated range [0, {model.max_separation}]")
    return _raw_probs(model, separation)


def log_likelihood(model: TomographyModel, counts, separation):
    """Multinomial log-likelihood ``sum_j n_j log(p_j / sum p)``; vectorized in ``separation``."""
    p = _raw_probs(model, separation)
    logp = np.log(p) - np.log(p.sum(axis=-1, keepdims=True))
    return logp @ np.asarray(counts, dtype=float)


def golden_section_max(f, lo, hi, tol):
    """Maximize a unimodal ``f`` on ``[lo, hi]``; returns the abscissa."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        # >= keeps the left point on ties, biasing toward smaller arguments
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def grid_golden_max(loglik_grid, grid, f, tol):
    """Coarse grid maximum refined by golden section in the neighbouring cells.

    Endpoints are compared explicitly so that boundary maxima are returned
    exactly. Returns ``(argmax, value)``.
    """
    i = int(np.argmax(loglik_grid))  # first maximum: ties go to smaller s
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    x = golden_section_max(f, lo, hi, tol)
    fx = f(x)
    best_x, best_f = x, fx
    for edge in (lo, hi):
        fe = f(edge)
        if fe > best_f or (fe == best_f and edge < best_x):
            best_x, best_f = edge, fe
    return float(best_x), float(best_f)


class MLResult(NamedTuple):
    separation: float
    at_boundary: bool
    log_likelihood: float
    stderr: float


class _Estimator:
    """Precomputes the coarse likelihood grid for one model."""

    def __init__(self, model: TomographyModel, grid_points=GRID_POINTS):
        self.model = model
        self.grid = np.linspace(0.0, model.max_separation, grid_points)
        p = _raw_probs(model, self.grid)
        self.logp_grid = np.log(p) - np.log(p.sum(axis=1, keepdims=True))

    def __call__(self, counts, tol=GOLDEN_TOL) -> MLResult:
        counts = np.asarray(counts, dtype=float)
        if counts.shape != (OUTCOMES,) or np.any(counts < 0):
            raise DomainError(f"counts must be {OUTCOMES} non-negative numbers")
        if counts.sum() <= 0:
            raise InsufficientDataError("all counts are zero")
        model = self.model

        def f(s):
            return float(log_likelihood(model, counts, s))

        s_hat, ll = grid_golden_max(self.logp_grid @ counts, self.grid, f, tol * model.sigma)
        boundary_tol = 10 * tol * model.sigma
        at_boundary = s_hat <= boundary_tol or s_hat >= model.max_separation - boundary_tol
        return MLResult(s_hat, bool(at_boundary), ll, _curvature_stderr(f, s_hat, model))


def _curvature_stderr(f, s_hat, model):
    h = 1e-3 * model.sigma
    lo = max(s_hat - h, 0.0)
    hi = min(s_hat + h, model.max_separation)
    mid = 0.5 * (lo + hi)
    step = 0.5 * (hi - lo)
    curvature = (f(hi) - 2 * f(mid) + f(lo)) / step**2
    return math.sqrt(-1.0 / curvature) if curvature < 0 else math.inf


_ESTIMATOR_CACHE = {}
_CACHE_LOCK = threading.Lock()


def _estimator_for(model):
    key = (model.coefficients.tobytes(), model.coefficients.shape, model.sigma)
    with _CACHE_LOCK:
        est = _ESTIMATOR_CACHE.get(key)
        if est is None:
            est = _ESTIMATOR_CACHE[key] = _Estimator(model)
            if len(_ESTIMATOR_CACHE) > 64:
                _ESTIMATOR_CACHE.pop(next(iter(_ESTIMATOR_CACHE)))
    return est


def ml_fit(model: TomographyModel, record) -> MLResult:
    """Constrained ML separation with boundary flag and curvature standard error."""
    counts = record.counts if isinstance(record, CountRecord) else record
    return _estimator_for(model)(counts)


def ml_estimate(model: TomographyModel, record) -> float:
    """ML separation estimate on ``[0, 2.5 sigma]``."""
    return ml_fit(model, record).separation

"""Fisher information and Cramer-Rao bounds for separation estimation.

Three kinds of bound are provided:

* ``standard_crlb``: direct intensity detection (spectrometer or timing
  histogram with infinitely fine bins), ``1 / F_std``.
* ``quantum_limit``: the separation-independent bound ``4 sigma^2 / N``.
* ``model_crlb``: any discrete measurement with outcome probabilities
  ``p_j(s)``, computed from central finite differences.

Separations and variances are expressed in units of the PSF width unless a
physical ``sigma`` is passed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import DomainError
from .modes import QUAD_HALF_WIDTH, QUAD_POINTS, gaussian_amplitude, quadrature_grid

FD_STEP = 1e-4
PROB_FLOOR = 1e-12
KINDS = ("standard_crlb", "quantum_limit", "model_crlb")


@dataclass(frozen=True)
class BoundCurve:
    """Variance bound sampled on a separation grid.

    ``values`` holds ``inf`` where the bound diverges (zero Fisher information).
    """

    separations: tuple
    values: tuple
    kind: str
    photons: int

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown bound kind {self.kind!r}")
        if len(self.separations) != len(self.values):
            raise ValueError("separations and values differ in length")
        if self.photons < 1:
            raise ValueError("photons must be >= 1")


def _mixture_and_derivative(x, separation, sigma):
    half = 0.5 * separation
    g_minus = gaussian_amplitude(x, -half, sigma) ** 2  # component centred at -s/2
    g_plus = gaussian_amplitude(x, half, sigma) ** 2
    intensity = 0.5 * (g_minus + g_plus)
    # d/ds of g(x + s/2) is  g'(x + s/2)/2 with g'(y) = -y g(y)/sigma^2
    d_intensity = 0.25 * (-(x + half) * g_minus + (x - half) * g_plus) / sigma**2
    return intensity, d_intensity


def fisher_direct(separation: float, sigma: float = 1.0, photons: int = 1,
                  points: int = QUAD_POINTS, half_width: float = QUAD_HALF_WIDTH) -> float:
    """Fisher information of ``photons`` direct intensity detections.

    ``N * integral (dI/ds)^2 / I`` with the derivative taken analytically.
    """
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    if photons < 1:
        raise DomainError("photons must be >= 1")
    separation = abs(float(separation))
    if separation == 0.0:
        return 0.0
    x = quadrature_grid(-0.5 * separation, 0.5 * separation, sigma, half_width, points)
    intensity, d_intensity = _mixture_and_derivative(x, separation, sigma)
    integrand = np.zeros_like(x)
    ok = intensity >= 1e-300
    integrand[ok] = d_intensity[ok] ** 2 / intensity[ok]
    return photons * float(integrate.trapezoid(integrand, x))


def quantum_limit_variance(sigma: float = 1.0, photons: int = 1) -> float:
    if photons < 1:
        raise DomainError("photons must be >= 1")
    return 4.0 * sigma**2 / photons


def _normalized(probs, separation):
    p = np.asarray(probs(separation), dtype=float)
    if not np.all(np.isfinite(p)):
        raise DomainError(f"non-finite probabilities at separation {separation}")
    total = p.sum()
    if not total > 0:
        raise DomainError(f"probabilities sum to {total} at separation {separation}")
    return p / total


def fisher_model(probs: Callable[[float], Sequence[float]], separation: float,
                 photons: int = 1, sigma: float = 1.0, step: float = FD_STEP) -> float:
    """Fisher information ``N sum_j p_j'^2 / p_j`` of a discrete measurement model.

    ``probs`` maps a separation to an outcome probability vector, which is
    renormalized. Derivatives are central differences with step
    ``step * sigma``; outcomes with ``p_j < 1e-12`` are dropped.
    """
    if photons < 1:
        raise DomainError("photons must be >= 1")
    h = step * sigma
    if separation < h:
        raise DomainError(f"separation {separation} below finite-difference step {h}")
    p = _normalized(probs, separation)
    dp = (_normalized(probs, separation + h) - _normalized(probs, separation - h)) / (2 * h)
    keep = p >= PROB_FLOOR
    return photons * float(np.sum(dp[keep] ** 2 / p[keep]))


def _inverse(info):
    return np.inf if info <= 0 else 1.0 / info


def standard_crlb_curve(separations, sigma=1.0, photons=1) -> BoundCurve:
    values = tuple(_inverse(fisher_direct(s, sigma, photons)) for s in separations)
    return BoundCurve(tuple(float(s) for s in separations), values, "standard_crlb", photons)


def quantum_limit_curve(separations, sigma=1.0, photons=1) -> BoundCurve:
    value = quantum_limit_variance(sigma, photons)
    return BoundCurve(tuple(float(s) for s in separations), (value,) * len(separations),
                      "quantum_limit", photons)


def model_crlb_curve(probs, separations, sigma=1.0, photons=1, step=FD_STEP) -> BoundCurve:
    """``1 / fisher_model`` on a grid.

    Separations below the finite-difference step are evaluated at the step,
    which is the small-separation limit for models even in ``s``.
    """
    h = step * sigma
    values = tuple(_inverse(fisher_model(probs, max(float(s), h), photons, sigma, step))
                   for s in separations)
    return BoundCurve(tuple(float(s) for s in separations), values, "model_crlb", photons)

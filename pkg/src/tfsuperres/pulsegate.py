"""Quantum pulse gate: mode-selective sum-frequency generation.

A weak signal ``psi`` is upconverted by a Hermite-Gauss shaped pump ``alpha``
in a group-velocity matched waveguide. In the first-order (low efficiency)
regime the upconverted amplitude is

    gamma(nu3) = theta * H(nu3) * integral dnu1 alpha(nu3 - nu1) psi(nu1)

and the relative detection probability is ``P = integral |gamma|^2 dnu3``.
Frequencies are in GHz (relative to the phasematched centre frequencies),
times in ps, lengths in mm, slownesses (inverse group velocities) in ps/mm.
The wavenumber derivative entering the phasematching function is
``k' = 2 pi * slowness``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
from scipy import integrate

from .errors import ConfigurationError, DomainError, QuadratureError
from .units import GHZ_PS, normalize_domain, sigma_t_from_sigma_nu

# Gaussian approximation of the filtered sinc: exp(-ETA x^2) has the same
# amplitude half-maximum as sinc(x).
ETA = 0.193
# RMS bandwidth of the filtered phasematching function times the walkoff (THz*ps).
PM_WALKOFF_PRODUCT = 0.18

NESTED_POINTS = 1025
NESTED_HALF_WIDTH = 10.0
TAIL_TOLERANCE = 1e-8
PM_MODELS = ("gaussian", "sinc")


def walkoff_to_pm_sigma(walkoff: float) -> float:
    """RMS phasematching bandwidth (GHz) for a walkoff ``walkoff`` (ps)."""
    if not walkoff > 0:
        raise DomainError(f"walkoff must be positive, got {walkoff}")
    return PM_WALKOFF_PRODUCT / (walkoff * GHZ_PS)


@dataclass(frozen=True)
class PulseGateConfig:
    """Device and pump parameters.

    Either the three slownesses or ``walkoff`` may be given; ``pm_sigma`` is
    derived from the walkoff when omitted. ``walkoff`` is ``L/2`` times the
    input/output slowness difference.
    """

    pump_sigma: float
    pm_sigma: Optional[float] = None
    length: float = 17.0
    walkoff: Optional[float] = None
    slowness_in: Optional[float] = None
    slowness_pump: Optional[float] = None
    slowness_out: Optional[float] = None
    pm_model: str = "gaussian"
    pump_order: int = 0
    coupling: float = 1.0

    def __post_init__(self):
        if not self.length > 0:
            raise ConfigurationError("length must be positive")
        if not self.pump_sigma > 0:
            raise ConfigurationError("pump_sigma must be positive")
        if self.pump_order not in (0, 1, 2):
            raise ConfigurationError(f"pump_order must be 0, 1 or 2, got {self.pump_order}")
        if not self.coupling > 0:
            raise ConfigurationError("coupling must be positive")
        if self.pm_model not in PM_MODELS:
            raise ConfigurationError(f"pm_model must be one of {PM_MODELS}")

        slownesses = (self.slowness_in, self.slowness_pump, self.slowness_out)
        if any(s is not None for s in slownesses):
            if any(s is None for s in slownesses):
                raise ConfigurationError("give all three slownesses or none")
            if not math.isclose(self.slowness_in, self.slowness_pump, rel_tol=1e-12, abs_tol=1e-15):
                raise ConfigurationError("input and pump must be group-velocity matched")
            walkoff = 0.5 * self.length * abs(self.slowness_in - self.slowness_out)
            if self.walkoff is not None and not math.isclose(walkoff, self.walkoff, rel_tol=1e-9):
                raise ConfigurationError(
                    f"walkoff {self.walkoff} ps inconsistent with slownesses ({walkoff} ps)")
            object.__setattr__(self, "walkoff", walkoff)
        elif self.pm_model == "sinc":
            raise ConfigurationError("the sinc phasematching model needs the three slownesses")

        if self.walkoff is not None:
            derived = walkoff_to_pm_sigma(self.walkoff)
            if self.pm_sigma is None:
                object.__setattr__(self, "pm_sigma", derived)
            elif not math.isclose(self.pm_sigma, derived, rel_tol=1e-9):
                raise ConfigurationError(
                    f"pm_sigma {self.pm_sigma} GHz inconsistent with walkoff ({derived} GHz)")
        if self.pm_sigma is None:
            raise ConfigurationError("pm_sigma or walkoff is required")
        if not self.pm_sigma > 0:
            raise ConfigurationError("pm_sigma must be positive")

    def with_order(self, order: int) -> "PulseGateConfig":
        return replace(self, pump_order=order)


@dataclass(frozen=True)
class InputSignal:
    """Gaussian signal pulse offset by ``delta_nu`` (GHz) and delayed by ``delta_t`` (ps)."""

    sigma_nu: float
    delta_nu: float = 0.0
    delta_t: float = 0.0

    def __post_init__(self):
        if not self.sigma_nu > 0:
            raise DomainError("sigma_nu must be positive")

    def amplitude(self, nu):
        nu = np.asarray(nu, dtype=float)
        norm = (2.0 * np.pi * self.sigma_nu**2) ** -0.25
        return norm * np.exp(-((nu + self.delta_nu) ** 2) / (4.0 * self.sigma_nu**2)
                             - 2j * np.pi * nu * self.delta_t * GHZ_PS)


def phasematching_amplitude(config: PulseGateConfig, nu3):
    """Phasematching function of the output frequency, peak value ``length``."""
    nu3 = np.asarray(nu3, dtype=float)
    if config.pm_model == "gaussian":
        return config.length * np.exp(-(nu3**2) / (4.0 * config.pm_sigma**2))
    if config.slowness_out is None:
        raise ConfigurationError("the sinc phasematching model needs the three slownesses")
    # L (k3' - k1') nu3 / 2 with k' = 2 pi slowness; np.sinc(x) = sin(pi x)/(pi x)
    arg = config.length * (config.slowness_out - config.slowness_in) * nu3 * GHZ_PS
    return config.length * np.sinc(arg)


def _hg_stack(u, max_order):
    """Normalized Hermite functions of orders 0..max_order in units of width (without envelope)."""
    out = [np.ones_like(u), u]
    for k in range(1, max_order):
        out.append((u * out[k] - math.sqrt(k) * out[k - 1]) / math.sqrt(k + 1))
    return out[: max_order + 1]


def upconversion_probs(config: PulseGateConfig, signal: InputSignal, orders=(0, 1, 2),
                       points: int = NESTED_POINTS, half_width: float = NESTED_HALF_WIDTH):
    """Relative upconversion probabilities for several pump orders at once.

    Nested trapezoid quadrature: for each output frequency on an outer grid,
    the complex convolution over input frequencies is integrated on an inner
    grid centred on the product of the pump and signal envelopes. Both grids
    span ``+-half_width`` widths of the respective Gaussian envelopes.
    """
    orders = tuple(int(k) for k in orders)
    s1, s2 = signal.sigma_nu, config.pump_sigma
    var_conv = s1**2 + s2**2
    if config.pm_model == "gaussian":
        var_pm = config.pm_sigma**2
    else:
        var_pm = 1.0 / (ETA * (2.0 * math.pi * config.length
                               * (config.slowness_out - config.slowness_in) * GHZ_PS) ** 2)
    # outer envelope: |H|^2 (centred at 0) times |alpha * psi|^2 (centred at -delta_nu)
    var3 = var_pm * var_conv / (var_pm + var_conv)
    mean3 = -signal.delta_nu * var_pm / (var_pm + var_conv)
    n_outer = points
    if config.pm_model == "sinc":
        # sinc^2 sidelobes decay only as 1/nu^2, so the outer grid must span the
        # pump-signal envelope and resolve every sidelobe (~16 points per lobe)
        var3 = var_conv
        mean3 = -signal.delta_nu
        lobe = 1.0 / abs(config.length * (config.slowness_out - config.slowness_in) * GHZ_PS)
        n_outer = max(points, int(32 * half_width * math.sqrt(var3) / lobe) + 1)
    nu3 = mean3 + math.sqrt(var3) * np.linspace(-half_width, half_width, n_outer)

    var1 = (s1**2 * s2**2) / var_conv
    mean1 = (nu3 * s1**2 - signal.delta_nu * s2**2) / var_conv
    t = np.linspace(-half_width, half_width, points)
    nu1 = mean1[:, None] + math.sqrt(var1) * t[None, :]
    nu2 = nu3[:, None] - nu1

    envelope = np.exp(-(nu2**2) / (4.0 * s2**2)) / (2.0 * np.pi * s2**2) ** 0.25
    psi = signal.amplitude(nu1)
    base = envelope * psi
    hermite = _hg_stack(nu2 / s2, max(orders) if orders else 0)
    h_pm = phasematching_amplitude(config, nu3)
    dnu1 = math.sqrt(var1) * (t[1] - t[0])

    probs = []
    for k in orders:
        integrand = hermite[k] * base
        conv = integrate.trapezoid(integrand, dx=dnu1, axis=1)
        inner_scale = np.max(np.abs(integrand))
        inner_tail = max(np.max(np.abs(integrand[:, 0])), np.max(np.abs(integrand[:, -1])))
        if inner_scale > 0 and inner_tail / inner_scale > TAIL_TOLERANCE:
            raise QuadratureError(f"inner quadrature tail too large for order {k}")
        intensity = (config.coupling * h_pm) ** 2 * np.abs(conv) ** 2
        p = float(integrate.trapezoid(intensity, nu3))
        if p > 0:
            outer_tail = max(intensity[0], intensity[-1]) * math.sqrt(var3) / p
            if outer_tail > TAIL_TOLERANCE:
                raise QuadratureError(
                    f"outer quadrature tail mass {outer_tail:.3g} exceeds {TAIL_TOLERANCE}")
        probs.append(p)
    return np.array(probs)


def upconversion_prob(config: PulseGateConfig, signal: InputSignal, **kwargs) -> float:
    """Relative upconversion probability for ``config.pump_order``."""
    return float(upconversion_probs(config, signal, orders=(config.pump_order,), **kwargs)[0])


def closed_form_ratio(sigma_nu, sigma2, pm_sigma, delta_nu=0.0, delta_t=0.0):
    """Analytic ``P_1 / P_0`` for a Gaussian phasematching function.

    Widths and ``delta_nu`` in GHz, ``delta_t`` in ps.
    """
    if not (sigma_nu > 0 and sigma2 > 0 and pm_sigma >= 0):
        raise DomainError("widths must be positive")
    dt = delta_t * GHZ_PS  # ns = 1/GHz
    a = sigma_nu**2 + sigma2**2
    b = a + pm_sigma**2
    first = (sigma_nu**2 * (1.0 + 16.0 * math.pi**2 * dt**2 * sigma_nu**2) + sigma2**2) / a**2
    second = (delta_nu**2 - b) / b**2
    return sigma2**2 * (first + second)


def projection_ratio(sigma_nu, pm_sigma, sep_nu=0.0, sep_t=0.0):
    """Small-bandwidth approximation of ``P_1/P_0`` for a mixture with separations
    ``sep_nu`` (GHz) and ``sep_t`` (ps), matched pump (``sigma2 = sigma_nu``)."""
    sigma_t = sigma_t_from_sigma_nu(sigma_nu)
    return (pm_sigma**2 / (4.0 * sigma_nu**2) + sep_t**2 / (16.0 * sigma_t**2)
            + sep_nu**2 / (16.0 * sigma_nu**2))


class CorrectedEstimate(NamedTuple):
    separation: float
    clamped: bool


def raw_estimator(p1: float, p0: float, sigma: float = 1.0) -> float:
    """Uncorrected ratio estimator ``4 sigma sqrt(p1/p0)``."""
    if p0 == 0:
        raise ZeroDivisionError("p0 must be positive")
    if p0 < 0 or p1 < 0:
        raise DomainError("probabilities/counts must be non-negative")
    return 4.0 * sigma * math.sqrt(p1 / p0)


def corrected_estimator(p1: float, p0: float, sigma: float, pm_sigma: float,
                        sigma_nu: Optional[float] = None) -> CorrectedEstimate:
    """Ratio estimator with the phasematching floor ``pm_sigma^2 / 4 sigma_nu^2`` removed.

    ``sigma`` is the PSF width in the estimation domain; ``sigma_nu`` (default
    ``sigma``) is the spectral width entering the floor, which differs from
    ``sigma`` for time-domain estimation.
    """
    if p0 == 0:
        raise ZeroDivisionError("p0 must be positive")
    if p0 < 0 or p1 < 0:
        raise DomainError("probabilities/counts must be non-negative")
    sigma_nu = sigma if sigma_nu is None else sigma_nu
    excess = p1 / p0 - pm_sigma**2 / (4.0 * sigma_nu**2)
    if excess <= 0:
        return CorrectedEstimate(0.0, True)
    return CorrectedEstimate(4.0 * sigma * math.sqrt(excess), False)


def mixture_signal(sigma_nu: float, separation: float, domain: str) -> InputSignal:
    """Signal for one branch of an incoherent pair separated by ``separation``
    (physical units of ``domain``).

    Upconversion probabilities are even in the offset, so one branch gives the
    same probabilities as the mixture.
    """
    domain = normalize_domain(domain)
    if domain == "frequency":
        return InputSignal(sigma_nu, delta_nu=0.5 * separation)
    return InputSignal(sigma_nu, delta_t=0.5 * separation)


class GateModel:
    """Normalized outcome probabilities ``(P_0, P_1, P_2) / sum`` of a pulse gate
    as a function of the separation in units of the domain's PSF width.

    Evaluations are memoized; instances are immutable otherwise.
    """

    def __init__(self, sigma_nu: float, pm_sigma: float, pump_sigma: Optional[float] = None,
                 domain: str = "frequency", orders=(0, 1, 2), points: int = NESTED_POINTS):
        self.sigma_nu = float(sigma_nu)
        self.pm_sigma = float(pm_sigma)
        self.pump_sigma = float(sigma_nu if pump_sigma is None else pump_sigma)
        self.domain = normalize_domain(domain)
        self.orders = tuple(orders)
        self.points = points
        self.config = PulseGateConfig(pump_sigma=self.pump_sigma, pm_sigma=self.pm_sigma)
        self.sigma = (self.sigma_nu if self.domain == "frequency"
                      else sigma_t_from_sigma_nu(self.sigma_nu))
        self._cached = lru_cache(maxsize=4096)(self._evaluate)

    def _evaluate(self, s):
        signal = mixture_signal(self.sigma_nu, abs(s) * self.sigma, self.domain)
        p = upconversion_probs(self.config, signal, self.orders, points=self.points)
        return tuple(p / p.sum())

    def __call__(self, separation):
        return np.array(self._cached(float(separation)))

    def ratio(self, separation):
        p = self(separation)
        return p[1] / p[0]

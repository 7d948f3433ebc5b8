"""Conversions between physical units (GHz, ps) and the dimensionless core.

The numerical core works in units of the point-spread-function width
(sigma = 1). Frequencies are ordinary frequencies (cycles), so a time delay
``dt`` multiplies a spectral amplitude by ``exp(-2j*pi*nu*dt)``.
"""

import math

# 1 GHz * 1 ps = 1e-3 (dimensionless cycles)
GHZ_PS = 1e-3


def sigma_t_from_sigma_nu(sigma_nu_ghz):
    """RMS temporal width (ps) of a transform-limited Gaussian pulse."""
    if sigma_nu_ghz <= 0:
        raise ValueError("sigma_nu must be positive")
    return 1.0 / (4.0 * math.pi * sigma_nu_ghz * GHZ_PS)


def sigma_nu_from_sigma_t(sigma_t_ps):
    """Inverse of :func:`sigma_t_from_sigma_nu`."""
    if sigma_t_ps <= 0:
        raise ValueError("sigma_t must be positive")
    return 1.0 / (4.0 * math.pi * sigma_t_ps * GHZ_PS)


def domain_sigma(domain, sigma_nu_ghz):
    """PSF width in the physical unit of ``domain`` ('frequency' -> GHz, 'time' -> ps)."""
    domain = normalize_domain(domain)
    if domain == "frequency":
        return float(sigma_nu_ghz)
    return sigma_t_from_sigma_nu(sigma_nu_ghz)


def domain_unit(domain):
    return "GHz" if normalize_domain(domain) == "frequency" else "ps"


_DOMAIN_ALIASES = {"frequency": "frequency", "freq": "frequency", "nu": "frequency",
                   "time": "time", "t": "time"}


def normalize_domain(domain):
    try:
        return _DOMAIN_ALIASES[str(domain).lower()]
    except KeyError:
        raise ValueError(f"unknown domain {domain!r}; expected 'frequency' or 'time'") from None

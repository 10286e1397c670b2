"""Univariate and bivariate standard normal probabilities."""

from __future__ import annotations

import math

from scipy.integrate import quad
from scipy.special import ndtr, ndtri

_INV_2PI = 1.0 / (2.0 * math.pi)


def std_normal_cdf(x: float) -> float:
    return float(ndtr(x))


def std_normal_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError(f"quantile needs p strictly inside (0, 1), got {p}")
    return float(ndtri(p))


def std_normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def bvn_pdf(h: float, k: float, rho: float) -> float:
    """Standard bivariate normal density at ``(h, k)``."""
    one_m = 1.0 - rho * rho
    q = (h * h - 2.0 * rho * h * k + k * k) / one_m
    return _INV_2PI / math.sqrt(one_m) * math.exp(-0.5 * q)


def bvn_cdf(h: float, k: float, rho: float) -> float:
    """P(X <= h, Y <= k) for a standard bivariate normal with correlation ``rho``.

    Uses Phi2(h, k; rho) = Phi(h) Phi(k) + 1/(2 pi) * int_0^rho
    (1 - r^2)^(-1/2) exp(-(h^2 - 2hkr + k^2) / (2(1 - r^2))) dr.
    The integral is taken in ``theta = arcsin(r)``, which removes the
    endpoint singularity, with adaptive Gauss-Kronrod quadrature.
    """
    if not -1.0 < rho < 1.0:
        raise ValueError(f"bvn_cdf needs |rho| < 1, got {rho}")
    base = float(ndtr(h) * ndtr(k))
    if rho == 0.0:
        return base
    hh = 0.5 * (h * h + k * k)
    hk = h * k

    def integrand(theta):
        s = math.sin(theta)
        c2 = 1.0 - s * s
        return math.exp((hk * s - hh) / c2)

    val, _ = quad(integrand, 0.0, math.asin(rho), epsabs=1e-14, epsrel=1e-12, limit=200)
    return min(1.0, max(0.0, base + _INV_2PI * val))


def bvn_upper(h: float, k: float, rho: float) -> float:
    """Upper orthant P(X > h, Y > k)."""
    return bvn_cdf(-h, -k, rho)

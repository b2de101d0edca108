"""Survival functions used as p-value backends."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

__all__ = ["chisq_sf", "student_t_sf", "normal_sf", "normal_cdf", "studentized_range_sf"]


def chisq_sf(x: float, df: float) -> float:
    """Upper tail of chi-square, via the regularised upper incomplete gamma."""
    if x < 0 or df <= 0:
        raise ValueError(f"chisq_sf domain error: x={x}, df={df}")
    return float(special.gammaincc(df / 2.0, x / 2.0))


def student_t_sf(t: float, df: float) -> float:
    """Upper tail of Student's t, via the regularised incomplete beta."""
    if df <= 0:
        raise ValueError(f"student_t_sf domain error: df={df}")
    tail = 0.5 * float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))
    return tail if t >= 0 else 1.0 - tail


def normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


_SQRT_2PI = math.sqrt(2.0 * math.pi)


def studentized_range_sf(q: float, k: int, df: float = math.inf) -> float:
    """P(Q > q) for the range of ``k`` standard normals (infinite df only).

    ``1 - k * integral phi(z) * (Phi(z) - Phi(z - q))**(k - 1) dz``, integrated
    adaptively to an absolute error of 1e-8.
    """
    if k < 2:
        raise ValueError("studentized range needs k >= 2")
    if q < 0:
        raise ValueError("q must be nonnegative")
    if not math.isinf(df):
        raise NotImplementedError("only the infinite-df studentized range is supported")
    if q == 0:
        return 1.0

    def integrand(z):
        dens = math.exp(-0.5 * z * z) / _SQRT_2PI
        return dens * (normal_cdf(z) - normal_cdf(z - q)) ** (k - 1)

    # the integrand lives on roughly [-8, q + 8]; splitting at q/2 keeps quad on the bulk
    lo, mid, hi = -9.0, q / 2.0, q + 9.0
    a, _ = integrate.quad(integrand, lo, mid, epsabs=1e-10, epsrel=1e-10, limit=200)
    b, _ = integrate.quad(integrand, mid, hi, epsabs=1e-10, epsrel=1e-10, limit=200)
    return float(np.clip(1.0 - k * (a + b), 0.0, 1.0))

"""Quadrature-oracle battery for the special-function kernel.

Each check recomputes a kernel function by adaptive quadrature of its
defining integral (via :func:`scipy.integrate.quad`, an implementation
independent of the kernel) and reports the worst observed error over a
grid.  The CLI ``specfun-check`` command prints one line per check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import specfun

__all__ = ["OracleCheck", "run_specfun_battery"]


@dataclass(frozen=True)
class OracleCheck:
    name: str
    worst_error: float
    tolerance: float
    kind: str  # "relative" or "absolute"

    @property
    def passed(self) -> bool:
        return self.worst_error <= self.tolerance


def _quad(f, lo, hi):
    value, _ = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=1e-12, limit=400)
    return value


def _erf_check() -> OracleCheck:
    worst = 0.0
    for x in np.linspace(0.05, 4.0, 17):
        oracle = _quad(lambda t: 2.0 / math.sqrt(math.pi) * math.exp(-t * t), 0.0, float(x))
        worst = max(worst, abs(specfun.erf(float(x)) - oracle))
    return OracleCheck("erf vs quadrature", worst, 1e-12, "absolute")


def _upper_gamma_check() -> OracleCheck:
    worst = 0.0
    for a in np.arange(-3.0, 3.01, 0.5):
        for z in (0.1, 0.5, 1.0, 3.0, 10.0, 30.0):
            oracle = _quad(lambda t, a=a: t ** (a - 1.0) * math.exp(-t), float(z), math.inf)
            value = specfun.upper_gamma(float(a), float(z))
            worst = max(worst, abs(value - oracle) / abs(oracle))
    return OracleCheck("upper_gamma vs quadrature (orders -3..3)", worst, 1e-8, "relative")


def _expint_check() -> OracleCheck:
    worst = 0.0
    for n in range(-18, 2):
        for z in (0.1, 1.0, 10.0):
            oracle = _quad(lambda t, n=n, z=z: math.exp(-z * t) / t ** n, 1.0, math.inf)
            value = specfun.expint_en(float(n), float(z))
            worst = max(worst, abs(value - oracle) / abs(oracle))
    return OracleCheck("expint_en vs quadrature", worst, 1e-8, "relative")


def _chi2_sf_check() -> OracleCheck:
    worst = 0.0
    for n in (1, 2, 4, 10, 20, 40):
        norm = math.exp(-0.5 * n * math.log(2.0) - math.lgamma(0.5 * n))

        def density(t, n=n, norm=norm):
            return norm * t ** (0.5 * n - 1.0) * math.exp(-0.5 * t)

        for t in (0.5, 1.0, float(n), 2.0 * n, 4.0 * n):
            oracle = _quad(density, t, math.inf)
            worst = max(worst, abs(specfun.chi2_sf(n, t) - oracle) / abs(oracle))
    return OracleCheck("chi2_sf vs quadrature", worst, 1e-8, "relative")


def _chi2_isf_check() -> OracleCheck:
    worst = 0.0
    for n in (1, 2, 5, 20, 40, 100):
        for p in (0.01, 0.05, 0.1, 0.5, 0.9, 0.99):
            worst = max(worst, abs(specfun.chi2_sf(n, specfun.chi2_isf(n, p)) - p))
    return OracleCheck("chi2_isf round trip", worst, 1e-10, "absolute")


def run_specfun_battery() -> list[OracleCheck]:
    """All kernel checks; seconds of runtime."""
    return [
        _erf_check(),
        _upper_gamma_check(),
        _expint_check(),
        _chi2_sf_check(),
        _chi2_isf_check(),
    ]

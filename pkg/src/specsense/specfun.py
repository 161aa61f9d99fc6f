"""Scalar special-function kernel.

Everything here is a pure function of its arguments, built on the math
module only (no third-party dependencies), so the rest of the package can
treat it as a self-contained numerical core:

* ``erf`` and ``log_gamma`` -- thin, domain-checked fronts over the C
  library routines exposed by :mod:`math`.
* ``upper_gamma`` -- the upper incomplete gamma function Gamma(a, z) for
  any real order, including zero and negative orders, which the closed-form
  detector expressions need.  Positive orders use the classic
  series / continued-fraction split; non-positive orders walk down the
  recurrence Gamma(a, z) = (Gamma(a+1, z) - z^a e^{-z}) / a with a running
  cancellation estimate that raises :class:`PrecisionLossError` rather than
  returning silently degraded values.
* ``expint_en`` -- the generalized exponential integral
  EI(n, z) = integral_1^inf e^{-z t} / t^n dt, evaluated through the
  identity EI(n, z) = z^{n-1} Gamma(1-n, z).
* ``chi2_sf`` / ``chi2_isf`` -- chi-square right-tail probability and its
  inverse (bracketed bisection).
* ``gamma_p`` / ``gamma_q`` -- regularized incomplete gamma ratios, shared
  by the survival functions and by the detector formulas that need
  overflow-free Gamma(a, x) / Gamma(a) terms.
"""

from __future__ import annotations

import math

from .errors import PrecisionLossError

_EULER_GAMMA = 0.5772156649015328606
_MAX_ITER = 700
# lgamma(a) above this overflows exp(); Gamma(a) is not representable.
_LOG_DBL_MAX = 709.0

__all__ = [
    "erf",
    "log_gamma",
    "upper_gamma",
    "expint_en",
    "chi2_sf",
    "chi2_isf",
    "gamma_p",
    "gamma_q",
]


def erf(x: float) -> float:
    """Error function, odd and strictly increasing with range (-1, 1)."""
    return math.erf(x)


def log_gamma(a: float) -> float:
    """Natural log of the complete gamma function, for a > 0."""
    if a <= 0.0:
        raise ValueError(f"log_gamma requires a > 0, got a={a}")
    return math.lgamma(a)


def _lower_series_sum(a: float, x: float) -> float:
    """Sum S with gamma_lower(a, x) = S * x^a * e^{-x}; requires a > 0."""
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            return total
    raise PrecisionLossError(
        f"incomplete gamma series did not converge for a={a}, x={x}"
    )


def _upper_cf_factor(a: float, x: float) -> float:
    """Factor H with Gamma(a, x) = H * x^a * e^{-x}, by modified Lentz.

    Converges for x >= a + 1 (and for any real a once x is that large).
    """
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise PrecisionLossError(
        f"incomplete gamma continued fraction did not converge for a={a}, x={x}"
    )


def gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x), for a > 0, x >= 0."""
    if a <= 0.0:
        raise ValueError(f"gamma_p requires a > 0, got a={a}")
    if x < 0.0:
        raise ValueError(f"gamma_p requires x >= 0, got x={x}")
    if x == 0.0:
        return 0.0
    log_pre = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        return _lower_series_sum(a, x) * math.exp(log_pre)
    return 1.0 - _upper_cf_factor(a, x) * math.exp(log_pre)


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if a <= 0.0:
        raise ValueError(f"gamma_q requires a > 0, got a={a}")
    if x < 0.0:
        raise ValueError(f"gamma_q requires x >= 0, got x={x}")
    if x == 0.0:
        return 1.0
    log_pre = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        return 1.0 - _lower_series_sum(a, x) * math.exp(log_pre)
    return _upper_cf_factor(a, x) * math.exp(log_pre)


def _scaled_upper_gamma(a: float, z: float) -> float:
    """Gamma(a, z) * e^z for 0 <= a <= 1; base case of the downward recurrence."""
    if a == 0.0:
        if z >= 1.0:
            return _upper_cf_factor(0.0, z)
        return _exp1(z) * math.exp(z)
    if a == 1.0:  # base can round up to 1 when the target order is a tiny negative
        return 1.0
    if z >= a + 1.0:
        return _upper_cf_factor(a, z) * math.exp(a * math.log(z))
    # here z < a + 1 < 2, so e^z cannot overflow
    lower = _lower_series_sum(a, z) * math.exp(a * math.log(z))
    return math.exp(math.lgamma(a) + z) - lower


def _exp1(z: float) -> float:
    """E_1(z) = Gamma(0, z) for z > 0."""
    if z >= 1.0:
        return _upper_cf_factor(0.0, z) * math.exp(-z)
    # alternating series, fast for z < 1 where terms decay immediately
    total = -_EULER_GAMMA - math.log(z)
    power = 1.0
    for k in range(1, _MAX_ITER):
        power *= -z / k
        contrib = power / k
        total -= contrib
        if abs(contrib) < abs(total) * 1e-17:
            return total
    raise PrecisionLossError(f"E1 series did not converge for z={z}")


def upper_gamma(a: float, z: float) -> float:
    """Upper incomplete gamma Gamma(a, z) = integral_z^inf t^{a-1} e^{-t} dt.

    Any finite real order is accepted; z must be positive.  Orders a <= 0
    are reduced to a positive-order (or E_1) base case by the downward
    recurrence, with cancellation monitored: if the estimated relative
    error exceeds 1e-6 a :class:`PrecisionLossError` is raised.
    """
    if z <= 0.0:
        raise ValueError(f"upper_gamma requires z > 0, got z={z}")
    if a > 0.0:
        if z >= a + 1.0:
            return _upper_cf_factor(a, z) * math.exp(-z + a * math.log(z))
        log_gamma_a = math.lgamma(a)
        if log_gamma_a > _LOG_DBL_MAX:
            raise OverflowError(
                f"Gamma({a}) exceeds double range; use gamma_q for regularized values"
            )
        lower = _lower_series_sum(a, z) * math.exp(-z + a * math.log(z))
        return math.exp(log_gamma_a) - lower
    if a == 0.0:
        return _exp1(z)

    # a < 0: walk the downward recurrence on e^z-scaled values
    # h(a) = Gamma(a, z) e^z, which obey h(a) = (h(a+1) - z^a) / a and stay
    # in the normal floating-point range even when Gamma itself is tiny.
    n_steps = math.ceil(-a)
    base = a + n_steps
    value = _scaled_upper_gamma(base, z)
    # a few ulps apiece for the base value and each power; the running
    # absolute bound is what detects catastrophic cancellation below
    ulp = 1e-15
    abs_err = ulp * value
    log_z = math.log(z)
    # orders derived from a itself: a + k is never exactly 0 for k < n_steps,
    # unlike repeated subtraction from the (rounded) base
    for k in range(n_steps - 1, -1, -1):
        order = a + k
        t = math.exp(order * log_z)
        diff = value - t
        abs_err = abs_err + ulp * (abs(value) + t)
        value = diff / order
        abs_err = abs_err / abs(order)
        # Gamma(a, z) is positive for every real order when z > 0, so a
        # non-positive intermediate means the subtraction lost everything.
        if value <= 0.0 or abs_err > 1e-6 * value:
            raise PrecisionLossError(
                f"upper_gamma({a}, {z}): recurrence cancellation exceeds 1e-6 "
                "estimated relative error"
            )
    return value * math.exp(-z)


def expint_en(n: float, z: float) -> float:
    """Generalized exponential integral EI(n, z), any real n, z > 0.

    Evaluated as z^{n-1} * Gamma(1 - n, z).
    """
    if z <= 0.0:
        raise ValueError(f"expint_en requires z > 0, got z={z}")
    return math.exp((n - 1.0) * math.log(z)) * upper_gamma(1.0 - n, z)


def chi2_sf(n: int, t: float) -> float:
    """Right-tail probability of a chi-square variable with n degrees of freedom."""
    if n < 1 or n != int(n):
        raise ValueError(f"chi2_sf requires an integer n >= 1, got n={n}")
    if t < 0.0:
        raise ValueError(f"chi2_sf requires t >= 0, got t={t}")
    if t == 0.0:
        return 1.0
    return gamma_q(0.5 * n, 0.5 * t)


def chi2_isf(n: int, p: float) -> float:
    """Inverse of ``chi2_sf`` in its second argument, by bracketed bisection."""
    if n < 1 or n != int(n):
        raise ValueError(f"chi2_isf requires an integer n >= 1, got n={n}")
    if not (0.0 < p <= 1.0):
        raise ValueError(f"chi2_isf requires p in (0, 1], got p={p}")
    if p == 1.0:
        return 0.0
    lo = 0.0
    hi = float(max(4 * n, 100))
    for _ in range(200):
        if chi2_sf(n, hi) <= p:
            break
        lo = hi
        hi *= 2.0
    else:  # pragma: no cover - would need p below ~1e-300
        raise PrecisionLossError(f"chi2_isf bracket expansion failed for n={n}, p={p}")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if chi2_sf(n, mid) > p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)

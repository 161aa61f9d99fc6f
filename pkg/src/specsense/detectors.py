"""Detection statistics and their analytic threshold / performance formulas.

Four detectors share the hypothesis model (zero-mean Gaussian signal in
zero-mean Gaussian noise of uncertain power):

* ``lrt`` -- the conventional energy detector: compares the sum of squared
  samples against a chi-square threshold scaled by the per-trial ML noise
  estimate.  Its operating point inherits the estimate's error; that
  deviation is the phenomenon the remaining detectors remove.
* ``ave`` -- per-sample likelihoods averaged over a uniform noise-power
  prior before forming the ratio; the marginal density has a closed form
  in erf.
* ``avn`` -- the joint likelihood of all samples averaged over the prior;
  reduces to a ratio of upper-incomplete-gamma differences in the energy
  statistic.
* ``llr`` -- the energy statistic again, but thresholded using the exact
  closed-form false-alarm probability averaged over the prior, so its
  threshold depends only on the sample count and the prior interval, never
  on a noise estimate.

Scalar operations are built on :mod:`specsense.specfun`; the `_batch`
helpers evaluate the same statistics on stacked trial arrays (cross-checked
against the scalar forms in the test suite) for Monte Carlo throughput.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special as _sp

from . import specfun
from .errors import BracketingError, PrecisionLossError

__all__ = [
    "UniformPrior",
    "Threshold",
    "LrtDetector",
    "AveDetector",
    "AvnDetector",
    "LlrDetector",
    "DetectorKind",
    "detector_from_label",
    "energy_statistic",
    "lrt_threshold",
    "ave_marginal_density",
    "ave_log_ratio",
    "avn_log_ratio",
    "llr_pfa",
    "llr_pd",
    "llr_threshold",
    "llr_h0_density",
    "batch_statistics",
]

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class UniformPrior:
    """Uniform noise-power prior on (delta_min, delta_max), density 1/width."""

    delta_min: float
    delta_max: float

    def __post_init__(self):
        if not (self.delta_min > 0.0):
            raise ValueError(f"prior delta_min must be > 0, got {self.delta_min}")
        if not (self.delta_max > self.delta_min):
            raise ValueError(
                f"prior requires delta_min < delta_max, got ({self.delta_min}, {self.delta_max})"
            )

    @property
    def width(self) -> float:
        return self.delta_max - self.delta_min

    @property
    def degenerate(self) -> bool:
        """True when the interval is too narrow to integrate over."""
        return self.width < 1e-12 * self.delta_max

    def shifted(self, offset: float) -> "UniformPrior":
        return UniformPrior(self.delta_min + offset, self.delta_max + offset)


@dataclass(frozen=True)
class Threshold:
    """A detector threshold with provenance.

    ``provenance`` is one of ``analytic-chi2`` (conventional detector,
    applied to the noise-normalized energy), ``analytic-llr`` (closed-form
    inverse), or ``monte-carlo`` (empirical H0 quantile; ``trials`` and
    ``seed`` record the calibration run).
    """

    value: float
    target_pfa: float
    provenance: str
    trials: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"threshold value must be finite, got {self.value}")
        if not (0.0 < self.target_pfa < 1.0):
            raise ValueError(f"target_pfa must be in (0, 1), got {self.target_pfa}")
        if self.provenance not in ("analytic-chi2", "analytic-llr", "monte-carlo"):
            raise ValueError(f"unknown threshold provenance {self.provenance!r}")

    def to_json_dict(self) -> dict:
        return {
            "value": self.value,
            "target_pfa": self.target_pfa,
            "provenance": self.provenance,
            "trials": self.trials,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Threshold":
        return cls(
            value=float(doc["value"]),
            target_pfa=float(doc["target_pfa"]),
            provenance=str(doc["provenance"]),
            trials=None if doc.get("trials") is None else int(doc["trials"]),
            seed=None if doc.get("seed") is None else int(doc["seed"]),
        )


@dataclass(frozen=True)
class LrtDetector:
    """Conventional energy detector with a K-sample ML noise estimate."""

    estimation_samples: int = 10

    def __post_init__(self):
        if self.estimation_samples < 1:
            raise ValueError("estimation_samples must be >= 1")

    @property
    def label(self) -> str:
        return f"lrt:K={self.estimation_samples}"


@dataclass(frozen=True)
class AveDetector:
    """Per-sample averaged-likelihood-ratio detector."""

    prior: UniformPrior

    label = "ave"


@dataclass(frozen=True)
class AvnDetector:
    """Joint averaged-likelihood-ratio detector."""

    prior: UniformPrior

    label = "avn"


@dataclass(frozen=True)
class LlrDetector:
    """Energy detector with the closed-form prior-averaged threshold."""

    prior: UniformPrior

    label = "llr"


DetectorKind = Union[LrtDetector, AveDetector, AvnDetector, LlrDetector]


def detector_from_label(label: str, prior: UniformPrior | None = None) -> DetectorKind:
    """Build a detector from its CSV/CLI label (``lrt:K=10``, ``ave``, ...)."""
    text = label.strip().lower()
    if text.startswith("lrt"):
        if text == "lrt":
            return LrtDetector()
        if text.startswith("lrt:k="):
            return LrtDetector(estimation_samples=int(text[6:]))
        raise ValueError(f"bad lrt detector spec {label!r}; expected lrt or lrt:K=<int>")
    if text in ("ave", "avn", "llr"):
        if prior is None:
            raise ValueError(f"detector {label!r} needs a uniform prior interval")
        return {"ave": AveDetector, "avn": AvnDetector, "llr": LlrDetector}[text](prior)
    raise ValueError(
        f"unknown detector {label!r}; valid: lrt[:K=<int>], ave, avn, llr"
    )


def energy_statistic(observation) -> float:
    """Sum of squared samples; the shared decision variable of lrt and llr."""
    x = np.asarray(observation, dtype=float)
    if x.size == 0:
        raise ValueError("energy_statistic requires at least one sample")
    return float(np.dot(x.ravel(), x.ravel()))


def lrt_threshold(sigma2_hat: float, n: int, target_pfa: float) -> float:
    """Threshold on the energy statistic given a realized noise estimate."""
    if not (sigma2_hat > 0.0):
        raise ValueError(f"sigma2_hat must be > 0, got {sigma2_hat}")
    return sigma2_hat * specfun.chi2_isf(n, target_pfa)


# ---------------------------------------------------------------------------
# ave: per-sample averaged marginal densities


def _gaussian_density(x: float, v: float) -> float:
    return math.exp(-x * x / (2.0 * v)) / math.sqrt(2.0 * math.pi * v)


def ave_marginal_density(x: float, variance_offset: float, prior: UniformPrior) -> float:
    """Marginal density of one sample, its variance averaged over the prior.

    ``variance_offset`` is 0 under H0 and the signal power under H1.  The
    closed form follows from the antiderivative (in the variance) of the
    Gaussian density: G(x, v) = sqrt(2v/pi) e^{-x^2/(2v)} + x erf(x / sqrt(2v)).
    """
    if variance_offset < 0.0:
        raise ValueError(f"variance_offset must be >= 0, got {variance_offset}")
    if prior.degenerate:
        return _gaussian_density(x, variance_offset + prior.delta_min)

    def g(v: float) -> float:
        return (
            math.sqrt(2.0 * v / math.pi) * math.exp(-x * x / (2.0 * v))
            + x * specfun.erf(x / math.sqrt(2.0 * v))
        )

    v_lo = variance_offset + prior.delta_min
    v_hi = variance_offset + prior.delta_max
    return (g(v_hi) - g(v_lo)) / prior.width


def _log_ave_density(x: np.ndarray, variance_offset: float, prior: UniformPrior) -> np.ndarray:
    """log of ``ave_marginal_density`` elementwise, stable into the far tail.

    Factoring e^{-x^2/(2 v_max)} out of the closed form and rewriting the
    erf difference through erfcx keeps the log finite for |x| out to tens
    of standard deviations, where the raw density underflows.
    """
    t = np.abs(np.asarray(x, dtype=float))
    if prior.degenerate:
        v = variance_offset + prior.delta_min
        return -0.5 * np.log(2.0 * math.pi * v) - t * t / (2.0 * v)
    v_lo = variance_offset + prior.delta_min
    v_hi = variance_offset + prior.delta_max
    z_hi = t / math.sqrt(2.0 * v_hi)   # smaller argument, dominant scale
    z_lo = t / math.sqrt(2.0 * v_lo)
    lead = math.sqrt(2.0 * v_hi / math.pi) - t * _sp.erfcx(z_hi)
    rest = np.exp(z_hi * z_hi - z_lo * z_lo) * (
        t * _sp.erfcx(z_lo) - math.sqrt(2.0 * v_lo / math.pi)
    )
    return -z_hi * z_hi + np.log(lead + rest) - math.log(prior.width)


def ave_log_ratio(observation, signal_power: float, prior: UniformPrior) -> float:
    """Log of the per-sample averaged likelihood ratio, summed over samples."""
    if signal_power < 0.0:
        raise ValueError(f"signal_power must be >= 0, got {signal_power}")
    x = np.asarray(observation, dtype=float)
    if x.size == 0:
        raise ValueError("ave_log_ratio requires at least one sample")
    return float(np.sum(_log_ave_density(x, signal_power, prior)
                        - _log_ave_density(x, 0.0, prior)))


# ---------------------------------------------------------------------------
# incomplete-gamma differences shared by avn and the llr density


def _q_difference(a: float, z1: float, z2: float) -> tuple[float, float]:
    """Q(a, z1) - Q(a, z2) for 0 < z1 < z2, with a cancellation estimate.

    Works in whichever regularized representation (lower P or upper Q) is
    well-scaled for the pair, so small and large arguments both stay
    relatively accurate.  Returns (difference, magnitude / difference); the
    second entry estimates the significant digits lost to cancellation.
    """
    if z2 < a + 1.0:
        p1 = specfun.gamma_p(a, z1)
        p2 = specfun.gamma_p(a, z2)
        diff = p2 - p1
        big = max(p1, p2)
    else:
        q1 = specfun.gamma_q(a, z1)
        q2 = specfun.gamma_q(a, z2)
        diff = q1 - q2
        big = max(q1, q2)
    if diff <= 0.0:
        return diff, math.inf
    return diff, big / diff


def avn_log_ratio(
    t_statistic: float, n: int, signal_power: float, prior: UniformPrior
) -> float:
    """Log of the joint averaged likelihood ratio as a function of the energy.

    Uses the reduced form: a ratio of upper-incomplete-gamma differences of
    order n/2 - 1, whose common power-law prefactor cancels between
    numerator and denominator.
    """
    if not (t_statistic > 0.0):
        raise ValueError(f"t_statistic must be > 0, got {t_statistic}")
    if n < 3:
        raise ValueError(f"avn_log_ratio requires n >= 3, got n={n}")
    if signal_power < 0.0:
        raise ValueError(f"signal_power must be >= 0, got {signal_power}")
    if signal_power == 0.0:
        return 0.0
    a = 0.5 * n - 1.0
    num, loss_num = _q_difference(
        a,
        t_statistic / (2.0 * (signal_power + prior.delta_max)),
        t_statistic / (2.0 * (signal_power + prior.delta_min)),
    )
    den, loss_den = _q_difference(
        a,
        t_statistic / (2.0 * prior.delta_max),
        t_statistic / (2.0 * prior.delta_min),
    )
    if (loss_num > 1e6 and loss_den > 1e6) or num <= 0.0 or den <= 0.0:
        raise PrecisionLossError(
            f"avn_log_ratio(T={t_statistic}, n={n}): gamma differences lost more "
            "than 6 significant digits to cancellation"
        )
    return math.log(num) - math.log(den)


# ---------------------------------------------------------------------------
# llr: closed-form false-alarm / detection probabilities for the energy statistic


def _validate_llr_args(gamma: float, n: int) -> None:
    if not (gamma > 0.0):
        raise ValueError(f"gamma must be > 0, got {gamma}")
    if n < 3 or n != int(n):
        raise ValueError(f"llr formulas require an integer n >= 3, got n={n}")


def llr_pfa(gamma: float, n: int, prior: UniformPrior) -> float:
    """False-alarm probability of the energy detector at threshold ``gamma``,
    averaged over the uniform noise-power prior.

    Evaluated with every term divided by Gamma(n/2): the power-law factors
    become a single exp of logs and the incomplete gammas become regularized
    tails, so the expression stays finite for large n.
    """
    _validate_llr_args(gamma, n)
    if prior.degenerate:
        return specfun.chi2_sf(n, gamma / prior.delta_min)
    a = 0.5 * n
    log_gamma_a = math.lgamma(a)

    def tail_term(d: float) -> float:
        return math.exp(
            (1.0 - a) * math.log(2.0)
            + a * math.log(gamma)
            + (1.0 - a) * math.log(d)
            - gamma / (2.0 * d)
            - log_gamma_a
        )

    def gamma_term(d: float) -> float:
        return (d * (n - 2) - gamma) * specfun.gamma_q(a, gamma / (2.0 * d))

    num = (
        tail_term(prior.delta_min)
        - tail_term(prior.delta_max)
        + gamma_term(prior.delta_min)
        - gamma_term(prior.delta_max)
    )
    value = num / ((n - 2) * (prior.delta_min - prior.delta_max))
    return min(max(value, 0.0), 1.0)


def llr_pd(gamma: float, n: int, prior: UniformPrior, signal_power: float) -> float:
    """Detection probability at threshold ``gamma``.

    Under H1 each sample's variance gains the signal power, so the formula
    is exactly the false-alarm expression with the prior interval shifted
    by the signal power (the identity holds term by term).
    """
    if signal_power < 0.0:
        raise ValueError(f"signal_power must be >= 0, got {signal_power}")
    return llr_pfa(gamma, n, prior.shifted(signal_power))


def llr_threshold(target_pfa: float, n: int, prior: UniformPrior) -> Threshold:
    """Threshold with llr_pfa(value) = target_pfa, by bracketed bisection.

    Depends only on (n, prior) -- never on a noise estimate.
    """
    if not (0.0 < target_pfa < 1.0):
        raise ValueError(f"target_pfa must be in (0, 1), got {target_pfa}")
    _validate_llr_args(1.0, n)
    lo = 0.0  # pfa -> 1 as gamma -> 0+
    hi = n * (prior.delta_max + 10.0)
    for _ in range(200):
        if llr_pfa(hi, n, prior) <= target_pfa:
            break
        lo = hi
        hi *= 2.0
    else:
        raise BracketingError(
            f"llr_threshold bracket expansion failed for n={n}, p={target_pfa}"
        )
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if llr_pfa(mid, n, prior) > target_pfa:
            lo = mid
        else:
            hi = mid
    return Threshold(value=0.5 * (lo + hi), target_pfa=target_pfa, provenance="analytic-llr")


def llr_h0_density(t_statistic: float, n: int, prior: UniformPrior) -> float:
    """Density of the energy statistic under H0, averaged over the prior.

    Integrating the scaled chi-square density over the uniform prior gives
    a difference of chi-square tails with n - 2 degrees of freedom.  This
    is the quadrature oracle for ``llr_pfa`` (its negative derivative).
    """
    _validate_llr_args(t_statistic, n)
    if prior.degenerate:
        s2 = prior.delta_min
        a = 0.5 * n
        x = t_statistic / s2
        return math.exp(
            (a - 1.0) * math.log(x) - 0.5 * x - a * math.log(2.0) - math.lgamma(a)
        ) / s2
    diff, _ = _q_difference(
        0.5 * (n - 2),
        t_statistic / (2.0 * prior.delta_max),
        t_statistic / (2.0 * prior.delta_min),
    )
    if diff <= 0.0:
        return 0.0
    return diff / ((n - 2) * prior.width)


# ---------------------------------------------------------------------------
# batch statistic evaluation (vectorized across trials)


def _q_difference_rows(a: float, z1: np.ndarray, z2: np.ndarray) -> np.ndarray:
    """Vectorized Q(a, z1) - Q(a, z2) with the same representation choice
    as the scalar `_q_difference`; negative rounding is clamped to 0."""
    p_diff = _sp.gammainc(a, z2) - _sp.gammainc(a, z1)
    q_diff = _sp.gammaincc(a, z1) - _sp.gammaincc(a, z2)
    return np.maximum(np.where(z2 < a + 1.0, p_diff, q_diff), 0.0)


def _ave_statistic_rows(obs: np.ndarray, signal_power: float, prior: UniformPrior) -> np.ndarray:
    if signal_power == 0.0:
        return np.zeros(obs.shape[0])
    return np.sum(
        _log_ave_density(obs, signal_power, prior) - _log_ave_density(obs, 0.0, prior),
        axis=-1,
    )


def _avn_statistic_rows(
    energy: np.ndarray, n: int, signal_power: float, prior: UniformPrior
) -> np.ndarray:
    if signal_power == 0.0:
        return np.zeros(energy.shape[0])
    a = 0.5 * n - 1.0
    num = _q_difference_rows(
        a,
        energy / (2.0 * (signal_power + prior.delta_max)),
        energy / (2.0 * (signal_power + prior.delta_min)),
    )
    den = _q_difference_rows(
        a, energy / (2.0 * prior.delta_max), energy / (2.0 * prior.delta_min)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(num) - np.log(den)
    # complete tail underflow only happens at astronomically large energies;
    # such trials are certain detections
    return np.where(den == 0.0, np.inf, out)


def batch_statistics(detector: DetectorKind, batch, config) -> np.ndarray:
    """Evaluate a detector's decision statistic on every trial of a batch.

    For the conventional detector the statistic is the noise-normalized
    energy (sum of squares over the ML estimate), which is
    decision-equivalent to comparing the raw energy against the per-trial
    scaled threshold.
    """
    obs = batch.observation
    energy = np.einsum("ij,ij->i", obs, obs)
    if isinstance(detector, LrtDetector):
        if batch.training.shape[1] != detector.estimation_samples:
            raise ValueError(
                f"batch has {batch.training.shape[1]} training samples but the "
                f"detector estimates from {detector.estimation_samples}"
            )
        sigma2_hat = np.mean(batch.training * batch.training, axis=1)
        return energy / sigma2_hat
    if isinstance(detector, LlrDetector):
        return energy
    if isinstance(detector, AveDetector):
        return _ave_statistic_rows(obs, config.signal_power, detector.prior)
    if isinstance(detector, AvnDetector):
        return _avn_statistic_rows(
            energy, config.n_samples, config.signal_power, detector.prior
        )
    raise TypeError(f"unknown detector kind {type(detector).__name__}")

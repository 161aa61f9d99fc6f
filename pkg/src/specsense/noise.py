"""Noise-power models, scenario configuration, and trial generation.

A scenario fixes the Gaussian signal power, the sample counts, the noise
model the true per-trial noise power is drawn from, and an optional
Gaussian interference variance.  Each Monte Carlo trial realizes

* an observation-window noise power ``sigma2`` and an independent
  training-period noise power ``training_sigma2`` (both drawn from the
  scenario's noise model -- the drift between the two is exactly the noise
  uncertainty the conventional detector suffers from),
* ``estimation_samples`` noise-only training samples at ``training_sigma2``
  feeding the maximum-likelihood noise estimate, and
* ``n_samples`` observation samples: noise, plus the zero-mean Gaussian
  signal under H1, plus interference when enabled.

Generation is addressed by counter-based substreams (see
:mod:`specsense.streams`); every trial has a fixed word budget, so batch
generation is bit-identical to per-trial generation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Iterator, Union

import numpy as np
from scipy.special import ndtri

from .errors import ConfigError
from .streams import TrialStream, raw_words, substream, words_to_uniforms

__all__ = [
    "BOLTZMANN",
    "FixedNoise",
    "UniformNoise",
    "LogNormalNoise",
    "NoiseModel",
    "ScenarioConfig",
    "TrialData",
    "TrialBatch",
    "draw_noise_power",
    "generate_trial",
    "generate_trials",
    "iter_trial_batches",
    "trial_words",
    "ml_noise_estimate",
    "interval_from_temperature",
]

# Boltzmann constant in J/K at the precision used for the temperature mapping.
BOLTZMANN = 1.38e-23

HYPOTHESES = ("H0", "H1")


@dataclass(frozen=True)
class FixedNoise:
    """Degenerate model: every trial uses the same noise power."""

    sigma2: float

    def __post_init__(self):
        if not (self.sigma2 > 0.0):
            raise ConfigError(f"noise_model.sigma2 must be > 0, got {self.sigma2}")


@dataclass(frozen=True)
class UniformNoise:
    """Noise power uniform on the open interval (delta_min, delta_max)."""

    delta_min: float
    delta_max: float

    def __post_init__(self):
        if not (self.delta_min > 0.0):
            raise ConfigError(f"noise_model.delta_min must be > 0, got {self.delta_min}")
        if not (self.delta_max > self.delta_min):
            raise ConfigError(
                f"noise_model requires delta_min < delta_max, got "
                f"({self.delta_min}, {self.delta_max})"
            )


@dataclass(frozen=True)
class LogNormalNoise:
    """Noise power exp(g), g Gaussian with the given mean and variance."""

    log_location: float
    log_variance: float

    def __post_init__(self):
        if not (self.log_variance > 0.0):
            raise ConfigError(
                f"noise_model.log_variance must be > 0, got {self.log_variance}"
            )


NoiseModel = Union[FixedNoise, UniformNoise, LogNormalNoise]

_VARIANT_FIELDS = {
    "fixed": ("sigma2",),
    "uniform": ("delta_min", "delta_max"),
    "log_normal": ("log_location", "log_variance"),
}
_VARIANT_TYPES = {"fixed": FixedNoise, "uniform": UniformNoise, "log_normal": LogNormalNoise}


def _noise_model_to_dict(model: NoiseModel) -> dict:
    for variant, cls in _VARIANT_TYPES.items():
        if isinstance(model, cls):
            return {"variant": variant, **{f: getattr(model, f) for f in _VARIANT_FIELDS[variant]}}
    raise ConfigError(f"unknown noise model type {type(model).__name__}")


def _noise_model_from_dict(doc: dict) -> NoiseModel:
    if not isinstance(doc, dict):
        raise ConfigError("noise_model must be an object")
    variant = doc.get("variant")
    if variant not in _VARIANT_TYPES:
        raise ConfigError(
            f"noise_model.variant must be one of {sorted(_VARIANT_TYPES)}, got {variant!r}"
        )
    expected = set(_VARIANT_FIELDS[variant]) | {"variant"}
    unknown = set(doc) - expected
    if unknown:
        raise ConfigError(f"unknown noise_model field(s): {sorted(unknown)}")
    missing = expected - set(doc)
    if missing:
        raise ConfigError(f"missing noise_model field(s): {sorted(missing)}")
    kwargs = {f: float(doc[f]) for f in _VARIANT_FIELDS[variant]}
    return _VARIANT_TYPES[variant](**kwargs)


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment cell.

    ``signal_power`` is the Gaussian signal variance (linear power units),
    ``n_samples`` the observation length, ``estimation_samples`` the
    training length for the ML noise estimate, ``interference_variance``
    the variance of additive Gaussian interference (0 disables it), and
    ``master_seed`` the default seed for Monte Carlo substreams.
    """

    signal_power: float
    n_samples: int
    noise_model: NoiseModel
    interference_variance: float = 0.0
    estimation_samples: int = 10
    master_seed: int = 0

    def __post_init__(self):
        if not (self.signal_power >= 0.0):
            raise ConfigError(f"signal_power must be >= 0, got {self.signal_power}")
        if not (isinstance(self.n_samples, int) and self.n_samples >= 1):
            raise ConfigError(f"n_samples must be a positive integer, got {self.n_samples}")
        if not (self.interference_variance >= 0.0):
            raise ConfigError(
                f"interference_variance must be >= 0, got {self.interference_variance}"
            )
        if not (isinstance(self.estimation_samples, int) and self.estimation_samples >= 1):
            raise ConfigError(
                f"estimation_samples must be a positive integer, got {self.estimation_samples}"
            )
        if not (isinstance(self.master_seed, int) and 0 <= self.master_seed < 1 << 64):
            raise ConfigError(
                f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}"
            )

    def snr(self) -> float:
        """Received SNR, 2 * signal_power / (delta_min + delta_max); uniform noise only."""
        if not isinstance(self.noise_model, UniformNoise):
            raise ConfigError("snr() is defined for the uniform noise model only")
        return 2.0 * self.signal_power / (self.noise_model.delta_min + self.noise_model.delta_max)

    def to_json_dict(self) -> dict:
        return {
            "signal_power": self.signal_power,
            "n_samples": self.n_samples,
            "noise_model": _noise_model_to_dict(self.noise_model),
            "interference_variance": self.interference_variance,
            "estimation_samples": self.estimation_samples,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ScenarioConfig":
        if not isinstance(doc, dict):
            raise ConfigError("scenario config must be a JSON object")
        fields = {
            "signal_power",
            "n_samples",
            "noise_model",
            "interference_variance",
            "estimation_samples",
            "master_seed",
        }
        unknown = set(doc) - fields
        if unknown:
            raise ConfigError(f"unknown scenario field(s): {sorted(unknown)}")
        missing = {"signal_power", "n_samples", "noise_model"} - set(doc)
        if missing:
            raise ConfigError(f"missing scenario field(s): {sorted(missing)}")
        return cls(
            signal_power=float(doc["signal_power"]),
            n_samples=int(doc["n_samples"]),
            noise_model=_noise_model_from_dict(doc["noise_model"]),
            interference_variance=float(doc.get("interference_variance", 0.0)),
            estimation_samples=int(doc.get("estimation_samples", 10)),
            master_seed=int(doc.get("master_seed", 0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"scenario config is not valid JSON: {exc}") from exc
        return cls.from_json_dict(doc)

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class TrialData:
    """One realized Monte Carlo trial."""

    hypothesis: str
    true_sigma2: float
    training_sigma2: float
    training: np.ndarray
    observation: np.ndarray


@dataclass(frozen=True, eq=False)
class TrialBatch:
    """A contiguous block of trials with stacked sample arrays."""

    hypothesis: str
    sigma2: np.ndarray          # (trials,)
    training_sigma2: np.ndarray  # (trials,)
    training: np.ndarray        # (trials, K)
    observation: np.ndarray     # (trials, N)

    def __len__(self) -> int:
        return self.observation.shape[0]

    def row(self, i: int) -> TrialData:
        return TrialData(
            hypothesis=self.hypothesis,
            true_sigma2=float(self.sigma2[i]),
            training_sigma2=float(self.training_sigma2[i]),
            training=self.training[i].copy(),
            observation=self.observation[i].copy(),
        )


def draw_noise_power(model: NoiseModel, rng: TrialStream) -> float:
    """One noise-power draw.  Fixed models consume no randomness."""
    if isinstance(model, FixedNoise):
        return model.sigma2
    if isinstance(model, UniformNoise):
        u = float(rng.uniforms(1)[0])
        return model.delta_min + (model.delta_max - model.delta_min) * u
    if isinstance(model, LogNormalNoise):
        g = rng.normals(1)
        # np.exp, not math.exp: keeps the scalar path bit-identical to batch
        # generation (the two libm exps differ in the last ulp)
        return float(np.exp(model.log_location + math.sqrt(model.log_variance) * g)[0])
    raise ConfigError(f"unknown noise model type {type(model).__name__}")


def trial_words(config: ScenarioConfig, hypothesis: str) -> int:
    """64-bit words one trial consumes; fixes the substream counter stride."""
    _check_hypothesis(hypothesis)
    sigma_words = 0 if isinstance(config.noise_model, FixedNoise) else 2
    n, k = config.n_samples, config.estimation_samples
    words = sigma_words + k + n
    if hypothesis == "H1":
        words += n
    if config.interference_variance > 0.0:
        words += n
    return words


def _check_hypothesis(hypothesis: str) -> None:
    if hypothesis not in HYPOTHESES:
        raise ValueError(f"hypothesis must be one of {HYPOTHESES}, got {hypothesis!r}")


def generate_trial(config: ScenarioConfig, hypothesis: str, rng: TrialStream) -> TrialData:
    """Realize one trial from the given stream.

    Consumes exactly ``trial_words(config, hypothesis)`` words, in the same
    layout as :func:`generate_trials`, so a trial regenerated from its own
    substream is bit-identical to the corresponding batch row.
    """
    _check_hypothesis(hypothesis)
    n, k = config.n_samples, config.estimation_samples
    sigma2 = draw_noise_power(config.noise_model, rng)
    training_sigma2 = draw_noise_power(config.noise_model, rng)
    training = math.sqrt(training_sigma2) * rng.normals(k)
    observation = math.sqrt(sigma2) * rng.normals(n)
    if hypothesis == "H1":
        observation = observation + math.sqrt(config.signal_power) * rng.normals(n)
    if config.interference_variance > 0.0:
        observation = observation + math.sqrt(config.interference_variance) * rng.normals(n)
    return TrialData(
        hypothesis=hypothesis,
        true_sigma2=sigma2,
        training_sigma2=training_sigma2,
        training=training,
        observation=observation,
    )


def generate_trials(
    config: ScenarioConfig,
    hypothesis: str,
    exp_id: int,
    first_trial: int,
    n_trials: int,
    master_seed: int | None = None,
) -> TrialBatch:
    """Trials [first_trial, first_trial + n_trials) of one experiment stream."""
    _check_hypothesis(hypothesis)
    if master_seed is None:
        master_seed = config.master_seed
    n, k = config.n_samples, config.estimation_samples
    words = trial_words(config, hypothesis)
    u = words_to_uniforms(raw_words(master_seed, exp_id, first_trial, n_trials, words))

    model = config.noise_model
    if isinstance(model, FixedNoise):
        col = 0
        sigma2 = np.full(n_trials, model.sigma2)
        training_sigma2 = sigma2
    elif isinstance(model, UniformNoise):
        col = 2
        width = model.delta_max - model.delta_min
        sigma2 = model.delta_min + width * u[:, 0]
        training_sigma2 = model.delta_min + width * u[:, 1]
    else:
        col = 2
        sd = math.sqrt(model.log_variance)
        sigma2 = np.exp(model.log_location + sd * ndtri(u[:, 0]))
        training_sigma2 = np.exp(model.log_location + sd * ndtri(u[:, 1]))

    z = ndtri(u[:, col:])
    training = np.sqrt(training_sigma2)[:, None] * z[:, :k]
    observation = np.sqrt(sigma2)[:, None] * z[:, k:k + n]
    pos = k + n
    if hypothesis == "H1":
        observation = observation + math.sqrt(config.signal_power) * z[:, pos:pos + n]
        pos += n
    if config.interference_variance > 0.0:
        observation = observation + math.sqrt(config.interference_variance) * z[:, pos:pos + n]
    return TrialBatch(
        hypothesis=hypothesis,
        sigma2=sigma2,
        training_sigma2=training_sigma2,
        training=training,
        observation=observation,
    )


def iter_trial_batches(
    config: ScenarioConfig,
    hypothesis: str,
    exp_id: int,
    trials: int,
    chunk: int = 1 << 15,
    master_seed: int | None = None,
) -> Iterator[TrialBatch]:
    """Yield the experiment's trials in deterministic chunks."""
    start = 0
    while start < trials:
        count = min(chunk, trials - start)
        yield generate_trials(config, hypothesis, exp_id, start, count, master_seed)
        start += count


def trial_stream(config: ScenarioConfig, hypothesis: str, exp_id: int,
                 trial_index: int, master_seed: int | None = None) -> TrialStream:
    """The substream owned by one trial (convenience wrapper)."""
    if master_seed is None:
        master_seed = config.master_seed
    return substream(master_seed, exp_id, trial_index, trial_words(config, hypothesis))


def ml_noise_estimate(training) -> float:
    """Maximum-likelihood noise-power estimate: mean of squared training samples."""
    arr = np.asarray(training, dtype=float)
    if arr.size == 0:
        raise ValueError("ml_noise_estimate requires at least one training sample")
    return float(np.mean(arr * arr))


def interval_from_temperature(
    t_min: float, t_max: float, bandwidth: float, gain_factor: float
) -> tuple[float, float]:
    """Map a receiver temperature range to a noise-power interval.

    Noise power is k_B * T * B scaled by a dimensionless gain factor that
    absorbs electrical noise, frequency response and other receiver
    effects.
    """
    if not (0.0 < t_min < t_max):
        raise ValueError(f"require 0 < t_min < t_max, got ({t_min}, {t_max})")
    if not (bandwidth > 0.0):
        raise ValueError(f"bandwidth must be > 0, got {bandwidth}")
    if not (gain_factor > 0.0):
        raise ValueError(f"gain_factor must be > 0, got {gain_factor}")
    scale = BOLTZMANN * bandwidth * gain_factor
    return (scale * t_min, scale * t_max)

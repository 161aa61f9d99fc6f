"""Noise models, scenario config, trial generation, estimator, temperature map."""

import json
import math

import numpy as np
import pytest
from scipy import stats as sps

from specsense import specfun, streams
from specsense.errors import ConfigError
from specsense.noise import (
    BOLTZMANN,
    FixedNoise,
    LogNormalNoise,
    ScenarioConfig,
    UniformNoise,
    draw_noise_power,
    generate_trial,
    generate_trials,
    interval_from_temperature,
    iter_trial_batches,
    ml_noise_estimate,
    trial_stream,
    trial_words,
)

EID = streams.experiment_id(streams.ROLE_ROC_H0, 0, 0)


def config_with(model, **kw):
    base = dict(signal_power=0.5, n_samples=20, noise_model=model,
                estimation_samples=10, master_seed=123)
    base.update(kw)
    return ScenarioConfig(**base)


class TestModels:
    def test_validation(self):
        with pytest.raises(ConfigError):
            FixedNoise(0.0)
        with pytest.raises(ConfigError):
            UniformNoise(0.0, 1.0)
        with pytest.raises(ConfigError):
            UniformNoise(1.3, 0.7)
        with pytest.raises(ConfigError):
            LogNormalNoise(0.0, 0.0)

    def test_fixed_draw_consumes_no_randomness(self):
        s1 = streams.substream(5, 1, 0, 8)
        assert draw_noise_power(FixedNoise(1.0), s1) == 1.0
        assert draw_noise_power(FixedNoise(1.0), s1) == 1.0
        # the stream is untouched: its next word equals a fresh stream's first
        fresh = streams.substream(5, 1, 0, 8)
        assert np.array_equal(s1.raw(4), fresh.raw(4))

    def test_uniform_draw_mean(self):
        cfg = config_with(UniformNoise(0.7, 1.3))
        sigma2 = generate_trials(cfg, "H0", EID, 0, 100_000).sigma2
        assert np.all((sigma2 > 0.7) & (sigma2 < 1.3))
        # SE of the mean is 0.173 / sqrt(1e5) ~ 5.5e-4
        assert abs(float(np.mean(sigma2)) - 1.0) < 0.01

    def test_lognormal_median(self):
        cfg = config_with(LogNormalNoise(log_location=0.0, log_variance=0.1))
        sigma2 = generate_trials(cfg, "H0", EID, 0, 100_000).sigma2
        assert abs(float(np.median(sigma2)) - 1.0) < 0.02


class TestGenerateTrial:
    def test_shapes_and_labels(self):
        cfg = config_with(UniformNoise(0.7, 1.3))
        td = generate_trial(cfg, "H1", trial_stream(cfg, "H1", EID, 0))
        assert td.hypothesis == "H1"
        assert td.training.shape == (10,)
        assert td.observation.shape == (20,)
        assert td.true_sigma2 > 0 and td.training_sigma2 > 0

    def test_bad_hypothesis(self):
        cfg = config_with(FixedNoise(1.0))
        with pytest.raises(ValueError):
            generate_trial(cfg, "H2", trial_stream(cfg, "H0", EID, 0))

    def test_reproducible_bit_identical(self):
        cfg = config_with(UniformNoise(0.7, 1.3))
        a = generate_trial(cfg, "H1", trial_stream(cfg, "H1", EID, 5))
        b = generate_trial(cfg, "H1", trial_stream(cfg, "H1", EID, 5))
        assert a.true_sigma2 == b.true_sigma2
        assert np.array_equal(a.observation, b.observation)
        assert np.array_equal(a.training, b.training)

    @pytest.mark.parametrize("hyp", ["H0", "H1"])
    @pytest.mark.parametrize(
        "model,eta",
        [
            (FixedNoise(1.0), 0.0),
            (UniformNoise(0.7, 1.3), 0.0),
            (LogNormalNoise(0.0, 1.0), 0.0),
            (UniformNoise(0.7, 1.3), 0.3),
        ],
    )
    def test_batch_rows_equal_per_trial(self, hyp, model, eta):
        cfg = config_with(model, interference_variance=eta)
        batch = generate_trials(cfg, hyp, EID, 0, 33)
        for i in (0, 17, 32):
            td = generate_trial(cfg, hyp, trial_stream(cfg, hyp, EID, i))
            assert td.true_sigma2 == batch.sigma2[i]
            assert td.training_sigma2 == batch.training_sigma2[i]
            assert np.array_equal(td.training, batch.training[i])
            assert np.array_equal(td.observation, batch.observation[i])

    def test_chunking_does_not_change_trials(self):
        cfg = config_with(UniformNoise(0.7, 1.3))
        whole = generate_trials(cfg, "H0", EID, 0, 100)
        parts = list(iter_trial_batches(cfg, "H0", EID, 100, chunk=17))
        recombined = np.vstack([b.observation for b in parts])
        assert np.array_equal(whole.observation, recombined)

    def test_h0_second_moment(self):
        cfg = config_with(FixedNoise(1.0), n_samples=100_000)
        td = generate_trial(cfg, "H0", trial_stream(cfg, "H0", EID, 0))
        assert abs(float(np.mean(td.observation**2)) - 1.0) < 0.015

    def test_h1_variances_add(self):
        cfg = config_with(FixedNoise(1.0), n_samples=100_000, signal_power=0.5)
        td = generate_trial(cfg, "H1", trial_stream(cfg, "H1", EID, 0))
        assert abs(float(np.mean(td.observation**2)) - 1.5) < 0.02

    def test_interference_variance_adds(self):
        cfg = config_with(FixedNoise(1.0), n_samples=100_000,
                          interference_variance=0.3)
        td = generate_trial(cfg, "H0", trial_stream(cfg, "H0", EID, 0))
        assert abs(float(np.mean(td.observation**2)) - 1.3) < 0.02

    def test_zero_signal_h1_matches_h0_distribution(self):
        cfg = config_with(FixedNoise(1.0), signal_power=0.0)
        h0 = generate_trials(cfg, "H0", streams.experiment_id(2, 0, 0), 0, 10_000)
        h1 = generate_trials(cfg, "H1", streams.experiment_id(3, 0, 0), 0, 10_000)
        e0 = np.einsum("ij,ij->i", h0.observation, h0.observation)
        e1 = np.einsum("ij,ij->i", h1.observation, h1.observation)
        assert sps.ks_2samp(e0, e1).pvalue > 1e-3

    def test_h0_energy_is_chi_square(self):
        # one-sample Kolmogorov-Smirnov against the chi-square law,
        # 1% critical value 1.628 / sqrt(trials)
        cfg = config_with(FixedNoise(1.0))
        batch = generate_trials(cfg, "H0", EID, 0, 10_000)
        energy = np.sort(np.einsum("ij,ij->i", batch.observation, batch.observation))
        cdf = np.array([1.0 - specfun.chi2_sf(20, t) for t in energy])
        n = len(energy)
        ranks = np.arange(1, n + 1) / n
        d_stat = max(
            float(np.max(np.abs(ranks - cdf))),
            float(np.max(np.abs(ranks - 1.0 / n - cdf))),
        )
        assert d_stat < 1.628 / math.sqrt(n)

    def test_h1_equals_inflated_h0(self):
        cfg1 = config_with(FixedNoise(1.0), signal_power=0.5)
        cfg2 = config_with(FixedNoise(1.5), signal_power=0.0)
        h1 = generate_trials(cfg1, "H1", streams.experiment_id(2, 1, 0), 0, 10_000)
        h0 = generate_trials(cfg2, "H0", streams.experiment_id(3, 1, 0), 0, 10_000)
        e1 = np.einsum("ij,ij->i", h1.observation, h1.observation)
        e0 = np.einsum("ij,ij->i", h0.observation, h0.observation)
        assert sps.ks_2samp(e0, e1).pvalue > 1e-3

    def test_training_and_observation_noise_powers_independent(self):
        cfg = config_with(UniformNoise(0.7, 1.3))
        batch = generate_trials(cfg, "H0", EID, 0, 50_000)
        r = float(np.corrcoef(batch.sigma2, batch.training_sigma2)[0, 1])
        assert abs(r) < 0.02


class TestMlEstimate:
    def test_zeros(self):
        assert ml_noise_estimate(np.zeros(4)) == 0.0

    def test_ones(self):
        assert ml_noise_estimate([1.0, 1.0, 1.0, 1.0]) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            ml_noise_estimate([])

    def test_chi_square_moments(self):
        cfg = config_with(FixedNoise(1.0), estimation_samples=10)
        batch = generate_trials(cfg, "H0", EID, 0, 100_000)
        estimates = np.mean(batch.training**2, axis=1)
        assert abs(float(np.mean(estimates)) - 1.0) < 0.005
        assert abs(float(np.var(estimates)) - 0.2) < 0.01


class TestTemperatureInterval:
    def test_paper_scale_interval_endpoints(self):
        lo, hi = interval_from_temperature(150.0, 451.0, 6e6, 4e13)
        # hand calculation: 1.38e-23 * 6e6 * 4e13 = 3.312e-3 per kelvin
        assert abs(lo - 0.49680) < 1e-10
        assert abs(hi - 1.4937120) < 1e-10
        assert abs(lo - 0.5) / 0.5 < 0.01
        assert abs(hi - 1.5) / 1.5 < 0.01

    def test_second_interval(self):
        lo, hi = interval_from_temperature(210.0, 391.0, 6e6, 4e13)
        assert abs(lo - 0.69552) < 1e-10
        assert abs(hi - 1.2949920) < 1e-10
        assert abs(lo - 0.7) / 0.7 < 0.01
        assert abs(hi - 1.3) / 1.3 < 0.01

    def test_boltzmann_value(self):
        assert BOLTZMANN == 1.38e-23

    def test_ordering_validation(self):
        with pytest.raises(ValueError):
            interval_from_temperature(300.0, 200.0, 6e6, 4e13)
        with pytest.raises(ValueError):
            interval_from_temperature(0.0, 200.0, 6e6, 4e13)
        with pytest.raises(ValueError):
            interval_from_temperature(100.0, 200.0, -1.0, 4e13)


class TestScenarioConfigJson:
    def test_round_trip(self):
        cfg = config_with(UniformNoise(0.7, 1.3), interference_variance=0.3)
        doc = json.loads(json.dumps(cfg.to_json_dict()))
        assert ScenarioConfig.from_json_dict(doc) == cfg

    def test_round_trip_lognormal(self):
        cfg = config_with(LogNormalNoise(0.0, 1.0))
        assert ScenarioConfig.from_json(json.dumps(cfg.to_json_dict())) == cfg

    def test_unknown_key_rejected(self):
        doc = config_with(FixedNoise(1.0)).to_json_dict()
        doc["bandwidth"] = 6e6
        with pytest.raises(ConfigError, match="bandwidth"):
            ScenarioConfig.from_json_dict(doc)

    def test_unknown_noise_key_rejected(self):
        doc = config_with(UniformNoise(0.7, 1.3)).to_json_dict()
        doc["noise_model"]["sigma2"] = 1.0
        with pytest.raises(ConfigError, match="sigma2"):
            ScenarioConfig.from_json_dict(doc)

    def test_missing_fields_named(self):
        with pytest.raises(ConfigError, match="n_samples"):
            ScenarioConfig.from_json_dict({"signal_power": 1.0,
                                           "noise_model": {"variant": "fixed", "sigma2": 1.0}})

    def test_bad_variant(self):
        doc = config_with(FixedNoise(1.0)).to_json_dict()
        doc["noise_model"] = {"variant": "gaussian", "sigma2": 1.0}
        with pytest.raises(ConfigError, match="variant"):
            ScenarioConfig.from_json_dict(doc)

    def test_snr_definition(self):
        cfg = config_with(UniformNoise(0.7, 1.3), signal_power=0.5)
        assert abs(cfg.snr() - 0.5) < 1e-15
        with pytest.raises(ConfigError):
            config_with(FixedNoise(1.0)).snr()

    def test_field_validation(self):
        with pytest.raises(ConfigError):
            config_with(FixedNoise(1.0), signal_power=-1.0)
        with pytest.raises(ConfigError):
            config_with(FixedNoise(1.0), n_samples=0)
        with pytest.raises(ConfigError):
            config_with(FixedNoise(1.0), master_seed=-1)


def test_trial_words_layout():
    uniform = config_with(UniformNoise(0.7, 1.3))
    assert trial_words(uniform, "H0") == 2 + 10 + 20
    assert trial_words(uniform, "H1") == 2 + 10 + 40
    fixed = config_with(FixedNoise(1.0), interference_variance=0.3)
    assert trial_words(fixed, "H0") == 10 + 40
    assert trial_words(fixed, "H1") == 10 + 60

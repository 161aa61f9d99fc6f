"""ROC sweeps, Pd-vs-SNR sweeps, preset experiments, and CSV/provenance output.

``run_roc`` is the general harness: for every (detector, target false-alarm)
pair it obtains a threshold (analytic chi-square for the conventional
detector, the closed-form inverse for ``llr``, an empirical H0 quantile for
``ave``/``avn``), then measures empirical rates on fresh H0 and H1 trial
streams.  Streams are disjoint per role, detector, and grid point, so any
degree of parallelism returns identical numbers.

``operating_points`` reads each detector's empirical ROC at a fixed
operating false-alarm probability (threshold = H0-sample quantile).  That is
how detectors are compared across scenarios whose design-time thresholds
miss their targets -- the conventional detector always, and every detector
under noise-model mismatch or unmodeled interference.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .calibration import (
    CalibrationReport,
    ThresholdCache,
    calibration_cache_key,
    h0_statistics,
    mc_threshold_index,
)
from .detectors import (
    AveDetector,
    AvnDetector,
    DetectorKind,
    LlrDetector,
    LrtDetector,
    Threshold,
    UniformPrior,
    batch_statistics,
    llr_threshold,
)
from . import specfun
from .noise import (
    LogNormalNoise,
    ScenarioConfig,
    UniformNoise,
    iter_trial_batches,
)
from .streams import (
    ROLE_OPERATING_H0,
    ROLE_OPERATING_H1,
    ROLE_ROC_H0,
    ROLE_ROC_H1,
    ROLE_SWEEP_H1,
    experiment_id,
)

__all__ = [
    "RocPoint",
    "SnrPoint",
    "OperatingPoint",
    "ExperimentPreset",
    "PRESETS",
    "DEFAULT_PFA_GRID",
    "get_preset",
    "run_roc",
    "run_preset",
    "pd_vs_snr",
    "operating_points",
    "write_roc_csv",
    "write_snr_csv",
    "write_provenance",
    "ROC_CSV_HEADER",
    "SNR_CSV_HEADER",
]

DEFAULT_PFA_GRID: tuple[float, ...] = tuple(
    float(p) for p in np.logspace(math.log10(0.01), math.log10(0.9), 15)
)

ROC_CSV_HEADER = "experiment,detector,target_pfa,empirical_pfa,empirical_pd,se_pfa,se_pd,trials,seed"
SNR_CSV_HEADER = "experiment,detector,snr,target_pfa,empirical_pd,se_pd,trials,seed"


@dataclass(frozen=True)
class RocPoint:
    detector: DetectorKind
    target_pfa: float
    empirical_pfa: float
    empirical_pd: float
    se_pfa: float
    se_pd: float
    trials: int

    @property
    def label(self) -> str:
        return self.detector.label


@dataclass(frozen=True)
class SnrPoint:
    detector: DetectorKind
    snr: float
    target_pfa: float
    empirical_pd: float
    se_pd: float
    trials: int

    @property
    def label(self) -> str:
        return self.detector.label


@dataclass(frozen=True)
class OperatingPoint:
    """One detector's empirical ROC read at a fixed operating false alarm."""

    detector: DetectorKind
    operating_pfa: float
    threshold: float
    empirical_pd: float
    se_pd: float
    trials: int

    @property
    def label(self) -> str:
        return self.detector.label


@dataclass(frozen=True)
class ExperimentPreset:
    """A named experiment cell: scenario, detector set, and Pfa grid.

    ``calibration_config`` is the scenario the detector designer believes
    in; it differs from ``config`` only in the mismatch experiments, where
    thresholds are built under the assumed uniform noise model while the
    evaluation trials draw noise power from the actual model.
    """

    id: str
    config: ScenarioConfig
    detectors: tuple[DetectorKind, ...]
    pfa_grid: tuple[float, ...] = DEFAULT_PFA_GRID
    calibration_config: ScenarioConfig | None = None
    notes: dict = field(default_factory=dict)

    @property
    def assumed_config(self) -> ScenarioConfig:
        return self.calibration_config if self.calibration_config is not None else self.config


def _standard_detectors(prior: UniformPrior) -> tuple[DetectorKind, ...]:
    return (
        LrtDetector(estimation_samples=10),
        LrtDetector(estimation_samples=20),
        AveDetector(prior),
        AvnDetector(prior),
        LlrDetector(prior),
    )


def _uniform_preset(pid, seed, signal_power, n_samples, dmin, dmax, eta=0.0):
    prior = UniformPrior(dmin, dmax)
    config = ScenarioConfig(
        signal_power=signal_power,
        n_samples=n_samples,
        noise_model=UniformNoise(dmin, dmax),
        interference_variance=eta,
        estimation_samples=10,
        master_seed=seed,
    )
    return ExperimentPreset(id=pid, config=config, detectors=_standard_detectors(prior))


def _mismatch_preset(pid, seed, signal_power, n_samples, dmin, dmax, exponent_variance):
    prior = UniformPrior(dmin, dmax)
    # actual noise power is log-normal; location 0 puts its median at the
    # geometric mean of the assumed interval (= 1 for (0.5, 2))
    actual = ScenarioConfig(
        signal_power=signal_power,
        n_samples=n_samples,
        noise_model=LogNormalNoise(log_location=0.0, log_variance=exponent_variance),
        estimation_samples=10,
        master_seed=seed,
    )
    assumed = actual.with_(noise_model=UniformNoise(dmin, dmax))
    return ExperimentPreset(
        id=pid,
        config=actual,
        detectors=_standard_detectors(prior),
        calibration_config=assumed,
        notes={
            "log_normal_reading": "log_variance is the variance of the Gaussian "
            "exponent; log_location 0 centers the median on the geometric mean "
            "of the assumed interval"
        },
    )


PRESETS: dict[str, ExperimentPreset] = {
    p.id: p
    for p in (
        _uniform_preset("fig1a", 101, signal_power=0.5, n_samples=20, dmin=0.7, dmax=1.3),
        _uniform_preset("fig1b", 102, signal_power=0.5, n_samples=20, dmin=0.5, dmax=1.5),
        _uniform_preset("fig2a", 103, signal_power=0.5, n_samples=40, dmin=0.5, dmax=1.5),
        _uniform_preset("fig2b", 104, signal_power=1.0, n_samples=40, dmin=0.5, dmax=1.5),
        _mismatch_preset("fig3a", 105, signal_power=1.8, n_samples=40, dmin=0.5, dmax=2.0,
                         exponent_variance=1.0),
        _mismatch_preset("fig3b", 106, signal_power=1.8, n_samples=40, dmin=0.5, dmax=2.0,
                         exponent_variance=0.1),
        _uniform_preset("fig4", 107, signal_power=0.5, n_samples=20, dmin=0.7, dmax=1.3,
                        eta=0.3),
    )
}


def get_preset(preset_id: str) -> ExperimentPreset:
    try:
        return PRESETS[preset_id]
    except KeyError:
        raise ValueError(
            f"unknown preset {preset_id!r}; valid ids: {', '.join(sorted(PRESETS))}"
        ) from None


def _effective_config(config: ScenarioConfig, detector: DetectorKind) -> ScenarioConfig:
    """Trials for the conventional detector carry its own training length."""
    if isinstance(detector, LrtDetector) and config.estimation_samples != detector.estimation_samples:
        return config.with_(estimation_samples=detector.estimation_samples)
    return config


def _count_exceed(detector, config, exp_id, hypothesis, trials, seed, threshold_value):
    count = 0
    for batch in iter_trial_batches(config, hypothesis, exp_id, trials, master_seed=seed):
        stats = batch_statistics(detector, batch, config)
        count += int(np.sum(stats > threshold_value))
    return count


def _binomial_se(p_hat: float, trials: int) -> float:
    return math.sqrt(p_hat * (1.0 - p_hat) / trials)


def _roc_task(args):
    det, config, di, gi, threshold_value, trials, seed = args
    n_fa = _count_exceed(det, config, experiment_id(ROLE_ROC_H0, di, gi), "H0",
                         trials, seed, threshold_value)
    n_det = _count_exceed(det, config, experiment_id(ROLE_ROC_H1, di, gi), "H1",
                          trials, seed, threshold_value)
    return di, gi, n_fa, n_det


def _thresholds_for_detector(
    detector: DetectorKind,
    assumed_config: ScenarioConfig,
    pfa_grid: tuple[float, ...],
    trials: int,
    seed: int,
    cache: ThresholdCache | None = None,
) -> list[Threshold]:
    n = assumed_config.n_samples
    if isinstance(detector, LrtDetector):
        # chi-square quantile on the noise-normalized energy: equivalent to
        # rescaling the raw-energy threshold by each trial's noise estimate
        return [
            Threshold(value=specfun.chi2_isf(n, p), target_pfa=p, provenance="analytic-chi2")
            for p in pfa_grid
        ]
    if isinstance(detector, LlrDetector):
        return [llr_threshold(p, n, detector.prior) for p in pfa_grid]
    smallest = min(pfa_grid)
    if trials * smallest < 100:
        raise ValueError(
            f"calibrating at pfa={smallest} needs trials * pfa >= 100, got {trials}"
        )
    cal_config = _effective_config(assumed_config, detector)
    keys = [
        calibration_cache_key(detector, cal_config, p, trials, seed) for p in pfa_grid
    ]
    out: list[Threshold | None] = [None] * len(pfa_grid)
    if cache is not None:
        for i, key in enumerate(keys):
            report = cache.load(key)
            if report is not None:
                out[i] = report.threshold
    if any(t is None for t in out):
        # one sorted H0-statistic pass covers every missing grid point
        stats = h0_statistics(detector, cal_config, trials, seed)
        for i, p in enumerate(pfa_grid):
            if out[i] is not None:
                continue
            value = float(stats[mc_threshold_index(trials, p)])
            threshold = Threshold(
                value=value, target_pfa=p, provenance="monte-carlo",
                trials=trials, seed=seed,
            )
            out[i] = threshold
            if cache is not None:
                exceed = trials - int(np.searchsorted(stats, value, side="right"))
                cache.store(
                    keys[i],
                    CalibrationReport(
                        threshold=threshold,
                        trials=trials,
                        empirical_pfa_at_threshold=exceed / trials,
                        standard_error=math.sqrt(p * (1.0 - p) / trials),
                    ),
                )
    return out


def _check_grid(pfa_grid) -> tuple[float, ...]:
    grid = tuple(float(p) for p in pfa_grid)
    if not grid:
        raise ValueError("pfa_grid must be nonempty")
    if any(not (0.0 < p < 1.0) for p in grid):
        raise ValueError("pfa_grid values must lie in (0, 1)")
    if list(grid) != sorted(grid):
        raise ValueError("pfa_grid must be sorted ascending")
    return grid


def run_roc(
    preset: ExperimentPreset,
    trials: int,
    seed: int | None = None,
    workers: int = 1,
    cache: ThresholdCache | None = None,
) -> list[RocPoint]:
    """Empirical (Pfa, Pd) for every detector at every target on the grid."""
    grid = _check_grid(preset.pfa_grid)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if seed is None:
        seed = preset.config.master_seed

    thresholds: dict[int, list[Threshold]] = {}
    for di, det in enumerate(preset.detectors):
        thresholds[di] = _thresholds_for_detector(
            det, preset.assumed_config, grid, trials, seed, cache=cache
        )

    tasks = [
        (det, _effective_config(preset.config, det), di, gi,
         thresholds[di][gi].value, trials, seed)
        for di, det in enumerate(preset.detectors)
        for gi in range(len(grid))
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_roc_task, tasks))
    else:
        raw = [_roc_task(t) for t in tasks]

    points = []
    for di, gi, n_fa, n_det in sorted(raw, key=lambda r: (r[0], r[1])):
        pfa_hat = n_fa / trials
        pd_hat = n_det / trials
        points.append(
            RocPoint(
                detector=preset.detectors[di],
                target_pfa=grid[gi],
                empirical_pfa=pfa_hat,
                empirical_pd=pd_hat,
                se_pfa=_binomial_se(pfa_hat, trials),
                se_pd=_binomial_se(pd_hat, trials),
                trials=trials,
            )
        )
    return points


def provenance_record(
    experiment: str,
    preset: ExperimentPreset,
    trials: int,
    seed: int,
    extra: dict | None = None,
) -> dict:
    record = {
        "experiment": experiment,
        "config": preset.config.to_json_dict(),
        "calibration_config": preset.assumed_config.to_json_dict(),
        "detectors": [d.label for d in preset.detectors],
        "pfa_grid": list(preset.pfa_grid),
        "trials": trials,
        "seed": seed,
        "version": __version__,
        "notes": dict(preset.notes),
    }
    if extra:
        record.update(extra)
    return record


def run_preset(
    preset_id: str,
    trials: int,
    seed: int | None = None,
    workers: int = 1,
    cache: ThresholdCache | None = None,
    pfa_grid=None,
) -> tuple[list[RocPoint], dict]:
    """Run a named experiment preset; returns its points and provenance."""
    preset = get_preset(preset_id)
    if pfa_grid is not None:
        preset = ExperimentPreset(
            id=preset.id,
            config=preset.config,
            detectors=preset.detectors,
            pfa_grid=tuple(float(p) for p in pfa_grid),
            calibration_config=preset.calibration_config,
            notes=preset.notes,
        )
    if seed is None:
        seed = preset.config.master_seed
    points = run_roc(preset, trials, seed=seed, workers=workers, cache=cache)
    return points, provenance_record(preset_id, preset, trials, seed)


def _snr_task(args):
    det, config, di, si, threshold_value, trials, seed = args
    n_det = _count_exceed(det, config, experiment_id(ROLE_SWEEP_H1, di, si), "H1",
                          trials, seed, threshold_value)
    return di, si, n_det


def pd_vs_snr(
    config: ScenarioConfig,
    detectors: tuple[DetectorKind, ...],
    snr_grid,
    target_pfa: float,
    trials: int,
    seed: int | None = None,
    workers: int = 1,
    cache: ThresholdCache | None = None,
) -> list[SnrPoint]:
    """Detection probability versus SNR at a fixed target false alarm.

    SNR follows the uniform-noise definition 2 P / (delta_min + delta_max),
    so each grid value sets signal_power = snr * (delta_min + delta_max) / 2.
    """
    if not isinstance(config.noise_model, UniformNoise):
        raise ValueError("pd_vs_snr requires a uniform noise model (SNR definition)")
    snrs = tuple(float(s) for s in snr_grid)
    if not snrs or list(snrs) != sorted(snrs) or any(s < 0 for s in snrs):
        raise ValueError("snr_grid must be nonempty, nonnegative, and sorted")
    if seed is None:
        seed = config.master_seed
    mean_noise = 0.5 * (config.noise_model.delta_min + config.noise_model.delta_max)

    tasks = []
    for si, snr in enumerate(snrs):
        point_config = config.with_(signal_power=snr * mean_noise)
        for di, det in enumerate(detectors):
            thr = _thresholds_for_detector(
                det, point_config, (target_pfa,), trials, seed, cache=cache
            )[0]
            tasks.append(
                (det, _effective_config(point_config, det), di, si, thr.value, trials, seed)
            )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_snr_task, tasks))
    else:
        raw = [_snr_task(t) for t in tasks]

    points = []
    for di, si, n_det in sorted(raw, key=lambda r: (r[1], r[0])):
        pd_hat = n_det / trials
        points.append(
            SnrPoint(
                detector=detectors[di],
                snr=snrs[si],
                target_pfa=target_pfa,
                empirical_pd=pd_hat,
                se_pd=_binomial_se(pd_hat, trials),
                trials=trials,
            )
        )
    return points


def _operating_task(args):
    det, config, di, operating_pfa, trials, seed = args
    h0_parts = [
        batch_statistics(det, batch, config)
        for batch in iter_trial_batches(
            config, "H0", experiment_id(ROLE_OPERATING_H0, di), trials, master_seed=seed
        )
    ]
    h0_stats = np.concatenate(h0_parts)
    h0_stats.sort()
    threshold = float(h0_stats[mc_threshold_index(trials, operating_pfa)])
    n_det = _count_exceed(det, config, experiment_id(ROLE_OPERATING_H1, di), "H1",
                          trials, seed, threshold)
    return di, threshold, n_det


def operating_points(
    config: ScenarioConfig,
    detectors: tuple[DetectorKind, ...],
    operating_pfa: float,
    trials: int,
    seed: int | None = None,
    workers: int = 1,
) -> list[OperatingPoint]:
    """Each detector's empirical ROC at a common operating false alarm.

    The threshold is the (1 - operating_pfa) quantile of the detector's own
    H0 statistics in this scenario, so detectors whose design thresholds
    miss their target (noise estimation error, model mismatch,
    interference) are compared at the same actual operating point, as on a
    ROC plot.
    """
    if not (0.0 < operating_pfa < 1.0):
        raise ValueError(f"operating_pfa must be in (0, 1), got {operating_pfa}")
    if trials * operating_pfa < 100:
        raise ValueError("operating point needs trials * operating_pfa >= 100")
    if seed is None:
        seed = config.master_seed
    tasks = [
        (det, _effective_config(config, det), di, operating_pfa, trials, seed)
        for di, det in enumerate(detectors)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_operating_task, tasks))
    else:
        raw = [_operating_task(t) for t in tasks]
    points = []
    for di, threshold, n_det in sorted(raw, key=lambda r: r[0]):
        pd_hat = n_det / trials
        points.append(
            OperatingPoint(
                detector=detectors[di],
                operating_pfa=operating_pfa,
                threshold=threshold,
                empirical_pd=pd_hat,
                se_pd=_binomial_se(pd_hat, trials),
                trials=trials,
            )
        )
    return points


# ---------------------------------------------------------------------------
# delimited output + provenance


def _fmt(x: float) -> str:
    return format(x, ".10g")


def write_roc_csv(path, experiment: str, points: list[RocPoint], seed: int) -> None:
    lines = [ROC_CSV_HEADER]
    for pt in points:
        lines.append(
            ",".join(
                [
                    experiment,
                    pt.label,
                    _fmt(pt.target_pfa),
                    _fmt(pt.empirical_pfa),
                    _fmt(pt.empirical_pd),
                    _fmt(pt.se_pfa),
                    _fmt(pt.se_pd),
                    str(pt.trials),
                    str(seed),
                ]
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_snr_csv(path, experiment: str, points: list[SnrPoint], seed: int) -> None:
    lines = [SNR_CSV_HEADER]
    for pt in points:
        lines.append(
            ",".join(
                [
                    experiment,
                    pt.label,
                    _fmt(pt.snr),
                    _fmt(pt.target_pfa),
                    _fmt(pt.empirical_pd),
                    _fmt(pt.se_pd),
                    str(pt.trials),
                    str(seed),
                ]
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_provenance(path, record: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")

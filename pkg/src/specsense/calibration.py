"""Monte Carlo threshold calibration and the generic decision step.

The ``ave`` and ``avn`` statistics have no closed-form threshold, so their
thresholds are empirical H0 quantiles: generate H0 trials on the
calibration substream, evaluate the statistic, and take the order statistic
at ceil((1 - target_pfa) * trials).  Calibration conditions on the full
scenario (noise model, interference, signal power), and reruns with the
same (config, seed, trials) are bit-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .detectors import (
    AveDetector,
    AvnDetector,
    DetectorKind,
    LlrDetector,
    LrtDetector,
    Threshold,
    batch_statistics,
)
from .noise import ScenarioConfig, iter_trial_batches
from .streams import ROLE_CALIBRATION, experiment_id

__all__ = [
    "CalibrationReport",
    "ThresholdCache",
    "calibrate_mc",
    "decide",
    "calibration_cache_key",
    "h0_statistics",
    "mc_threshold_index",
]

MIN_TAIL_MASS = 100  # required trials * target_pfa


@dataclass(frozen=True)
class CalibrationReport:
    threshold: Threshold
    trials: int
    empirical_pfa_at_threshold: float
    standard_error: float

    def to_json_dict(self) -> dict:
        return {
            "threshold": self.threshold.to_json_dict(),
            "trials": self.trials,
            "empirical_pfa_at_threshold": self.empirical_pfa_at_threshold,
            "standard_error": self.standard_error,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CalibrationReport":
        return cls(
            threshold=Threshold.from_json_dict(doc["threshold"]),
            trials=int(doc["trials"]),
            empirical_pfa_at_threshold=float(doc["empirical_pfa_at_threshold"]),
            standard_error=float(doc["standard_error"]),
        )


def _detector_descriptor(detector: DetectorKind) -> dict:
    doc = {"kind": detector.label.split(":")[0]}
    if isinstance(detector, LrtDetector):
        doc["estimation_samples"] = detector.estimation_samples
    else:
        doc["prior"] = [detector.prior.delta_min, detector.prior.delta_max]
    return doc


def calibration_cache_key(
    detector: DetectorKind,
    config: ScenarioConfig,
    target_pfa: float,
    trials: int,
    seed: int,
) -> str:
    """Stable content hash identifying one calibration run."""
    doc = {
        "detector": _detector_descriptor(detector),
        "config": config.to_json_dict(),
        "target_pfa": target_pfa,
        "trials": trials,
        "seed": seed,
    }
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def h0_statistics(
    detector: DetectorKind,
    config: ScenarioConfig,
    trials: int,
    seed: int,
) -> np.ndarray:
    """Sorted H0 statistics from the calibration substream.

    The generation stream depends only on (config, seed, trials), so
    detectors calibrated against the same scenario share trials; their
    statistics differ.
    """
    exp_id = experiment_id(ROLE_CALIBRATION)
    parts = [
        batch_statistics(detector, batch, config)
        for batch in iter_trial_batches(config, "H0", exp_id, trials, master_seed=seed)
    ]
    stats = np.concatenate(parts)
    stats.sort()
    return stats


def mc_threshold_index(trials: int, target_pfa: float) -> int:
    """0-based index of the order statistic used as the threshold."""
    return math.ceil((1.0 - target_pfa) * trials) - 1


def calibrate_mc(
    detector: DetectorKind,
    config: ScenarioConfig,
    target_pfa: float,
    trials: int,
    seed: int,
) -> CalibrationReport:
    """Empirical-quantile threshold for a detector without an analytic one."""
    if isinstance(detector, (LrtDetector, LlrDetector)):
        raise ValueError(
            f"detector {detector.label!r} has an analytic threshold; "
            "Monte Carlo calibration would silently shadow it"
        )
    if not isinstance(detector, (AveDetector, AvnDetector)):
        raise TypeError(f"unknown detector kind {type(detector).__name__}")
    if not (0.0 < target_pfa < 1.0):
        raise ValueError(f"target_pfa must be in (0, 1), got {target_pfa}")
    if trials * target_pfa < MIN_TAIL_MASS:
        raise ValueError(
            f"calibration needs trials * target_pfa >= {MIN_TAIL_MASS} "
            f"for a stable quantile, got {trials} * {target_pfa}"
        )
    stats = h0_statistics(detector, config, trials, seed)
    value = float(stats[mc_threshold_index(trials, target_pfa)])
    exceed = trials - int(np.searchsorted(stats, value, side="right"))
    threshold = Threshold(
        value=value,
        target_pfa=target_pfa,
        provenance="monte-carlo",
        trials=trials,
        seed=seed,
    )
    return CalibrationReport(
        threshold=threshold,
        trials=trials,
        empirical_pfa_at_threshold=exceed / trials,
        standard_error=math.sqrt(target_pfa * (1.0 - target_pfa) / trials),
    )


def decide(statistic: float, threshold: Threshold) -> str:
    """H1 when the statistic exceeds the threshold; ties resolve to H0."""
    return "H1" if statistic > threshold.value else "H0"


class ThresholdCache:
    """Directory of CalibrationReport JSON files keyed by calibration hash."""

    def __init__(self, directory):
        from pathlib import Path

        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str):
        return self.directory / f"{key}.json"

    def load(self, key: str) -> CalibrationReport | None:
        path = self._path(key)
        if not path.exists():
            return None
        with open(path, encoding="utf-8") as fh:
            return CalibrationReport.from_json_dict(json.load(fh))

    def store(self, key: str, report: CalibrationReport) -> None:
        with open(self._path(key), "w", encoding="utf-8") as fh:
            json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

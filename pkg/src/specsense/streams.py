"""Counter-based random substreams for reproducible, parallel Monte Carlo.

Every trial draws from its own Philox substream addressed by
``(master_seed, experiment_id, trial_index)``: the 128-bit Philox key is
``master_seed | experiment_id << 64`` and the 256-bit counter starts at
``trial_index * blocks_per_trial`` (one block = 4 output words).  A trial
consumes a fixed number of 64-bit words, so the substreams of consecutive
trials tile a contiguous counter range and a whole chunk of trials can be
produced with a single ``random_raw`` call while remaining bit-identical to
per-trial generation.  Results are therefore independent of chunking,
worker count, and scheduling.

Normal variates are produced by inverse-CDF from 53-bit uniforms (fixed
word consumption per draw, unlike rejection samplers), which is what makes
the per-trial word budget static.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

__all__ = [
    "ROLE_CALIBRATION",
    "ROLE_ROC_H0",
    "ROLE_ROC_H1",
    "ROLE_SWEEP_H0",
    "ROLE_SWEEP_H1",
    "ROLE_OPERATING_H0",
    "ROLE_OPERATING_H1",
    "experiment_id",
    "substream",
    "raw_words",
    "words_to_uniforms",
    "TrialStream",
]

_MASK64 = (1 << 64) - 1
_WORDS_PER_BLOCK = 4

# Stream roles keep calibration, ROC evaluation, sweeps, and operating-point
# reads on disjoint substreams of the same master seed.
ROLE_CALIBRATION = 1
ROLE_ROC_H0 = 2
ROLE_ROC_H1 = 3
ROLE_SWEEP_H0 = 4
ROLE_SWEEP_H1 = 5
ROLE_OPERATING_H0 = 6
ROLE_OPERATING_H1 = 7


def experiment_id(role: int, detector: int = 0, point: int = 0) -> int:
    """Pack a stream role, detector index, and grid-point index into 64 bits."""
    if not (0 <= role < 1 << 16 and 0 <= detector < 1 << 20 and 0 <= point < 1 << 20):
        raise ValueError("experiment_id component out of range")
    return (role << 40) | (detector << 20) | point


def _blocks_per_trial(words_per_trial: int) -> int:
    return max(1, -(-words_per_trial // _WORDS_PER_BLOCK))


def _key(master_seed: int, exp_id: int) -> int:
    if not (0 <= master_seed <= _MASK64):
        raise ValueError(f"master_seed must be a 64-bit unsigned integer, got {master_seed}")
    return (master_seed & _MASK64) | ((exp_id & _MASK64) << 64)


def words_to_uniforms(words: np.ndarray) -> np.ndarray:
    """Map raw 64-bit words to doubles strictly inside (0, 1).

    52 mantissa bits, offset by half a step: every value lands exactly on a
    representable double in [2^-53, 1 - 2^-53] with no rounding at either end.
    """
    return (words >> np.uint64(12)) * 2.0**-52 + 2.0**-53


def raw_words(
    master_seed: int,
    exp_id: int,
    first_trial: int,
    n_trials: int,
    words_per_trial: int,
) -> np.ndarray:
    """Raw words for trials [first_trial, first_trial + n_trials), shape (n_trials, words).

    Row ``i`` is bit-identical to ``substream(master_seed, exp_id,
    first_trial + i, words_per_trial).raw(words_per_trial)``.
    """
    blocks = _blocks_per_trial(words_per_trial)
    bg = Philox(counter=first_trial * blocks, key=_key(master_seed, exp_id))
    flat = bg.random_raw(n_trials * blocks * _WORDS_PER_BLOCK)
    return flat.reshape(n_trials, blocks * _WORDS_PER_BLOCK)[:, :words_per_trial]


class TrialStream:
    """Sequential view of one trial's substream: uniforms and normals on demand."""

    def __init__(self, bit_generator: Philox):
        self._bg = bit_generator

    def raw(self, n: int) -> np.ndarray:
        out = self._bg.random_raw(n)
        return np.atleast_1d(out).astype(np.uint64, copy=False)

    def uniforms(self, n: int) -> np.ndarray:
        return words_to_uniforms(self.raw(n))

    def normals(self, n: int) -> np.ndarray:
        return ndtri(self.uniforms(n))


def substream(
    master_seed: int,
    exp_id: int,
    trial_index: int,
    words_per_trial: int,
) -> TrialStream:
    """The substream owned by one trial of one experiment.

    ``words_per_trial`` fixes the counter stride; it must match the trial
    layout of the experiment (see :func:`specsense.noise.trial_words`).
    """
    if trial_index < 0:
        raise ValueError(f"trial_index must be >= 0, got {trial_index}")
    blocks = _blocks_per_trial(words_per_trial)
    bg = Philox(counter=trial_index * blocks, key=_key(master_seed, exp_id))
    return TrialStream(bg)

"""Substream addressing: determinism, batch/per-trial equality, id packing."""

import numpy as np
import pytest

from specsense import streams


def test_substream_deterministic():
    a = streams.substream(42, 7, 3, 16).raw(16)
    b = streams.substream(42, 7, 3, 16).raw(16)
    assert np.array_equal(a, b)


def test_distinct_trials_distinct_words():
    a = streams.substream(42, 7, 0, 16).raw(16)
    b = streams.substream(42, 7, 1, 16).raw(16)
    assert not np.array_equal(a, b)


def test_raw_words_rows_match_substreams():
    block = streams.raw_words(99, 5, first_trial=10, n_trials=8, words_per_trial=13)
    assert block.shape == (8, 13)
    for i in (0, 3, 7):
        row = streams.substream(99, 5, 10 + i, 13).raw(13)
        assert np.array_equal(block[i], row)


def test_chunking_invariance():
    whole = streams.raw_words(1, 2, 0, 20, 9)
    first = streams.raw_words(1, 2, 0, 11, 9)
    rest = streams.raw_words(1, 2, 11, 9, 9)
    assert np.array_equal(whole, np.vstack([first, rest]))


def test_uniforms_strictly_inside_unit_interval():
    u = streams.words_to_uniforms(
        np.array([0, 1, 2**64 - 1, 2**63], dtype=np.uint64)
    )
    assert np.all(u > 0.0) and np.all(u < 1.0)


def test_normals_shape_and_spread():
    z = streams.substream(7, 1, 0, 4096).normals(4096)
    assert z.shape == (4096,)
    assert abs(float(np.mean(z))) < 0.1
    assert abs(float(np.std(z)) - 1.0) < 0.05


def test_experiment_id_packing_is_injective():
    seen = set()
    for role in (1, 2, 7):
        for det in (0, 3):
            for point in (0, 14):
                seen.add(streams.experiment_id(role, det, point))
    assert len(seen) == 12


def test_experiment_id_range_checks():
    with pytest.raises(ValueError):
        streams.experiment_id(-1)
    with pytest.raises(ValueError):
        streams.experiment_id(1, detector=1 << 20)


def test_master_seed_validation():
    with pytest.raises(ValueError):
        streams.substream(-1, 0, 0, 8)
    with pytest.raises(ValueError):
        streams.substream(1 << 64, 0, 0, 8)

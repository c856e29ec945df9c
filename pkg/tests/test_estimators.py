from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delayed_bandits.delays import GeometricDelay, TabulatedDelay
from delayed_bandits.estimators import (
    ArmStats,
    conversion_rate_estimate,
    effective_count_censored,
    effective_count_uncensored,
    geometric_update,
)


def test_record_examples():
    stats = ArmStats(3, GeometricDelay(1.0))
    stats.record_pull(1)
    assert stats.pulls == [0, 1, 0] and stats.successes == [0, 0, 0]

    buffered = ArmStats(2, GeometricDelay(1.0), window=2)
    for _ in range(3):
        buffered.record_pull(0)
    assert buffered.old_counts[0] == 1 and buffered.in_buffer[0] == 2 and buffered.pulls[0] == 3

    stats.record_pull(1)
    stats.record_disclosure(1)
    stats.record_disclosure(1)
    assert stats.successes[1] == 2 <= stats.pulls[1]


def test_reference_counts():
    g = GeometricDelay(1.0)
    assert effective_count_uncensored([], 10, g) == 0
    assert effective_count_uncensored([9], 10, g) == pytest.approx(0.5)
    assert effective_count_uncensored([9, 8], 10, g) == pytest.approx(1.25)
    assert effective_count_censored([1, 2, 3], 50, g, 3) == pytest.approx(3 * g.cdf(3))
    assert effective_count_censored([9], 10, g, 3) == pytest.approx(0.5)
    assert effective_count_censored([], 10, g, 3) == 0
    with pytest.raises(ValueError):
        effective_count_uncensored([10], 10, g)


def test_geometric_update_examples():
    assert geometric_update(0.0, 1, 0.5) == 0.5
    assert geometric_update(0.8, 0, 0.5) == 0.4
    rng = np.random.default_rng(0)
    pulled = rng.integers(0, 2, 1000)
    o = 0.0
    for x in pulled:
        o = geometric_update(o, x, 0.9)
    g = GeometricDelay(9.0)  # decay 0.9
    times = (np.flatnonzero(pulled) + 1).tolist()
    assert pulled.sum() - o == pytest.approx(effective_count_uncensored(times, 1001, g), abs=1e-9)


def test_rate_estimate():
    assert conversion_rate_estimate(0, 5) == 0
    assert conversion_rate_estimate(3, 10) == pytest.approx(0.3)
    assert conversion_rate_estimate(2, 1.5) == pytest.approx(4 / 3)
    assert conversion_rate_estimate(1, 0.0) is None


def _check_against_reference(stats, delays, actions, window):
    n_arms = stats.n_arms
    for t, arm in enumerate(actions, start=2):
        stats.record_pull(arm)
        got = stats.effective_counts()
        for k in range(n_arms):
            times = [s + 1 for s in range(t - 1) if actions[s] == k]
            if window is None:
                want = effective_count_uncensored(times, t, delays)
            else:
                want = effective_count_censored(times, t, delays, window)
            assert got[k] == pytest.approx(want, abs=1e-9)
            assert -1e-12 <= got[k] <= stats.pulls[k] + 1e-12
        if window is not None:
            assert all(o + b == n for o, b, n in zip(stats.old_counts, stats.in_buffer, stats.pulls))


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.floats(0.5, 50.0), st.integers(1, 30), st.integers(0, 2**32))
def test_paths_match_reference(n_arms, mean, window, seed):
    rng = np.random.default_rng(seed)
    actions = rng.integers(0, n_arms, 80).tolist()
    g = GeometricDelay(mean)
    _check_against_reference(ArmStats(n_arms, g), g, actions, None)
    _check_against_reference(ArmStats(n_arms, g, window), g, actions, window)
    _check_against_reference(ArmStats(n_arms, g, window, scan=True), g, actions, window)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=8), st.integers(0, 2**32))
def test_tabulated_scan_matches_reference(raw, seed):
    table = TabulatedDelay(np.maximum.accumulate(raw))
    window = max(1, table.table.size - 1)
    actions = np.random.default_rng(seed).integers(0, 3, 40).tolist()
    _check_against_reference(ArmStats(3, table, window), table, actions, window)
    # uncensored tabulated delays are flat past the table, so the same window is exact
    for t in (5, 20, 41):
        times = [s + 1 for s in range(t - 1) if actions[s] == 0]
        assert effective_count_uncensored(times, t, table) == pytest.approx(
            effective_count_censored(times, t, table, window), abs=1e-12
        )


def test_effective_count_nondecreasing_without_pulls():
    g = GeometricDelay(5.0)
    stats = ArmStats(2, g, window=10)
    for arm in [0, 0, 1, 0]:
        stats.record_pull(arm)
    prev = stats.effective_counts()[1]
    for _ in range(20):
        stats.record_pull(0)
        cur = stats.effective_counts()[1]
        assert cur >= prev - 1e-15
        prev = cur


def test_resolved_successes_track_old_pulls():
    stats = ArmStats(2, GeometricDelay(2.0), window=3)
    stats.record_pull(0)  # round 1
    stats.record_disclosure(0, pull_time=1)
    for _ in range(3):
        stats.record_pull(1)  # rounds 2..4
    assert stats.old_counts == [1, 0]
    assert stats.resolved_successes == [1, 0]
    stats.record_disclosure(1, pull_time=2)
    assert stats.resolved_successes == [1, 0]
    stats.record_pull(1)  # round 5 evicts the round-2 pull
    assert stats.resolved_successes == [1, 1]


def test_custom_weights():
    stats = ArmStats(2, None, window=3, scan=True)
    for arm in [0, 1, 0, 0, 1]:
        stats.record_pull(arm)
    w = [0.1, 0.2, 0.4, 1.0]
    # arm 0 pulled at rounds 1, 3, 4 with elapsed 4, 2, 1 at decision round 6
    assert stats.effective_counts(w)[0] == pytest.approx(1.0 + 0.4 + 0.2)
    with pytest.raises(ValueError):
        stats.effective_counts()

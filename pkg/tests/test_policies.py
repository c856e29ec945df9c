from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delayed_bandits.delays import GeometricDelay, TabulatedDelay
from delayed_bandits.environment import BanditInstance, FeedbackBatch, regret_trace
from delayed_bandits.policies import (
    AgnosticDelayedKLUCB,
    DelayedIndexPolicy,
    DelayHistogram,
    DiscardingPolicy,
    MeanDelayEstimate,
    PolicyConfig,
    UniformPolicy,
    _argmax_klucb,
    discarding_indices,
    exploration_budget,
    klucb_index,
    make_policy,
    ucb_index,
)

INSTANCE = BanditInstance((0.1, 0.05, 0.03), GeometricDelay(20), 400, 40)


def test_ucb_examples():
    assert ucb_index(0.3, 50, 50, 2.0) == pytest.approx(0.3 + math.sqrt(2.0 / 100))
    assert ucb_index(0.3, 50, 20, 0.0) == 0.3
    assert ucb_index(0.2, 100, 80, 4.6) == pytest.approx(0.3896, abs=1e-4)


def test_klucb_examples():
    assert klucb_index(1.2, 10, 3) == 1.0
    assert klucb_index(0.0, 100, 4.6) == pytest.approx(0.046)
    assert klucb_index(0.3, 10, 0.0) == 0.3


def test_discarding_examples():
    assert discarding_indices(0, 0, 0.5, 2.0) is None
    ucb, kl = discarding_indices(0, 10, 0.5, 2.0)
    assert ucb == pytest.approx(0.4472, abs=1e-4)
    assert kl == pytest.approx(2.0 / (0.5 * 10))
    ucb, kl = discarding_indices(3, 10, 0.5, 0.0)
    assert ucb == kl == pytest.approx(0.6)


@given(st.floats(0, 1), st.floats(1, 1e3), st.floats(1, 1e3), st.floats(0, 20), st.floats(0, 5))
def test_index_monotonicity(theta_hat, pulls, n_eff, beta, extra):
    n_eff = min(n_eff, pulls)
    s = theta_hat * n_eff
    assert ucb_index(theta_hat, pulls, n_eff, beta + extra) >= ucb_index(theta_hat, pulls, n_eff, beta)
    assert klucb_index(theta_hat, n_eff, beta + extra) >= klucb_index(theta_hat, n_eff, beta)
    # more effective pulls at fixed S and N can only shrink the indices
    bigger = min(pulls, n_eff * 1.5)
    assert ucb_index(s / bigger, pulls, bigger, beta) <= ucb_index(theta_hat, pulls, n_eff, beta) + 1e-12
    assert klucb_index(s / bigger, bigger, beta) <= klucb_index(theta_hat, n_eff, beta) + 1e-12
    assert ucb_index(theta_hat, pulls, n_eff, beta) >= theta_hat
    assert klucb_index(theta_hat, n_eff, beta) >= theta_hat


@settings(max_examples=200)
@given(
    st.lists(st.tuples(st.integers(0, 50), st.floats(1, 200)), min_size=2, max_size=5),
    st.floats(0.05, 1.0),
    st.floats(1.0, 10.0),
)
def test_klucb_argmax_invariant_under_common_scaling(arms, tau, beta):
    # dividing every effective count by tau (counts S unchanged) scales every
    # estimate and, by the Poisson scaling identity, every uncapped index by tau
    successes = [min(s, n) for s, n in arms]
    n_eff = [n for _, n in arms]
    indices = [klucb_index(s / n, n, beta) for s, n in zip(successes, n_eff)]
    ranked = sorted(indices, reverse=True)
    if ranked[0] >= 1.0 or ranked[0] - ranked[1] < 1e-6:
        return
    for s, n, u in zip(successes, n_eff, indices):
        assert klucb_index(s / (n / tau), n / tau, beta) == pytest.approx(tau * u, abs=1e-9)
    scaled = _argmax_klucb(successes, [n / tau for n in n_eff], beta)
    assert scaled == _argmax_klucb(successes, n_eff, beta) == indices.index(ranked[0])


@settings(max_examples=60)
@given(st.lists(st.tuples(st.integers(0, 30), st.floats(0.5, 100)), min_size=2, max_size=6), st.floats(0, 15))
def test_pruned_argmax_matches_exhaustive(arms, beta):
    successes = [s for s, _ in arms]
    n_eff = [n for _, n in arms]
    indices = [klucb_index(s / n, n, beta) for s, n in zip(successes, n_eff)]
    assert _argmax_klucb(successes, n_eff, beta) == indices.index(max(indices))


def test_forced_initialization_and_ties():
    policy = DelayedIndexPolicy(3, TabulatedDelay.point_mass(0), index="ucb")
    for t in (1, 2, 3):
        assert policy.select(t) == t - 1
        policy.update(t, t - 1, FeedbackBatch(t))
    # identical statistics: lowest index wins
    assert policy.select(4) == 0


def test_undefined_estimate_wins():
    policy = DelayedIndexPolicy(2, TabulatedDelay([0.0, 0.0, 0.0, 1.0]), index="klucb")
    policy.update(1, 0, FeedbackBatch(1))
    policy.update(2, 1, FeedbackBatch(2))
    policy.update(3, 0, FeedbackBatch(3))
    policy.update(4, 0, FeedbackBatch(4, ((1, 0),)))
    # arm 1 was pulled at round 2; deciding round 5 its weight is cdf(2) = 0
    assert policy.stats.effective_counts()[1] == 0.0
    assert policy.select(5) == 1


def test_discarding_warmup_is_round_robin():
    inst = INSTANCE.with_censoring(40)
    for variant in ("discarding_ucb", "discarding_klucb"):
        pc = PolicyConfig(variant, "censored")
        trace = regret_trace(inst, make_policy(pc, inst), seed=2)
        rr = regret_trace(inst, UniformPolicy(3), seed=2)
        assert np.array_equal(trace.actions[:40], rr.actions[:40])


def test_delayed_count_dominates_discarding_count():
    g = GeometricDelay(20)
    m = 40
    delayed = DelayedIndexPolicy(3, g, window=m)
    discarding = DiscardingPolicy(3, g, m)
    actions = np.random.default_rng(0).integers(0, 3, 300)
    tau_m = g.cdf(m)
    for t, arm in enumerate(actions.tolist(), start=1):
        delayed.update(t, arm, FeedbackBatch(t))
        discarding.update(t, arm, FeedbackBatch(t))
        if t >= m:
            n_eff = delayed.stats.effective_counts()
            for k in range(3):
                assert n_eff[k] >= tau_m * discarding.stats.old_counts[k] - 1e-12


def test_mean_delay_estimate():
    est = MeanDelayEstimate(gamma=1.0)
    assert est.mean == 1.0
    est.observe(10)
    assert est.mean == 10
    est = MeanDelayEstimate(gamma=0.7)
    path = []
    for _ in range(50):
        est.observe(4.0)
        path.append(abs(est.mean - 4.0))
    assert all(b <= a for a, b in zip(path, path[1:]))
    with pytest.raises(ValueError):
        MeanDelayEstimate(gamma=0.3)


def test_mean_delay_estimate_consistency():
    finals = []
    for seed in range(100):
        est = MeanDelayEstimate(0.7)
        for d in GeometricDelay(50).sample(np.random.default_rng(seed), 100_000).tolist():
            est.observe(d)
        finals.append(est.mean)
    finals = np.array(finals)
    se = finals.std(ddof=1) / math.sqrt(finals.size)
    assert abs(finals.mean() - 50.0) < 3 * max(se, finals.std(ddof=1))


def test_delay_histogram():
    h = DelayHistogram(3)
    assert h.weights() is None
    h.observe(0)
    assert h.weights().tolist() == [1, 1, 1, 1]
    h = DelayHistogram(3)
    h.observe(0)
    h.observe(2)
    assert h.cumulative.tolist() == [1, 1, 2, 2]
    assert h.weights().tolist() == [0.5, 0.5, 1.0, 1.0]
    assert h.cumulative[-1] == h.total
    with pytest.raises(ValueError):
        h.observe(4)


def test_agnostic_censored_round_robin_without_observations():
    policy = AgnosticDelayedKLUCB(3, window=10)
    for t in range(1, 9):
        assert policy.select(t) == (t - 1) % 3
        policy.update(t, (t - 1) % 3, FeedbackBatch(t))


def test_policy_config_validation():
    with pytest.raises(ValueError):
        PolicyConfig("thompson")
    with pytest.raises(ValueError):
        PolicyConfig("delayed_ucb", epsilon=0.0)
    with pytest.raises(ValueError):
        PolicyConfig("agnostic_delayed_klucb", gamma=0.2)
    with pytest.raises(ValueError):
        PolicyConfig("discarding_ucb", "uncensored")
    with pytest.raises(ValueError, match="tie_break"):
        PolicyConfig.from_dict({"policy": "uniform", "tie_break": "random"})
    pc = PolicyConfig.from_dict({"policy": "delayed_klucb", "setting": "censored", "m": 30})
    assert pc.window == 30 and pc.name == "d-klucb"
    assert PolicyConfig("delayed_ucb").name == "ud-ucb"


def test_exploration_budget():
    assert exploration_budget(1, 0.1) == 0.0
    assert exploration_budget(100, 0.5) == pytest.approx(1.5 * math.log(100))


@pytest.mark.parametrize(
    "variant,setting",
    [
        ("delayed_ucb", "censored"),
        ("delayed_klucb", "uncensored"),
        ("discarding_klucb", "censored"),
        ("agnostic_delayed_klucb", "censored"),
        ("agnostic_delayed_klucb", "uncensored"),
        ("uniform", "uncensored"),
    ],
)
def test_every_variant_runs_deterministically(variant, setting):
    pc = PolicyConfig(variant, setting)
    inst = pc.environment_for(INSTANCE)
    a = regret_trace(inst, make_policy(pc, INSTANCE), seed=11)
    b = regret_trace(inst, make_policy(pc, INSTANCE), seed=11)
    assert np.array_equal(a.actions, b.actions)
    assert np.all(np.diff(a.pseudo_regret) >= -1e-12)


def test_uncensored_tabulated_policy_runs():
    inst = BanditInstance((0.6, 0.2), TabulatedDelay([0.1, 0.5, 0.9, 1.0]), 300)
    trace = regret_trace(inst, make_policy(PolicyConfig("delayed_klucb"), inst), seed=0)
    assert trace.pseudo_regret[-1] < regret_trace(inst, UniformPolicy(2), seed=0).pseudo_regret[-1]

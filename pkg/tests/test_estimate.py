import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctmpfit.bounds import all_configurations
from ctmpfit.dynamics import Model, ModelParams, feature_row, signature, ContactSignature
from ctmpfit.estimate import (ClassStats, DeltaUnrecoverable, EstimationError, UnderdeterminedError,
                              accumulate_stats, build_system, class_rate_mle, class_rate_umvue,
                              estimate_theta, pairwise_rate_mle, recover_delta_reversible, solve_wls)
from ctmpfit.graph import generate_er, generate_path, generate_star
from ctmpfit.simulate import Trajectory, random_initial, simulate


@pytest.fixture
def alternating():
    return Trajectory("contact", [0], times=[1.0, 3.0], nodes=[0, 0], states=[1, 0], t_end=4.0)


def replay_oracle(tr, g, model):
    """Plain Python pass over sojourns keyed by signature."""
    out = {}
    configs = list(tr.configurations())
    for k, (t0, t1, x) in enumerate(configs):
        if t1 - t0 <= 0:
            continue
        sig = signature(g, x, model)
        n, r = out.get(sig, (0, 0.0))
        out[sig] = (n + (k < len(configs) - 1), r + (t1 - t0))
    return out


def test_no_events_single_class(single):
    tr = Trajectory("contact", [1], [], [], [], t_end=5.0)
    stats = accumulate_stats(tr, single)
    assert len(stats) == 1
    assert stats.n_out.tolist() == [0] and stats.r_time.tolist() == [5.0]
    with pytest.raises(EstimationError):
        build_system(stats)


def test_alternating_by_hand(alternating, single):
    d = accumulate_stats(alternating, single).as_dict()
    assert d == {ContactSignature(0, 0): (1, 2.0), ContactSignature(1, 0): (1, 2.0)}


@pytest.mark.parametrize("model", list(Model))
def test_replay_matches_oracle_and_partitions_window(model):
    g = generate_er(9, 0.4, seed=3)
    x0 = random_initial(g.n, np.random.default_rng(0))
    tr = simulate(g, ModelParams(model, 1.0, 0.7, 1.3), x0, max_events=3000, seed=5)
    stats = accumulate_stats(tr, g)
    ref = replay_oracle(tr, g, model)
    got = stats.as_dict()
    assert got.keys() == ref.keys()
    for sig, (n, r) in ref.items():
        assert got[sig][0] == n
        assert got[sig][1] == pytest.approx(r, rel=1e-12)
    assert stats.r_time.sum() == pytest.approx(tr.t_end, rel=1e-9)
    assert np.all(stats.r_time > 0) and np.all(stats.n_out >= 0)


def test_class_rates_examples():
    assert class_rate_mle(4, 2.0) == 2.0 and class_rate_umvue(4, 2.0) == 1.5
    assert class_rate_mle(1, 0.5) == 2.0 and class_rate_umvue(1, 0.5) == 0.0
    with pytest.raises(EstimationError):
        class_rate_umvue(0, 1.0)


def test_umvue_unbiased_monte_carlo():
    rng = np.random.default_rng(2024)
    R = rng.exponential(1 / 3.0, size=(10_000, 5)).sum(axis=1)
    est = np.array([class_rate_umvue(5, r) for r in R])
    se = est.std(ddof=1) / math.sqrt(est.size)
    assert abs(est.mean() - 3.0) < 3 * se


def test_pairwise_examples(alternating, single):
    assert pairwise_rate_mle(alternating, single, [0], [1]) == 0.5
    # state 1 -> itself never happens
    assert pairwise_rate_mle(alternating, single, [1], [1]) == 0.0
    with pytest.raises(EstimationError):
        pairwise_rate_mle(Trajectory("contact", [0], [], [], [], 1.0), single, [1], [0])


def test_pairwise_no_departure_is_zero(single):
    tr = Trajectory("contact", [0], [2.0], [0], [1], t_end=5.0)
    assert pairwise_rate_mle(tr, single, [1], [0]) == 0.0


@pytest.mark.parametrize("by", ["state", "class"])
def test_row_sum_identity(by, path3):
    tr = simulate(path3, ModelParams("contact", 1.0, 0.5, 1.0), [1, 0, 0], max_events=400, seed=9)
    stats = accumulate_stats(tr, path3)
    if by == "class":
        sigs = stats.signatures()
        for sig, q in zip(sigs, stats.q_hat()):
            total = sum(pairwise_rate_mle(tr, path3, sig, j, by="class") for j in sigs)
            assert total == pytest.approx(q, rel=1e-12)
    else:
        configs = list(tr.configurations())
        for x in all_configurations(3):
            occ = sum(t1 - t0 for t0, t1, z in configs if np.array_equal(z, x))
            if occ == 0:
                continue
            jumps = sum(np.array_equal(a[2], x) for a in configs[:-1])
            total = sum(pairwise_rate_mle(tr, path3, x, y) for y in all_configurations(3))
            assert total == pytest.approx(jumps / occ, rel=1e-12)


def test_build_system_single_class_row():
    stats = ClassStats(Model.CONTACT, n=1, dmax=0, rows=np.array([[0, 1, 0]]),
                       n_out=np.array([4]), r_time=np.array([2.0]), t_end=2.0)
    sys = build_system(stats)
    assert sys.coef.tolist() == [[0, 1, 0]] and sys.rates.tolist() == [2.0]
    assert feature_row(ContactSignature(1, 0), 1, 0).tolist() == [0, 1, 0]


def test_build_system_from_replay(single):
    tr = Trajectory("contact", [1], [0.25, 0.5], [0, 0], [0, 1], t_end=1.0)
    sys = build_system(accumulate_stats(tr, single))
    rows = {tuple(r): q for r, q in zip(sys.coef.tolist(), sys.rates)}
    # susceptible for 0.25 with one departure; infected for 0.25 + 0.5 with one departure
    assert rows == {(0, 1, 0): pytest.approx(4.0), (1, 0, 0): pytest.approx(4 / 3)}


def test_build_system_drops_silent_class_and_weights():
    stats = ClassStats(Model.CONTACT, n=2, dmax=1,
                       rows=np.array([[2, 0, 0], [1, 1, 1], [0, 2, 0]]),
                       n_out=np.array([8, 2, 0]), r_time=np.array([4.0, 1.0, 3.0]), t_end=8.0)
    sys = build_system(stats)
    assert sys.num_rows == 2 and sys.dropped == 1
    np.testing.assert_allclose(sys.rates, [2.0, 2.0])
    assert sys.weights[0] / sys.weights[1] == pytest.approx(4.0)
    assert np.all(sys.weights > 0)


def test_umvue_single_departure_gets_mle_variance():
    stats = ClassStats(Model.CONTACT, n=1, dmax=0, rows=np.array([[1, 0, 0], [0, 1, 0]]),
                       n_out=np.array([1, 3]), r_time=np.array([0.5, 1.0]), t_end=1.5)
    sys = build_system(stats, "umvue")
    np.testing.assert_allclose(sys.rates, [0.0, 2.0])
    np.testing.assert_allclose(1 / sys.weights, [4.0, 4.0 / 3])


def test_recover_delta_examples():
    assert recover_delta_reversible([1, 1, 2, 4])[2] == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(DeltaUnrecoverable):
        recover_delta_reversible([1, 1, 0, 0])


def test_recover_delta_noisy():
    rng = np.random.default_rng(8)
    for _ in range(50):
        delta = rng.uniform(0.5, 3)
        coef = 1.3 * delta ** np.arange(6) * (1 + 0.01 * rng.uniform(-1, 1, 6))
        assert recover_delta_reversible(np.concatenate([[1.0], coef]))[2] == pytest.approx(delta, rel=0.05)


def test_single_node_contact_recovers_mu_beta(single):
    tr = simulate(single, ModelParams("contact", 1.0, 2.0, 0.5), [0], max_events=100_000, seed=1)
    est = estimate_theta(tr, single)
    assert est.mu_hat == pytest.approx(1.0, rel=0.05)
    assert est.beta_hat == pytest.approx(2.0, rel=0.05)
    assert math.isnan(est.delta_hat)


def test_path3_contact_consistency(path3):
    p = ModelParams("contact", 1.2, 0.6, 0.9)
    tr = simulate(path3, p, [1, 0, 1], max_events=1_000_000, seed=4)
    for method in ("wls", "nnls", "lad"):
        est = estimate_theta(tr, path3, method=method)
        np.testing.assert_allclose(est.recovered(), (1.2, 0.6, 0.9), rtol=0.05)


def test_one_class_underdetermined():
    # the window closes at the only jump, so a single sojourn is observed
    g = generate_path(2)
    tr = Trajectory("contact", [0, 0], [1.0], [0], [1], t_end=1.0)
    with pytest.raises(UnderdeterminedError) as info:
        estimate_theta(tr, g)
    assert set(info.value.columns) <= {"mu", "beta", "delta"} and info.value.columns


@settings(max_examples=20, deadline=None)
@given(c=st.floats(0.01, 100.0), seed=st.integers(0, 2**32 - 1))
def test_scale_equivariance(c, seed):
    path3 = generate_path(3)
    tr = simulate(path3, ModelParams("contact", 1.0, 0.8, 1.5), [1, 1, 0], max_events=2000, seed=seed)
    base = accumulate_stats(tr, path3)
    sc = accumulate_stats(tr.scaled(c), path3)
    np.testing.assert_allclose(sc.q_hat(), base.q_hat() / c, rtol=1e-9)
    try:
        th = solve_wls(build_system(base)).theta
    except UnderdeterminedError:
        return
    np.testing.assert_allclose(solve_wls(build_system(sc)).theta, th / c, rtol=1e-8)


def test_reversible_star_estimate():
    g = generate_star(5)
    tr = simulate(g, ModelParams("reversible", 1.0, 1.0, 2.0), [0] * 5, max_events=300_000, seed=2)
    est = estimate_theta(tr, g)
    assert est.mu_hat == pytest.approx(1.0, rel=0.1)
    assert est.delta_hat == pytest.approx(2.0, rel=0.15)


@pytest.mark.slow
def test_consistency_medians_decrease(path3):
    lengths = [1_000, 10_000, 100_000, 1_000_000]
    rng = np.random.default_rng(77)
    errs = np.zeros((20, len(lengths), 3))
    for s in range(20):
        theta = rng.uniform(0.5, 3, 3)
        tr = simulate(path3, ModelParams("contact", *theta), random_initial(3, rng) | np.array([1, 0, 0], np.uint8),
                      max_events=lengths[-1], seed=s)
        for k, length in enumerate(lengths):
            try:
                est = estimate_theta(tr.prefix(length), path3)
                errs[s, k] = np.abs(np.array(est.recovered()) - theta) / theta
            except UnderdeterminedError:
                errs[s, k] = np.inf
    med = np.median(errs, axis=0)
    assert np.all(np.diff(med, axis=0) < 0), med

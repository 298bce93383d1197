import math

import numpy as np
import pytest

from poissongittins.gittins import GittinsEvaluator
from poissongittins.levy import LevyModel, RewardSpec
from poissongittins.mc_oracle import (
    FirstBelow,
    FirstBelowOrCount,
    FixedCount,
    LumpReward,
    McEstimate,
    Never,
    PathSkeleton,
    estimate_fixed_rule_value,
    estimate_gittins_ratio,
    estimate_perpetuity,
    sample_rule_sums,
    simulate_skeleton,
)

Q, LAM = 1.0, 3.0
N = 40_000


def test_skeleton_structure(bm0):
    sk = simulate_skeleton(bm0, LAM, 0.5, FixedCount(5), seed=1, path_id=4)
    assert len(sk.states) == 6 and len(sk.epoch_times) == 6
    assert sk.states[0] == 0.5 and sk.epoch_times[0] == 0.0
    assert np.all(np.diff(sk.epoch_times) > 0)
    assert sk.rng_stream_id == 4
    again = simulate_skeleton(bm0, LAM, 0.5, FixedCount(5), seed=1, path_id=4)
    np.testing.assert_array_equal(sk.states, again.states)


def test_skeleton_discount_floor(bm0):
    sk = simulate_skeleton(bm0, LAM, 0.0, Never(), seed=0, path_id=0, q=Q)
    assert math.exp(-Q * sk.epoch_times[-1]) < 1e-10 <= math.exp(-Q * sk.epoch_times[-2])


def test_skeleton_rejects_bad_times():
    with pytest.raises(ValueError):
        PathSkeleton(np.array([0.0, 0.0]), np.array([1.0, 2.0]), 0)


def test_first_epoch_moments(bm0):
    sk = [simulate_skeleton(bm0, LAM, 0.0, FixedCount(1), seed=5, path_id=i) for i in range(20_000)]
    x1 = np.array([s.states[1] for s in sk])
    d1 = np.exp(-Q * np.array([s.epoch_times[1] for s in sk]))
    se = x1.std(ddof=1) / math.sqrt(len(x1))
    assert abs(x1.mean()) < 3 * se
    assert abs(d1.mean() - LAM / (LAM + Q)) < 3 * d1.std(ddof=1) / math.sqrt(len(d1))


@pytest.mark.parametrize("q, lam", [(1.0, 3.0), (0.5, 1.0), (2.0, 10.0), (1.0, 1e-3), (0.3, 0.3)])
def test_perpetuity(cl, q, lam):
    est = estimate_perpetuity(cl, lam, q, 20_000, seed=3)
    assert est.within((lam + q) / q)
    assert est.mean >= 1.0


def test_ratio_estimator_brownian(bm0, linear):
    est = estimate_gittins_ratio(bm0, linear, Q, LAM, 0.0, N, seed=11)
    assert est.within(0.5)
    assert est.n_paths == N


def test_ratio_near_constant(cl):
    # the noise scales with the slope, so compare with the exact index of 1 + eps*x, not with 1
    r = RewardSpec.affine(1.0, 1e-6)
    est = estimate_gittins_ratio(cl, r, Q, LAM, 0.0, 5000, seed=2)
    assert est.within(GittinsEvaluator(cl, r, Q, LAM, 1)(0.0))
    assert est.mean == pytest.approx(1.0, abs=1e-5)


def test_denominator_bounds(cl, linear):
    s = sample_rule_sums(cl, linear, Q, LAM, 0.0, FirstBelow(0.0), 5000, seed=4)
    assert np.all(s.den >= 1.0)
    d = s.denominator()
    assert 1.0 <= d.mean <= (LAM + Q) / Q


def test_value_is_affine_in_gamma_on_a_common_sample(bm0, linear):
    s = sample_rule_sums(bm0, linear, Q, LAM, 0.0, FixedCount(3), 2000, seed=9)
    v1, v2 = s.value(0.2), s.value(1.1)
    assert v1.mean - v2.mean == pytest.approx(0.9 * np.mean(s.den), rel=1e-12)


def test_root_property_and_supremum(bm0, linear):
    x = 0.0
    gamma = GittinsEvaluator(bm0, linear, Q, LAM, 1)(x)
    at_root = estimate_fixed_rule_value(bm0, linear, Q, LAM, x, gamma, FirstBelow(x), N, seed=21)
    assert at_root.within(0.0)
    for rule in (FixedCount(1), FixedCount(4), FirstBelow(0.5), FirstBelow(-0.5), FirstBelowOrCount(x, 3)):
        r = estimate_gittins_ratio_for(bm0, linear, x, rule)
        assert r.mean <= gamma + 3 * r.std_error


def estimate_gittins_ratio_for(model, reward, x, rule):
    return sample_rule_sums(model, reward, Q, LAM, x, rule, 20_000, seed=22).ratio()


def test_sup_over_rules_is_convex_and_decreasing_in_gamma(cl, linear):
    rules = [FixedCount(1), FixedCount(3), FirstBelow(0.0), FirstBelowOrCount(0.0, 2)]
    samples = [sample_rule_sums(cl, linear, Q, LAM, 0.0, r, 3000, seed=5) for r in rules]
    gammas = np.linspace(-1, 3, 21)
    sup = np.array([max(s.value(g).mean for s in samples) for g in gammas])
    assert np.all(np.diff(sup) < 0)
    assert np.all(np.diff(sup, 2) >= -1e-12)


def test_independent_of_worker_count(cl, linear):
    a = sample_rule_sums(cl, linear, Q, LAM, 0.0, FirstBelow(0.0), 3000, seed=8, workers=1)
    b = sample_rule_sums(cl, linear, Q, LAM, 0.0, FirstBelow(0.0), 3000, seed=8, workers=3)
    np.testing.assert_array_equal(a.num, b.num)
    np.testing.assert_array_equal(a.den, b.den)


def test_batched_paths_equal_single_skeletons(cl, linear):
    s = sample_rule_sums(cl, linear, Q, LAM, 0.2, FixedCount(4), 10, seed=6)
    for i in range(10):
        sk = simulate_skeleton(cl, LAM, 0.2, FixedCount(4), seed=6, path_id=i)
        disc = np.exp(-Q * sk.epoch_times[:-1])
        assert s.num[i] == pytest.approx(np.sum(disc * sk.states[:-1]), rel=1e-12)


def test_p2_lump_reward_closure(cl):
    r = RewardSpec.logistic(0.0, 1.0, 0.0, 1.0)
    ev = GittinsEvaluator(cl, r, Q, LAM, 2)
    est = estimate_gittins_ratio(cl, LumpReward(cl, r, Q, LAM, 2), Q, LAM, 0.0, 20_000, seed=13)
    assert est.within(ev(0.0))


def test_within_uses_truncation_bound():
    e = McEstimate(1.0, 0.1, 10, 0.5)
    assert e.within(1.75) and not e.within(1.9)

"""End-to-end acceptance checks with explicit tolerances and wall-clock budgets.

Each test prints one ``PASS``/``FAIL`` line (visible with ``-s`` or in the
captured output of a failing run) and then asserts both the numerical
tolerance and the runtime budget.
"""

import math
import time

import numpy as np
import pytest

from poissongittins.bandit_sim import ArmSpec, EpisodeConfig, compare_policies
from poissongittins.gittins import GittinsEvaluator, Problem, convergence_sweep, default_theta_grid
from poissongittins.levy import LevyModel, RewardSpec
from poissongittins.mc_oracle import (
    FirstBelow,
    FirstBelowOrCount,
    FixedCount,
    LumpReward,
    estimate_gittins_ratio,
    estimate_perpetuity,
    sample_rule_sums,
)
from poissongittins.scale import ScaleEvaluator
from poissongittins.verify import reference_models, scale_transform_error

SQRT2 = math.sqrt(2.0)
XS = np.linspace(-2.0, 2.0, 5)


@pytest.fixture
def report(capsys):
    start = time.perf_counter()

    def _report(number, what, ok, budget):
        elapsed = time.perf_counter() - start
        status = "PASS" if ok and elapsed < budget else "FAIL"
        with capsys.disabled():
            print(f"\n{status} criterion {number}: {what} ({elapsed:.2f}s of {budget:g}s)")
        assert ok, what
        assert elapsed < budget, f"runtime {elapsed:.1f}s over the {budget:g}s budget"

    return _report


def test_criterion_01_unit_reward(report):
    unit = RewardSpec.near_constant(1.0)
    worst = 0.0
    for side in ("sn", "sp"):
        model = LevyModel.brownian(0.3, 1.0, side)
        g1 = GittinsEvaluator(model, unit, 1.0, 3.0, Problem.P1).gittins_index(XS)
        g2 = GittinsEvaluator(model, unit, 1.0, 3.0, Problem.P2).gittins_index(XS)
        worst = max(worst, np.max(np.abs(g1 - 1.0)), np.max(np.abs(4.0 * g2 - 1.0)))
    report(1, f"unit reward gives index 1 (P2: (q+lambda)*index 1), max error {worst:.2e} < 1e-8", worst < 1e-8, 1.0)


def test_criterion_02_scale_transform(report):
    worst = 0.0
    for model in reference_models().values():
        for q in (0.5, 1.0, 5.0):
            phi = ScaleEvaluator(model, q).phi_q
            for dt in (0.5, 2.0, 5.0):
                worst = max(worst, scale_transform_error(model, q, phi + dt))
    report(2, f"Laplace transform of W vs 1/(psi-q), max rel error {worst:.2e} < 1e-6", worst < 1e-6, 5.0)


def _measure_combos():
    models = [
        LevyModel.brownian(0.0, SQRT2),
        LevyModel.cramer_lundberg(2.0, 1.0, 1.0),
        LevyModel.brownian_exp_jumps(1.0, 1.0, 1.0, 2.0, "sp"),
    ]
    return [(m, q, lam) for m in models for q, lam in ((1.0, 3.0), (0.5, 0.5), (2.0, 10.0), (0.1, 50.0))]


def test_criterion_03_measure_mass(report):
    worst, count = 0.0, 0
    for model, q, lam in _measure_combos():
        for problem in Problem:
            ev = GittinsEvaluator(model, RewardSpec.affine(0, 1), q, lam, problem)
            worst = max(worst, abs(ev.index_measure.total_mass() - 1.0))
            count += 1
    report(3, f"total mass of {count} measures, max |mass-1| {worst:.2e} < 1e-8", worst < 1e-8, 10.0)


def test_criterion_04_transform_closed_forms(report):
    worst = 0.0
    for model in (LevyModel.brownian(0.0, SQRT2), LevyModel.cramer_lundberg(2.0, 1.0, 1.0)):
        for side in ("sn", "sp"):
            m = model.with_orientation(side)
            for problem in Problem:
                ev = GittinsEvaluator(m, RewardSpec.affine(0, 1), 1.0, 3.0, problem)
                thetas = list(default_theta_grid(problem))
                if problem is Problem.P1:
                    # removable singularities of the spectrally positive form
                    thetas += [ev.phi_q, ev.phi_ql]
                for t in thetas:
                    worst = max(worst, abs(ev.quadrature_transform(t) - ev.measure_transform(t)))
    report(4, f"quadrature vs closed-form transforms on 101-point grids, max error {worst:.2e} < 1e-6",
           worst < 1e-6, 30.0)


def test_criterion_05_convergence(report):
    rows = convergence_sweep(LevyModel.brownian(0.0, SQRT2), RewardSpec.affine(0, 1), 1.0,
                             [1.0, 10.0, 1e2, 1e3, 1e4], Problem.P1, np.linspace(0.0, 10.0, 101))
    d = [r.sup_distance for r in rows]
    ok = all(b < a for a, b in zip(d, d[1:])) and d[-1] <= 0.01
    report(5, f"sup-distance strictly decreasing, final {d[-1]:.4f} <= 0.01", ok, 5.0)


def test_criterion_06_duality(report):
    xs = np.linspace(-2.0, 2.0, 41)
    worst = 0.0
    for drift in (0.0, 0.7):
        for problem in Problem:
            for reward in (RewardSpec.affine(0.2, 1.0), RewardSpec.logistic(0.0, 1.0, 0.0, 1.0)):
                sn = GittinsEvaluator(LevyModel.brownian(drift, 1.0, "sn"), reward, 1.0, 3.0, problem)
                sp = GittinsEvaluator(LevyModel.brownian(-drift, 1.0, "sp"), reward, 1.0, 3.0, problem)
                worst = max(worst, np.max(np.abs(sn.gittins_index(xs) - sp.gittins_index(xs))))
    report(6, f"spectrally negative vs positive formulas on Brownian models, max gap {worst:.2e} <= 1e-6",
           worst <= 1e-6, 5.0)


def test_criterion_07_monte_carlo_closure(report):
    q, lam, n = 1.0, 3.0, 100_000
    reward = RewardSpec.affine(0.0, 1.0)
    failures, worst_z = [], 0.0
    per = estimate_perpetuity(LevyModel.brownian(0.5, 1.0), lam, q, n, seed=11)
    if not per.within((lam + q) / q):
        failures.append("perpetuity")
    models = {"bm": LevyModel.brownian(0.5, 1.0), "cl": LevyModel.cramer_lundberg(2.0, 1.0, 1.0)}
    for name, model in models.items():
        for problem in Problem:
            ev = GittinsEvaluator(model, reward, q, lam, problem)
            lump = LumpReward(model, reward, q, lam, problem)
            for x in (-1.0, 0.0, 1.0):
                est = estimate_gittins_ratio(model, lump, q, lam, x, n, seed=7)
                worst_z = max(worst_z, abs(est.mean - ev(x)) / est.std_error)
                if not est.within(ev(x)):
                    failures.append(f"{name} P{int(problem)} x={x:g}")
    report(7, f"analytic index vs ratio estimator (12 cases, worst {worst_z:.2f} SE) and perpetuity within 3 SE"
           + (f"; failed {failures}" if failures else ""), not failures, 120.0)


def test_criterion_08_root_and_supremum(report):
    q, lam, x = 1.0, 3.0, 0.0
    reward = RewardSpec.affine(0.0, 1.0)
    failures = []
    for name, model in (("bm", LevyModel.brownian(0.5, 1.0)), ("cl", LevyModel.cramer_lundberg(2.0, 1.0, 1.0))):
        gamma = GittinsEvaluator(model, reward, q, lam)(x)
        at_root = sample_rule_sums(model, reward, q, lam, x, FirstBelow(x), 100_000, seed=21).value(gamma)
        if not at_root.within(0.0):
            failures.append(f"{name} root value {at_root.mean:.3g}")
        rules = (FixedCount(1), FixedCount(4), FirstBelow(0.5), FirstBelow(-0.5), FirstBelowOrCount(x, 3))
        for rule in rules:
            r = sample_rule_sums(model, reward, q, lam, x, rule, 20_000, seed=22).ratio()
            if r.mean > gamma + 3 * r.std_error + r.truncation_bound:
                failures.append(f"{name} {rule}")
    report(8, "value at the analytic index within 3 SE of 0; suboptimal-rule ratios <= index + 3 SE"
           + (f"; failed {failures}" if failures else ""), not failures, 60.0)


def test_criterion_09_small_lambda_limit(report):
    xs = np.linspace(-2.0, 2.0, 41)
    worst = 0.0
    for model in reference_models().values():
        for side in ("sn", "sp"):
            for reward in (RewardSpec.affine(0.3, 2.0), RewardSpec.logistic(0.0, 1.0, 0.0, 1.0)):
                ev = GittinsEvaluator(model.with_orientation(side), reward, 1.0, 1e-6)
                worst = max(worst, np.max(np.abs(ev.gittins_index(xs) - reward(xs))))
    report(9, f"index at lambda=1e-6 vs reward, max error {worst:.2e} < 1e-5", worst < 1e-5, 1.0)


def test_criterion_10_simulator(report):
    q, lam, n = 1.0, 3.0, 10_000
    lines, ok = [], True
    affine = RewardSpec.affine(0.0, 1.0)
    distinct = [ArmSpec(LevyModel.brownian(0.5, 1.0), affine), ArmSpec(LevyModel.brownian(-0.5, 1.0), affine)]
    rep = compare_policies(EpisodeConfig(distinct, q, lam, seed=42), n, ["gittins", "random"])
    d = rep.difference("gittins", "random")
    good = rep.result("gittins").mean >= rep.result("random").mean and d.mean_difference >= 3 * d.std_error
    ok &= good
    lines.append(f"distinct drifts: gittins-random {d.mean_difference:.3f} ({d.mean_difference / d.std_error:.1f} SE)")

    bm0 = LevyModel.brownian(0.0, SQRT2)
    same = [ArmSpec(bm0, RewardSpec.near_constant(1.0))] * 3
    rep = compare_policies(EpisodeConfig(same, q, lam, seed=43), n)
    worst = max(abs(p.mean_difference) / p.std_error for p in rep.paired)
    ok &= worst <= 3.0
    lines.append(f"identical arms: worst paired gap {worst:.2f} SE")

    same = [ArmSpec(bm0, affine)] * 2
    rep = compare_policies(EpisodeConfig(same, q, lam, seed=44), n, ["roundrobin", "random"])
    d = rep.difference("roundrobin", "random")
    z = abs(d.mean_difference) / d.std_error
    ok &= z <= 3.0
    lines.append(f"identical arms roundrobin-random {z:.2f} SE")
    report(10, "; ".join(lines), ok, 120.0)

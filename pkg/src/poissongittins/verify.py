"""Identity and Monte Carlo verification suites with a JSON-ready report."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .gittins import GittinsEvaluator, Problem, default_theta_grid
from .levy import LevyModel, RewardSpec, laplace_exponent
from .mc_oracle import LumpReward, estimate_gittins_ratio, estimate_perpetuity
from .numerics import QuadratureSpec, integrate_semi_infinite
from .scale import ScaleEvaluator

__all__ = ["Suite", "Check", "Report", "run_suite", "transform_checks", "oracle_checks", "reference_models"]


class Suite(str, enum.Enum):
    TRANSFORMS = "transforms"
    ORACLE = "oracle"
    ALL = "all"


@dataclass(frozen=True)
class Check:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)


@dataclass
class Report:
    suite: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        rows = [dict(asdict(c), passed=c.passed) for c in self.checks]
        return {
            "suite": self.suite,
            "passed": self.passed,
            "n_checks": len(rows),
            "failed": [r for r in rows if not r["passed"]],
            "checks": rows,
        }


def reference_models():
    """Small fixed model set used by the suites: one per family."""
    return {
        "bm": LevyModel.brownian(0.5, 1.0),
        "cl": LevyModel.cramer_lundberg(2.0, 1.0, 1.0),
        "bm_exp": LevyModel.brownian_exp_jumps(1.0, 1.0, 1.0, 2.0),
    }


def scale_transform_error(model, q, theta) -> float:
    """Relative error of the quadrature Laplace transform of ``W`` against ``1/(psi-q)``."""
    sc = ScaleEvaluator(model, q)
    spec = QuadratureSpec(1e-11, 1e-14, 4000, theta - sc.phi_q)
    num = integrate_semi_infinite(lambda x: math.exp(-theta * x) * sc.W(x), 0.0, spec)
    exact = 1.0 / (laplace_exponent(model, theta) - q)
    return abs(num - exact) / abs(exact)


def transform_checks(thetas_per_grid: int = 101):
    checks = []
    models = reference_models()
    for name, model in models.items():
        for q in (0.5, 1.0, 5.0):
            p = ScaleEvaluator(model, q).phi_q
            for dt in (0.5, 2.0, 5.0):
                err = scale_transform_error(model, q, p + dt)
                checks.append(Check(f"W laplace {name} q={q:g} theta=Phi+{dt:g}", err, 1e-6))
    unit = RewardSpec.near_constant(1.0)
    grid_x = np.linspace(-2.0, 2.0, 5)
    for name, base in models.items():
        for side in ("sn", "sp"):
            model = base.with_orientation(side)
            for lam in (0.5, 3.0):
                for problem in Problem:
                    ev = GittinsEvaluator(model, unit, 1.0, lam, problem)
                    tag = f"{name} {side} P{int(problem)} lam={lam:g}"
                    checks.append(Check(f"mass {tag}", abs(ev.index_measure.total_mass() - 1.0), 1e-8))
                    g = np.asarray(ev.gittins_index(grid_x), dtype=float)
                    target = 1.0 if problem is Problem.P1 else 1.0 / (1.0 + lam)
                    checks.append(Check(f"unit reward {tag}", float(np.max(np.abs(g - target))), 1e-8))
                    thetas = default_theta_grid(problem)
                    if thetas_per_grid < len(thetas):
                        thetas = thetas[:: max(1, len(thetas) // thetas_per_grid)]
                    err = max(abs(ev.quadrature_transform(t) - ev.measure_transform(t)) for t in thetas)
                    checks.append(Check(f"transform {tag}", err, 1e-6))
    affine = RewardSpec.affine(0.0, 1.0)
    logistic = RewardSpec.logistic(0.0, 1.0, 0.0, 1.0)
    xs = np.linspace(-2.0, 2.0, 9)
    for drift in (0.0, 0.7):
        for problem in Problem:
            for rname, reward in (("affine", affine), ("logistic", logistic)):
                sn = GittinsEvaluator(LevyModel.brownian(drift, 1.0, "sn"), reward, 1.0, 3.0, problem)
                sp = GittinsEvaluator(LevyModel.brownian(-drift, 1.0, "sp"), reward, 1.0, 3.0, problem)
                err = float(np.max(np.abs(np.asarray(sn.gittins_index(xs)) - np.asarray(sp.gittins_index(xs)))))
                checks.append(Check(f"sn/sp duality bm drift={drift:g} P{int(problem)} {rname}", err, 1e-6))
    for name, model in models.items():
        ev = GittinsEvaluator(model, logistic, 1.0, 1e-6, Problem.P1)
        err = float(np.max(np.abs(np.asarray(ev.gittins_index(xs)) - logistic(xs))))
        checks.append(Check(f"lambda->0 limit {name}", err, 1e-5))
    return checks


def oracle_checks(n_paths: int = 100_000, seed: int = 7, workers: int = 1, k: float = 3.0):
    """Monte Carlo closure: analytic index vs ratio estimator, plus the perpetuity identity.

    The tolerance of each check is ``k`` standard errors; ``error`` is the
    absolute deviation.
    """
    checks = []
    q, lam = 1.0, 3.0
    reward = RewardSpec.affine(0.0, 1.0)
    models = {"bm": LevyModel.brownian(0.5, 1.0), "cl": LevyModel.cramer_lundberg(2.0, 1.0, 1.0)}
    est = estimate_perpetuity(models["bm"], lam, q, n_paths, seed, workers)
    checks.append(Check("perpetuity", abs(est.mean - (lam + q) / q), k * est.std_error))
    for name, model in models.items():
        for problem in Problem:
            ev = GittinsEvaluator(model, reward, q, lam, problem)
            lump = LumpReward(model, reward, q, lam, problem)
            for x in (-1.0, 0.0, 1.0):
                e = estimate_gittins_ratio(model, lump, q, lam, x, n_paths, seed, workers)
                checks.append(Check(f"mc ratio {name} P{int(problem)} x={x:g}", abs(e.mean - ev(x)), k * e.std_error))
    return checks


def run_suite(suite="all", n_paths: int = 100_000, seed: int = 7, workers: int = 1) -> Report:
    suite = Suite(suite)
    report = Report(suite.value)
    if suite in (Suite.TRANSFORMS, Suite.ALL):
        report.checks.extend(transform_checks())
    if suite in (Suite.ORACLE, Suite.ALL):
        report.checks.extend(oracle_checks(n_paths, seed, workers))
    return report

"""Monte Carlo checks of the Gittins index through exact Poisson-epoch skeletons.

Paths are simulated only at the decision epochs ``T_k``: between two epochs
the state moves by an exact Lévy increment over an Exp(λ) holding time, so
the skeleton ``(T_k, X(T_k))`` has the exact joint law.  Each path draws its
randomness from the counter-based stream ``(seed, path_id)``.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import TruncationWarning
from .gittins import Problem, reward_R_from_r
from .levy import LevyModel, RewardSpec, mean_rate
from . import streams

__all__ = [
    "PathSkeleton",
    "McEstimate",
    "FirstBelow",
    "FixedCount",
    "FirstBelowOrCount",
    "Never",
    "LumpReward",
    "simulate_skeleton",
    "sample_rule_sums",
    "RuleSample",
    "estimate_perpetuity",
    "estimate_gittins_ratio",
    "estimate_fixed_rule_value",
]

BLOCK = 32  # epochs per random block; part of the reproducibility contract
DISCOUNT_FLOOR = 1e-10
MAX_EPOCHS = 10**6


# --- stopping rules ---------------------------------------------------------
# A rule decides, for epochs m >= 1, whether to stop at T_m (epoch m is not rewarded).


@dataclass(frozen=True)
class FirstBelow:
    threshold: float

    def stops(self, states, counts):
        return states <= self.threshold


@dataclass(frozen=True)
class FixedCount:
    m: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("a stopping count must be >= 1")

    def stops(self, states, counts):
        return counts >= self.m


@dataclass(frozen=True)
class FirstBelowOrCount:
    threshold: float
    m: int

    def stops(self, states, counts):
        return (states <= self.threshold) | (counts >= self.m)


@dataclass(frozen=True)
class Never:
    def stops(self, states, counts):
        return np.zeros(np.shape(states), dtype=bool)


# --- data -------------------------------------------------------------------


@dataclass(frozen=True)
class PathSkeleton:
    epoch_times: np.ndarray
    states: np.ndarray
    rng_stream_id: int
    truncated: bool = False

    def __post_init__(self):
        if len(self.epoch_times) != len(self.states):
            raise ValueError("epoch_times and states must have equal length")
        if np.any(np.diff(self.epoch_times) <= 0):
            raise ValueError("epoch times must be strictly increasing")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int
    truncation_bound: float

    def within(self, value: float, k: float = 3.0) -> bool:
        return abs(self.mean - value) <= k * self.std_error + self.truncation_bound


class LumpReward:
    """Vectorized lump reward ``R`` with a slope bound used for truncation bounds.

    For Problem 2 the lump reward of a running reward ``r`` is its
    ``(q+λ)``-resolvent.  Non-affine running rewards are tabulated on a
    grid around the states seen so far and interpolated.
    """

    def __init__(self, model: LevyModel, reward: RewardSpec, q: float, lam: float, problem=Problem.P1):
        self.model, self.reward, self.q, self.lam = model, reward, float(q), float(lam)
        self.problem = Problem(problem)
        self._grid = None
        self._vals = None
        self.slope_bound = self._slope_bound()

    def _slope_bound(self):
        r = self.reward
        if r.is_affine:
            b = r.params[1]
        else:
            xs = r.check_grid()
            b = float(np.max(np.diff(r(xs)) / np.diff(xs)))
            if r.family.value == "logistic":
                b = 0.0  # bounded: the tail bound uses the sup norm instead
        return b / (self.q + self.lam) if self.problem is Problem.P2 else b

    def sup_norm(self):
        if self.reward.family.value == "logistic":
            lo, hi = self.reward.params[:2]
            m = max(abs(lo), abs(hi))
            return m / (self.q + self.lam) if self.problem is Problem.P2 else m
        return None

    def __call__(self, x):
        if self.problem is Problem.P1:
            return self.reward(x)
        if self.reward.is_affine:
            return reward_R_from_r(self.model, self.reward, self.q, self.lam, x)
        x = np.asarray(x, dtype=float)
        lo, hi = float(np.min(x)), float(np.max(x))
        if self._grid is None or lo < self._grid[0] or hi > self._grid[-1]:
            span = max(hi - lo, 1.0)
            a = lo - span if self._grid is None else min(lo - span, self._grid[0])
            b = hi + span if self._grid is None else max(hi + span, self._grid[-1])
            self._grid = np.linspace(a, b, 2001)
            self._vals = reward_R_from_r(self.model, self.reward, self.q, self.lam, self._grid)
        return np.interp(x, self._grid, self._vals)


def _as_lump(model, reward, q, lam):
    if isinstance(reward, LumpReward):
        return reward
    if isinstance(reward, RewardSpec):
        return LumpReward(model, reward, q, lam, Problem.P1)
    raise TypeError("reward must be a RewardSpec or LumpReward")


# --- sampling ---------------------------------------------------------------


def _increments(model: LevyModel, lam: float, u: np.ndarray):
    """Holding times and state increments from a ``(n, 4*BLOCK)`` uniform array."""
    k = u.shape[1] // 4
    dt = streams.exponential(u[:, :k], lam)
    inc = model.drift * dt
    if model.sigma > 0:
        inc = inc + model.sigma * np.sqrt(dt) * streams.normal(u[:, k : 2 * k])
    if model.eta > 0:
        counts = streams.poisson(u[:, 2 * k : 3 * k], model.eta * dt)
        inc = inc - streams.gamma_sum(u[:, 3 * k :], counts, model.rho)
    if not model.spectrally_negative:
        inc = -inc
    return dt, inc


def simulate_skeleton(
    model: LevyModel,
    lam: float,
    x0: float,
    stop_rule=Never(),
    seed: int = 0,
    path_id: int = 0,
    q: float | None = None,
    max_epochs: int = MAX_EPOCHS,
) -> PathSkeleton:
    """One skeleton ``(T_k, X(T_k))``, up to and including the stopping epoch.

    Stops at the first epoch the rule fires, when ``exp(-q T_k)`` drops
    below the discount floor, or after ``max_epochs`` epochs.
    """
    factory = streams.StreamFactory(seed)
    times, states = [0.0], [float(x0)]
    t, x, k, b = 0.0, float(x0), 0, 0
    truncated = False
    while True:
        u = factory.block(path_id, b, 4 * BLOCK)[None, :]
        dt, inc = _increments(model, lam, u)
        for d, i in zip(dt[0], inc[0]):
            t += d
            x += i
            k += 1
            times.append(t)
            states.append(x)
            if stop_rule.stops(np.array(x), np.array(k)):
                return PathSkeleton(np.array(times), np.array(states), path_id)
            if q is not None and math.exp(-q * t) < DISCOUNT_FLOOR:
                return PathSkeleton(np.array(times), np.array(states), path_id)
            if k >= max_epochs:
                warnings.warn(f"path {path_id} hit the {max_epochs}-epoch cap", TruncationWarning)
                return PathSkeleton(np.array(times), np.array(states), path_id, truncated=True)
        b += 1


@dataclass
class RuleSample:
    """Per-path discounted sums up to the stopping epoch, on one common sample.

    ``num[i] = sum_{k<M} exp(-q T_k) R(X(T_k))``, ``den[i] = sum_{k<M} exp(-q T_k)``.
    """

    num: np.ndarray
    den: np.ndarray
    tail: np.ndarray
    tail_time: np.ndarray
    capped: int

    @property
    def n(self) -> int:
        return len(self.num)

    def value(self, gamma: float) -> McEstimate:
        v = self.num - gamma * self.den
        bound = np.mean(self.tail + abs(gamma) * self.tail_time)
        return McEstimate(float(np.mean(v)), _se(v), self.n, float(bound))

    def ratio(self) -> McEstimate:
        nbar, dbar = np.mean(self.num), np.mean(self.den)
        r = nbar / dbar
        # delta method for a ratio of means
        resid = self.num - r * self.den
        se = _se(resid) / dbar
        bound = np.mean(self.tail + abs(r) * self.tail_time) / dbar
        return McEstimate(float(r), float(se), self.n, float(bound))

    def denominator(self) -> McEstimate:
        return McEstimate(float(np.mean(self.den)), _se(self.den), self.n, float(np.mean(self.tail_time)))


def _se(v):
    return float(np.std(v, ddof=1) / math.sqrt(len(v))) if len(v) > 1 else float("nan")


def _rule_sums_chunk(model, lam, q, x0, reward, rule, seed, path_ids, max_epochs):
    n = len(path_ids)
    factory = streams.StreamFactory(seed)
    num = reward(np.full(n, x0, dtype=float)).astype(float)
    den = np.ones(n)
    tail = np.zeros(n)
    tail_time = np.zeros(n)
    t = np.zeros(n)
    x = np.full(n, float(x0))
    count = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    capped = 0
    b = 0
    growth = _growth_constant(model, lam, q, reward)
    while len(active):
        u = factory.blocks(path_ids[active], b, 4 * BLOCK)
        dt, inc = _increments(model, lam, u)
        T = t[active, None] + np.cumsum(dt, axis=1)
        X = x[active, None] + np.cumsum(inc, axis=1)
        K = count[active, None] + np.arange(1, BLOCK + 1)
        disc = np.exp(-q * T)
        stop = rule.stops(X, K)
        trunc = disc < DISCOUNT_FLOOR
        cap = K >= max_epochs
        halt = stop | trunc | cap
        has = halt.any(axis=1)
        first = np.where(has, halt.argmax(axis=1), BLOCK)
        include = np.arange(BLOCK)[None, :] < first[:, None]
        R = reward(X)
        num[active] += np.sum(np.where(include, disc * R, 0.0), axis=1)
        den[active] += np.sum(np.where(include, disc, 0.0), axis=1)
        rows = np.arange(len(active))
        fi = np.minimum(first, BLOCK - 1)
        # truncated paths: bound the discarded tail from the state where summation ended
        tr = has & ~stop[rows, fi] & trunc[rows, fi]
        cp = has & ~stop[rows, fi] & ~trunc[rows, fi] & cap[rows, fi]
        if np.any(tr | cp):
            idx = rows[tr | cp]
            d = disc[idx, fi[idx]]
            tail[active[idx]] = d * growth(X[idx, fi[idx]])
            tail_time[active[idx]] = d * (lam + q) / q
        capped += int(np.sum(cp))
        done = has
        keep = ~done
        t[active[keep]] = T[keep, -1]
        x[active[keep]] = X[keep, -1]
        count[active[keep]] = K[keep, -1]
        active = active[keep]
        b += 1
    return num, den, tail, tail_time, capped


def _growth_constant(model, lam, q, reward):
    """Per-state bound ``E sum_j exp(-q S_j) |R(x + X(S_j))|`` for the discarded tail."""
    perp = (lam + q) / q
    sup = reward.sup_norm() if isinstance(reward, LumpReward) else None
    if sup is not None:
        return lambda x: sup * perp * np.ones_like(x)
    slope = reward.slope_bound if isinstance(reward, LumpReward) else 0.0
    speed = abs(mean_rate(model)) + model.sigma + 2 * model.eta / model.rho
    # E sum exp(-q S_j) (1 + S_j) = (lam+q)/q + lam/q^2 bounds the sqrt(t) and t growth
    spread = slope * speed * (perp + lam / q**2)
    return lambda x: np.abs(reward(x)) * perp + spread


def sample_rule_sums(
    model: LevyModel,
    reward,
    q: float,
    lam: float,
    x: float,
    rule,
    n_paths: int,
    seed: int,
    workers: int = 1,
    max_epochs: int = MAX_EPOCHS,
) -> RuleSample:
    """Discounted reward and time sums up to the rule's stopping epoch for paths ``0..n-1``.

    The result does not depend on ``workers``: path ``i`` always uses stream ``(seed, i)``.
    """
    reward = _as_lump(model, reward, q, lam)
    ids = np.arange(int(n_paths), dtype=np.int64)
    if workers <= 1 or n_paths < 2 * BLOCK:
        parts = [_rule_sums_chunk(model, lam, q, x, reward, rule, seed, ids, max_epochs)]
    else:
        chunks = np.array_split(ids, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [
                pool.submit(_rule_sums_chunk, model, lam, q, x, reward, rule, seed, c, max_epochs)
                for c in chunks
            ]
            parts = [f.result() for f in futs]
    num = np.concatenate([p[0] for p in parts])
    den = np.concatenate([p[1] for p in parts])
    tail = np.concatenate([p[2] for p in parts])
    tail_time = np.concatenate([p[3] for p in parts])
    capped = sum(p[4] for p in parts)
    if capped:
        warnings.warn(f"{capped} paths hit the {max_epochs}-epoch cap", TruncationWarning)
    return RuleSample(num, den, tail, tail_time, capped)


def estimate_perpetuity(model: LevyModel, lam: float, q: float, n_paths: int, seed: int, workers: int = 1) -> McEstimate:
    """Estimate ``E sum_k exp(-q T_k)``; the exact value is ``(lam+q)/q``."""
    sample = sample_rule_sums(model, _Unit(), q, lam, 0.0, Never(), n_paths, seed, workers)
    return sample.denominator()


class _Unit(LumpReward):
    """Constant reward 1, used only to count discounted epochs."""

    def __init__(self):
        self.slope_bound = 0.0

    def sup_norm(self):
        return 1.0

    def __call__(self, x):
        return np.ones(np.shape(x))


def estimate_gittins_ratio(
    model: LevyModel, reward, q: float, lam: float, x: float, n_paths: int, seed: int, workers: int = 1
) -> McEstimate:
    """Ratio estimator of the index with the first-epoch-at-or-below-``x`` stopping rule."""
    return sample_rule_sums(model, reward, q, lam, x, FirstBelow(x), n_paths, seed, workers).ratio()


def estimate_fixed_rule_value(
    model: LevyModel, reward, q: float, lam: float, x: float, gamma: float, rule, n_paths: int, seed: int,
    workers: int = 1,
) -> McEstimate:
    """Estimate ``E_x sum_{k<M} exp(-q T_k) (R(X(T_k)) - gamma)`` for a fixed stopping rule."""
    return sample_rule_sums(model, reward, q, lam, x, rule, n_paths, seed, workers).value(gamma)

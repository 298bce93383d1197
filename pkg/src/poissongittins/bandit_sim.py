"""Multi-armed bandit episodes with decisions at Poisson epochs.

Episodes run vectorized: all episodes of a batch advance one decision epoch
at a time.  Arm ``j`` of episode ``e`` owns the stream ``(seed, e)`` with tag
``j + 1``; its ``n``-th activation consumes the ``n``-th (holding time,
increment) pair of that stream whatever the policy does, so policies are
compared on common random numbers.  Tag 0 feeds the uniform-random policy.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import streams
from .errors import ConfigError, TruncationWarning
from .gittins import GittinsEvaluator, Problem
from .levy import LevyModel, RewardSpec
from .mc_oracle import BLOCK, LumpReward, _increments

__all__ = [
    "Policy",
    "ArmSpec",
    "EpisodeConfig",
    "PolicyResult",
    "PairedDifference",
    "SimReport",
    "IndexTable",
    "select_arm",
    "run_episode",
    "run_episodes",
    "episode_trace",
    "compare_policies",
]

MAX_EPOCHS = 10**6


class Policy(str, enum.Enum):
    GITTINS = "gittins"
    GREEDY = "greedy"
    ROUND_ROBIN = "roundrobin"
    UNIFORM_RANDOM = "random"

    @classmethod
    def parse(cls, name: str) -> "Policy":
        aliases = {"gittinsindex": "gittins", "round_robin": "roundrobin", "uniformrandom": "random",
                   "uniform": "random"}
        key = name.strip().lower().replace("-", "_")
        key = aliases.get(key.replace("_", ""), aliases.get(key, key))
        try:
            return cls(key)
        except ValueError:
            raise ConfigError(f"unknown policy {name!r}") from None


@dataclass(frozen=True)
class ArmSpec:
    model: LevyModel
    reward: RewardSpec
    x0: float = 0.0

    @classmethod
    def from_dict(cls, data: dict, role="R") -> "ArmSpec":
        for key in ("model", "reward"):
            if key not in data:
                raise ConfigError(f"arm descriptor missing field '{key}'")
        return cls(LevyModel.from_dict(data["model"]), RewardSpec.from_dict(data["reward"], role),
                   float(data.get("x0", 0.0)))


@dataclass(frozen=True)
class EpisodeConfig:
    arms: tuple
    q: float
    lam: float
    policy: Policy = Policy.GITTINS
    problem: Problem = Problem.P1
    truncation: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(self.arms))
        object.__setattr__(self, "policy", Policy(self.policy))
        object.__setattr__(self, "problem", Problem(self.problem))
        if len(self.arms) < 1:
            raise ConfigError("an episode needs at least one arm")
        if not (self.q > 0 and self.lam > 0):
            raise ConfigError("q and lambda must be > 0")
        if not 0 < self.truncation < 1:
            raise ConfigError("truncation floor must lie in (0, 1)")

    def with_policy(self, policy) -> "EpisodeConfig":
        return EpisodeConfig(self.arms, self.q, self.lam, policy, self.problem, self.truncation, self.seed)


class IndexTable:
    """Gittins index on a state grid, linearly interpolated (monotone-preserving).

    The grid is rebuilt to cover any state that falls outside it.  Affine
    rewards have an exactly affine index and are evaluated directly.
    """

    def __init__(self, evaluator: GittinsEvaluator, center: float = 0.0, half_width: float = 10.0,
                 points: int = 801):
        self.evaluator = evaluator
        self.points = points
        self.direct = evaluator.reward.is_affine
        self.lo = self.hi = None
        if not self.direct:
            self._build(center - half_width, center + half_width)

    def _build(self, lo, hi):
        self.lo, self.hi = lo, hi
        self.grid = np.linspace(lo, hi, self.points)
        self.values = np.asarray(self.evaluator.gittins_index(self.grid), dtype=float)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.direct:
            return self.evaluator.gittins_index(x)
        lo, hi = float(np.min(x)), float(np.max(x))
        if lo < self.lo or hi > self.hi:
            width = self.hi - self.lo
            self._build(min(lo, self.lo) - 0.5 * width, max(hi, self.hi) + 0.5 * width)
        return np.interp(x, self.grid, self.values)


def select_arm(policy, arm_states, evaluators=None, epoch: int = 0, u: float | None = None,
               rewards=None) -> int:
    """Arm chosen at one decision epoch; ties go to the lowest arm index.

    ``evaluators`` (Gittins) and ``rewards`` (greedy) are per-arm callables;
    ``u`` is the uniform draw used by the random policy.
    """
    policy = Policy(policy)
    states = np.asarray(arm_states, dtype=float)
    if states.size == 0:
        raise ConfigError("no arms to choose from")
    if policy is Policy.GITTINS:
        vals = [float(ev(s)) for ev, s in zip(evaluators, states)]
        return int(np.argmax(vals))
    if policy is Policy.GREEDY:
        vals = [float(r(s)) for r, s in zip(rewards, states)]
        return int(np.argmax(vals))
    if policy is Policy.ROUND_ROBIN:
        return int(epoch % len(states))
    if u is None:
        raise ValueError("the random policy needs a uniform draw")
    return min(int(u * len(states)), len(states) - 1)


class _ArmBuffers:
    """Lazily drawn (holding time, increment) pairs per arm and episode."""

    def __init__(self, config: EpisodeConfig, episode_ids: np.ndarray):
        self.config = config
        self.ids = episode_ids
        self.factory = streams.StreamFactory(config.seed)
        n, J = len(episode_ids), len(config.arms)
        self.dt = [np.empty((n, 0)) for _ in range(J)]
        self.inc = [np.empty((n, 0)) for _ in range(J)]
        self.policy_u = np.empty((n, 0))

    def ensure(self, arm: int, needed: int):
        while self.dt[arm].shape[1] <= needed:
            b = self.dt[arm].shape[1] // BLOCK
            u = self.factory.blocks(self.ids, b, 4 * BLOCK, tag=arm + 1)
            dt, inc = _increments(self.config.arms[arm].model, self.config.lam, u)
            self.dt[arm] = np.hstack([self.dt[arm], dt])
            self.inc[arm] = np.hstack([self.inc[arm], inc])

    def ensure_policy(self, needed: int):
        while self.policy_u.shape[1] <= needed:
            b = self.policy_u.shape[1] // BLOCK
            u = self.factory.blocks(self.ids, b, BLOCK, tag=0)
            self.policy_u = np.hstack([self.policy_u, u])


@dataclass
class EpisodeBatch:
    totals: np.ndarray
    selections: np.ndarray  # (n_episodes, J) counts
    capped: int


def _arm_functions(config: EpisodeConfig):
    lumps, tables = [], []
    for arm in config.arms:
        lumps.append(LumpReward(arm.model, arm.reward, config.q, config.lam, config.problem))
        ev = GittinsEvaluator(arm.model, arm.reward, config.q, config.lam, config.problem)
        tables.append(IndexTable(ev, center=arm.x0))
    return lumps, tables


def run_episodes(config: EpisodeConfig, episode_ids: Sequence[int], _functions=None) -> EpisodeBatch:
    """Discounted total reward of each listed episode under ``config.policy``."""
    ids = np.asarray(episode_ids, dtype=np.int64)
    n, J = len(ids), len(config.arms)
    lumps, tables = _functions if _functions is not None else _arm_functions(config)
    buf = _ArmBuffers(config, ids)
    x = np.tile(np.array([a.x0 for a in config.arms], dtype=float), (n, 1))
    t = np.zeros(n)
    total = np.zeros(n)
    used = np.zeros((n, J), dtype=np.int64)
    active = np.arange(n)
    epoch = 0
    capped = 0
    q = config.q
    policy = config.policy
    while len(active):
        xa = x[active]
        if policy is Policy.GITTINS:
            scores = np.column_stack([tables[j](xa[:, j]) for j in range(J)])
            choice = np.argmax(scores, axis=1)
        elif policy is Policy.GREEDY:
            scores = np.column_stack([lumps[j](xa[:, j]) for j in range(J)])
            choice = np.argmax(scores, axis=1)
        elif policy is Policy.ROUND_ROBIN:
            choice = np.full(len(active), epoch % J)
        else:
            buf.ensure_policy(epoch)
            choice = np.minimum((buf.policy_u[active, epoch] * J).astype(np.int64), J - 1)
        disc = np.exp(-q * t[active])
        for j in range(J):
            sel = choice == j
            if not np.any(sel):
                continue
            rows = active[sel]
            total[rows] += disc[sel] * lumps[j](x[rows, j])
            k = used[rows, j]
            buf.ensure(j, int(k.max()))
            t[rows] += buf.dt[j][rows, k]
            x[rows, j] += buf.inc[j][rows, k]
            used[rows, j] += 1
        epoch += 1
        alive = np.exp(-q * t[active]) >= config.truncation
        if epoch >= MAX_EPOCHS:
            capped += int(np.sum(alive))
            alive[:] = False
        active = active[alive]
    if capped:
        warnings.warn(f"{capped} episodes hit the {MAX_EPOCHS}-epoch cap", TruncationWarning)
    return EpisodeBatch(total, used, capped)


def run_episode(config: EpisodeConfig, episode_id: int) -> float:
    """Discounted total reward of one episode."""
    return float(run_episodes(config, [episode_id]).totals[0])


@dataclass(frozen=True)
class EpochRecord:
    time: float
    arm: int
    reward: float
    states_before: tuple
    states_after: tuple


def episode_trace(config: EpisodeConfig, episode_id: int) -> tuple[float, list]:
    """Reference single-episode path built on :func:`select_arm`, with a per-epoch record.

    Uses the same streams as :func:`run_episodes`, so totals agree.
    """
    lumps, tables = _arm_functions(config)
    buf = _ArmBuffers(config, np.array([episode_id], dtype=np.int64))
    J = len(config.arms)
    x = np.array([a.x0 for a in config.arms], dtype=float)
    used = np.zeros(J, dtype=np.int64)
    t, total, records = 0.0, 0.0, []
    epoch = 0
    while True:
        u = None
        if config.policy is Policy.UNIFORM_RANDOM:
            buf.ensure_policy(epoch)
            u = float(buf.policy_u[0, epoch])
        j = select_arm(config.policy, x, [lambda s, k=k: tables[k](s) for k in range(J)], epoch, u,
                       [lambda s, k=k: lumps[k](s) for k in range(J)])
        before = tuple(x)
        reward = math.exp(-config.q * t) * float(lumps[j](x[j]))
        total += reward
        buf.ensure(j, int(used[j]))
        t += buf.dt[j][0, used[j]]
        x[j] += buf.inc[j][0, used[j]]
        used[j] += 1
        records.append(EpochRecord(t, j, reward, before, tuple(x)))
        epoch += 1
        if math.exp(-config.q * t) < config.truncation or epoch >= MAX_EPOCHS:
            return total, records


@dataclass(frozen=True)
class PolicyResult:
    policy: str
    mean: float
    std_error: float
    n_episodes: int
    selection_fractions: tuple


@dataclass(frozen=True)
class PairedDifference:
    policy: str
    baseline: str
    mean_difference: float
    std_error: float


@dataclass(frozen=True)
class SimReport:
    """Empirical comparison of policies on common random numbers."""

    results: tuple
    paired: tuple = field(default=())

    def result(self, policy) -> PolicyResult:
        name = Policy.parse(str(getattr(policy, "value", policy))).value
        return next(r for r in self.results if r.policy == name)

    def difference(self, policy, baseline) -> PairedDifference:
        a = Policy.parse(str(getattr(policy, "value", policy))).value
        b = Policy.parse(str(getattr(baseline, "value", baseline))).value
        return next(p for p in self.paired if p.policy == a and p.baseline == b)


def compare_policies(config: EpisodeConfig, n_episodes: int, policies=None, batch_size: int = 20000) -> SimReport:
    """Run ``n_episodes`` per policy on the same episode streams and report paired differences."""
    if n_episodes < 100:
        raise ConfigError("compare_policies needs at least 100 episodes")
    policies = [Policy.parse(p) if isinstance(p, str) else Policy(p) for p in (policies or list(Policy))]
    functions = _arm_functions(config)
    ids = np.arange(int(n_episodes), dtype=np.int64)
    totals, results = {}, []
    for pol in policies:
        cfg = config.with_policy(pol)
        parts, sel = [], np.zeros(len(config.arms))
        for start in range(0, len(ids), batch_size):
            batch = run_episodes(cfg, ids[start : start + batch_size], functions)
            parts.append(batch.totals)
            sel += batch.selections.sum(axis=0)
        tot = np.concatenate(parts)
        totals[pol] = tot
        frac = tuple(float(v) for v in sel / sel.sum())
        results.append(PolicyResult(pol.value, float(tot.mean()), _se(tot), len(tot), frac))
    paired = []
    for a in policies:
        for b in policies:
            if a is b:
                continue
            d = totals[a] - totals[b]
            paired.append(PairedDifference(a.value, b.value, float(d.mean()), _se(d)))
    return SimReport(tuple(results), tuple(paired))


def _se(v):
    return float(np.std(v, ddof=1) / math.sqrt(len(v)))

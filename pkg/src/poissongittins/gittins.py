"""Gittins indices under Poisson decision epochs, their index measures and λ-limits."""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, IntegrabilityError, NonConvergent, NumericalError
from .expsum import Side, TwoSidedExpSum, convolve_one_sided
from .levy import (
    LevyModel,
    RewardSpec,
    characteristic_exponent,
    laplace_exponent,
    laplace_exponent_derivative,
    mean_rate,
    phi,
)
from .numerics import QuadratureSpec, integrate_fourier, integrate_semi_infinite
from .scale import ScaleEvaluator, near_pole

__all__ = [
    "Problem",
    "GittinsEvaluator",
    "IndexMeasure",
    "ClassicalMeasure",
    "reward_R_from_r",
    "classical_transform",
    "convergence_sweep",
    "SweepRow",
]


class Problem(enum.IntEnum):
    P1 = 1
    P2 = 2


_QUAD = QuadratureSpec(rel_tol=1e-11, abs_tol=1e-13)


def _integrate_two_sided(f, decay_pos, decay_neg, spec=_QUAD):
    """Integrate ``f`` over the real line, splitting at 0."""
    total = 0.0
    try:
        if math.isfinite(decay_pos):
            total += integrate_semi_infinite(f, 0.0, spec.with_rate(decay_pos))
        if math.isfinite(decay_neg):
            total += integrate_semi_infinite(lambda u: f(-u), 0.0, spec.with_rate(decay_neg))
    except NonConvergent as exc:
        raise IntegrabilityError(f"reward integral diverges or is unresolved: {exc}") from exc
    return total


def _resolvent_kernel(model: LevyModel, rate: float) -> TwoSidedExpSum:
    """Density of ``E_0 int exp(-rate t) 1(X(t) in du) dt`` for ``X`` with the model's orientation."""
    g = ScaleEvaluator(model, rate).resolvent_terms()
    return g if model.spectrally_negative else g.reflected()


def reward_R_from_r(model: LevyModel, r: RewardSpec, q: float, lam: float, x):
    """Lump reward ``R(x) = E_x int_0^inf exp(-(q+lam) t) r(X(t)) dt`` of a running reward."""
    rate = q + lam
    if not rate > 0:
        raise DomainError("q + lambda must be > 0")
    if r.is_affine:
        a, b = r.params
        drift = mean_rate(model) if model.spectrally_negative else -mean_rate(model)
        return (a + b * np.asarray(x, dtype=float)) / rate + b * drift / rate**2
    g = _resolvent_kernel(model, rate)
    dp, dn = g.slowest_decay()
    if np.ndim(x):
        return np.array([reward_R_from_r(model, r, q, lam, float(v)) for v in np.ravel(x)]).reshape(np.shape(x))
    x = float(x)
    return _integrate_two_sided(lambda u: r(x + u) * g(u), dp, dn)


@dataclass(frozen=True)
class IndexMeasure:
    """Atom at zero plus an exponential-sum density.

    ``transform`` is the closed-form Laplace (P1) or Fourier (P2) transform.
    """

    atom_at_zero: float
    terms: TwoSidedExpSum
    transform: Callable[[float], complex]

    def density(self, y):
        return self.terms(y)

    def total_mass(self) -> float:
        return self.atom_at_zero + self.terms.mass()

    def mean(self) -> float:
        return self.terms.moment(1)

    def support_two_sided(self) -> bool:
        return len(self.terms.neg) > 0


@dataclass(frozen=True)
class ClassicalMeasure:
    """Limit measure of the index measures as λ → ∞."""

    side: str
    model: LevyModel
    q: float

    def transform(self, theta):
        return classical_transform(self.side, self.model, self.q, theta)


def _ratio_through_root(model, theta, root, level):
    """``(theta - root)/(psi(theta) - level)`` with the removable singularity at ``root`` filled."""
    if near_pole(theta, root):
        return 1.0 / laplace_exponent_derivative(model, root)
    return (theta - root) / (laplace_exponent(model, theta) - level)


def classical_transform(side, model: LevyModel, q: float, theta):
    """Laplace transform of the classical (continuous-decision) index measure.

    ``theta`` may be complex (``theta = -i w`` yields the Fourier transform at ``w``).
    """
    side = str(getattr(side, "value", side)).lower()
    phi_q = phi(model, q)
    if side == "sn":
        return phi_q / (phi_q + theta)
    if side != "sp":
        raise ValueError("side must be 'sn' or 'sp'")
    if np.iscomplexobj(theta) and complex(theta).imag != 0:
        return q / phi_q * (theta - phi_q) / (laplace_exponent(model, complex(theta)) - q)
    theta = float(np.real(theta))
    if theta < 0:
        raise DomainError("theta must be >= 0")
    return q / phi_q * _ratio_through_root(model, theta, phi_q, q)


class GittinsEvaluator:
    """Gittins index for one arm: model, reward, discount ``q``, epoch rate ``lam``, problem.

    For Problem 2 ``reward`` is the running reward ``r``; the lump reward is
    obtained through :func:`reward_R_from_r`.
    """

    def __init__(self, model: LevyModel, reward: RewardSpec, q: float, lam: float, problem=Problem.P1):
        q, lam = float(q), float(lam)
        if not q > 0:
            raise DomainError("q must be > 0")
        if not lam > 0:
            raise DomainError("lambda must be > 0")
        self.model = model
        self.reward = reward
        self.q = q
        self.lam = lam
        self.problem = Problem(problem)
        self.phi_q = phi(model, q)
        self.phi_ql = phi(model, q + lam)
        self.scale = ScaleEvaluator(model, q)
        if self.model.spectrally_negative:
            self.prefactor = self.phi_q / self.phi_ql
        else:
            self.prefactor = q * self.phi_ql / ((lam + q) * self.phi_q)

    @property
    def sn(self) -> bool:
        return self.model.spectrally_negative

    # --- kernels and measures ---------------------------------------------
    @functools.cached_property
    def kernel(self) -> Side:
        """Integrand weight ``k(y)`` on ``y > 0`` in ``Gamma = pre*(R(x) + (Phi_l - Phi) int R(x+y) k(y) dy)``."""
        if self.sn:
            return Side.of([1.0], [-self.phi_q])
        return self.scale.H_terms(self.phi_ql)

    def kernel_value(self, y):
        if self.sn:
            return np.exp(-self.phi_q * np.asarray(y, dtype=float))
        return self.scale.H(y, self.phi_ql)

    @functools.cached_property
    def index_measure(self) -> IndexMeasure:
        jump = self.phi_ql - self.phi_q
        if self.problem is Problem.P1:
            dens = TwoSidedExpSum(self.kernel.scaled(self.prefactor * jump))
            return IndexMeasure(self.prefactor, dens, self.measure_transform)
        g = _resolvent_kernel(self.model, self.q + self.lam)
        conv = convolve_one_sided(self.kernel, g)
        dens = (g + conv.scaled(jump)).scaled((self.q + self.lam) * self.prefactor)
        return IndexMeasure(0.0, dens, self.measure_transform)

    # --- rewards ------------------------------------------------------------
    def lump_reward(self, x):
        """``R(x)``: the reward itself for Problem 1, the resolvent of ``r`` for Problem 2."""
        if self.problem is Problem.P1:
            return self.reward(x)
        return reward_R_from_r(self.model, self.reward, self.q, self.lam, x)

    # --- index ----------------------------------------------------------------
    def __call__(self, x):
        return self.gittins_index(x)

    def gittins_index(self, x):
        if np.ndim(x):
            xs = np.asarray(x, dtype=float)
            if self.reward.is_affine:
                return self._affine_index(xs)
            return np.array([self.gittins_index(float(v)) for v in xs.ravel()]).reshape(xs.shape)
        x = float(x)
        if self.reward.is_affine:
            return float(self._affine_index(x))
        if self.problem is Problem.P1:
            return self._generic_p1(x)
        return self._generic_p2(x)

    def _p1_terms(self):
        """Atom, density mass and first moment of the P1 measure."""
        jump = self.phi_ql - self.phi_q
        dens = TwoSidedExpSum(self.kernel.scaled(self.prefactor * jump))
        return self.prefactor, dens.mass(), dens.moment(1)

    def _affine_index(self, x):
        a, b = self.reward.params
        atom, mass, first = self._p1_terms()
        if self.problem is Problem.P2:
            # R(x) = A + B x with A, B from the resolvent of r
            rate = self.q + self.lam
            drift = mean_rate(self.model) if self.sn else -mean_rate(self.model)
            a, b = a / rate + b * drift / rate**2, b / rate
        total = atom + mass
        return a * total + b * (x * total + first)

    def _generic_p1(self, x):
        jump = self.phi_ql - self.phi_q
        rate = float(np.min(-self.kernel.rate))
        kernel = self.kernel.value_at
        try:
            integral = integrate_semi_infinite(
                lambda y: self.reward(x + y) * kernel(y), 0.0, _QUAD.with_rate(rate)
            )
        except NonConvergent as exc:
            raise IntegrabilityError(f"index integral unresolved: {exc}") from exc
        return self.prefactor * (self.reward(x) + jump * integral)

    def _generic_p2(self, x):
        # (q+lam) Gamma(x) = int r(x+u) mu_2(du): one integral instead of the nested pair
        dens = self.index_measure.terms
        dp, dn = dens.slowest_decay()
        total = _integrate_two_sided(lambda u: self.reward(x + u) * dens(u), dp, dn)
        return total / (self.q + self.lam)

    def index_by_substitution(self, x: float) -> float:
        """Reference path: outer index integral of the lump reward ``R`` from :func:`reward_R_from_r`."""
        jump = self.phi_ql - self.phi_q
        rate = float(np.min(-self.kernel.rate))
        R = self.lump_reward
        integral = integrate_semi_infinite(
            lambda y: R(x + y) * self.kernel_value(y), 0.0, QuadratureSpec(1e-9, 1e-12, 2000, rate)
        )
        return self.prefactor * (R(x) + jump * integral)

    def index_from_measure(self, x: float) -> float:
        """``atom*R(x) + int R(x+y) density(y) dy`` (P1) or its ``r``-analogue (P2), by quadrature."""
        m = self.index_measure
        dp, dn = m.terms.slowest_decay()
        f = self.reward
        total = m.atom_at_zero * f(x) + _integrate_two_sided(lambda u: f(x + u) * m.terms(u), dp, dn)
        if self.problem is Problem.P2:
            total /= self.q + self.lam
        return total

    def lambda_to_zero_limit(self, x):
        """``R(x)`` for Problem 1; the ``q``-resolvent of ``r`` for Problem 2."""
        if self.problem is Problem.P1:
            return self.reward(x)
        return reward_R_from_r(self.model, self.reward, self.q, 0.0, x)

    # --- transforms ----------------------------------------------------------
    def measure_transform(self, theta):
        """Closed-form transform of the index measure.

        Laplace transform ``int exp(-theta y) mu(dy)`` for Problem 1 (``theta >= 0``),
        Fourier transform ``int exp(i theta y) mu(dy)`` for Problem 2 (real ``theta``).
        """
        q, lam, p, pl = self.q, self.lam, self.phi_q, self.phi_ql
        model = self.model
        if self.problem is Problem.P1:
            theta = float(theta)
            if theta < 0:
                raise DomainError("Laplace transform needs theta >= 0")
            if self.sn:
                return p / pl * (theta + pl) / (p + theta)
            # (lam+q-psi)/(pl-theta) -> psi'(pl) and (theta-p)/(psi-q) -> 1/psi'(p)
            upper = 1.0 / _ratio_through_root(model, theta, pl, q + lam)
            lower = _ratio_through_root(model, theta, p, q)
            return upper / (lam + q) * pl * lower * q / p
        theta = float(theta)
        if self.sn:
            Psi = characteristic_exponent(model, theta)
            return (pl - 1j * theta) / pl * (q + lam) / (Psi + q + lam) * p / (p - 1j * theta)
        Psi_m = characteristic_exponent(model, -theta)
        return (1j * theta + p) / p * q / (Psi_m + q) * pl / (pl + 1j * theta)

    def generalized_phi_form(self, theta):
        """``(phi(0), phi(theta))`` whose ratio is :meth:`measure_transform`."""
        return self._phi_form(0.0), self._phi_form(theta)

    def _phi_form(self, theta):
        q, lam, p, pl = self.q, self.lam, self.phi_q, self.phi_ql
        model = self.model
        theta = float(theta)
        if self.problem is Problem.P1:
            if theta < 0:
                raise DomainError("Laplace variant needs theta >= 0")
            if self.sn:
                return (p + theta) / (theta + pl)
            a = 1.0 / _ratio_through_root(model, theta, p, q)  # (psi-q)/(theta-p)
            b = _ratio_through_root(model, theta, pl, q + lam)  # (theta-pl)/(psi-q-lam)
            return a * b
        if self.sn:
            Psi = characteristic_exponent(model, theta)
            return (Psi + q + lam) * (p - 1j * theta) / (pl - 1j * theta)
        Psi_m = characteristic_exponent(model, -theta)
        return (Psi_m + q) * (pl + 1j * theta) / (1j * theta + p)

    def classical(self) -> ClassicalMeasure:
        return ClassicalMeasure(self.model.orientation.value, self.model, self.q)

    def classical_at(self, theta):
        """Classical transform in the same convention as :meth:`measure_transform`."""
        side = self.model.orientation.value
        if self.problem is Problem.P1:
            return classical_transform(side, self.model, self.q, float(theta))
        return classical_transform(side, self.model, self.q, complex(0.0, -float(theta)))

    def quadrature_transform(self, theta: float) -> complex:
        """Transform of the constructed measure by direct quadrature of its density."""
        m = self.index_measure
        dp, dn = m.terms.slowest_decay()
        spec = QuadratureSpec(1e-11, 1e-14, 4000)
        if self.problem is Problem.P1:
            f = lambda y: math.exp(-theta * y) * m.terms(y)
            return m.atom_at_zero + integrate_semi_infinite(f, 0.0, spec.with_rate(dp + theta))
        # int e^{i theta u} g(u) du = int_0^inf [g(u) e^{i theta u} + g(-u) e^{-i theta u}] du
        pos, neg = m.terms, lambda u: m.terms(-u)
        sp, sn = spec.with_rate(dp), spec.with_rate(dn)
        re = integrate_fourier(pos, 0.0, theta, "cos", sp) + integrate_fourier(neg, 0.0, theta, "cos", sn)
        im = integrate_fourier(pos, 0.0, theta, "sin", sp) - integrate_fourier(neg, 0.0, theta, "sin", sn)
        out = (re, im)
        return complex(out[0], out[1])


@dataclass(frozen=True)
class SweepRow:
    lam: float
    sup_distance: float
    sup_real_distance: float


def default_theta_grid(problem) -> np.ndarray:
    if Problem(problem) is Problem.P1:
        return np.linspace(0.0, 10.0, 101)
    return np.linspace(-10.0, 10.0, 101)


def convergence_sweep(
    model: LevyModel,
    reward: RewardSpec,
    q: float,
    lam_grid: Sequence[float],
    problem=Problem.P1,
    theta_grid: Sequence[float] | None = None,
    slack: float = 1e-12,
) -> list[SweepRow]:
    """Sup-distance between the index-measure transform and the classical one, per λ.

    Raises :class:`NumericalError` if the distance increases along the
    (ascending) λ grid by more than ``slack``.
    """
    lams = [float(v) for v in lam_grid]
    if any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambda grid must be strictly ascending")
    thetas = default_theta_grid(problem) if theta_grid is None else np.asarray(theta_grid, dtype=float)
    rows = []
    for lam in lams:
        ev = GittinsEvaluator(model, reward, q, lam, problem)
        diffs = np.array([ev.measure_transform(t) - ev.classical_at(t) for t in thetas])
        rows.append(SweepRow(lam, float(np.max(np.abs(diffs))), float(np.max(np.abs(diffs.real)))))
    for prev, cur in zip(rows, rows[1:]):
        if cur.sup_distance > prev.sup_distance + slack:
            raise NumericalError(
                f"convergence sweep not monotone: d({cur.lam:g})={cur.sup_distance:.3g} > "
                f"d({prev.lam:g})={prev.sup_distance:.3g}"
            )
    return rows

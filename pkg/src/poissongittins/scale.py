"""Scale functions and fluctuation kernels of spectrally negative Lévy processes."""

from __future__ import annotations

import enum
import functools
import math

import numpy as np

from .errors import DomainError
from .expsum import Side, TwoSidedExpSum
from .levy import LevyModel, laplace_exponent, laplace_exponent_derivative, phi
from .numerics import InversionSpec, QuadratureSpec, integrate_finite, invert_laplace

__all__ = ["Method", "ScaleEvaluator", "near_pole"]

_POLE_TOL = 1e-8


class Method(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    NUMERIC_INVERSION = "numeric_inversion"


class Side_(str, enum.Enum):
    BELOW = "below"
    ABOVE = "above"


def near_pole(theta, pole) -> bool:
    return abs(theta - pole) < _POLE_TOL * (1.0 + abs(pole))


def _polish(poly, dpoly, r):
    for _ in range(4):
        d = np.polyval(dpoly, r)
        if d == 0:
            break
        step = np.polyval(poly, r) / d
        r -= step
        if abs(step) <= 1e-16 * max(1.0, abs(r)):
            break
    return r


class ScaleEvaluator:
    """``W^(q)`` and the kernels built from it, for one model and one ``q``.

    With ``Method.CLOSED_FORM`` the scale function is the residue expansion
    ``W(x) = sum_i c_i exp(g_i x)`` over the real roots ``g_i`` of
    ``psi(t) = q``; the root ``g_0 = Phi(q)`` carries ``c_0 = 1/psi'(Phi(q))``.
    If the roots are not simple (e.g. ``q = 0`` for a driftless model) the
    evaluator silently switches to numerical inversion.
    """

    def __init__(self, model: LevyModel, q: float, method: Method = Method.CLOSED_FORM,
                 inversion: InversionSpec = InversionSpec(), quadrature: QuadratureSpec = QuadratureSpec()):
        q = float(q)
        if q < 0:
            raise DomainError("q must be >= 0")
        self.model = model
        self.q = q
        self.inversion = inversion
        self.quadrature = quadrature
        self.phi_q = phi(model, q)
        self.psi_prime_phi = float(laplace_exponent_derivative(model, self.phi_q))
        self.method = Method(method)
        self.roots = self.coefs = None
        if self.method is Method.CLOSED_FORM:
            roots = self._roots()
            if roots is None:
                self.method = Method.NUMERIC_INVERSION
            else:
                self.roots = roots
                num, den = self._poly()
                dden = np.polyder(den)
                self.coefs = np.polyval(num, roots) / np.polyval(dden, roots)
                self.coefs[0] = 1.0 / self.psi_prime_phi

    def _poly(self):
        num, den0 = self.model.rational_form()
        return num, np.polysub(den0, self.q * np.pad(num, (len(den0) - len(num), 0)))

    def _roots(self):
        num, den = self._poly()
        raw = np.roots(den)
        if np.any(np.abs(raw.imag) > 1e-9 * (1 + np.abs(raw.real))):
            return None
        raw = np.sort(raw.real)[::-1]
        # the largest root is Phi(q); replace it with the accurately computed value
        raw[0] = self.phi_q
        dden = np.polyder(den)
        for i in range(1, len(raw)):
            raw[i] = _polish(den, dden, raw[i])
        gaps = np.abs(np.diff(raw))
        if len(raw) > 1 and np.min(gaps) < 1e-7 * (1 + np.max(np.abs(raw))):
            return None
        if len(raw) > 1 and raw[1] >= self.phi_q:
            return None
        return raw

    @property
    def closed_form(self) -> bool:
        return self.method is Method.CLOSED_FORM

    def psi(self, theta):
        return laplace_exponent(self.model, theta)

    # --- W ----------------------------------------------------------------
    def W(self, x):
        if self.closed_form:
            x = np.asarray(x, dtype=float)
            xx = np.maximum(x, 0.0)[..., None]
            val = np.sum(self.coefs * np.exp(self.roots * xx), axis=-1)
            out = np.where(x >= 0, val, 0.0)
            return float(out) if out.ndim == 0 else out
        return self._W_inverted(x)

    def _W_inverted(self, x):
        if np.ndim(x):
            return np.array([self._W_inverted(float(v)) for v in np.asarray(x).ravel()]).reshape(np.shape(x))
        x = float(x)
        if x < 0:
            return 0.0
        if x == 0:
            # right limit: 1/c for bounded variation, 0 otherwise
            return 0.0 if self.model.unbounded_variation else 1.0 / self.model.drift
        F = lambda s: 1.0 / (laplace_exponent(self.model, s) - self.q)
        return invert_laplace(F, x, self.inversion, shift=self.phi_q)

    def W_laplace(self, theta: float) -> float:
        """``int_0^inf exp(-theta x) W(x) dx`` evaluated from the representation."""
        if self.closed_form:
            return float(np.sum(self.coefs / (theta - self.roots)))
        return 1.0 / (self.psi(theta) - self.q)

    # --- Z ----------------------------------------------------------------
    def Z(self, x, theta: float):
        if theta < 0:
            raise DomainError("theta must be >= 0")
        if np.ndim(x):
            return np.array([self.Z(float(v), theta) for v in np.ravel(x)]).reshape(np.shape(x))
        x = float(x)
        if x < 0 or x == 0:
            return math.exp(theta * x)
        if self.closed_form:
            if near_pole(theta, self.phi_q):
                return math.exp(self.phi_q * x)
            # exp(theta x) coefficient cancels identically: Z = (psi-q) sum c_i e^{g_i x}/(theta-g_i)
            k = self.psi(theta) - self.q
            return float(k * np.sum(self.coefs * np.exp(self.roots * x) / (theta - self.roots)))
        integral = integrate_finite(lambda z: math.exp(-theta * z) * self.W(z), 0.0, x, self.quadrature)
        return math.exp(theta * x) * (1.0 + (self.q - self.psi(theta)) * integral)

    def Z_at_phi(self, lam: float, x):
        """``Z(x; Phi(q+lam)) = lam int_0^inf exp(-Phi(q+lam) z) W(z+x) dz``."""
        if not lam > 0:
            raise DomainError("lambda must be > 0")
        theta = phi(self.model, self.q + lam)
        if np.ndim(x):
            return np.array([self.Z_at_phi(lam, float(v)) for v in np.ravel(x)]).reshape(np.shape(x))
        x = float(x)
        if x <= 0:
            return math.exp(theta * x)
        if self.closed_form:
            return float(lam * np.sum(self.coefs * np.exp(self.roots * x) / (theta - self.roots)))
        return self.Z(x, theta)

    # --- H ----------------------------------------------------------------
    def _h_factor(self, theta: float) -> float:
        """``(psi(theta)-q)/(theta-Phi(q))`` with its removable singularity filled."""
        if near_pole(theta, self.phi_q):
            return self.psi_prime_phi
        return (self.psi(theta) - self.q) / (theta - self.phi_q)

    def H_terms(self, theta: float) -> Side:
        """Exponential-sum form of ``H(y; theta)`` on ``y > 0``.

        Coefficient of ``exp(g_i y)`` is ``c_i (g_i - Phi) (psi(theta)-q) / ((theta-g_i)(theta-Phi))``;
        the ``exp(Phi y)`` and ``exp(theta y)`` terms cancel exactly.
        """
        if not self.closed_form:
            raise ValueError("exponential-sum terms need the closed-form method")
        if theta < 0:
            raise DomainError("theta must be >= 0")
        g, c = self.roots[1:], self.coefs[1:]
        coef = c * (g - self.phi_q) * self._h_factor(theta) / (theta - g)
        return Side.of(coef, g)

    def H(self, y, theta: float):
        if theta < 0:
            raise DomainError("theta must be >= 0")
        if np.ndim(y):
            return np.array([self.H(float(v), theta) for v in np.ravel(y)]).reshape(np.shape(y))
        y = float(y)
        if y < 0:
            return math.exp(theta * y)
        if self.closed_form:
            return float(self.H_terms(theta).evaluate(y))
        return self.Z(y, theta) - self._h_factor(theta) * self.W(y)

    # --- resolvent --------------------------------------------------------
    def resolvent_density(self, u):
        """``g(u) = exp(-Phi u)/psi'(Phi) - W(-u)``."""
        u = np.asarray(u, dtype=float)
        if self.closed_form:
            # for u < 0 the exp(-Phi u) growth cancels against W(-u); use the decaying terms there
            up = np.maximum(u, 0.0)
            right = np.exp(-self.phi_q * up) / self.psi_prime_phi - self.W(np.where(u > 0, -1.0, 0.0))
            out = np.where(u < 0, self.resolvent_terms()(np.minimum(u, 0.0)), right)
        else:
            out = np.exp(-self.phi_q * u) / self.psi_prime_phi - self.W(-u)
        return float(out) if np.ndim(out) == 0 else out

    @functools.lru_cache(maxsize=None)
    def resolvent_terms(self) -> TwoSidedExpSum:
        if not self.closed_form:
            raise ValueError("exponential-sum terms need the closed-form method")
        pos = Side.of([1.0 / self.psi_prime_phi], [-self.phi_q])
        neg = Side.of(-self.coefs[1:], -self.roots[1:])
        return TwoSidedExpSum(pos, neg)

    # --- Poisson observation ---------------------------------------------
    @functools.lru_cache(maxsize=None)
    def shifted(self, lam: float) -> "ScaleEvaluator":
        return ScaleEvaluator(self.model, self.q + lam, self.method, self.inversion, self.quadrature)

    def poisson_occupation_density(self, lam: float, side, u):
        """Discounted occupation density until the first Poisson observation below/above 0.

        ``side="below"``: for the SN process started at 0, killed at the first
        observation below 0.  ``side="above"``: for the negated process,
        killed at the first observation of the SN process above 0.
        """
        if not lam > 0:
            raise DomainError("lambda must be > 0")
        side = Side_(side)
        phi_ql = phi(self.model, self.q + lam)
        k = (phi_ql - self.phi_q) / lam
        if side is Side_.BELOW:
            return k * self.shifted(lam).H(-np.asarray(u, dtype=float), self.phi_q)
        return k * self.H(u, phi_ql)

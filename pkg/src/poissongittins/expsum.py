"""Piecewise exponential sums on the half lines, with exact integral transforms.

A :class:`TwoSidedExpSum` represents

    f(u) = sum_j a_j u^{k_j} exp(r_j u)   for u > 0   (Re r_j < 0)
    f(u) = sum_j b_j u^{l_j} exp(s_j u)   for u < 0   (Re s_j > 0)

with powers restricted to 0 or 1.  That is enough to carry every density
built from the closed-form scale functions, including the convolutions of
one-sided kernels against resolvent densities.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

_EMPTY = np.zeros(0)
_COINCIDE = 1e-9


def _arr(x, dtype=float):
    return np.asarray(x, dtype=dtype).reshape(-1)


@dataclass(frozen=True)
class Side:
    coef: np.ndarray = field(default_factory=lambda: _EMPTY)
    rate: np.ndarray = field(default_factory=lambda: _EMPTY)
    power: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @classmethod
    def of(cls, coef, rate, power=None) -> "Side":
        coef, rate = _arr(coef), _arr(rate)
        power = np.zeros(len(coef), dtype=int) if power is None else _arr(power, int)
        return cls(coef, rate, power)

    def __len__(self):
        return len(self.coef)

    def scaled(self, k) -> "Side":
        return Side(self.coef * k, self.rate, self.power)

    def __add__(self, other: "Side") -> "Side":
        return Side(
            np.concatenate([self.coef, other.coef]),
            np.concatenate([self.rate, other.rate]),
            np.concatenate([self.power, other.power]),
        )

    @functools.cached_property
    def _terms(self):
        if np.iscomplexobj(self.coef) or np.iscomplexobj(self.rate):
            return None
        return tuple(zip(self.coef.tolist(), self.rate.tolist(), self.power.tolist()))

    def value_at(self, u: float) -> float:
        """Scalar evaluation without array overhead (quadrature integrands)."""
        terms = self._terms
        if terms is None:
            return float(np.real(self.evaluate(u)))
        return math.fsum(c * u**p * math.exp(r * u) if p else c * math.exp(r * u) for c, r, p in terms)

    def evaluate(self, u):
        u = np.asarray(u, dtype=float)
        if not len(self):
            return np.zeros_like(u)
        uu = u[..., None]
        return np.sum(self.coef * uu**self.power * np.exp(self.rate * uu), axis=-1)


def _pos_moment(coef, rate, power, s, k_extra=0):
    """sum of coef * int_0^inf u^(power+k_extra) exp((rate+s) u) du."""
    z = rate + s
    n = power + k_extra
    # int_0^inf u^n e^{z u} du = n! / (-z)^(n+1)
    fact = np.where(n == 2, 2.0, 1.0)
    return np.sum(coef * fact / (-z) ** (n + 1))


def _neg_moment(coef, rate, power, s, k_extra=0):
    """sum of coef * int_{-inf}^0 u^(power+k_extra) exp((rate+s) u) du."""
    z = rate + s
    n = power + k_extra
    # int_{-inf}^0 u^n e^{z u} du = (-1)^n n! / z^(n+1)
    fact = np.where(n == 2, 2.0, 1.0)
    return np.sum(coef * fact * (-1.0) ** n / z ** (n + 1))


@dataclass(frozen=True)
class TwoSidedExpSum:
    pos: Side = field(default_factory=Side)
    neg: Side = field(default_factory=Side)

    def __call__(self, u):
        if isinstance(u, (float, int)) and not isinstance(u, bool):
            if u >= 0:
                return self.pos.value_at(float(u))
            return self.neg.value_at(float(u))
        u = np.asarray(u, dtype=float)
        # right-continuous at 0: the positive side owns the origin
        out = np.where(u >= 0, self.pos.evaluate(np.maximum(u, 0.0)), 0.0)
        out = out + np.where(u < 0, self.neg.evaluate(np.minimum(u, 0.0)), 0.0)
        if np.iscomplexobj(out):
            out = out.real
        return float(out) if out.ndim == 0 else out

    def scaled(self, k) -> "TwoSidedExpSum":
        return TwoSidedExpSum(self.pos.scaled(k), self.neg.scaled(k))

    def __add__(self, other: "TwoSidedExpSum") -> "TwoSidedExpSum":
        return TwoSidedExpSum(self.pos + other.pos, self.neg + other.neg)

    def mass(self) -> float:
        return float(self.transform(0.0).real)

    def moment(self, order: int = 1) -> float:
        if order not in (0, 1):
            raise ValueError("only orders 0 and 1 are carried")
        p, n = self.pos, self.neg
        out = _pos_moment(p.coef, p.rate, p.power, 0.0, order)
        out += _neg_moment(n.coef, n.rate, n.power, 0.0, order)
        return float(np.real(out))

    def transform(self, s):
        """``int exp(s u) f(u) du``; ``s = -theta`` gives Laplace, ``s = i theta`` Fourier."""
        p, n = self.pos, self.neg
        out = _pos_moment(p.coef, p.rate, p.power, s) + _neg_moment(n.coef, n.rate, n.power, s)
        return complex(out)

    def laplace(self, theta: float) -> float:
        return self.transform(-theta).real

    def fourier(self, theta: float) -> complex:
        return self.transform(1j * theta)

    def slowest_decay(self) -> tuple[float, float]:
        """Smallest decay rates ``(pos, neg)`` of the two sides (inf if a side is empty)."""
        dp = float(np.min(-self.pos.rate.real)) if len(self.pos) else np.inf
        dn = float(np.min(self.neg.rate.real)) if len(self.neg) else np.inf
        return dp, dn

    def reflected(self) -> "TwoSidedExpSum":
        """``u -> f(-u)``."""

        def flip(side):
            sign = np.where(side.power % 2 == 1, -1.0, 1.0)
            return Side(side.coef * sign, -side.rate, side.power)

        return TwoSidedExpSum(flip(self.neg), flip(self.pos))


def convolve_one_sided(kernel: Side, g: TwoSidedExpSum) -> TwoSidedExpSum:
    """``h(u) = int_0^inf f(y) g(u - y) dy`` for ``f`` supported on ``(0, inf)``.

    ``kernel`` and ``g`` must carry power-0 terms only.
    """
    if np.any(kernel.power) or np.any(g.pos.power) or np.any(g.neg.power):
        raise ValueError("convolution supports pure exponential terms only")
    pc, pr, pk = [], [], []
    nc, nr = [], []
    for a, alpha in zip(kernel.coef, kernel.rate):
        for p, beta in zip(g.pos.coef, g.pos.rate):
            if abs(alpha - beta) <= _COINCIDE * (1.0 + abs(alpha)):
                pc.append(a * p)
                pr.append(alpha)
                pk.append(1)
            else:
                k = a * p / (alpha - beta)
                pc += [k, -k]
                pr += [alpha, beta]
                pk += [0, 0]
        for n, delta in zip(g.neg.coef, g.neg.rate):
            k = a * n / (delta - alpha)
            pc.append(k)
            pr.append(alpha)
            pk.append(0)
            nc.append(k)
            nr.append(delta)
    return TwoSidedExpSum(Side.of(pc, pr, pk), Side.of(nc, nr))

"""Shared numerical kernels: monotone root finding, quadrature and Laplace inversion."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import Degenerate, NoBracket, NonConvergent, NotMonotone

__all__ = [
    "QuadratureSpec",
    "InversionSpec",
    "find_root_increasing",
    "integrate_finite",
    "integrate_semi_infinite",
    "integrate_fourier",
    "invert_laplace",
]

_BRACKET_LIMIT = 1e300


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000
    tail_decay_rate: float = 1.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if not self.tail_decay_rate > 0:
            raise ValueError("tail_decay_rate must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")

    def with_rate(self, rate: float) -> "QuadratureSpec":
        return QuadratureSpec(self.rel_tol, self.abs_tol, self.max_subdivisions, rate)


@dataclass(frozen=True)
class InversionSpec:
    """Parameters of the fixed cotangent-contour inversion.

    ``scaling`` multiplies the contour size ``contour_nodes / x``.
    """

    contour_nodes: int = 48
    scaling: float = 1.0

    def __post_init__(self):
        if self.contour_nodes < 16:
            raise ValueError("contour_nodes must be >= 16")
        if not self.scaling > 0:
            raise ValueError("scaling must be positive")


def find_root_increasing(
    f: Callable[[float], float],
    target: float,
    lower_hint: float,
    rel_tol: float = 1e-13,
    abs_tol: float = 1e-14,
    max_iter: int = 400,
) -> float:
    """Solve ``f(s) = target`` for a continuous, strictly increasing ``f``.

    The bracket ``[lower_hint, hi]`` is grown geometrically until
    ``f(hi) >= target``; the root is then refined by a safeguarded
    secant (Illinois) step that falls back to bisection whenever the
    secant stalls.

    Raises
    ------
    NoBracket
        ``f(lower_hint) > target`` or the expansion overflows.
    NotMonotone
        A sampled value decreased during the expansion.
    """
    lo = float(lower_hint)
    f_lo = f(lo) - target
    tol = max(abs_tol, rel_tol * abs(target))
    if abs(f_lo) <= tol and f_lo <= 0 or f_lo == 0:
        return lo
    if f_lo > 0:
        raise NoBracket(f"f(lower_hint) exceeds target by {f_lo:g}")

    step = max(1.0, abs(lo))
    hi = lo + step
    f_hi = f(hi) - target
    prev = f_lo
    while f_hi < 0:
        if f_hi < prev:
            raise NotMonotone(f"f decreased between samples near s={hi:g}")
        prev = f_hi
        lo, f_lo = hi, f_hi
        step *= 2.0
        hi = lo + step
        if not math.isfinite(hi) or hi > _BRACKET_LIMIT:
            raise NoBracket("bracket expansion exceeded the representable range")
        f_hi = f(hi) - target
    if abs(f_hi) <= tol:
        return hi

    side = 0
    for _ in range(max_iter):
        width = hi - lo
        # Illinois-modified regula falsi
        s = hi - f_hi * width / (f_hi - f_lo)
        if not (lo < s < hi):
            s = lo + 0.5 * width
        f_s = f(s) - target
        if abs(f_s) <= tol:
            return s
        if f_s < 0:
            lo, f_lo = s, f_s
            if side == -1:
                f_hi *= 0.5
            side = -1
        else:
            hi, f_hi = s, f_s
            if side == 1:
                f_lo *= 0.5
            side = 1
        if hi - lo > 0.5 * width:
            # secant made poor progress; force a bisection step
            mid = lo + 0.5 * (hi - lo)
            f_mid = f(mid) - target
            if abs(f_mid) <= tol:
                return mid
            if f_mid < 0:
                lo, f_lo = mid, f_mid
            else:
                hi, f_hi = mid, f_mid
            side = 0
        if hi - lo <= 4 * np.spacing(max(abs(lo), abs(hi))):
            break
    # bracket collapsed to rounding level: best of the two endpoints
    return lo if abs(f_lo) <= abs(f_hi) else hi


def integrate_finite(
    f: Callable[[float], float], a: float, b: float, spec: QuadratureSpec = QuadratureSpec()
) -> float:
    if a == b:
        return 0.0
    value, err, info = _quad(f, a, b, spec)
    return value


def _quad(f, a, b, spec):
    out = integrate.quad(
        f,
        a,
        b,
        epsabs=spec.abs_tol,
        epsrel=spec.rel_tol,
        limit=spec.max_subdivisions,
        full_output=1,
    )
    value, err, info = out[0], out[1], out[2]
    if len(out) > 3 and out[3]:
        msg = out[3]
        # ier=2 (roundoff) still returns a usable value if the error estimate is small
        if "roundoff" in msg and err <= 100 * max(spec.abs_tol, spec.rel_tol * abs(value)):
            return value, err, info
        if "maximum number of subdivisions" in msg or not math.isfinite(value):
            raise NonConvergent(f"quadrature on [{a:g}, {b:g}] did not converge: {msg.strip()}")
        if err > 1e3 * max(spec.abs_tol, spec.rel_tol * abs(value)):
            raise NonConvergent(f"quadrature on [{a:g}, {b:g}] unreliable: {msg.strip()}")
    return value, err, info


def integrate_semi_infinite(
    f: Callable[[float], float], a: float, spec: QuadratureSpec = QuadratureSpec()
) -> float:
    """Integrate ``f`` over ``[a, inf)`` assuming exponential decay at ``spec.tail_decay_rate``.

    The integral is truncated 40 e-folds past ``a``; the discarded tail is
    bounded by ``|f(end)| / rate``, which is checked against the tolerances.
    """
    end = a + 40.0 / spec.tail_decay_rate
    value, err, _ = _quad(f, a, end, spec)
    tail = abs(f(end)) / spec.tail_decay_rate
    if tail > max(spec.abs_tol, spec.rel_tol * abs(value)) and tail > 1e-3 * abs(value):
        raise NonConvergent(
            f"integrand has not decayed at the truncation point (tail bound {tail:.3g}); "
            "tail_decay_rate is too large for this integrand"
        )
    return value


def integrate_fourier(
    f: Callable[[float], float], a: float, omega: float, kind: str = "cos", spec: QuadratureSpec = QuadratureSpec()
) -> float:
    """``int_a^inf f(y) cos(omega y) dy`` (or ``sin``) for exponentially decaying ``f``.

    Same truncation rule as :func:`integrate_semi_infinite`; the oscillating
    factor is handled by the QUADPACK weighted rule instead of by subdivision.
    """
    if kind not in ("cos", "sin"):
        raise ValueError("kind must be 'cos' or 'sin'")
    if omega == 0.0:
        return integrate_semi_infinite(f, a, spec) if kind == "cos" else 0.0
    end = a + 40.0 / spec.tail_decay_rate
    out = integrate.quad(f, a, end, weight=kind, wvar=omega, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                         limit=spec.max_subdivisions, full_output=1)
    value, err = out[0], out[1]
    if len(out) > 3 and out[3] and err > 1e3 * max(spec.abs_tol, spec.rel_tol * abs(value)):
        raise NonConvergent(f"oscillatory quadrature at omega={omega:g} unreliable: {str(out[3]).strip()}")
    tail = abs(f(end)) / spec.tail_decay_rate
    if tail > max(spec.abs_tol, spec.rel_tol * abs(value)) and tail > 1e-3 * abs(value):
        raise NonConvergent(f"integrand has not decayed at the truncation point (tail bound {tail:.3g})")
    return value


# Cotangent contour z(t) = (N/x) (A t cot(B t) - C + i D t), t in (-pi, pi)
_COT_A, _COT_B, _COT_C, _COT_D = 0.5017, 0.6407, 0.6122, 0.2645


def invert_laplace(
    F: Callable[[complex], complex],
    x: float,
    spec: InversionSpec = InversionSpec(),
    shift: float = 0.0,
) -> float:
    """Numerically invert a Laplace transform at ``x > 0``.

    Uses a midpoint rule on a fixed cotangent-shaped Talbot contour.  ``F``
    must accept complex arguments and be analytic to the right of its
    singularities; ``shift`` must be at least the real part of the
    rightmost singularity (the contour is translated by it).
    """
    if not x > 0:
        raise Degenerate(f"inversion point must be positive, got {x!r}")
    n = spec.contour_nodes
    t = -np.pi + (np.arange(n) + 0.5) * (2.0 * np.pi / n)
    scale = spec.scaling * n / x
    bt = _COT_B * t
    cot = np.cos(bt) / np.sin(bt)
    z = scale * (_COT_A * t * cot - _COT_C + 1j * _COT_D * t)
    dz = scale * (_COT_A * cot - _COT_A * bt / np.sin(bt) ** 2 + 1j * _COT_D)
    s = z + shift
    vals = np.array([F(complex(si)) for si in s])
    total = np.sum(np.exp(z * x) * vals * dz)
    return float(math.exp(shift * x) * (total / (1j * n)).real)

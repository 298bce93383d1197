"""Spectrally one-sided Lévy model families and reward descriptors.

Every :class:`LevyModel` stores the parameters of its spectrally negative
representative.  For a spectrally positive model those parameters describe
the dual process ``-X``; all analytic quantities (``psi``, ``Phi``, scale
functions) are those of that dual.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError
from .numerics import find_root_increasing

__all__ = [
    "Family",
    "Orientation",
    "LevyModel",
    "RewardFamily",
    "RewardSpec",
    "laplace_exponent",
    "laplace_exponent_derivative",
    "characteristic_exponent",
    "phi",
    "mean_rate",
]


class Family(str, enum.Enum):
    BROWNIAN_DRIFT = "bm"
    CRAMER_LUNDBERG = "cl"
    BROWNIAN_EXP_JUMPS = "bm_exp"


class Orientation(str, enum.Enum):
    SPECTRALLY_NEGATIVE = "sn"
    SPECTRALLY_POSITIVE = "sp"


_PARAM_NAMES = {
    Family.BROWNIAN_DRIFT: ("drift", "volatility"),
    Family.CRAMER_LUNDBERG: ("premium", "jump_rate", "jump_mean_reciprocal"),
    Family.BROWNIAN_EXP_JUMPS: ("drift", "volatility", "jump_rate", "jump_mean_reciprocal"),
}
_ALIASES = {
    "m": "drift",
    "sigma": "volatility",
    "c": "premium",
    "eta": "jump_rate",
    "rho": "jump_mean_reciprocal",
}


@dataclass(frozen=True)
class LevyModel:
    """Parametric spectrally one-sided Lévy process.

    Internally every family is stored as the coefficient set
    ``(drift, sigma, eta, rho)`` of ``psi(t) = drift*t + sigma^2 t^2/2 - eta*t/(rho+t)``;
    for Cramér-Lundberg ``drift`` is the premium rate and ``sigma`` is 0.
    """

    family: Family
    drift: float
    sigma: float = 0.0
    eta: float = 0.0
    rho: float = 1.0
    orientation: Orientation = Orientation.SPECTRALLY_NEGATIVE

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "orientation", Orientation(self.orientation))
        for name in ("drift", "sigma", "eta", "rho"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ConfigError(f"model parameter {name} must be finite")
            object.__setattr__(self, name, v)
        fam = self.family
        if fam in (Family.BROWNIAN_DRIFT, Family.BROWNIAN_EXP_JUMPS) and not self.sigma > 0:
            raise ConfigError("volatility must be > 0")
        if fam is Family.BROWNIAN_DRIFT and (self.eta != 0.0):
            raise ConfigError("Brownian model has no jumps")
        if fam is Family.CRAMER_LUNDBERG:
            if self.sigma != 0.0:
                raise ConfigError("Cramer-Lundberg model has no Brownian part")
            if not self.drift > 0:
                raise ConfigError("premium must be > 0")
        if self.eta < 0:
            raise ConfigError("jump_rate must be >= 0")
        if not self.rho > 0:
            raise ConfigError("jump_mean_reciprocal must be > 0")

    # constructors -------------------------------------------------------
    @classmethod
    def brownian(cls, drift, volatility, orientation="sn"):
        return cls(Family.BROWNIAN_DRIFT, drift, volatility, 0.0, 1.0, orientation)

    @classmethod
    def cramer_lundberg(cls, premium, jump_rate, jump_mean_reciprocal, orientation="sn"):
        return cls(Family.CRAMER_LUNDBERG, premium, 0.0, jump_rate, jump_mean_reciprocal, orientation)

    @classmethod
    def brownian_exp_jumps(cls, drift, volatility, jump_rate, jump_mean_reciprocal, orientation="sn"):
        return cls(
            Family.BROWNIAN_EXP_JUMPS, drift, volatility, jump_rate, jump_mean_reciprocal, orientation
        )

    @classmethod
    def from_dict(cls, data: dict) -> "LevyModel":
        """Build from ``{"family": ..., "params": {...}, "orientation": ...}``."""
        if not isinstance(data, dict):
            raise ConfigError("model descriptor must be a JSON object")
        for key in ("family", "params"):
            if key not in data:
                raise ConfigError(f"model descriptor missing field '{key}'")
        try:
            fam = Family(data["family"])
        except ValueError:
            raise ConfigError(f"unknown model family {data['family']!r}") from None
        try:
            orient = Orientation(data.get("orientation", "sn"))
        except ValueError:
            raise ConfigError(f"unknown orientation {data.get('orientation')!r}") from None
        raw = data["params"]
        if not isinstance(raw, dict):
            raise ConfigError("model field 'params' must be an object")
        params = {_ALIASES.get(k, k): v for k, v in raw.items()}
        names = _PARAM_NAMES[fam]
        for n in names:
            if n not in params:
                raise ConfigError(f"model params missing field '{n}'")
        extra = set(params) - set(names)
        if extra:
            raise ConfigError(f"unexpected model params: {sorted(extra)}")
        try:
            vals = [float(params[n]) for n in names]
        except (TypeError, ValueError):
            raise ConfigError("model params must be numbers") from None
        if fam is Family.BROWNIAN_DRIFT:
            return cls.brownian(*vals, orientation=orient)
        if fam is Family.CRAMER_LUNDBERG:
            return cls.cramer_lundberg(*vals, orientation=orient)
        return cls.brownian_exp_jumps(*vals, orientation=orient)

    def to_dict(self) -> dict:
        vals = {
            "drift": self.drift,
            "volatility": self.sigma,
            "premium": self.drift,
            "jump_rate": self.eta,
            "jump_mean_reciprocal": self.rho,
        }
        names = _PARAM_NAMES[self.family]
        return {
            "family": self.family.value,
            "params": {n: vals[n] for n in names},
            "orientation": self.orientation.value,
        }

    def with_orientation(self, orientation) -> "LevyModel":
        return LevyModel(self.family, self.drift, self.sigma, self.eta, self.rho, orientation)

    @property
    def spectrally_negative(self) -> bool:
        return self.orientation is Orientation.SPECTRALLY_NEGATIVE

    @property
    def has_jumps(self) -> bool:
        return self.family is not Family.BROWNIAN_DRIFT and self.eta > 0

    @property
    def unbounded_variation(self) -> bool:
        return self.sigma > 0

    def rational_form(self) -> tuple[np.ndarray, np.ndarray]:
        """Numerator and denominator polynomials of ``1/(psi(t) - q)`` as functions of q.

        Returns ``(num, den_q0)`` where ``den(q) = den_q0 - q * num``; coefficient
        arrays are highest power first (numpy.polyval convention).
        """
        m, s2, eta, rho = self.drift, self.sigma**2, self.eta, self.rho
        if self.family is Family.BROWNIAN_DRIFT:
            return np.array([1.0]), np.array([0.5 * s2, m, 0.0])
        # (psi(t) - q)(rho + t) = (m t + s2 t^2/2)(rho + t) - eta t - q (rho + t)
        num = np.array([1.0, rho])
        den0 = np.polymul([0.5 * s2, m, 0.0], [1.0, rho])
        den0 = np.polyadd(den0, [-eta, 0.0])
        den0 = np.trim_zeros(den0, "f")
        return num, den0


def _check_theta(theta):
    t = np.asarray(theta)
    if np.isrealobj(t) and np.any(t < 0):
        raise DomainError("Laplace exponent is only defined for theta >= 0")


def laplace_exponent(model: LevyModel, theta):
    """``psi(theta) = log E[exp(theta Y(1))]`` of the SN representative.

    Accepts scalars or arrays; complex arguments are evaluated by analytic
    continuation without the domain check.
    """
    if not np.iscomplexobj(theta):
        _check_theta(theta)
    return _psi(model, theta)


def _psi(model, t):
    # m - eta/(rho+t) rewritten around the mean rate to avoid cancellation near t=0
    inner = mean_rate(model) + 0.5 * model.sigma**2 * t
    if model.eta:
        inner = inner + model.eta * t / (model.rho * (model.rho + t))
    out = t * inner
    if np.ndim(out) == 0 and not np.iscomplexobj(out):
        return float(out)
    return out


def laplace_exponent_derivative(model: LevyModel, theta):
    t = theta
    d = model.drift + model.sigma**2 * t
    if model.eta:
        d = d - model.eta * model.rho / (model.rho + t) ** 2
    return d


def laplace_exponent_second_derivative(model: LevyModel, theta):
    d = model.sigma**2 + 0.0 * theta
    if model.eta:
        d = d + 2.0 * model.eta * model.rho / (model.rho + theta) ** 3
    return d


def characteristic_exponent(model: LevyModel, theta):
    """``Psi(theta) = -psi(i theta)`` for real ``theta`` (complex result)."""
    t = 1j * np.asarray(theta, dtype=float)
    out = -_psi(model, t)
    return complex(out) if np.ndim(out) == 0 else out


def mean_rate(model: LevyModel) -> float:
    """``psi'(0+)``: the mean of ``Y(1)`` for the SN representative."""
    m = model.drift
    if model.eta:
        m -= model.eta / model.rho
    return m


def critical_point(model: LevyModel) -> float:
    """Largest ``s >= 0`` with ``psi'(s) = 0`` (0 if ``psi`` is increasing on ``[0, inf)``)."""
    if mean_rate(model) >= 0:
        return 0.0
    if model.family is Family.BROWNIAN_DRIFT:
        return -model.drift / model.sigma**2
    if model.family is Family.CRAMER_LUNDBERG:
        # c = eta rho / (rho + s)^2
        return math.sqrt(model.eta * model.rho / model.drift) - model.rho
    return find_root_increasing(lambda s: laplace_exponent_derivative(model, s), 0.0, 0.0)


def phi(model: LevyModel, q: float) -> float:
    """Right inverse ``Phi(q)``: the largest root of ``psi(s) = q``."""
    q = float(q)
    if q < 0:
        raise DomainError("q must be >= 0")
    fam = model.family
    if fam is Family.BROWNIAN_DRIFT:
        m, s2 = model.drift, model.sigma**2
        disc = math.sqrt(m * m + 2.0 * s2 * q)
        if m <= 0:
            return (disc - m) / s2
        # stable form of (-m + disc)/s2
        return 2.0 * q / (m + disc)
    if fam is Family.CRAMER_LUNDBERG:
        c, eta, rho = model.drift, model.eta, model.rho
        b = c * rho - eta - q
        disc = math.sqrt(b * b + 4.0 * c * q * rho)
        if b <= 0:
            return (disc - b) / (2.0 * c)
        return 2.0 * q * rho / (b + disc)
    s0 = critical_point(model)
    root = find_root_increasing(lambda s: _psi(model, s), q, s0)
    # Newton polish; psi is convex and increasing past s0
    for _ in range(3):
        d = laplace_exponent_derivative(model, root)
        if d <= 0:
            break
        step = (_psi(model, root) - q) / d
        if not abs(step) > 0:
            break
        root -= step
    return max(root, s0)


# ---------------------------------------------------------------------------
# rewards


class RewardFamily(str, enum.Enum):
    AFFINE = "affine"
    BOUNDED_LOGISTIC = "logistic"
    MONOTONE_TABLE = "table"


@dataclass(frozen=True)
class RewardSpec:
    """Strictly increasing reward function ``R`` (lump) or ``r`` (running).

    ``params`` holds ``(a, b)`` for affine rewards, ``(lo, hi, center, slope)``
    for logistic ones, and ``knots`` the sorted ``(x, value)`` pairs of a
    monotone table.
    """

    family: RewardFamily
    params: tuple = ()
    knots: tuple = ()
    role: str = "R"
    _xs: np.ndarray = field(default=None, repr=False, compare=False)
    _vs: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "family", RewardFamily(self.family))
        if self.role not in ("R", "r"):
            raise ConfigError("reward role must be 'R' or 'r'")
        fam = self.family
        if fam is RewardFamily.AFFINE:
            if len(self.params) != 2:
                raise ConfigError("affine reward needs (a, b)")
            a, b = map(float, self.params)
            if not b > 0:
                raise ConfigError("affine reward slope b must be > 0")
            object.__setattr__(self, "params", (a, b))
        elif fam is RewardFamily.BOUNDED_LOGISTIC:
            if len(self.params) != 4:
                raise ConfigError("logistic reward needs (lo, hi, center, slope)")
            lo, hi, center, slope = map(float, self.params)
            if not hi > lo:
                raise ConfigError("logistic reward needs hi > lo")
            if not slope > 0:
                raise ConfigError("logistic reward slope must be > 0")
            object.__setattr__(self, "params", (lo, hi, center, slope))
        else:
            pts = [(float(x), float(v)) for x, v in self.knots]
            if len(pts) < 2:
                raise ConfigError("table reward needs at least two knots")
            xs = np.array([p[0] for p in pts])
            vs = np.array([p[1] for p in pts])
            if np.any(np.diff(xs) <= 0):
                raise ConfigError("table knots must have strictly increasing x")
            if np.any(np.diff(vs) <= 0):
                raise ConfigError("table knot values must be strictly increasing")
            object.__setattr__(self, "knots", tuple(pts))
            object.__setattr__(self, "_xs", xs)
            object.__setattr__(self, "_vs", vs)
        self._validate_increasing()

    @classmethod
    def affine(cls, a, b, role="R"):
        return cls(RewardFamily.AFFINE, (a, b), role=role)

    @classmethod
    def logistic(cls, lo, hi, center, slope, role="R"):
        return cls(RewardFamily.BOUNDED_LOGISTIC, (lo, hi, center, slope), role=role)

    @classmethod
    def table(cls, knots: Sequence[tuple[float, float]], role="R"):
        return cls(RewardFamily.MONOTONE_TABLE, knots=tuple(knots), role=role)

    @classmethod
    def near_constant(cls, c: float, eps: float = 1e-12, role="R"):
        """Strictly increasing stand-in ``c + eps*x`` for the constant reward ``c``."""
        return cls.affine(c, eps, role=role)

    @classmethod
    def from_dict(cls, data: dict, role="R") -> "RewardSpec":
        if not isinstance(data, dict):
            raise ConfigError("reward descriptor must be a JSON object")
        if "family" not in data:
            raise ConfigError("reward descriptor missing field 'family'")
        fam = data["family"]
        role = data.get("role", role)
        if fam == "table":
            if "knots" not in data:
                raise ConfigError("reward descriptor missing field 'knots'")
            return cls.table([tuple(k) for k in data["knots"]], role=role)
        if "params" not in data:
            raise ConfigError("reward descriptor missing field 'params'")
        p = data["params"]
        names = {"affine": ("a", "b"), "logistic": ("lo", "hi", "center", "slope")}.get(fam)
        if names is None:
            raise ConfigError(f"unknown reward family {fam!r}")
        if isinstance(p, dict):
            for n in names:
                if n not in p:
                    raise ConfigError(f"reward params missing field '{n}'")
            vals = [p[n] for n in names]
        else:
            vals = list(p)
        try:
            vals = [float(v) for v in vals]
        except (TypeError, ValueError):
            raise ConfigError("reward params must be numbers") from None
        if fam == "affine":
            return cls.affine(*vals, role=role)
        return cls.logistic(*vals, role=role)

    def to_dict(self) -> dict:
        if self.family is RewardFamily.MONOTONE_TABLE:
            return {"family": "table", "knots": [list(k) for k in self.knots], "role": self.role}
        names = ("a", "b") if self.family is RewardFamily.AFFINE else ("lo", "hi", "center", "slope")
        return {
            "family": self.family.value,
            "params": dict(zip(names, self.params)),
            "role": self.role,
        }

    def with_role(self, role: str) -> "RewardSpec":
        return RewardSpec(self.family, self.params, self.knots, role)

    @property
    def is_affine(self) -> bool:
        return self.family is RewardFamily.AFFINE

    def __call__(self, x):
        fam = self.family
        if fam is RewardFamily.AFFINE:
            a, b = self.params
            return a + b * np.asarray(x, dtype=float) if np.ndim(x) else a + b * float(x)
        if fam is RewardFamily.BOUNDED_LOGISTIC:
            lo, hi, center, slope = self.params
            if isinstance(x, (float, int)):
                z = slope * (x - center)
                e = math.exp(-abs(z))
                return lo + (hi - lo) * (1.0 / (1.0 + e) if z >= 0 else e / (1.0 + e))
            z = slope * (np.asarray(x, dtype=float) - center)
            # 1/(1+e^{-z}) written to avoid overflow for either sign of z
            e = np.exp(-np.abs(z))
            sig = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
            out = lo + (hi - lo) * sig
            return float(out) if np.ndim(out) == 0 else out
        xs, vs = self._xs, self._vs
        xa = np.asarray(x, dtype=float)
        out = np.interp(xa, xs, vs)
        left = (vs[1] - vs[0]) / (xs[1] - xs[0])
        right = (vs[-1] - vs[-2]) / (xs[-1] - xs[-2])
        out = np.where(xa < xs[0], vs[0] + left * (xa - xs[0]), out)
        out = np.where(xa > xs[-1], vs[-1] + right * (xa - xs[-1]), out)
        return float(out) if np.ndim(out) == 0 else out

    def check_grid(self) -> np.ndarray:
        fam = self.family
        if fam is RewardFamily.BOUNDED_LOGISTIC:
            _, _, center, slope = self.params
            return np.linspace(center - 20.0 / slope, center + 20.0 / slope, 1000)
        if fam is RewardFamily.MONOTONE_TABLE:
            lo, hi = self._xs[0], self._xs[-1]
            pad = max(1.0, hi - lo)
            return np.linspace(lo - pad, hi + pad, 1000)
        return np.linspace(-25.0, 25.0, 1000)

    def _validate_increasing(self):
        vals = self(self.check_grid())
        if not np.all(np.diff(vals) > 0):
            raise ConfigError("reward function is not strictly increasing on its check grid")

"""Zero-scale function W in exponential-sum form.

For every supported family ``1/psi`` is a rational function whose poles are
the real roots z_i of psi, all simple. Partial fractions give

    W(x) = sum_i exp(z_i x) / psi'(z_i),    x >= 0,

which is what :func:`build_w` returns. Keeping W as a list of
``(coefficient, rate)`` pairs makes W', and the integrals

    I1(a) = int_0^a W,   I2(a) = int_0^a x W(x),   I3(a) = int_0^a e^{-Phi x} W(x)

available in closed form.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ArgumentError, DegenerateModelError, NumericsError
from .levy_model import Family, LevyModel, _psi_deriv_raw, phi, quadratic_roots

__all__ = [
    "ExpSumFunction",
    "IntegralKind",
    "build_w",
    "eval_w",
    "eval_w_prime",
    "integral_I",
]


class IntegralKind(str, Enum):
    I1 = "I1"
    I2 = "I2"
    I3 = "I3"


@dataclass(frozen=True)
class ExpSumFunction:
    """``x -> sum_i A_i exp(theta_i x)`` on ``x >= 0`` and 0 on ``x < 0``."""

    terms: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        terms = tuple((float(A), float(theta)) for A, theta in self.terms)
        rates = [theta for _, theta in terms]
        if len(set(rates)) != len(rates):
            raise DegenerateModelError(f"exponents must be distinct, got {rates}")
        object.__setattr__(self, "terms", terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([A for A, _ in self.terms])

    @property
    def rates(self) -> np.ndarray:
        return np.array([theta for _, theta in self.terms])

    def __call__(self, x):
        return eval_w(self, x)

    def derivative(self, x):
        return eval_w_prime(self, x)

    def integral(self, kind, a, phi0: float | None = None):
        return integral_I(self, kind, a, phi0)

    def at_zero(self) -> float:
        return float(sum(A for A, _ in self.terms))

    def to_json(self) -> str:
        return json.dumps([[A, theta] for A, theta in self.terms])

    @classmethod
    def from_json(cls, text: str) -> "ExpSumFunction":
        return cls(tuple((A, theta) for A, theta in json.loads(text)))


def build_w(model: LevyModel) -> ExpSumFunction:
    """Scale function W of a valid model (raises ModelConditionError otherwise)."""
    phi0 = phi(model)
    if model.family is Family.JUMP_DIFFUSION_EXP:
        s2, c, mu, eta = model.sigma ** 2, model.c, model.mu, model.eta
        neg, _ = quadratic_roots(0.5 * s2, 0.5 * s2 * eta + c, c * eta - mu)
        roots = [0.0, phi0, neg]
    else:
        roots = [0.0, phi0]

    gaps = [abs(r1 - r2) for i, r1 in enumerate(roots) for r2 in roots[i + 1:]]
    if min(gaps) <= 1e-12 * max(1.0, max(abs(r) for r in roots)):
        raise DegenerateModelError(f"repeated roots of psi: {roots}")

    terms = []
    for z in roots:
        d = float(_psi_deriv_raw(model, z, 1))
        if d == 0 or not math.isfinite(d):
            raise DegenerateModelError(f"psi'({z}) = {d}")
        terms.append((1.0 / d, z))
    w = ExpSumFunction(tuple(terms))

    w_prime0 = float(sum(A * theta for A, theta in w.terms))
    if not (math.isfinite(w_prime0) and w_prime0 > 0):
        raise NumericsError(f"W'(0) = {w_prime0} is not finite and positive")
    return w


def _out(arr):
    arr = np.asarray(arr, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def eval_w(w: ExpSumFunction, x):
    x = np.asarray(x, dtype=float)
    xp = np.maximum(x, 0.0)
    total = np.zeros_like(xp)
    for A, theta in w.terms:
        total = total + A * np.exp(theta * xp)
    return _out(np.where(x < 0, 0.0, total))


def eval_w_prime(w: ExpSumFunction, x):
    """W'(x); at x = 0 the right derivative."""
    x = np.asarray(x, dtype=float)
    xp = np.maximum(x, 0.0)
    total = np.zeros_like(xp)
    for A, theta in w.terms:
        total = total + A * theta * np.exp(theta * xp)
    return _out(np.where(x < 0, 0.0, total))


def _expm1_over_x(u: np.ndarray) -> np.ndarray:
    # (e^u - 1)/u with the u = 0 limit
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.expm1(u) / u
    return np.where(u == 0, 1.0, r)


_I2_SERIES = np.array([1.0 / (math.factorial(k) * (k + 2)) for k in range(14)])


def _x_exp_kernel(u: np.ndarray) -> np.ndarray:
    # int_0^1 s e^{u s} ds = (e^u (u - 1) + 1) / u^2
    small = np.abs(u) < 1e-2
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        direct = (np.exp(u) * (u - 1.0) + 1.0) / (u * u)
    series = np.polynomial.polynomial.polyval(u, _I2_SERIES)
    return np.where(small, series, direct)


def integral_I(w: ExpSumFunction, kind, a, phi0: float | None = None):
    """Closed-form I1, I2 or I3 of W on [0, a]; ``phi0`` is required for I3."""
    kind = IntegralKind(kind)
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ArgumentError("integration limit must be >= 0")
    if kind is IntegralKind.I3:
        if phi0 is None or not phi0 > 0:
            raise ArgumentError("I3 needs phi0 > 0")
        shift = float(phi0)
    else:
        shift = 0.0

    total = np.zeros_like(a)
    for A, theta in w.terms:
        rate = theta - shift
        u = rate * a
        if kind is IntegralKind.I2:
            total = total + A * a * a * _x_exp_kernel(u)
        else:
            total = total + A * a * _expm1_over_x(u)
    return _out(total)

"""Analytic solution of the squared-error prediction problem.

Stopping at time tau costs ``E[(sup_t X_t - X_tau - b)^2]``. Conditioning on
the drawdown ``y = sup_{s<=t} X_s - X_t`` turns this into stopping the
reflected process Y with payoff H(y). If b does not exceed a model-dependent
threshold it is optimal to stop at once; otherwise the first time Y reaches a
barrier ``a*`` (the unique root of ``g``) is optimal and the value function
is ``f_{a*}``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Any, Callable, Union

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq

from .errors import ArgumentError, CaseOneError, DomainError, NotApplicable, NumericsError
from .levy_model import LevyModel, _psi_deriv_raw, phi
from .scale import ExpSumFunction, build_w, eval_w, eval_w_prime, integral_I

__all__ = [
    "QuadraticPenalty",
    "GeneralPenalty",
    "Case",
    "StoppingSolution",
    "MonotoneVerdict",
    "transform_h_quadratic",
    "transform_h_quadratic_prime",
    "transform_h_general",
    "monotone_penalty_verdict",
    "threshold_b_star",
    "g_function",
    "find_a_star",
    "f_a",
    "f_a_prime",
    "f_a_left_limit",
    "solve",
]

QUAD_TOL = 1e-10


@dataclass(frozen=True)
class QuadraticPenalty:
    b: float

    def __post_init__(self) -> None:
        b = float(self.b)
        if not (math.isfinite(b) and b > 0):
            raise ArgumentError(f"quadratic penalty needs b > 0, got {self.b}")
        object.__setattr__(self, "b", b)

    def __call__(self, x):
        return (np.asarray(x, dtype=float) - self.b) ** 2


@dataclass(frozen=True)
class GeneralPenalty:
    """Non-negative continuous penalty on [0, inf), optionally flagged monotone."""

    phi: Callable[[float], float]
    nondecreasing: bool = False

    def __call__(self, x):
        return self.phi(x)


Penalty = Union[QuadraticPenalty, GeneralPenalty]


class Case(str, Enum):
    STOP_IMMEDIATELY = "StopImmediately"
    BARRIER = "Barrier"


@dataclass(frozen=True)
class _Consts:
    phi: float
    d1_0: float
    d2_0: float
    d1_phi: float


@lru_cache(maxsize=256)
def _consts(model: LevyModel) -> _Consts:
    Phi = phi(model)
    return _Consts(
        phi=Phi,
        d1_0=float(_psi_deriv_raw(model, 0.0, 1)),
        d2_0=float(_psi_deriv_raw(model, 0.0, 2)),
        d1_phi=float(_psi_deriv_raw(model, Phi, 1)),
    )


def _out(arr):
    arr = np.asarray(arr, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def _check_y(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("drawdown y must be >= 0")
    return y


def _h(Phi: float, b: float, y):
    return (y - b) ** 2 + (2.0 / Phi) * np.exp(-Phi * y) * (y - b + 1.0 / Phi)


def transform_h_quadratic(model: LevyModel, b: float, y):
    """``E[(y + (S - y)^+ - b)^2]`` with S ~ Exp(Phi), in closed form."""
    y = _check_y(y)
    return _out(_h(_consts(model).phi, float(b), y))


def transform_h_quadratic_prime(model: LevyModel, b: float, y):
    """H'(y) = 2 (y - b)(1 - exp(-Phi y))."""
    y = _check_y(y)
    Phi = _consts(model).phi
    return _out(2.0 * (y - b) * -np.expm1(-Phi * y))


def _quad(func, lo, hi, what: str) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            val, err = quad(func, lo, hi, epsabs=QUAD_TOL, epsrel=1e-12, limit=500)
        except IntegrationWarning as exc:
            raise NumericsError(f"{what}: {exc}") from None
    if not math.isfinite(val):
        raise NumericsError(f"{what}: non-finite result")
    return val


def check_integrable(model: LevyModel, penalty: GeneralPenalty) -> float:
    """Return ``int_0^inf phi(x) e^{-Phi x} dx``; raise ArgumentError if it diverges."""
    Phi = _consts(model).phi
    try:
        # x = -log(u)/Phi maps (0, 1] onto [0, inf)
        total = _quad(lambda u: penalty(-math.log(u) / Phi) / Phi, 0.0, 1.0, "integrability")
    except NumericsError as exc:
        raise ArgumentError(f"penalty is not integrable against exp(-Phi x): {exc}") from None
    return total


def transform_h_general(model: LevyModel, penalty: GeneralPenalty, y: float) -> float:
    """``phi(y)(1 - e^{-Phi y}) + int_y^inf phi(z) Phi e^{-Phi z} dz`` by quadrature."""
    y = float(y)
    if y < 0:
        raise DomainError("drawdown y must be >= 0")
    Phi = _consts(model).phi
    # z = y - log(u)/Phi, so the tail is e^{-Phi y} int_0^1 phi(z(u)) du
    tail = _quad(lambda u: penalty(y - math.log(u) / Phi), 0.0, 1.0, "tail integral of H")
    return float(penalty(y)) * -math.expm1(-Phi * y) + math.exp(-Phi * y) * tail


@dataclass(frozen=True)
class MonotoneVerdict:
    case: Case
    value: float


def monotone_penalty_verdict(model: LevyModel, penalty: Penalty) -> MonotoneVerdict:
    """For a non-decreasing penalty stopping at once is optimal; value ``E[phi(sup X)]``."""
    if not (isinstance(penalty, GeneralPenalty) and penalty.nondecreasing):
        raise NotApplicable("penalty is not flagged non-decreasing")
    check_integrable(model, penalty)
    return MonotoneVerdict(Case.STOP_IMMEDIATELY, transform_h_general(model, penalty, 0.0))


def threshold_b_star(model: LevyModel) -> float:
    """``(psi'(Phi)/Phi - psi''(0)/2) / psi'(0)``; zero exactly when there are no jumps."""
    k = _consts(model)
    if not model.has_jumps:
        return 0.0
    return (k.d1_phi / k.phi - 0.5 * k.d2_0) / k.d1_0


def _g(k: _Consts, w: ExpSumFunction, b: float, a):
    i1 = integral_I(w, "I1", a)
    i3 = integral_I(w, "I3", a, k.phi)
    bracket = k.d2_0 - 2.0 * a * k.d1_0 + 2.0 * b * k.d1_0 - (2.0 * k.d1_phi / k.phi) * np.exp(-k.phi * a)
    return 2.0 * k.d1_0 * i1 - 2.0 * k.d1_phi * i3 + eval_w(w, a) * bracket


def _g_scale(k: _Consts, w: ExpSumFunction, b: float, a: float) -> float:
    # sum of absolute sizes of the terms of g, used to judge the root residual
    i1 = integral_I(w, "I1", a)
    i3 = integral_I(w, "I3", a, k.phi)
    br = abs(k.d2_0) + 2 * abs(k.d1_0) * (a + b) + 2 * abs(k.d1_phi) / k.phi
    return 2 * abs(k.d1_0) * i1 + 2 * abs(k.d1_phi) * i3 + abs(eval_w(w, a)) * br


def g_function(model: LevyModel, w: ExpSumFunction, b: float, a):
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise DomainError("barrier a must be >= 0")
    return _out(_g(_consts(model), w, float(b), a))


def find_a_star(model: LevyModel, w: ExpSumFunction, b: float, n_scan: int = 64) -> float:
    """Unique root of g on (0, inf); lies in (0, b]."""
    b = float(b)
    bstar = threshold_b_star(model)
    if b <= bstar:
        raise CaseOneError(f"b = {b} <= threshold {bstar}: stopping immediately is optimal")
    k = _consts(model)
    g = lambda a: float(_g(k, w, b, a))

    grid = b * np.arange(1, n_scan + 1) / n_scan
    vals = _g(k, w, b, grid)
    pos = np.flatnonzero(vals > 0)
    if pos.size:
        i = int(pos[0])
        hi = float(grid[i])
        lo = float(grid[i - 1]) if i > 0 else 0.5 * hi
        for _ in range(200):
            if g(lo) < 0:
                break
            lo *= 0.5
        else:
            raise NumericsError("could not bracket a* from below")
    else:
        if vals[-1] == 0.0:
            return b
        lo, hi = b, 2.0 * b
        for _ in range(200):
            if g(hi) > 0:
                break
            lo, hi = hi, 2.0 * hi
        else:
            raise NumericsError("could not bracket a* from above")

    root = brentq(g, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(g(root)) > 1e-12 * _g_scale(k, w, b, root):
        raise NumericsError(f"residual g(a*) = {g(root)} too large")
    return root


def _f_branch(k: _Consts, w: ExpSumFunction, b: float, a: float, y):
    # f_a(y) for y < a (continued to y = a as the left limit)
    d = a - y
    return (
        _h(k.phi, b, y)
        - integral_I(w, "I1", d) * (2.0 * k.d1_0 * (b - y) + k.d2_0)
        + 2.0 * k.d1_0 * integral_I(w, "I2", d)
        + 2.0 * k.d1_phi * np.exp(-k.phi * y) * integral_I(w, "I3", d, k.phi) / k.phi
        + float(_g(k, w, b, a)) * eval_w(w, d) / eval_w_prime(w, a)
    )


def _f_branch_prime(k: _Consts, w: ExpSumFunction, b: float, a: float, y):
    d = a - y
    wd = eval_w(w, d)
    return (
        2.0 * (y - b) * -np.expm1(-k.phi * y)
        + wd * (2.0 * k.d1_0 * (b - y) + k.d2_0)
        + 2.0 * k.d1_0 * integral_I(w, "I1", d)
        - 2.0 * k.d1_0 * d * wd
        - 2.0 * k.d1_phi * np.exp(-k.phi * y) * integral_I(w, "I3", d, k.phi)
        - (2.0 * k.d1_phi / k.phi) * np.exp(-k.phi * a) * wd
        - float(_g(k, w, b, a)) * eval_w_prime(w, d) / eval_w_prime(w, a)
    )


def _check_a(a: float) -> float:
    a = float(a)
    if not a > 0:
        raise DomainError(f"barrier a must be > 0, got {a}")
    return a


def f_a(model: LevyModel, w: ExpSumFunction, b: float, a: float, y):
    """``E[H(Y^y at the first time Y >= a)]`` in closed form."""
    a = _check_a(a)
    y = _check_y(y)
    k = _consts(model)
    below = y < a
    if not model.has_jumps:
        # the drawdown creeps up to a, so f_a = H(a) below the barrier; the
        # general branch agrees but cancels terms of size W(a) b^2 to get there
        inside = np.full_like(y, _h(k.phi, float(b), a))
        return _out(np.where(below, inside, _h(k.phi, float(b), y)))
    ys = np.where(below, y, 0.0)
    return _out(np.where(below, _f_branch(k, w, float(b), a, ys), _h(k.phi, float(b), y)))


def f_a_prime(model: LevyModel, w: ExpSumFunction, b: float, a: float, y):
    """Derivative of f_a in y; at ``y == a`` the left derivative is returned."""
    a = _check_a(a)
    y = _check_y(y)
    k = _consts(model)
    left = y <= a
    ys = np.where(left, y, 0.0)
    right = 2.0 * (y - b) * -np.expm1(-k.phi * y)
    inside = np.zeros_like(y) if not model.has_jumps else _f_branch_prime(k, w, float(b), a, ys)
    return _out(np.where(left, inside, right))


def f_a_left_limit(model: LevyModel, w: ExpSumFunction, b: float, a: float) -> float:
    """``f_a(a-)``; differs from H(a) by ``g(a) W(0) / W'(a)``."""
    a = _check_a(a)
    k = _consts(model)
    if not model.has_jumps:
        return float(_h(k.phi, float(b), a))
    return float(_f_branch(k, w, float(b), a, a))


@dataclass(frozen=True, eq=False)
class StoppingSolution:
    case: Case
    b: float
    b_star: float
    a_star: float | None
    model: LevyModel
    w: ExpSumFunction

    def h(self, y):
        return transform_h_quadratic(self.model, self.b, y)

    def value(self, y):
        if self.case is Case.STOP_IMMEDIATELY:
            return self.h(y)
        return f_a(self.model, self.w, self.b, self.a_star, y)

    def to_dict(self) -> dict[str, Any]:
        return {
            "case": self.case.value,
            "b": self.b,
            "b_star": self.b_star,
            "a_star": self.a_star,
            "phi": _consts(self.model).phi,
            "V0": self.value(0.0),
            "H0": self.h(0.0),
        }


def solve(model: LevyModel, penalty: Penalty | float) -> StoppingSolution:
    """Optimal rule for the quadratic penalty ``(x - b)^2``.

    ``b <= b*`` (boundary included) gives StopImmediately with V = H;
    otherwise a Barrier solution at ``a*``.
    """
    if isinstance(penalty, GeneralPenalty):
        raise NotApplicable(
            "only the quadratic penalty is solved; use monotone_penalty_verdict "
            "or transform_h_general for other penalties"
        )
    if not isinstance(penalty, QuadraticPenalty):
        penalty = QuadraticPenalty(penalty)
    w = build_w(model)
    bstar = threshold_b_star(model)
    if penalty.b <= bstar:
        return StoppingSolution(Case.STOP_IMMEDIATELY, penalty.b, bstar, None, model, w)
    a_star = find_a_star(model, w, penalty.b)
    return StoppingSolution(Case.BARRIER, penalty.b, bstar, a_star, model, w)

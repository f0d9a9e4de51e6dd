"""Parametric spectrally negative Lévy processes.

Three families are supported, all of the form

    X_t = sigma * B_t + c * t - sum_{k <= N_t} Z_k

with N a Poisson process of rate ``mu`` and Z_k ~ Exp(eta):

* ``BrownianDrift``      -- no jumps (mu = 0), sigma > 0, drift c < 0
* ``CramerLundbergExp``  -- sigma = 0, premium rate c > 0
* ``JumpDiffusionExp``   -- sigma > 0 plus exponential jumps

Every family shares the Laplace exponent

    psi(z) = sigma^2 z^2 / 2 + c z - mu z / (z + eta)

(the compound Poisson part reduces to ``-mu + mu eta / (z + eta)``), so one
closed form and its derivatives serve all three. The jump part has finite
activity, hence the linear coefficient is simply ``c``; no truncation
convention for small jumps is exposed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Any, Mapping

import numpy as np
from scipy.optimize import brentq

from .errors import ArgumentError, DomainError, ModelConditionError

__all__ = [
    "Family",
    "LevyModel",
    "CheckResult",
    "ValidationReport",
    "psi",
    "psi_deriv",
    "phi",
    "validate",
    "require_valid",
]


class Family(str, Enum):
    BROWNIAN_DRIFT = "BrownianDrift"
    CRAMER_LUNDBERG_EXP = "CramerLundbergExp"
    JUMP_DIFFUSION_EXP = "JumpDiffusionExp"


@dataclass(frozen=True)
class LevyModel:
    """Immutable parameter set of a supported process.

    Construction only checks what the closed forms need in order to make
    sense (signs of sigma, mu, eta per family). Whether the process drifts
    to -infinity is a separate question answered by :func:`validate`.
    """

    family: Family
    sigma: float = 0.0
    c: float = 0.0
    mu: float = 0.0
    eta: float = 0.0

    def __post_init__(self) -> None:
        try:
            fam = Family(self.family)
        except ValueError:
            raise ArgumentError(f"unknown family {self.family!r}") from None
        object.__setattr__(self, "family", fam)
        for name in ("sigma", "c", "mu", "eta"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ArgumentError(f"{name} must be finite, got {val}")
            object.__setattr__(self, name, val)

        if self.sigma < 0:
            raise ArgumentError("sigma must be >= 0")
        if fam is Family.BROWNIAN_DRIFT:
            if self.sigma <= 0:
                raise ArgumentError("BrownianDrift needs sigma > 0")
            if self.mu != 0 or self.eta != 0:
                raise ArgumentError("BrownianDrift takes no jump parameters")
        else:
            if self.mu <= 0 or self.eta <= 0:
                raise ArgumentError(f"{fam.value} needs mu > 0 and eta > 0")
            if fam is Family.CRAMER_LUNDBERG_EXP:
                if self.sigma != 0:
                    raise ArgumentError("CramerLundbergExp has sigma = 0")
                if self.c <= 0:
                    raise ArgumentError("CramerLundbergExp needs premium rate c > 0")
            elif self.sigma <= 0:
                raise ArgumentError("JumpDiffusionExp needs sigma > 0")

    @classmethod
    def brownian_drift(cls, sigma: float, c: float) -> "LevyModel":
        return cls(Family.BROWNIAN_DRIFT, sigma=sigma, c=c)

    @classmethod
    def cramer_lundberg(cls, c: float, mu: float, eta: float) -> "LevyModel":
        return cls(Family.CRAMER_LUNDBERG_EXP, c=c, mu=mu, eta=eta)

    @classmethod
    def jump_diffusion(cls, sigma: float, c: float, mu: float, eta: float) -> "LevyModel":
        return cls(Family.JUMP_DIFFUSION_EXP, sigma=sigma, c=c, mu=mu, eta=eta)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LevyModel":
        """Build from ``{family, sigma, c, mu, eta}``; absent numbers default to 0."""
        unknown = set(data) - {"family", "sigma", "c", "mu", "eta"}
        if unknown:
            raise ArgumentError(f"unknown model fields: {sorted(unknown)}")
        if "family" not in data:
            raise ArgumentError("model needs a 'family' field")
        try:
            nums = {k: float(data.get(k, 0.0)) for k in ("sigma", "c", "mu", "eta")}
        except (TypeError, ValueError) as exc:
            raise ArgumentError(f"non-numeric model parameter: {exc}") from None
        return cls(data["family"], **nums)

    @classmethod
    def from_json(cls, text: str) -> "LevyModel":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": self.family.value,
            "sigma": self.sigma,
            "c": self.c,
            "mu": self.mu,
            "eta": self.eta,
        }

    @property
    def has_jumps(self) -> bool:
        return self.mu > 0

    @property
    def bounded_variation(self) -> bool:
        return self.sigma == 0

    @property
    def domain_lower(self) -> float:
        """Open lower end of the domain of psi."""
        return -self.eta if self.has_jumps else -math.inf


def _check_domain(model: LevyModel, z) -> None:
    if model.has_jumps and np.any(np.asarray(z) <= -model.eta):
        raise DomainError(f"psi is infinite for z <= -eta = {-model.eta}")


def _as_output(arr):
    arr = np.asarray(arr, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def _psi_raw(model: LevyModel, z):
    s2, c, mu, eta = model.sigma ** 2, model.c, model.mu, model.eta
    out = 0.5 * s2 * z * z + c * z
    if mu:
        out = out - mu * z / (z + eta)
    return out


def _psi_deriv_raw(model: LevyModel, z, order: int):
    s2, c, mu, eta = model.sigma ** 2, model.c, model.mu, model.eta
    z = np.asarray(z, dtype=float)
    if order == 1:
        out = s2 * z + c
        if mu:
            out = out - mu * eta / (z + eta) ** 2
    elif order == 2:
        out = s2 + np.zeros_like(z)
        if mu:
            out = out + 2.0 * mu * eta / (z + eta) ** 3
    else:
        out = np.zeros_like(z)
        if mu:
            out = out - 6.0 * mu * eta / (z + eta) ** 4
    return out


def psi(model: LevyModel, z):
    """Laplace exponent ``log E[exp(z X_1)]``."""
    z = np.asarray(z, dtype=float)
    _check_domain(model, z)
    return _as_output(_psi_raw(model, z))


def psi_deriv(model: LevyModel, z, order: int = 1):
    """Analytic first, second or third derivative of psi."""
    if order not in (1, 2, 3):
        raise ArgumentError(f"order must be 1, 2 or 3, got {order!r}")
    z = np.asarray(z, dtype=float)
    _check_domain(model, z)
    return _as_output(_psi_deriv_raw(model, z, order))


def quadratic_roots(a: float, b: float, c: float) -> tuple[float, float]:
    """Real roots of ``a z^2 + b z + c`` (a != 0), cancellation-free, ascending."""
    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise ArgumentError("quadratic has no real roots")
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    if q == 0.0:
        return (0.0, 0.0)
    r1, r2 = q / a, c / q
    return (min(r1, r2), max(r1, r2))


def _phi0_raw(model: LevyModel) -> float:
    """Largest non-negative root of psi; 0 when the process does not drift down."""
    s2, c, mu, eta = model.sigma ** 2, model.c, model.mu, model.eta
    fam = model.family
    if fam is Family.BROWNIAN_DRIFT:
        root = -2.0 * c / s2
    elif fam is Family.CRAMER_LUNDBERG_EXP:
        root = mu / c - eta
    else:
        # psi(z)(z + eta) = z * (s2/2 z^2 + (s2 eta/2 + c) z + (c eta - mu))
        root = quadratic_roots(0.5 * s2, 0.5 * s2 * eta + c, c * eta - mu)[1]
    return max(root, 0.0)


def _polish(model: LevyModel, z: float, q: float) -> float:
    # one Newton step; keeps the closed forms within the 1e-12 residual budget
    d = float(_psi_deriv_raw(model, z, 1))
    if d > 0:
        z_new = z - (float(_psi_raw(model, z)) - q) / d
        if abs(float(_psi_raw(model, z_new)) - q) <= abs(float(_psi_raw(model, z)) - q):
            return z_new
    return z


@lru_cache(maxsize=256)
def _phi_cached(model: LevyModel, q: float) -> float:
    phi0 = _phi0_raw(model)
    if phi0 <= 0:
        raise ModelConditionError(
            f"{model.family.value} with {model.to_dict()} has psi'(0) >= 0: "
            "the ultimate supremum is infinite"
        )
    if q == 0:
        return _polish(model, phi0, 0.0)
    lo = phi0
    if float(_psi_raw(model, lo)) >= q:
        # q below the rounding noise of psi near Phi(0)
        return _polish(model, phi0, q)
    hi = max(2.0 * phi0, 1.0)
    while float(_psi_raw(model, hi)) <= q:
        lo, hi = hi, 2.0 * hi
    root = brentq(lambda z: float(_psi_raw(model, z)) - q, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return _polish(model, root, q)


def phi(model: LevyModel, q: float = 0.0) -> float:
    """Right inverse of psi: the largest non-negative root of ``psi(z) = q``."""
    q = float(q)
    if not q >= 0:
        raise ArgumentError(f"q must be >= 0, got {q}")
    return _phi_cached(model, q)


def require_valid(model: LevyModel) -> float:
    """Return Phi(0), raising ModelConditionError if it vanishes."""
    return phi(model, 0.0)


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    value: float
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    family: str
    phi0: float
    mean: float
    variance: float
    bounded_variation: bool
    checks: dict[str, CheckResult] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(chk.passed for chk in self.checks.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "phi0": self.phi0,
            "mean": self.mean,
            "variance": self.variance,
            "bounded_variation": self.bounded_variation,
            "ok": self.ok,
            "checks": {
                name: {"passed": chk.passed, "value": chk.value, "detail": chk.detail}
                for name, chk in self.checks.items()
            },
        }


def validate(model: LevyModel) -> ValidationReport:
    """Summarise the drift condition and the two standing assumptions.

    Never raises; failures are carried in ``report.checks``.
    """
    phi0 = _phi0_raw(model)
    mean = float(_psi_deriv_raw(model, 0.0, 1))
    var = float(_psi_deriv_raw(model, 0.0, 2))

    checks = {
        "phi_positive": CheckResult(
            phi0 > 0 and mean < 0,
            phi0,
            "Phi(0) > 0, equivalently E[X_1] = psi'(0) < 0",
        )
    }
    # exponential moments below zero: psi is finite on (-eta, inf)
    z0 = -0.5 * model.eta if model.has_jumps else -1.0
    psi_z0 = float(_psi_raw(model, z0))
    checks["exponential_moment"] = CheckResult(
        math.isfinite(psi_z0), psi_z0, f"psi({z0:g}) finite"
    )
    checks["atomless_jumps"] = CheckResult(
        True,
        0.0,
        "exponential jump law has no atoms" if model.has_jumps else "no jumps",
    )
    return ValidationReport(
        family=model.family.value,
        phi0=phi0,
        mean=mean,
        variance=var,
        bounded_variation=model.bounded_variation,
        checks=checks,
    )

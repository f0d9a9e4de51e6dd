"""Monte Carlo cross-checks of the closed-form solution."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

from .levy_model import Family, LevyModel, phi
from .montecarlo import (
    SimConfig,
    SimEstimate,
    simulate_prediction_error,
    simulate_reflected_stop,
    simulate_ultimate_supremum,
)
from .stopping import Case, f_a, solve, transform_h_quadratic

__all__ = ["Check", "extrapolate", "run_verification"]


@dataclass(frozen=True)
class Check:
    name: str
    op: str
    params: dict[str, Any]
    oracle: float
    estimate: SimEstimate
    n_sigma: float
    passed: bool
    note: str = ""

    def to_record(self, model: LevyModel) -> dict[str, Any]:
        rec = self.estimate.to_record(self.op, model, self.params)
        rec.update(
            name=self.name,
            oracle=self.oracle,
            n_sigma=self.n_sigma,
            result="PASS" if self.passed else "FAIL",
            note=self.note,
        )
        return rec

    def line(self) -> str:
        est = self.estimate
        return (
            f"{'PASS' if self.passed else 'FAIL'} {self.name}: mc={est.mean:.6g} "
            f"se={est.std_error:.3g} oracle={self.oracle:.6g} tol={self.n_sigma:g}se"
            + (f" ({self.note})" if self.note else "")
        )


def extrapolate(points: list[tuple[float, SimEstimate]]) -> SimEstimate:
    """Extrapolate grid estimates to time_step -> 0.

    Fits ``mean(dt) = V + c_1 sqrt(dt) + c_2 dt + ...`` through the given
    points (one term per extra point) and returns V. The standard error sums
    the absolute weighted errors, an upper bound whatever the correlation
    between runs.
    """
    if len(points) < 2:
        raise ValueError("need at least two grid levels")
    roots = [math.sqrt(dt) for dt, _ in points]
    mean = se = 0.0
    for i, (_, est) in enumerate(points):
        weight = math.prod(roots[j] / (roots[j] - roots[i]) for j in range(len(roots)) if j != i)
        mean += weight * est.mean
        se += abs(weight) * est.std_error
    last = points[-1][1]
    bias = max(est.truncation_bias_bound for _, est in points)
    return SimEstimate(mean, se, last.n_paths, last.seed, bias)


def _within(est: SimEstimate, oracle: float, n_sigma: float) -> bool:
    return abs(est.mean - oracle) <= n_sigma * est.std_error + 1e-12 * max(1.0, abs(oracle))


GRID_LEVELS = 3
GRID_FACTOR = 4.0


def _grid_check(fn, cfg: SimConfig, exact: bool, oracle: float, n_sigma: float):
    """Run once for exact simulation; on a time grid, refine the step and extrapolate.

    Grid runs must also show the error shrinking as the step is refined.
    """
    if exact:
        est = fn(cfg)
        return est, _within(est, oracle, n_sigma), ""
    points = []
    dt = cfg.time_step
    for _ in range(GRID_LEVELS):
        sub = SimConfig(cfg.n_paths, cfg.seed, dt, cfg.stop_level, cfg.max_events, cfg.block_size)
        points.append((dt, fn(sub)))
        dt /= GRID_FACTOR
    est = extrapolate(points)
    trend = all(
        abs(fine.mean - oracle) <= abs(coarse.mean - oracle) + 2.0 * (coarse.std_error + fine.std_error)
        for (_, coarse), (_, fine) in zip(points, points[1:])
    )
    levels = ", ".join(f"dt={h:g}: {e.mean:.6g}" for h, e in points)
    note = f"{levels}; extrapolated, trend {'ok' if trend else 'WRONG'}"
    return est, trend and _within(est, oracle, n_sigma), note


def run_verification(model: LevyModel, b: float, cfg: SimConfig, y: float = 0.0,
                     threads: int | None = None) -> list[Check]:
    """Compare Monte Carlo estimates with the closed forms for one (model, b).

    Exact (Cramér-Lundberg) simulation is judged at 3 standard errors. Grid
    simulation is run at time_step, time_step/4 and time_step/16, then judged
    at 4 standard errors after extrapolating away the monitoring bias.
    """
    sol = solve(model, b)
    exact = model.family is Family.CRAMER_LUNDBERG_EXP
    n_sigma = 3.0 if exact else 4.0
    checks = []

    if sol.case is Case.BARRIER:
        a_star = sol.a_star
        for a in (a_star, a_star - 0.5, a_star + 0.5):
            if a <= 0:
                continue
            oracle = f_a(model, sol.w, b, a, y)
            est, ok, note = _grid_check(lambda c, a=a: simulate_reflected_stop(model, b, y, a, c, threads),
                                        cfg, exact, oracle, n_sigma)
            checks.append(Check(f"reflected_stop a={a:.6g} y={y:g}", "simulate_reflected_stop",
                                {"b": b, "y": y, "a": a}, oracle, est, n_sigma, ok, note))
        oracle = sol.value(0.0)
        est, ok, note = _grid_check(lambda c: simulate_prediction_error(model, b, a_star, c, threads),
                                    cfg, exact, oracle, n_sigma)
        checks.append(Check(f"prediction_error a*={a_star:.6g}", "simulate_prediction_error",
                            {"b": b, "a": a_star}, oracle, est, n_sigma, ok, note))
    else:
        oracle = transform_h_quadratic(model, b, 0.0)
        est = simulate_prediction_error(model, b, 0.0, cfg, threads)
        checks.append(Check("prediction_error stop-at-once", "simulate_prediction_error",
                            {"b": b, "a": 0.0}, oracle, est, n_sigma, _within(est, oracle, n_sigma)))

    sample = simulate_ultimate_supremum(model, cfg, threads)
    est = sample.estimate()
    oracle = 1.0 / phi(model)
    checks.append(Check("ultimate_supremum mean", "simulate_ultimate_supremum",
                        {"stop_level": sample.stop_level}, oracle, est, n_sigma,
                        _within(est, oracle, n_sigma)))
    return checks

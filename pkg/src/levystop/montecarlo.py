"""Monte Carlo simulation of X and its drawdown process.

Paths are simulated in fixed-size blocks. Block ``i`` draws from its own
stream ``SeedSequence(seed, spawn_key=(i,))``, so results depend only on
(model, config) and never on how many threads process the blocks.

Cramér-Lundberg paths are simulated exactly, jump by jump: between claims
the drawdown falls linearly at rate c (floored at 0) and it only moves up at
claim instants, so the barrier can only be crossed at a claim. Diffusion
families use a time grid of size ``time_step``. On each step the running
supremum is updated with an exact draw of the Brownian-bridge maximum
between the grid values; the barrier itself is checked on the grid only, so
crossings are detected late by O(sqrt(time_step)).
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .errors import ArgumentError, SimulationBudgetError
from .levy_model import Family, LevyModel, phi
from .stopping import transform_h_quadratic

__all__ = [
    "THREADS_ENV",
    "SimConfig",
    "SimEstimate",
    "SupremumSample",
    "default_stop_level",
    "sample_reflected_stop",
    "simulate_reflected_stop",
    "simulate_ultimate_supremum",
    "simulate_prediction_error",
    "step_halving",
    "write_per_path_csv",
]

THREADS_ENV = "LEVYSTOP_THREADS"
MAX_TRUNCATION_BIAS = 1e-6


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    seed: int = 20180417
    time_step: float = 1e-3
    stop_level: float | None = None
    max_events: int = 1_000_000
    block_size: int = 8192

    def __post_init__(self) -> None:
        if int(self.n_paths) <= 0:
            raise ArgumentError("n_paths must be > 0")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ArgumentError("seed must be an unsigned 64-bit integer")
        if not self.time_step > 0:
            raise ArgumentError("time_step must be > 0")
        if self.stop_level is not None and not self.stop_level > 0:
            raise ArgumentError("stop_level must be > 0")
        if int(self.max_events) <= 0 or int(self.block_size) <= 0:
            raise ArgumentError("max_events and block_size must be > 0")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SimConfig":
        known = {"n_paths", "seed", "time_step", "stop_level", "max_events", "block_size"}
        unknown = set(data) - known
        if unknown:
            raise ArgumentError(f"unknown sim fields: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_paths": self.n_paths,
            "seed": self.seed,
            "time_step": self.time_step,
            "stop_level": self.stop_level,
            "max_events": self.max_events,
            "block_size": self.block_size,
        }


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    std_error: float
    n_paths: int
    seed: int
    truncation_bias_bound: float = 0.0

    def to_record(self, op: str, model: LevyModel, params: dict[str, Any]) -> dict[str, Any]:
        return {
            "op": op,
            "model": model.to_dict(),
            "params": params,
            "mean": self.mean,
            "std_error": self.std_error,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "bias_bound": self.truncation_bias_bound,
        }


@dataclass(frozen=True, eq=False)
class SupremumSample:
    values: np.ndarray
    seed: int
    stop_level: float
    truncation_bias_bound: float

    def estimate(self) -> SimEstimate:
        return _estimate(self.values, self.seed, self.truncation_bias_bound)


def _estimate(values: np.ndarray, seed: int, bias: float = 0.0) -> SimEstimate:
    n = values.size
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return SimEstimate(mean, se, n, seed, bias)


def default_stop_level(model: LevyModel, a: float = 0.0) -> float:
    return max(20.0 / phi(model), a + 10.0)


def _resolve_level(model: LevyModel, cfg: SimConfig, a: float) -> tuple[float, float]:
    level = cfg.stop_level if cfg.stop_level is not None else default_stop_level(model, a)
    if level < a:
        raise ArgumentError(f"stop_level {level} is below the barrier {a}")
    bias = math.exp(-phi(model) * level)
    if bias > MAX_TRUNCATION_BIAS:
        raise ArgumentError(
            f"stop_level {level} leaves truncation bias exp(-Phi L) = {bias:.3g} > {MAX_TRUNCATION_BIAS}"
        )
    return level, bias


def _threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(threads))


def _run_blocks(kernel: Callable[[np.random.Generator, int], tuple], cfg: SimConfig, threads: int | None):
    n, bs = int(cfg.n_paths), int(cfg.block_size)
    sizes = [min(bs, n - start) for start in range(0, n, bs)]

    def run(i: int):
        ss = np.random.SeedSequence(int(cfg.seed), spawn_key=(i,))
        return kernel(np.random.Generator(np.random.PCG64(ss)), sizes[i])

    nthreads = _threads(threads)
    if nthreads == 1 or len(sizes) == 1:
        parts = [run(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            parts = list(pool.map(run, range(len(sizes))))
    return tuple(np.concatenate(cols) for cols in zip(*parts))


def _simulate_block(model: LevyModel, rng: np.random.Generator, n: int, y0: float, a: float,
                    level: float, dt: float, max_events: int):
    """Run n paths of (X, running sup) until the drawdown reaches ``level``.

    Returns the drawdown and position at the first time the drawdown is
    >= a, and the running supremum when the drawdown first reaches ``level``
    (``level >= a``; pass ``level == a`` to stop at the barrier).
    """
    x = np.zeros(n)
    s = np.full(n, float(y0))
    y_tau = np.full(n, np.nan)
    x_tau = np.full(n, np.nan)
    if y0 >= a:
        y_tau[:] = y0
        x_tau[:] = 0.0
    active = np.flatnonzero(np.full(n, y0 < level))
    if model.family is Family.CRAMER_LUNDBERG_EXP:
        _claims_loop(model, rng, x, s, y_tau, x_tau, active, a, level, max_events)
    else:
        _grid_loop(model, rng, x, s, y_tau, x_tau, active, a, level, dt, max_events)
    return y_tau, x_tau, s


def _claims_loop(model, rng, x, s, y_tau, x_tau, active, a, level, max_events):
    c, mu, eta = model.c, model.mu, model.eta
    events = 0
    while active.size:
        events += 1
        if events > max_events:
            raise SimulationBudgetError(f"{active.size} paths still running after {max_events} claims")
        k = active.size
        xa = x[active] + c * rng.exponential(1.0 / mu, k)
        sa = np.maximum(s[active], xa)
        xa -= rng.exponential(1.0 / eta, k)
        x[active] = xa
        s[active] = sa
        ya = sa - xa
        fresh = np.isnan(y_tau[active]) & (ya >= a)
        if fresh.any():
            idx = active[fresh]
            y_tau[idx] = ya[fresh]
            x_tau[idx] = xa[fresh]
        active = active[ya < level]


GRID_CHUNK = 256


def _first_true(mask: np.ndarray) -> np.ndarray:
    # index of the first True per row, -1 if none
    idx = mask.argmax(axis=1)
    return np.where(mask[np.arange(mask.shape[0]), idx], idx, -1)


def _grid_loop(model, rng, x, s, y_tau, x_tau, active, a, level, dt, max_events):
    c, mu, eta = model.c, model.mu, model.eta
    sd = model.sigma * math.sqrt(dt)
    steps = 0
    while active.size:
        if steps >= max_events:
            raise SimulationBudgetError(f"{active.size} paths still running after {max_events} steps")
        m = min(GRID_CHUNK, max_events - steps)
        steps += m
        k = active.size
        # continuous move of each step, then that step's jumps at its end
        move = c * dt + sd * rng.standard_normal((k, m))
        jumps = np.zeros((k, m))
        if mu > 0:
            counts = rng.poisson(mu * dt, (k, m))
            hit = counts > 0
            if hit.any():
                jumps[hit] = rng.gamma(counts[hit], 1.0 / eta)
        path = x[active, None] + np.cumsum(move - jumps, axis=1)
        start = np.concatenate([x[active, None], path[:, :-1]], axis=1)
        pre_jump = start + move
        # exact maximum of the Brownian bridge between start and pre_jump
        bridge = 0.5 * (start + pre_jump + np.sqrt(move * move + 2.0 * sd * sd * rng.standard_exponential((k, m))))
        sup = np.maximum(np.maximum.accumulate(bridge, axis=1), s[active, None])
        dd = sup - path

        open_tau = np.isnan(y_tau[active])
        if open_tau.any():
            first = _first_true(dd[open_tau] >= a)
            got = first >= 0
            rows = np.flatnonzero(open_tau)[got]
            idx = active[rows]
            y_tau[idx] = dd[rows, first[got]]
            x_tau[idx] = path[rows, first[got]]

        end = _first_true(dd >= level)
        done = end >= 0
        last = np.where(done, end, m - 1)
        rows = np.arange(k)
        x[active] = path[rows, last]
        s[active] = sup[rows, last]
        active = active[~done]


def sample_reflected_stop(model: LevyModel, y: float, a: float, cfg: SimConfig,
                          threads: int | None = None) -> np.ndarray:
    """Per-path drawdown at the first time it is >= a, started from drawdown y."""
    phi(model)
    y, a = float(y), float(a)
    if y < 0 or not a > 0:
        raise ArgumentError("need y >= 0 and a > 0")

    def kernel(rng, n):
        y_tau, _, _ = _simulate_block(model, rng, n, y, a, a, cfg.time_step, cfg.max_events)
        return (y_tau,)

    return _run_blocks(kernel, cfg, threads)[0]


def simulate_reflected_stop(model: LevyModel, b: float, y: float, a: float, cfg: SimConfig,
                            threads: int | None = None) -> SimEstimate:
    """Estimate ``E[H(Y^y_tau)]`` for tau the first time the drawdown is >= a."""
    y_tau = sample_reflected_stop(model, y, a, cfg, threads)
    return _estimate(transform_h_quadratic(model, b, y_tau), int(cfg.seed))


def simulate_ultimate_supremum(model: LevyModel, cfg: SimConfig,
                               threads: int | None = None) -> SupremumSample:
    """Sample the all-time supremum, truncating each path once its drawdown hits L.

    A path with drawdown L makes a new supremum with probability exp(-Phi L),
    which is reported as the truncation bias bound.
    """
    level, bias = _resolve_level(model, cfg, 0.0)

    def kernel(rng, n):
        _, _, s = _simulate_block(model, rng, n, 0.0, level, level, cfg.time_step, cfg.max_events)
        return (s,)

    values = _run_blocks(kernel, cfg, threads)[0]
    return SupremumSample(values, int(cfg.seed), level, bias)


def _prediction_paths(model: LevyModel, a: float, cfg: SimConfig, threads: int | None):
    a = float(a)
    if a < 0:
        raise ArgumentError("a must be >= 0")
    level, bias = _resolve_level(model, cfg, a)

    def kernel(rng, n):
        _, x_tau, s = _simulate_block(model, rng, n, 0.0, a, level, cfg.time_step, cfg.max_events)
        return x_tau, s

    x_tau, s = _run_blocks(kernel, cfg, threads)
    return x_tau, s, bias


def simulate_prediction_error(model: LevyModel, b: float, a: float, cfg: SimConfig,
                              threads: int | None = None) -> SimEstimate:
    """Estimate ``E[(sup X - X_tau - b)^2]`` directly on the original process.

    tau is the first time the drawdown from the running maximum is >= a
    (``a = 0`` stops at time 0). Each path keeps running past tau until its
    drawdown reaches the truncation level, which yields the supremum.
    """
    x_tau, s, bias = _prediction_paths(model, a, cfg, threads)
    err = (s - x_tau - float(b)) ** 2
    return _estimate(err, int(cfg.seed), bias)


def step_halving(model: LevyModel, b: float, y: float, a: float, cfg: SimConfig,
                 levels: int = 3, threads: int | None = None) -> list[tuple[float, SimEstimate]]:
    """Re-run :func:`simulate_reflected_stop` with time_step, time_step/2, ..."""
    out = []
    dt = cfg.time_step
    for _ in range(levels):
        sub = SimConfig(cfg.n_paths, cfg.seed, dt, cfg.stop_level, cfg.max_events, cfg.block_size)
        out.append((dt, simulate_reflected_stop(model, b, y, a, sub, threads)))
        dt /= 2.0
    return out


def write_per_path_csv(path, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path"] + names)
        for i, row in enumerate(zip(*(columns[k] for k in names))):
            writer.writerow([i] + [format(float(v), ".12g") for v in row])

"""Command-line front end.

    levystop --config configs/example1_cl.json --command solve
    levystop --config configs/example2_jd.json --command curves --out jd.csv

Exit status: 0 success, 1 verification (or model validation) failure,
2 bad configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import ArgumentError, DomainError, LevyStopError, ModelConditionError, NotApplicable
from .levy_model import LevyModel, phi, validate
from .montecarlo import (
    SimConfig,
    sample_reflected_stop,
    simulate_prediction_error,
    simulate_reflected_stop,
    simulate_ultimate_supremum,
    write_per_path_csv,
)
from .stopping import Case, f_a, solve, transform_h_quadratic
from .verification import run_verification

COMMANDS = ("validate", "solve", "curves", "simulate", "verify")
EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    model: LevyModel
    b: float | None = None
    a_list: list[float] = field(default_factory=list)
    y: float = 0.0
    y_grid: tuple[float, float, float] = (0.0, 8.0, 0.05)
    sim: SimConfig = field(default_factory=SimConfig)
    output_path: str | None = None
    format: str = "csv"
    per_path_csv: str | None = None

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        known = {"command", "model", "b", "a_list", "y", "y_grid", "sim", "output_path", "format", "per_path_csv"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        if "model" not in data:
            raise ConfigError("config needs a 'model' object")
        command = data.get("command")
        if command not in COMMANDS:
            raise ConfigError(f"command must be one of {COMMANDS}, got {command!r}")
        try:
            model = LevyModel.from_dict(data["model"])
            sim = SimConfig.from_dict(data.get("sim", {}))
        except (LevyStopError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        grid = tuple(float(v) for v in data.get("y_grid", (0.0, 8.0, 0.05)))
        if len(grid) != 3 or not grid[2] > 0 or grid[1] < grid[0]:
            raise ConfigError("y_grid must be (min, max, step) with step > 0 and max >= min")
        fmt = data.get("format", "csv")
        if fmt not in ("csv", "json"):
            raise ConfigError("format must be 'csv' or 'json'")
        b = data.get("b")
        return cls(
            command=command,
            model=model,
            b=None if b is None else float(b),
            a_list=[float(a) for a in data.get("a_list", [])],
            y=float(data.get("y", 0.0)),
            y_grid=grid,
            sim=sim,
            output_path=data.get("output_path"),
            format=fmt,
            per_path_csv=data.get("per_path_csv"),
        )


def _fmt(v: float) -> str:
    return format(float(v), ".12g")


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output_path:
        _atomic_write(cfg.output_path, text)
    else:
        sys.stdout.write(text)


def _dump_json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _need_b(cfg: RunConfig) -> float:
    if cfg.b is None:
        raise ConfigError(f"command {cfg.command!r} needs 'b'")
    return cfg.b


def y_grid_values(grid: tuple[float, float, float]) -> np.ndarray:
    lo, hi, step = grid
    n = int(np.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(n + 1)


def curves_table(model: LevyModel, b: float, a_list: Sequence[float], ys: np.ndarray) -> tuple[list[str], list[list[float]]]:
    sol = solve(model, b)
    header = ["y", "H"] + [f"f_a={_fmt(a)}" for a in a_list] + ["V"]
    cols = [ys, transform_h_quadratic(model, b, ys)]
    cols += [f_a(model, sol.w, b, a, ys) for a in a_list]
    cols.append(sol.value(ys))
    rows = [list(r) for r in zip(*cols)]
    return header, rows


def _cmd_validate(cfg: RunConfig) -> int:
    report = validate(cfg.model)
    _emit(cfg, _dump_json(report.to_dict()))
    return EXIT_OK if report.ok else EXIT_VERIFY


def _cmd_solve(cfg: RunConfig) -> int:
    sol = solve(cfg.model, _need_b(cfg))
    if sol.case is Case.BARRIER:
        line = f"case=Barrier b*={_fmt(sol.b_star)} a*={_fmt(sol.a_star)} V(0)={_fmt(sol.value(0.0))}"
    else:
        line = f"case=StopImmediately b*={_fmt(sol.b_star)} V(0)={_fmt(sol.value(0.0))}"
    print(line)
    if cfg.output_path:
        _atomic_write(cfg.output_path, _dump_json(sol.to_dict()))
    return EXIT_OK


def _cmd_curves(cfg: RunConfig) -> int:
    b = _need_b(cfg)
    if not cfg.a_list:
        raise ConfigError("curves needs a non-empty 'a_list'")
    header, rows = curves_table(cfg.model, b, cfg.a_list, y_grid_values(cfg.y_grid))
    if cfg.format == "json":
        _emit(cfg, _dump_json({"columns": header, "rows": rows}))
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([_fmt(v) for v in row] for row in rows)
        _emit(cfg, buf.getvalue())
    return EXIT_OK


def _cmd_simulate(cfg: RunConfig) -> int:
    b = _need_b(cfg)
    model, sim = cfg.model, cfg.sim
    sol = solve(model, b)
    a_list = cfg.a_list or ([sol.a_star] if sol.a_star is not None else [])
    records = []
    for a in a_list:
        est = simulate_reflected_stop(model, b, cfg.y, a, sim)
        rec = est.to_record("simulate_reflected_stop", model, {"b": b, "y": cfg.y, "a": a})
        rec["closed_form"] = f_a(model, sol.w, b, a, cfg.y)
        records.append(rec)
        est = simulate_prediction_error(model, b, a, sim)
        rec = est.to_record("simulate_prediction_error", model, {"b": b, "a": a})
        rec["closed_form"] = f_a(model, sol.w, b, a, 0.0)
        records.append(rec)
    sample = simulate_ultimate_supremum(model, sim)
    rec = sample.estimate().to_record("simulate_ultimate_supremum", model, {"stop_level": sample.stop_level})
    rec["closed_form"] = 1.0 / phi(model)
    records.append(rec)
    if cfg.per_path_csv and a_list:
        y_tau = sample_reflected_stop(model, cfg.y, a_list[0], sim)
        write_per_path_csv(cfg.per_path_csv, {"y_tau": y_tau, "H": transform_h_quadratic(model, b, y_tau)})
    _emit(cfg, _dump_json(records))
    return EXIT_OK


def _cmd_verify(cfg: RunConfig) -> int:
    checks = run_verification(cfg.model, _need_b(cfg), cfg.sim, cfg.y)
    for chk in checks:
        print(chk.line())
    records = [chk.to_record(cfg.model) for chk in checks]
    if cfg.output_path:
        _atomic_write(cfg.output_path, _dump_json(records))
    ok = all(chk.passed for chk in checks)
    print("VERIFY PASS" if ok else "VERIFY FAIL")
    return EXIT_OK if ok else EXIT_VERIFY


HANDLERS = {
    "validate": _cmd_validate,
    "solve": _cmd_solve,
    "curves": _cmd_curves,
    "simulate": _cmd_simulate,
    "verify": _cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levystop", description=__doc__.splitlines()[0])
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--command", choices=COMMANDS, help="override the config's command")
    p.add_argument("--b", type=float, help="override the penalty distance b")
    p.add_argument("--seed", type=int, help="override sim.seed")
    p.add_argument("--n-paths", type=int, help="override sim.n_paths")
    p.add_argument("--out", help="override output_path")
    return p


def load_config(args: argparse.Namespace) -> RunConfig:
    try:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if args.command:
        data["command"] = args.command
    if args.b is not None:
        data["b"] = args.b
    if args.out:
        data["output_path"] = args.out
    sim = dict(data.get("sim", {}))
    if args.seed is not None:
        sim["seed"] = args.seed
    if args.n_paths is not None:
        sim["n_paths"] = args.n_paths
    data["sim"] = sim
    return RunConfig.from_dict(data)


def run(cfg: RunConfig) -> int:
    return HANDLERS[cfg.command](cfg)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        return run(cfg)
    except (ConfigError, ArgumentError, DomainError, ModelConditionError, NotApplicable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LevyStopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

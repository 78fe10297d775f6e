"""Configuration files, seeded Monte-Carlo runs, sweeps and CSV output.

Config files are flat ``section.key = value`` lines; ``#`` starts a comment.
Vectors are comma separated; scalars may carry a ``dB`` or ``dBm`` suffix.
An empty file gives the full-size parameter set; ``preset = desk`` starts from
the desk-scale defaults instead.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ao, channel
from .scenario import SCENARIO_FIELDS, Scenario, ScenarioError, db, dbm

log = logging.getLogger(__name__)

WORKERS_ENV = "SECURE_RIS_UAV_WORKERS"
AXES = ("T", "deltaA2", "w", "Pbar")
SUMMARY_HEADER = ("algorithm", "axis", "value", "seed", "R_sec", "iterations", "converged", "status")

SECTIONS = {
    "geometry": ("w_g", "w_e", "w_r", "z_u", "z_r", "q0", "q_f"),
    "flight": ("T", "delta_t", "v_max"),
    "ris": ("Mx", "Mz", "d_over_lambda"),
    "channel": ("rho", "alpha", "kappa", "varsigma", "sigma2", "rician_ur", "rician_rg", "rician_re",
                "rician_ug", "rician_ue", "rician_gu", "rician_ru", "rician_gr", "rician_ge"),
    "power": ("P_bar", "P_peak", "G_bar", "G_peak"),
    "protocol": ("w",),
    "csi": ("delta_a",),
    "algorithm": ("eps_c", "j_max"),
}
KEY_TO_FIELD = {f"{sec}.{name}": name for sec, names in SECTIONS.items() for name in names}
FIELD_TO_KEY = {v: k for k, v in KEY_TO_FIELD.items()}
VECTOR_FIELDS = ("w_g", "w_e", "w_r", "q0", "q_f")
PRESETS = ("paper", "desk")

assert set(KEY_TO_FIELD.values()) == set(SCENARIO_FIELDS)


class ConfigError(ValueError):
    """Unreadable or malformed configuration."""


def _scalar(text: str, key: str) -> float:
    t = text.strip()
    try:
        if t.lower().endswith("dbm"):
            return dbm(float(t[:-3]))
        if t.lower().endswith("db"):
            return db(float(t[:-2]))
        return float(t)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as a number") from None


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in entries:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def scenario_from_entries(entries: dict[str, str]) -> Scenario:
    preset = entries.get("preset", "paper").strip()
    if preset not in PRESETS:
        raise ScenarioError("preset", f"unknown preset {preset!r}; expected one of {PRESETS}")
    changes = {}
    for key, value in entries.items():
        if key == "preset" or key.startswith("experiment."):
            continue
        if key not in KEY_TO_FIELD:
            raise ScenarioError(key, "unknown configuration key")
        name = KEY_TO_FIELD[key]
        if name in VECTOR_FIELDS:
            parts = [p for p in value.split(",")]
            if len(parts) != 2:
                raise ScenarioError(name, f"expected two comma-separated numbers, got {value!r}")
            changes[name] = tuple(_scalar(p, key) for p in parts)
        else:
            changes[name] = _scalar(value, key)
    try:
        base = Scenario.paper_scale if preset == "paper" else Scenario
        return base(**changes)
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError("config", str(exc)) from None


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None
    return scenario_from_entries(parse_config(text, str(path)))


def dump_scenario(scenario: Scenario) -> str:
    """Config text that loads back to an identical scenario."""
    out = io.StringIO()
    # every field is written out, so the preset is never consulted on reload
    out.write("preset = paper\n")
    current = None
    for name in SCENARIO_FIELDS:
        key = FIELD_TO_KEY[name]
        sec = key.split(".")[0]
        if sec != current:
            out.write(f"\n# {sec}\n")
            current = sec
        value = getattr(scenario, name)
        text = ", ".join(repr(float(v)) for v in value) if name in VECTOR_FIELDS else repr(value)
        out.write(f"{key} = {text}\n")
    return out.getvalue()


# -- sweeps -----------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple[float, ...]
    realizations: int = 10
    base_seed: int = 0
    algorithms: tuple[str, ...] = ao.ALGORITHMS

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("sweep values must be strictly increasing")
        if self.realizations < 1:
            raise ValueError("realizations must be at least 1")
        bad = [a for a in self.algorithms if a not in ao.ALGORITHMS]
        if bad or not self.algorithms:
            raise ValueError(f"unknown algorithms {bad}; expected a subset of {ao.ALGORITHMS}")

    @property
    def seeds(self) -> tuple[int, ...]:
        return tuple(self.base_seed + k for k in range(self.realizations))


def apply_axis(scenario: Scenario, axis: str | None, value: float | None) -> Scenario:
    if axis is None:
        return scenario
    if axis == "T":
        return scenario.replace(T=value)
    if axis == "deltaA2":
        if value < 0:
            raise ScenarioError("delta_a", "deltaA^2 must be nonnegative")
        return scenario.replace(delta_a=math.sqrt(value))
    if axis == "w":
        return scenario.replace(w=value)
    if axis == "Pbar":
        ratio = scenario.P_peak / scenario.P_bar if scenario.P_bar > 0 else 4.0
        return scenario.replace(P_bar=value, P_peak=ratio * value)
    raise ValueError(f"unknown axis {axis!r}")


@dataclass(frozen=True)
class ResultRow:
    algorithm: str
    axis: str | None
    value: float | None
    seed: int
    R_sec: float
    iterations: int
    converged: bool
    status: str = "ok"
    wall_time: float = field(default=0.0, compare=False)
    trajectory: np.ndarray | None = field(default=None, compare=False, repr=False)
    trace: tuple[float, ...] = field(default=(), repr=False)
    delta_t: float = field(default=1.0, repr=False)
    q_f: tuple[float, float] | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def speeds(self) -> np.ndarray:
        q = np.asarray(self.trajectory)
        ext = np.vstack([q, np.asarray(self.q_f, dtype=float)[None, :]])
        return np.linalg.norm(np.diff(ext, axis=0), axis=1) / self.delta_t


def run_single(scenario: Scenario, algorithm: str, seed: int, axis: str | None = None,
               value: float | None = None) -> ResultRow:
    """One realization through one algorithm; solver failures become a failed row."""
    start = time.perf_counter()
    try:
        sc = apply_axis(scenario, axis, value)
        realization = channel.sample_realization(sc, seed)
        design, report = ao.run_benchmark(algorithm, sc, realization)
    except (ao.StageError, ScenarioError, ValueError, RuntimeError) as exc:
        log.warning("%s seed %d (%s=%s) failed: %s", algorithm, seed, axis, value, exc)
        return ResultRow(algorithm, axis, value, seed, math.nan, 0, False,
                         f"failed: {type(exc).__name__}: {exc}", time.perf_counter() - start)
    return ResultRow(algorithm, axis, value, seed, report.R_sec, report.iterations, report.converged, "ok",
                     time.perf_counter() - start, np.array(design.trajectory.q), report.per_iteration,
                     sc.delta_t, sc.q_f)


def _cell(args):
    scenario, algorithm, seed, axis, value = args
    return run_single(scenario, algorithm, seed, axis, value)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def run_sweep(spec: SweepSpec, scenario: Scenario, workers: int | None = None) -> list[ResultRow]:
    """Every (value, seed, algorithm) cell; the same seeds are reused for every value and algorithm."""
    for value in spec.values:
        apply_axis(scenario, spec.axis, value)  # reject invalid axis values before any solve
    cells = [(scenario, alg, seed, spec.axis, value)
             for value in spec.values for seed in spec.seeds for alg in spec.algorithms]
    workers = worker_count() if workers is None else max(1, int(workers))
    if workers == 1:
        rows = [_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_cell, cells))
    return sorted(rows, key=canonical_key)


def canonical_key(row: ResultRow):
    alg = ao.ALGORITHMS.index(row.algorithm) if row.algorithm in ao.ALGORITHMS else len(ao.ALGORITHMS)
    return (row.value if row.value is not None else -math.inf, row.seed, alg)


def mean_rates(rows, algorithm: str) -> dict[float, float]:
    """Mean ``R_sec`` per axis value over successful rows of one algorithm."""
    acc: dict[float, list[float]] = {}
    for r in rows:
        if r.algorithm == algorithm and r.ok:
            acc.setdefault(r.value, []).append(r.R_sec)
    return {k: float(np.mean(v)) for k, v in sorted(acc.items())}


# -- output -----------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    try:
        path.write_text(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def run_directory(out: Path, row: ResultRow) -> Path:
    if row.axis is None:
        return out
    return out / f"{row.axis}={_fmt(row.value)}"


def emit_results(rows, out) -> list[Path]:
    """Write ``summary.csv`` plus per-run trajectory and trace files; returns written paths."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rows = sorted(rows, key=canonical_key)
    written = []
    summary = out / "summary.csv"
    _write_csv(summary, SUMMARY_HEADER, [
        (r.algorithm, r.axis or "", _fmt(r.value), _fmt(r.seed), _fmt(r.R_sec), _fmt(r.iterations),
         _fmt(r.converged), r.status) for r in rows])
    written.append(summary)
    for r in rows:
        if r.trajectory is None:
            continue
        d = run_directory(out, r)
        d.mkdir(parents=True, exist_ok=True)
        traj = d / f"trajectory_{r.algorithm}_{r.seed}.csv"
        q = np.asarray(r.trajectory)
        _write_csv(traj, ("n", "x", "y", "speed"),
                   [(n + 1, _fmt(x), _fmt(y), _fmt(v)) for n, ((x, y), v) in enumerate(zip(q, r.speeds()))])
        trace = d / f"trace_{r.algorithm}_{r.seed}.csv"
        _write_csv(trace, ("j", "R_sec"), [(j + 1, _fmt(v)) for j, v in enumerate(r.trace)])
        written += [traj, trace]
    # wall-clock times vary run to run, so they stay out of the CSV files
    timing = out / "timing.json"
    timing.write_text(json.dumps([{"algorithm": r.algorithm, "value": r.value, "seed": r.seed,
                                   "wall_time": r.wall_time} for r in rows], indent=1) + "\n")
    written.append(timing)
    return written


def read_summary(path) -> list[ResultRow]:
    """Parse ``summary.csv`` back into rows (without trajectories)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != SUMMARY_HEADER:
            raise ConfigError(f"{path}: unexpected header {header}")
        rows = []
        for rec in reader:
            alg, axis, value, seed, rate, iters, conv, status = rec
            rows.append(ResultRow(alg, axis or None, float(value) if value else None, int(seed),
                                  float(rate), int(iters), conv == "1", status))
    return rows


def read_table(path) -> list[tuple[float, ...]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return [tuple(float(x) for x in rec) for rec in reader]

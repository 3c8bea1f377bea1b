"""Benchmark harness: runs the explorer or one of the baseline methods over
registry problems and emits CSV/JSON reports."""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .diffusion import NoiseSource, TrajectoryStep, white_noise_id_step
from .explorer import (
    CriticalPoint,
    CriticalPointTable,
    ExplorationConfig,
    RunReport,
    default_dedup_radius,
    explore,
    kind_from_inertia,
)
from .local_search import CONVERGED, Tolerances, gradient_descent
from .potentials import EvaluationError, Potential, get_potential
from .spectral import eigendecompose

METHODS = ("ddcid", "id_white", "mc_descent", "sim_anneal")


@dataclass
class BenchmarkSpec:
    problem: str
    config: ExplorationConfig = field(default_factory=ExplorationConfig)
    repetitions: int = 1
    method: str = "ddcid"
    output: str | None = None
    fmt: str = "json"
    target_value: float | None = None    # optional known global value
    target_tol: float = 1e-3
    mc_starts: int = 20                  # Monte-Carlo baseline starts per rep
    anneal: "AnnealConfig | None" = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.fmt not in ("json", "csv"):
            raise ValueError("format must be json or csv")


@dataclass
class AnnealConfig:
    initial_temperature: float = 1.0
    schedule: Callable[[float], float] | None = None   # iteration ratio -> T
    neighbor_scale: float = 0.5
    iteration_budget: int = 20000

    def temperature(self, ratio: float) -> float:
        if self.schedule is not None:
            t = self.schedule(ratio)
        else:
            t = self.initial_temperature * (1.0 - ratio)
        return max(float(t), 1e-300)


@dataclass
class AnnealResult:
    point: np.ndarray
    value: float
    iterations: int
    accepted_moves: int


def metropolis_probability(g_current: float, g_new: float, temperature: float) -> float:
    """1 for downhill proposals, exp(-(g_new - g_current)/T) uphill."""
    if g_new < g_current:
        return 1.0
    arg = -(g_new - g_current) / temperature
    return math.exp(arg) if arg > -700.0 else 0.0


def simulated_annealing(p: Potential, cfg: AnnealConfig,
                        noise: NoiseSource) -> AnnealResult:
    """Metropolis random walk with a cooling schedule; returns the best
    point ever visited."""
    x = noise.uniform_box(p.search_region)
    g = float(p.value(x))
    best_x, best_g = x.copy(), g
    accepted = 0
    budget = cfg.iteration_budget
    for k in range(budget):
        proposal = x + cfg.neighbor_scale * noise.normal(p.dimension)
        try:
            g_new = float(p.value(proposal))
        except EvaluationError:
            continue
        if not math.isfinite(g_new):
            continue
        t = cfg.temperature(k / budget)
        if metropolis_probability(g, g_new, t) > noise.uniform(0.0, 1.0):
            x, g = proposal, g_new
            accepted += 1
            if g < best_g:
                best_x, best_g = x.copy(), g
    return AnnealResult(best_x, best_g, budget, accepted)


def describe_point(p: Potential, x: np.ndarray,
                   zero_tol: float | None = None, occurrences: int = 1) -> CriticalPoint:
    """CriticalPoint-shaped record for an arbitrary point (no criticality
    gate); baselines use it to tabulate their outputs."""
    x = np.asarray(x, dtype=float)
    s = eigendecompose(p.hessian(x), zero_tol)
    return CriticalPoint(x.copy(), float(p.value(x)),
                         float(np.linalg.norm(p.gradient(x))), s.inertia,
                         kind_from_inertia(s.inertia), occurrences)


def monte_carlo_descent(p: Potential, starts: int, tol: Tolerances,
                        noise: NoiseSource,
                        dedup_radius: float | None = None) -> list[CriticalPoint]:
    """Gradient descent from uniform random starts; returns the
    deduplicated minima that converged."""
    radius = dedup_radius if dedup_radius is not None else default_dedup_radius(p.search_region)
    table = CriticalPointTable(radius)
    for _ in range(starts):
        x0 = noise.uniform_box(p.search_region)
        try:
            result = gradient_descent(p, x0, tol)
            if result.outcome != CONVERGED:
                continue
            table.record(describe_point(p, result.final_point))
        except EvaluationError:
            continue
    return table.entries


def white_noise_intermittent_descent(p: Potential, cycles: int, noise: NoiseSource,
                                     tol: Tolerances, sigma: float = 1.0,
                                     burst_steps: int = 25, burst_h: float = 1e-2,
                                     dedup_radius: float | None = None) -> list[CriticalPoint]:
    """White-noise baseline: alternate noisy Euler-Maruyama bursts with
    gradient descent, recording the minima reached after each burst."""
    radius = dedup_radius if dedup_radius is not None else default_dedup_radius(p.search_region)
    table = CriticalPointTable(radius)
    x = noise.uniform_box(p.search_region)
    for _ in range(cycles):
        try:
            result = gradient_descent(p, x, tol)
            if result.outcome == CONVERGED:
                table.record(describe_point(p, result.final_point))
                x = result.final_point
            for _ in range(burst_steps):
                x = white_noise_id_step(p, x, burst_h, sigma, noise)
        except EvaluationError:
            x = noise.uniform_box(p.search_region)
    return table.entries


@dataclass
class BenchmarkReport:
    spec: BenchmarkSpec
    dimension: int
    reps: list[dict] = field(default_factory=list)
    table: CriticalPointTable | None = None
    runs: list[RunReport] = field(default_factory=list)
    total_seconds: float = 0.0

    def aggregate(self) -> dict:
        best_values = [r["best_value"] for r in self.reps if r["best_value"] is not None]
        best = min(best_values, default=None)
        out = {
            "best_value": best,
            "distinct_points": len(self.table) if self.table is not None else 0,
            "distinct_minima": len(self.table.minima()) if self.table is not None else 0,
        }
        if self.spec.target_value is not None:
            out["target_value"] = self.spec.target_value
            out["global_hits"] = sum(
                1 for r in self.reps
                if r["best_value"] is not None
                and abs(r["best_value"] - self.spec.target_value) <= self.spec.target_tol)
        return out

    def canonical_dict(self, include_timing: bool = True) -> dict:
        spec_d = dataclasses.asdict(self.spec)
        spec_d["config"] = self.spec.config.as_dict()
        if self.spec.anneal is not None:
            spec_d["anneal"] = {k: v for k, v in dataclasses.asdict(self.spec.anneal).items()
                                if k != "schedule"}
        d = {
            "spec": spec_d,
            "dimension": self.dimension,
            "reps": self.reps,
            "table": [e.as_dict() for e in self.table.entries] if self.table is not None else [],
            "aggregate": self.aggregate(),
            "runs": [r.canonical_dict(include_timing) for r in self.runs],
        }
        if include_timing:
            d["timing"] = {"total_seconds": self.total_seconds}
        return d

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.canonical_dict(include_timing), sort_keys=True, indent=2)


def run_benchmark(spec: BenchmarkSpec) -> BenchmarkReport:
    """Execute the chosen method ``repetitions`` times with per-repetition
    seeds and aggregate best value, distinct minima, and target hits."""
    p = get_potential(spec.problem)
    start = time.perf_counter()
    region = (spec.config.search_region if spec.config.search_region is not None
              else p.search_region)
    radius = (spec.config.dedup_radius if spec.config.dedup_radius is not None
              else default_dedup_radius(region))
    merged = CriticalPointTable(radius)
    report = BenchmarkReport(spec, p.dimension, table=merged)

    for rep in range(spec.repetitions):
        seed = spec.config.seed + rep
        rep_entry: dict = {"repetition": rep, "seed": seed}
        if spec.method == "ddcid":
            cfg = dataclasses.replace(spec.config, seed=seed)
            run = explore(p, cfg)
            report.runs.append(run)
            for entry in run.table.entries:
                merged.record(dataclasses.replace(entry))
            rep_entry["best_value"] = run.table.best_value()
            rep_entry["summary"] = run.summary()
        elif spec.method == "mc_descent":
            found = monte_carlo_descent(p, spec.mc_starts, spec.config.tolerances,
                                        NoiseSource(seed), radius)
            for entry in found:
                merged.record(dataclasses.replace(entry))
            rep_entry["best_value"] = min((e.value for e in found), default=None)
            rep_entry["minima_found"] = len(found)
        elif spec.method == "id_white":
            found = white_noise_intermittent_descent(
                p, spec.config.max_critical_points, NoiseSource(seed),
                spec.config.tolerances, dedup_radius=radius)
            for entry in found:
                merged.record(dataclasses.replace(entry))
            rep_entry["best_value"] = min((e.value for e in found), default=None)
            rep_entry["minima_found"] = len(found)
        else:   # sim_anneal
            anneal = spec.anneal if spec.anneal is not None else AnnealConfig()
            result = simulated_annealing(p, anneal, NoiseSource(seed))
            merged.record(describe_point(p, result.point))
            rep_entry["best_value"] = result.value
            rep_entry["accepted_moves"] = result.accepted_moves
        report.reps.append(rep_entry)

    report.total_seconds = time.perf_counter() - start
    return report


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

CSV_FIXED_COLUMNS = ["g", "grad_norm", "n_plus", "n_zero", "n_minus", "kind", "occurrences"]


def table_csv_rows(entries: list[CriticalPoint], dimension: int) -> tuple[list[str], list[list]]:
    header = [f"x{i}" for i in range(1, dimension + 1)] + CSV_FIXED_COLUMNS
    rows = []
    for e in entries:
        rows.append([repr(float(v)) for v in e.location]
                    + [repr(float(e.value)), repr(float(e.gradient_norm)),
                       e.inertia[0], e.inertia[1], e.inertia[2], e.kind, e.occurrences])
    return header, rows


def write_table_csv(entries: list[CriticalPoint], dimension: int, path: str) -> None:
    header, rows = table_csv_rows(entries, dimension)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def write_trajectory_csv(trajectory: list[TrajectoryStep], path: str) -> None:
    """Diffusion trajectory dump: step index, point, g, G, inertia."""
    if not trajectory:
        raise ValueError("empty trajectory")
    n = trajectory[0].point.size
    header = ["step"] + [f"x{i}" for i in range(1, n + 1)] + ["g", "G", "n_plus", "n_zero", "n_minus"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in trajectory:
            writer.writerow([t.index] + [repr(float(v)) for v in t.point]
                            + [repr(float(t.value)), repr(float(t.aux_value)),
                               t.inertia[0], t.inertia[1], t.inertia[2]])


def emit_report(report: BenchmarkReport | RunReport, fmt: str, path: str) -> str:
    """Write the report as JSON (full) or CSV (table only); returns path."""
    if fmt == "json":
        with open(path, "w") as fh:
            fh.write(report.to_json())
            fh.write("\n")
    elif fmt == "csv":
        if isinstance(report, RunReport):
            entries = report.table.entries
            dim = report.dimension
        else:
            entries = report.table.entries if report.table is not None else []
            dim = report.dimension
        write_table_csv(entries, dim, path)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path

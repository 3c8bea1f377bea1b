"""Top-level exploration loop: alternate local searches and basin escapes,
maintaining a deduplicated table of classified critical points."""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .diffusion import (
    DiffusionConfig,
    InertiaMismatchError,
    NoiseSource,
    escape_minimum,
    escape_saddle,
)
from .local_search import (
    CONVERGED,
    LocalSearchResult,
    StepUnderflowError,
    Tolerances,
    minimize,
    saddle_search,
)
from .potentials import EvaluationError, Potential
from .spectral import eigendecompose

KIND_MINIMUM = "minimum"
KIND_SADDLE = "saddle"
KIND_MAXIMUM = "maximum"
KIND_DEGENERATE = "degenerate"

# Bound on starting-point gradients; uniform draws above it are re-drawn
# (e.g. nearly coincident atoms in a cluster).
_SANE_GRADIENT = 1e8
_MAX_DRAW_TRIES = 200


class NotCriticalError(ValueError):
    """The point's gradient is too large to record as a critical point."""


def kind_from_inertia(inertia: tuple[int, int, int]) -> str:
    n_plus, n_zero, n_minus = inertia
    if n_zero > 0:
        return KIND_DEGENERATE
    if n_minus == 0:
        return KIND_MINIMUM
    if n_plus == 0:
        return KIND_MAXIMUM
    return KIND_SADDLE


@dataclass
class CriticalPoint:
    location: np.ndarray
    value: float
    gradient_norm: float
    inertia: tuple[int, int, int]
    kind: str
    occurrences: int = 1

    @property
    def saddle_index(self) -> int:
        return self.inertia[2]

    def as_dict(self) -> dict:
        return {
            "location": [float(v) for v in self.location],
            "value": float(self.value),
            "gradient_norm": float(self.gradient_norm),
            "inertia": list(self.inertia),
            "kind": self.kind,
            "occurrences": self.occurrences,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CriticalPoint":
        return cls(np.asarray(d["location"], dtype=float), d["value"], d["gradient_norm"],
                   tuple(d["inertia"]), d["kind"], d["occurrences"])


def classify(p: Potential, x: np.ndarray, zero_tol: float | None = None,
             grad_tol: float = 1e-5) -> CriticalPoint:
    """Classify a (near-)critical point by the inertia of its Hessian.

    Rejects points whose gradient norm exceeds ``grad_tol``.
    """
    x = np.asarray(x, dtype=float)
    grad_norm = float(np.linalg.norm(p.gradient(x)))
    if grad_norm > grad_tol:
        raise NotCriticalError(f"gradient norm {grad_norm:.3e} above {grad_tol:.3e}")
    s = eigendecompose(p.hessian(x), zero_tol)
    return CriticalPoint(x.copy(), float(p.value(x)), grad_norm, s.inertia,
                         kind_from_inertia(s.inertia))


@dataclass
class CriticalPointTable:
    """Multiset of found critical points; re-finding an entry within the
    dedup radius increments its occurrence count."""

    dedup_radius: float
    entries: list[CriticalPoint] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def find(self, x: np.ndarray) -> CriticalPoint | None:
        for entry in self.entries:
            if np.linalg.norm(entry.location - x) < self.dedup_radius:
                return entry
        return None

    def record(self, cp: CriticalPoint) -> CriticalPoint:
        existing = self.find(cp.location)
        if existing is None:
            self.entries.append(cp)
            return cp
        existing.occurrences += cp.occurrences
        if cp.gradient_norm < existing.gradient_norm:
            # Keep the sharper representative.
            existing.location = cp.location
            existing.value = cp.value
            existing.gradient_norm = cp.gradient_norm
            existing.inertia = cp.inertia
            existing.kind = cp.kind
        return existing

    def minima(self) -> list[CriticalPoint]:
        return [e for e in self.entries if e.kind == KIND_MINIMUM]

    def best_value(self) -> float:
        return min((e.value for e in self.entries), default=float("nan"))


def select_escape_target(table: CriticalPointTable, noise: NoiseSource) -> CriticalPoint:
    """Uniform draw over distinct table entries (occurrences are ignored)."""
    if not table.entries:
        raise ValueError("cannot select from an empty table")
    return table.entries[noise.integer(len(table.entries))]


def default_dedup_radius(search_region: np.ndarray) -> float:
    region = np.asarray(search_region, dtype=float)
    return 1e-4 * float(np.linalg.norm(region[:, 1] - region[:, 0]))


@dataclass
class ExplorationConfig:
    max_critical_points: int = 20
    tolerances: Tolerances = field(default_factory=Tolerances)
    diffusion: DiffusionConfig = field(default_factory=DiffusionConfig)
    seed: int = 0
    search_region: np.ndarray | None = None   # default: the potential's box
    dedup_radius: float | None = None         # default: 1e-4 * region diameter
    max_restarts: int = 5
    zero_tolerance: float | None = None       # eigenvalue zero classification

    def __post_init__(self):
        if self.max_critical_points < 1 or self.max_restarts < 0:
            raise ValueError("budgets must be positive")

    def as_dict(self) -> dict:
        d = dataclasses.asdict(self)
        if self.search_region is not None:
            d["search_region"] = np.asarray(self.search_region, dtype=float).tolist()
        return d


@dataclass
class AttemptStats:
    """One budgeted attempt; retries within an attempt append episodes."""

    index: int
    source: str                    # "fresh" | "minimum" | "saddle"
    diffusive_step_counts: list[int] = field(default_factory=list)    # per escape episode
    search_iteration_counts: list[int] = field(default_factory=list)  # per search episode
    restarts: int = 0
    outcome: str = "failed"        # "recorded" | "failed"
    recorded_kind: str | None = None
    escape_outcome: str | None = None
    rose_above_source: bool | None = None   # g at result vs g at escape source
    episodes: list[str] = field(default_factory=list)
    escape_seconds: float = 0.0
    search_seconds: float = 0.0

    @property
    def diffusive_steps(self) -> int:
        return sum(self.diffusive_step_counts)

    @property
    def search_iterations(self) -> int:
        return sum(self.search_iteration_counts)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class RunReport:
    problem: str
    config: ExplorationConfig
    table: CriticalPointTable
    attempts: list[AttemptStats] = field(default_factory=list)
    dimension: int = 0
    total_seconds: float = 0.0

    def mean_diffusive_steps(self) -> float:
        """Mean diffusive steps per escape episode."""
        counts = [c for a in self.attempts for c in a.diffusive_step_counts]
        return float(np.mean(counts)) if counts else 0.0

    def mean_search_iterations(self) -> float:
        """Mean accepted iterations per local-search episode."""
        counts = [c for a in self.attempts for c in a.search_iteration_counts]
        return float(np.mean(counts)) if counts else 0.0

    def summary(self) -> dict:
        recorded = sum(1 for a in self.attempts if a.outcome == "recorded")
        return {
            "attempts": len(self.attempts),
            "recorded": recorded,
            "distinct_points": len(self.table),
            "distinct_minima": len(self.table.minima()),
            "best_value": self.table.best_value(),
            "mean_diffusive_steps": self.mean_diffusive_steps(),
            "mean_search_iterations": self.mean_search_iterations(),
        }

    def canonical_dict(self, include_timing: bool = True) -> dict:
        d = {
            "problem": self.problem,
            "dimension": self.dimension,
            "config": self.config.as_dict(),
            "table": [e.as_dict() for e in self.table.entries],
            "dedup_radius": self.table.dedup_radius,
            "attempts": [a.as_dict() for a in self.attempts],
            "summary": self.summary(),
        }
        if include_timing:
            d["timing"] = {"total_seconds": self.total_seconds}
        else:
            for attempt in d["attempts"]:
                attempt.pop("escape_seconds")
                attempt.pop("search_seconds")
        return d

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.canonical_dict(include_timing), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        d = json.loads(text)
        cfg_d = dict(d["config"])
        cfg_d["tolerances"] = Tolerances(**cfg_d["tolerances"])
        cfg_d["diffusion"] = DiffusionConfig(**cfg_d["diffusion"])
        if cfg_d.get("search_region") is not None:
            cfg_d["search_region"] = np.asarray(cfg_d["search_region"], dtype=float)
        config = ExplorationConfig(**cfg_d)
        table = CriticalPointTable(d["dedup_radius"])
        table.entries = [CriticalPoint.from_dict(e) for e in d["table"]]
        attempts = [AttemptStats(**a) for a in d["attempts"]]
        report = cls(d["problem"], config, table, attempts, d.get("dimension", 0))
        report.total_seconds = d.get("timing", {}).get("total_seconds", 0.0)
        return report


class _Explorer:
    def __init__(self, p: Potential, cfg: ExplorationConfig):
        self.p = p
        self.cfg = cfg
        self.noise = NoiseSource(cfg.seed)
        self.region = np.asarray(
            cfg.search_region if cfg.search_region is not None else p.search_region,
            dtype=float)
        radius = cfg.dedup_radius if cfg.dedup_radius is not None else default_dedup_radius(self.region)
        self.table = CriticalPointTable(radius)

    def _draw_start(self) -> np.ndarray:
        for _ in range(_MAX_DRAW_TRIES):
            x = self.noise.uniform_box(self.region)
            try:
                if not np.isfinite(self.p.value(x)):
                    continue
                if np.linalg.norm(self.p.gradient(x)) > _SANE_GRADIENT:
                    continue
            except EvaluationError:
                continue
            return x
        raise RuntimeError("could not draw a usable starting point")

    def _classify_and_record(self, result: LocalSearchResult) -> tuple[CriticalPoint, bool]:
        grad_tol = self.cfg.tolerances.gradient_threshold(result.initial_grad_norm)
        cp = classify(self.p, result.final_point, self.cfg.zero_tolerance, grad_tol)
        is_new = self.table.find(cp.location) is None
        return self.table.record(cp), is_new

    def _fresh_search(self, stats: AttemptStats) -> tuple[CriticalPoint, bool] | None:
        """Minimize from a random point in the region; None on failure."""
        t0 = time.perf_counter()
        stats.episodes.append("fresh->minimize")
        try:
            x0 = self._draw_start()
            result = minimize(self.p, x0, self.cfg.tolerances,
                              zero_tol=self.cfg.zero_tolerance)
            stats.search_iteration_counts.append(result.iterations)
            if result.outcome != CONVERGED:
                return None
            return self._classify_and_record(result)
        except (StepUnderflowError, EvaluationError, NotCriticalError, RuntimeError):
            return None
        finally:
            stats.search_seconds += time.perf_counter() - t0

    def _escape_attempt(self, entry: CriticalPoint,
                        stats: AttemptStats) -> tuple[CriticalPoint, bool] | None:
        """Escape from ``entry`` and chase the opposite kind of critical point."""
        from_minimum = entry.kind == KIND_MINIMUM
        stats.source = KIND_MINIMUM if from_minimum else KIND_SADDLE
        stats.episodes.append("minimum->saddle_search" if from_minimum
                              else "saddle->minimize")
        t0 = time.perf_counter()
        try:
            if from_minimum:
                esc = escape_minimum(self.p, entry.location, self.cfg.diffusion,
                                     self.noise, self.cfg.zero_tolerance)
            else:
                esc = escape_saddle(self.p, entry.location, self.cfg.diffusion,
                                    self.noise, self.cfg.zero_tolerance)
        except (StepUnderflowError, EvaluationError, InertiaMismatchError):
            stats.escape_seconds += time.perf_counter() - t0
            return None
        stats.escape_seconds += time.perf_counter() - t0
        stats.diffusive_step_counts.append(esc.steps)
        stats.escape_outcome = esc.outcome

        # Even when the diffusion budget ran out we proceed with the search
        # and record whatever critical point results.
        t0 = time.perf_counter()
        try:
            if from_minimum:
                result = saddle_search(self.p, esc.point, self.cfg.tolerances,
                                       zero_tol=self.cfg.zero_tolerance)
            else:
                result = minimize(self.p, esc.point, self.cfg.tolerances,
                                  zero_tol=self.cfg.zero_tolerance)
            stats.search_iteration_counts.append(result.iterations)
            if result.outcome != CONVERGED:
                return None
            recorded, is_new = self._classify_and_record(result)
            stats.rose_above_source = bool(recorded.value > entry.value)
            return recorded, is_new
        except (StepUnderflowError, EvaluationError, NotCriticalError):
            return None
        finally:
            stats.search_seconds += time.perf_counter() - t0

    def _escape_loop(self, stats: AttemptStats) -> CriticalPoint | None:
        """One budgeted attempt: escape a random entry; on failure or on
        re-finding a known point, retry from a different random entry while
        the restart budget lasts."""
        recorded = None
        previous = None
        for retry in range(self.cfg.max_restarts + 1):
            entry = select_escape_target(self.table, self.noise)
            if entry is previous and len(self.table) > 1:
                others = [e for e in self.table.entries if e is not previous]
                entry = others[self.noise.integer(len(others))]
            outcome = self._escape_attempt(entry, stats)
            previous = entry
            if outcome is not None:
                recorded, is_new = outcome
                if is_new:
                    return recorded
            if retry < self.cfg.max_restarts:
                stats.restarts += 1
        if recorded is not None:
            return recorded          # only duplicates found; the last stands
        # Every escape failed outright: fall back to a fresh random start.
        fresh = self._fresh_search(stats)
        return fresh[0] if fresh is not None else None

    def run(self) -> RunReport:
        start = time.perf_counter()
        attempts: list[AttemptStats] = []
        for index in range(1, self.cfg.max_critical_points + 1):
            stats = AttemptStats(index=index, source="fresh")
            recorded = None
            if not self.table.entries:
                for _ in range(self.cfg.max_restarts + 1):
                    fresh = self._fresh_search(stats)
                    if fresh is not None:
                        recorded = fresh[0]
                        break
                    stats.restarts += 1
            else:
                recorded = self._escape_loop(stats)
            if recorded is not None:
                stats.outcome = "recorded"
                stats.recorded_kind = recorded.kind
            attempts.append(stats)
        report = RunReport(self.p.name, self.cfg, self.table, attempts, self.p.dimension)
        report.total_seconds = time.perf_counter() - start
        return report


def explore(p: Potential, cfg: ExplorationConfig) -> RunReport:
    """Run the full exploration loop: seed the table with a minimum found
    from a random start, then repeatedly escape a randomly chosen table
    entry and search for the complementary critical point."""
    return _Explorer(p, cfg).run()

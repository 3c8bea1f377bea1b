import numpy as np
import pytest

from ddcid.diffusion import DiffusionConfig, NoiseSource
from ddcid.explorer import (
    KIND_DEGENERATE,
    KIND_MAXIMUM,
    KIND_MINIMUM,
    KIND_SADDLE,
    CriticalPoint,
    CriticalPointTable,
    ExplorationConfig,
    NotCriticalError,
    RunReport,
    classify,
    default_dedup_radius,
    explore,
    kind_from_inertia,
    select_escape_target,
)
from ddcid.local_search import Tolerances
from ddcid.potentials import make_camel, make_molei
from ddcid.spectral import eigendecompose

MOLEI_POINTS = {
    "min+": np.array([1.0, 0.0]),
    "min-": np.array([-1.0, 0.0]),
    "saddle": np.array([0.0, 1.0]),
}


def found(table, target, tol=1e-4):
    return any(np.linalg.norm(e.location - target) < tol for e in table.entries)


def make_cp(x, kind=KIND_MINIMUM, value=0.0):
    inertia = {KIND_MINIMUM: (2, 0, 0), KIND_SADDLE: (1, 0, 1),
               KIND_MAXIMUM: (0, 0, 2), KIND_DEGENERATE: (1, 1, 0)}[kind]
    return CriticalPoint(np.asarray(x, dtype=float), value, 1e-10, inertia, kind)


# --- classification ------------------------------------------------------------

def test_kind_from_inertia():
    assert kind_from_inertia((3, 0, 0)) == KIND_MINIMUM
    assert kind_from_inertia((0, 0, 3)) == KIND_MAXIMUM
    assert kind_from_inertia((2, 0, 1)) == KIND_SADDLE
    assert kind_from_inertia((2, 1, 0)) == KIND_DEGENERATE


def test_classify_camel_rows():
    p = make_camel()
    cp = classify(p, np.array([0.08984201310, -0.71265640302]))
    assert cp.kind == KIND_MINIMUM
    eig = np.sort(np.linalg.eigvalsh(p.hessian(cp.location)))
    assert np.max(np.abs(eig - [7.6822, 16.4932])) < 1e-3

    cp = classify(p, np.array([1.23022988, 0.16233458]))
    assert cp.kind == KIND_MAXIMUM
    eig = np.sort(np.linalg.eigvalsh(p.hessian(cp.location)))
    assert np.max(np.abs(eig - [-8.0149, -5.9537])) < 1e-3

    cp = classify(p, np.zeros(2))
    assert cp.kind == KIND_SADDLE
    assert cp.saddle_index == 1


def test_classify_rejects_noncritical():
    with pytest.raises(NotCriticalError):
        classify(make_camel(), np.array([0.5, 0.5]))


# --- table ----------------------------------------------------------------------

def test_record_deduplicates():
    table = CriticalPointTable(dedup_radius=1e-3)
    table.record(make_cp([0.0, 0.0]))
    entry = table.record(make_cp([1e-5, 0.0]))
    assert len(table) == 1
    assert entry.occurrences == 2


def test_record_separate_points():
    table = CriticalPointTable(dedup_radius=0.1)
    table.record(make_cp([0.0, 0.0]))
    table.record(make_cp([0.2, 0.0]))
    assert len(table) == 2
    assert all(e.occurrences == 1 for e in table.entries)


def test_record_keeps_sharper_representative():
    table = CriticalPointTable(dedup_radius=1e-2)
    blunt = make_cp([1e-3, 0.0])
    blunt.gradient_norm = 1e-6
    table.record(blunt)
    sharp = make_cp([0.0, 0.0])
    sharp.gradient_norm = 1e-12
    entry = table.record(sharp)
    assert entry.occurrences == 2
    assert entry.gradient_norm == 1e-12
    assert np.array_equal(entry.location, [0.0, 0.0])


def test_default_dedup_radius():
    region = np.array([[-2.0, 2.0], [-1.0, 1.0]])
    assert default_dedup_radius(region) == pytest.approx(1e-4 * np.sqrt(20.0))


# --- selection --------------------------------------------------------------------

def test_select_single_entry():
    table = CriticalPointTable(1e-3)
    cp = table.record(make_cp([1.0, 2.0]))
    assert select_escape_target(table, NoiseSource(0)) is cp


def test_select_empty_table_rejected():
    with pytest.raises(ValueError):
        select_escape_target(CriticalPointTable(1e-3), NoiseSource(0))


def test_select_uniform_and_occurrence_independent():
    table = CriticalPointTable(1e-3)
    first = table.record(make_cp([0.0, 0.0]))
    table.record(make_cp([1.0, 0.0]))
    first.occurrences = 1000      # must not bias selection
    noise = NoiseSource(42)
    draws = 10000
    hits = sum(select_escape_target(table, noise) is first for _ in range(draws))
    sigma = 0.5 * np.sqrt(draws)
    assert abs(hits - draws / 2) <= 3 * sigma


# --- explore ------------------------------------------------------------------------

def test_explore_budget_one_single_minimum():
    rep = explore(make_molei(), ExplorationConfig(max_critical_points=1, seed=5))
    assert len(rep.attempts) == 1
    assert len(rep.table) == 1
    assert rep.table.entries[0].kind == KIND_MINIMUM


def test_explore_molei_budget_four():
    hits = 0
    for seed in range(10):
        rep = explore(make_molei(), ExplorationConfig(max_critical_points=4, seed=seed))
        ok = all(found(rep.table, t) for t in MOLEI_POINTS.values())
        hits += ok
        if ok:
            kinds = {}
            for name, target in MOLEI_POINTS.items():
                entry = next(e for e in rep.table.entries
                             if np.linalg.norm(e.location - target) < 1e-4)
                kinds[name] = entry.kind
            assert kinds["min+"] == KIND_MINIMUM
            assert kinds["min-"] == KIND_MINIMUM
            assert kinds["saddle"] == KIND_SADDLE
    assert hits >= 6


def test_explore_alternation_structure():
    rep = explore(make_molei(), ExplorationConfig(max_critical_points=6, seed=3))
    valid = {"fresh->minimize", "minimum->saddle_search", "saddle->minimize"}
    for attempt in rep.attempts:
        assert attempt.episodes
        assert set(attempt.episodes) <= valid
    # first attempt starts fresh; later ones escape
    assert rep.attempts[0].episodes[0] == "fresh->minimize"
    assert any(a.episodes[0] != "fresh->minimize" for a in rep.attempts[1:])


def test_explore_table_entries_are_critical():
    p = make_camel()
    cfg = ExplorationConfig(max_critical_points=20, seed=9)
    rep = explore(p, cfg)
    for e in rep.table.entries:
        assert np.linalg.norm(p.gradient(e.location)) < 1e-5
        s = eigendecompose(p.hessian(e.location), cfg.zero_tolerance)
        assert kind_from_inertia(s.inertia) == e.kind


def test_explore_deterministic_given_seed():
    cfg = ExplorationConfig(max_critical_points=8, seed=21)
    a = explore(make_camel(), cfg)
    b = explore(make_camel(), cfg)
    assert a.to_json(include_timing=False) == b.to_json(include_timing=False)


def test_explore_averages_match_raw_logs():
    rep = explore(make_molei(), ExplorationConfig(max_critical_points=5, seed=2))
    diff = [c for a in rep.attempts for c in a.diffusive_step_counts]
    iters = [c for a in rep.attempts for c in a.search_iteration_counts]
    assert rep.mean_diffusive_steps() == pytest.approx(np.mean(diff))
    assert rep.mean_search_iterations() == pytest.approx(np.mean(iters))
    summary = rep.summary()
    assert summary["mean_diffusive_steps"] == pytest.approx(np.mean(diff))
    assert summary["recorded"] == sum(1 for a in rep.attempts if a.outcome == "recorded")


def test_report_json_round_trip():
    rep = explore(make_molei(), ExplorationConfig(max_critical_points=4, seed=8))
    text = rep.to_json()
    back = RunReport.from_json(text)
    assert back.canonical_dict() == rep.canonical_dict()
    assert back.to_json() == text


def test_explore_respects_config_region():
    # restrict to the right half-plane: only the (1, 0) basin is sampled
    cfg = ExplorationConfig(max_critical_points=1, seed=4,
                            search_region=np.array([[0.5, 3.0], [-3.0, 3.0]]))
    rep = explore(make_molei(), cfg)
    assert found(rep.table, MOLEI_POINTS["min+"], tol=1e-3)


def test_exploration_config_validation():
    with pytest.raises(ValueError):
        ExplorationConfig(max_critical_points=0)
    with pytest.raises(ValueError):
        Tolerances(atol=0.0)
    with pytest.raises(ValueError):
        DiffusionConfig(alpha=0.0)

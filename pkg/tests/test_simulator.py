# tests/test_simulator.py
"""
Tests del motor de simulación: fases de detección/respuesta, reproducibilidad, invariantes
por réplica y reproducción (marcada como slow) de los valores publicados.
"""

import math

import numpy as np
import pytest

from src.hexdetect.core import ModelId
from src.hexdetect.errors import ConfigurationError, InvalidThresholdError
from src.hexdetect.hexgrid import NodeId, build_grid
from src.hexdetect.metrics import summarize
from src.hexdetect.probability import SensorParams, derive_params
from src.hexdetect.simulator import (
    DetectorSettings,
    SimulationConfig,
    TruthScenario,
    detection_phase,
    response_phase,
    run_experiment,
    simulate_calibration_runs,
    simulate_replications,
    threshold_sweep,
)

EXAMPLE = SensorParams(0.9, 0.5, 0.9, 0.01)


def _within_3se(hits, n, p):
    se = math.sqrt(p * (1 - p) / n)
    return abs(hits / n - p) <= 3 * se


@pytest.fixture(scope="module")
def grid8():
    return build_grid(8, 8)


# ====================================================================
# Fases del proceso
# ====================================================================
def test_normal_truth_has_no_detections(grid8):
    rng = np.random.default_rng(0)
    for _ in range(50):
        y = detection_phase(ModelId.normal(), EXAMPLE, grid8, rng)
        assert y.count() == 0


def test_detections_stay_in_event_neighborhood(grid8):
    rng = np.random.default_rng(1)
    center = NodeId(3, 4)
    allowed = {center} | set(grid8.adjacency[center])
    for _ in range(100):
        y = detection_phase(ModelId.event(center), EXAMPLE, grid8, rng)
        assert {n for n, v in y.to_mapping().items() if v} <= allowed


def test_perfect_sensors_reproduce_the_event(grid8):
    params = SensorParams(1.0, 0.0, 1.0, 0.0)
    rng = np.random.default_rng(2)
    center = NodeId(5, 5)
    y = detection_phase(ModelId.event(center), params, grid8, rng)
    z = response_phase(y, params, rng)
    assert y.count() == 1 and y[center] == 1
    assert np.array_equal(z.values, y.values)


def test_detection_and_response_rates():
    g = build_grid(3, 3)
    center = NodeId(1, 1)
    rng = np.random.default_rng(3)
    draws = 20_000
    y_center = z_given_y = y_total = z_quiet = quiet_total = 0
    for _ in range(draws):
        y = detection_phase(ModelId.event(center), EXAMPLE, g, rng)
        z = response_phase(y, EXAMPLE, rng)
        y_center += y[center]
        detected = y.values == 1
        y_total += int(detected.sum())
        z_given_y += int(z.values[detected].sum())
        quiet_total += int((~detected).sum())
        z_quiet += int(z.values[~detected].sum())
    assert _within_3se(y_center, draws, EXAMPLE.p1)
    assert _within_3se(z_given_y, y_total, EXAMPLE.pc)
    assert _within_3se(z_quiet, quiet_total, EXAMPLE.pw)


def test_marginal_response_rates_match_derived():
    g = build_grid(3, 3)
    center = NodeId(1, 1)
    dp = derive_params(EXAMPLE)
    rng = np.random.default_rng(4)
    draws = 20_000
    around = sorted(g.adjacency[center])
    hits_center = hits_around = 0
    for _ in range(draws):
        z = response_phase(detection_phase(ModelId.event(center), EXAMPLE, g, rng), EXAMPLE, rng)
        hits_center += z[center]
        hits_around += sum(z[n] for n in around)
    assert _within_3se(hits_center, draws, dp.P1)
    assert _within_3se(hits_around, draws * len(around), dp.P2)


def test_all_quiet_probability_32x32():
    g = build_grid(32, 32)
    params = SensorParams(0.9, 0.5, 0.9, 0.001)
    rng = np.random.default_rng(5)
    draws = 3000
    quiet = sum(
        response_phase(detection_phase(ModelId.normal(), params, g, rng), params, rng).count()
        == 0
        for _ in range(draws)
    )
    assert 0.999**1024 == pytest.approx(0.358971, abs=1e-6)
    assert _within_3se(quiet, draws, 0.999**1024)


def test_uniform_truth_covers_the_grid(grid8):
    rng = np.random.default_rng(6)
    drawn = {TruthScenario.event_uniform().draw(grid8, rng).node for _ in range(2000)}
    assert len(drawn) == grid8.size


def test_uniform_truth_over_given_nodes(grid8):
    rng = np.random.default_rng(6)
    interior = grid8.interior_nodes()
    truth = TruthScenario.event_uniform(interior)
    drawn = {truth.draw(grid8, rng).node for _ in range(2000)}
    assert drawn == set(interior)


# ====================================================================
# Réplicas: reproducibilidad e invariantes
# ====================================================================
def _config(topology, **kw):
    base = dict(params=EXAMPLE, topology=topology, replications=600, seed=7, log_every=0)
    base.update(kw)
    return SimulationConfig(**base)


def test_serial_and_parallel_are_identical():
    g = build_grid(8, 8)
    serial = simulate_replications(_config(g, replications=1200), (0.6, 0.9))
    parallel = simulate_replications(_config(g, replications=1200, workers=2), (0.6, 0.9))
    for branch in ("normal", "event"):
        a, b = getattr(serial, branch), getattr(parallel, branch)
        assert a.keys() == b.keys()
        for key in a:
            assert np.array_equal(a[key], b[key]), key


def test_same_seed_same_summary(grid8):
    a = run_experiment(_config(grid8))
    b = run_experiment(_config(grid8))
    assert a == b
    c = run_experiment(_config(grid8, seed=8))
    assert c.S2 != a.S2 or c.N3 != a.N3


def test_event_results_do_not_depend_on_normal_branch(grid8):
    both = simulate_replications(_config(grid8, scenario="both"))
    event_only = simulate_replications(_config(grid8, scenario="event"))
    assert event_only.normal is None
    for key in both.event:
        assert np.array_equal(both.event[key], event_only.event[key])


def test_per_replication_inclusions(grid8):
    outcomes = simulate_replications(_config(grid8, replications=1000), (0.9,))
    ev = outcomes.event
    # S2 ⊆ S3 ⊆ S4 réplica a réplica, y el conjunto de máximos vive en la ventana de Occam
    assert not np.any(ev["s2"] & ~ev["s3"])
    assert not np.any(ev["s3"] & ~ev["s4"])
    assert not np.any(ev["s3"] & ~ev["occam_success"][:, 0])
    assert np.all(ev["n4"] >= ev["n3"])
    detected = ~ev["fn"]
    assert np.all(ev["n3"][detected] >= 1)
    assert np.all(ev["n3"][~detected] == 0)


def test_summary_invariants(grid8):
    s = run_experiment(_config(grid8, replications=1000))
    assert s.S2.value <= s.S3.value <= s.S4.value
    assert s.N1.value == pytest.approx(1.0 - s.S1.value, abs=1e-12)
    assert s.N2.value == pytest.approx(1.0 - s.false_negative_rate.value, abs=1e-12)
    assert s.N3.value >= 1.0 - s.false_negative_rate.value
    assert s.N4.value >= s.N3.value
    assert s.S2.se == pytest.approx(math.sqrt(s.S2.value * (1 - s.S2.value) / 1000))
    assert s.replications == 1000 and s.seed == 7


def test_scenario_subsets_leave_missing_metrics(grid8):
    normal = run_experiment(_config(grid8, scenario="normal"))
    assert not math.isnan(normal.S1.value)
    assert math.isnan(normal.S2.value) and normal.S2.n == 0
    event = run_experiment(_config(grid8, scenario="event"))
    assert math.isnan(event.S1.value)
    assert not math.isnan(event.S5.value)


def test_single_replication_has_no_count_se(grid8):
    s = run_experiment(_config(grid8, replications=1))
    assert math.isnan(s.N3.se)
    assert not math.isnan(s.S2.se)


def test_bma_metrics_only_with_prior(grid8):
    assert run_experiment(_config(grid8)).S1_bma is None
    s = run_experiment(_config(grid8, detectors=DetectorSettings(p_norm=0.5)))
    assert 0.0 <= s.S1_bma.value <= 1.0
    assert 0.0 <= s.S2_bma.value <= 1.0


def test_fixed_event_node(grid8):
    node = NodeId(4, 4)
    outcomes = simulate_replications(_config(grid8, scenario="event", event_node=node))
    assert np.all(outcomes.event["node"] == grid8.index(node))


def test_interior_restriction(grid8):
    interior = frozenset(grid8.interior_nodes())
    outcomes = simulate_replications(
        _config(grid8, scenario="event", detectors=DetectorSettings(feasible=interior))
    )
    summary = summarize(outcomes)
    assert summary.N3.value <= len(interior)
    # la verdad también se sortea sólo entre nodos factibles
    interior_idx = {grid8.index(n) for n in interior}
    assert set(outcomes.event["node"].tolist()) <= interior_idx


def test_event_node_outside_feasible_is_rejected(grid8):
    interior = frozenset(grid8.interior_nodes())
    config = _config(
        grid8, event_node=NodeId(0, 0), detectors=DetectorSettings(feasible=interior)
    )
    with pytest.raises(ConfigurationError):
        config.validate()


# ====================================================================
# Barrido de umbrales
# ====================================================================
def test_sweep_is_monotone_in_c(grid8):
    points = threshold_sweep(_config(grid8, replications=800), [0.6, 0.7, 0.8, 0.9])
    assert [p.C for p in points] == [0.6, 0.7, 0.8, 0.9]
    for wide, narrow in zip(points, points[1:], strict=False):
        assert narrow.success.value <= wide.success.value
        assert narrow.search.value <= wide.search.value


def test_sweep_at_occam_c_matches_s5(grid8):
    config = _config(grid8, scenario="event")
    summary = run_experiment(config)
    (point,) = threshold_sweep(config, [config.detectors.occam_c])
    assert point.success == summary.S5
    assert point.search == summary.N5


def test_sweep_rejects_bad_thresholds(grid8):
    with pytest.raises(InvalidThresholdError):
        threshold_sweep(_config(grid8), [0.5, 1.0])
    with pytest.raises(InvalidThresholdError):
        threshold_sweep(_config(grid8), [])


# ====================================================================
# Validación de configuración
# ====================================================================
@pytest.mark.parametrize(
    "overrides",
    [
        {"replications": 0},
        {"scenario": "sometimes"},
        {"seed": -1},
        {"workers": 0},
        {"event_node": NodeId(8, 0)},
        {"detectors": DetectorSettings(occam_c=1.0)},
        {"detectors": DetectorSettings(p_norm=1.0)},
        {"detectors": DetectorSettings(feasible=frozenset())},
    ],
)
def test_invalid_configs(grid8, overrides):
    with pytest.raises(ConfigurationError):
        run_experiment(_config(grid8, **overrides))


# ====================================================================
# Runs de calibración
# ====================================================================
def test_calibration_runs_layout(grid8):
    runs = simulate_calibration_runs(EXAMPLE, grid8, 3, 4, seed=1, event_node=NodeId(2, 2))
    assert [r.kind for r in runs] == ["normal"] * 3 + ["event"] * 4
    assert all(r.detections is None for r in runs[:3])
    assert all(r.event_node == NodeId(2, 2) and r.detections is not None for r in runs[3:])
    again = simulate_calibration_runs(EXAMPLE, grid8, 3, 4, seed=1, event_node=NodeId(2, 2))
    assert runs == again


def test_calibration_runs_need_at_least_one(grid8):
    with pytest.raises(ConfigurationError):
        simulate_calibration_runs(EXAMPLE, grid8, 0, 0, seed=1)


# ====================================================================
# Reproducción de valores publicados (10 000 réplicas en 32x32)
# ====================================================================
@pytest.fixture(scope="module")
def grid32():
    return build_grid(32, 32)


@pytest.mark.slow
def test_published_row_p2_05(grid32):
    s = run_experiment(
        SimulationConfig(params=EXAMPLE, topology=grid32, replications=10_000, seed=2024)
    )
    assert s.S2.value == pytest.approx(0.70, abs=0.03)
    assert s.S3.value == pytest.approx(0.85, abs=0.03)
    assert s.N3.value == pytest.approx(4.64, rel=0.15)
    assert s.S5.value == pytest.approx(0.86, abs=0.03)
    assert s.N5.value == pytest.approx(4.88, rel=0.15)


@pytest.mark.slow
def test_published_row_p2_03(grid32):
    params = SensorParams(0.9, 0.3, 0.9, 0.01)
    s = run_experiment(
        SimulationConfig(
            params=params, topology=grid32, scenario="event", replications=10_000, seed=2024
        )
    )
    assert s.S2.value == pytest.approx(0.47, abs=0.03)
    assert s.N4.value == pytest.approx(14.81, rel=0.20)


@pytest.mark.slow
def test_normal_success_with_rare_false_responses(grid32):
    params = SensorParams(0.9, 0.5, 0.9, 0.001)
    s = run_experiment(
        SimulationConfig(
            params=params, topology=grid32, scenario="normal", replications=10_000, seed=2024
        )
    )
    assert 0.35 - 3 * s.S1.se <= s.S1.value <= 0.37 + 3 * s.S1.se


@pytest.mark.slow
def test_published_threshold_sweep(grid32):
    points = threshold_sweep(
        SimulationConfig(params=EXAMPLE, topology=grid32, replications=10_000, seed=2024),
        [0.6, 0.7, 0.8, 0.9],
    )
    by_c = {p.C: p for p in points}
    assert by_c[0.6].success.value == pytest.approx(0.93, abs=0.03)
    assert by_c[0.6].search.value == pytest.approx(6.88, rel=0.15)
    assert by_c[0.9].success.value == pytest.approx(0.86, abs=0.03)
    assert by_c[0.9].search.value == pytest.approx(4.88, rel=0.15)


@pytest.mark.slow
def test_normal_success_depends_only_on_pw(grid32):
    estimates = []
    for p1, p2, pc in ((0.9, 0.5, 0.9), (0.7, 0.3, 0.8), (0.8, 0.6, 0.95)):
        s = run_experiment(
            SimulationConfig(
                params=SensorParams(p1, p2, pc, 0.001),
                topology=grid32,
                scenario="normal",
                replications=4000,
                seed=31,
            )
        )
        assert 0.33 <= s.S1.value <= 0.39
        assert abs(s.S1.value - 0.999**1024) <= 0.02
        estimates.append(s.S1)
    for a, b in zip(estimates, estimates[1:], strict=False):
        assert abs(a.value - b.value) <= 3 * math.hypot(a.se, b.se)


def test_frequent_false_responses_defeat_normal(grid32):
    s = run_experiment(
        SimulationConfig(
            params=EXAMPLE, topology=grid32, scenario="normal", replications=1000, seed=3
        )
    )
    assert s.S1.value <= 0.005


def test_deterministic_channel_always_finds_the_event():
    # Sólo el nodo del evento responde y ningún otro modelo es compatible con el campo
    s = run_experiment(
        SimulationConfig(
            params=SensorParams(1.0, 0.0, 1.0, 0.0),
            topology=build_grid(5, 5),
            scenario="event",
            replications=200,
            seed=4,
        )
    )
    assert s.S2.value == s.S3.value == s.S5.value == 1.0
    assert s.N3.value == 1.0
    assert s.false_negative_rate.value == 0.0

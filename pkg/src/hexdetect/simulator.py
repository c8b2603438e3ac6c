"""
Motor (engine) de la simulación Monte Carlo.

Responsabilidad
---------------
Para cada réplica:
1) Fijar la verdad: M0 (réplicas normales) o M_N con N fijo o sorteado uniformemente entre
   todos los nodos, bordes incluidos (réplicas de evento).
2) Simular la fase de detección ({y_N}) y la de respuesta ({z_N}).
3) Calcular Δ_N de todos los nodos una sola vez y pasar **el mismo campo** por todos los
   detectores (números aleatorios comunes): selección simple, conjunto de máximos,
   ampliación por vecinos, ventana de Occam para cada C y, si hay p_norm, BMA.
4) Guardar los aciertos y tamaños de conjunto de la réplica.

La agregación en S_i / N_i con errores estándar vive en `metrics.py`.

Interfaz
--------
detection_phase(truth, params, topology, rng) -> DetectionField
response_phase(detections, params, rng) -> ResponseField
simulate_replications(config, thresholds) -> ExperimentOutcomes
simulate_calibration_runs(params, topology, n_normal, n_event, seed) -> list[CalibrationRun]
run_experiment(config) -> SimulationSummary
threshold_sweep(config, thresholds) -> list[SweepPoint]

Notas de diseño
---------------
- Reproducibilidad: cada réplica usa sus propios flujos `rng.make_streams(seed, branch, r)`;
  los bloques de réplicas pueden repartirse entre procesos (`workers > 1`) y se vuelven a
  unir en orden de réplica, así que serie y paralelo producen los mismos arrays.
- Recuento de búsqueda: sólo cuentan los miembros M_N de un conjunto ({M0} aporta 0).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .calibration import CalibrationRun
from .core import DetectionField, ModelId, ResponseField
from .detectors import (
    argmax_indices,
    bma_log_weights,
    feasible_mask,
    neighborhood_indices,
    node_deltas,
    occam_indices,
    pick_one,
    restrict,
)
from .errors import ConfigurationError, InvalidThresholdError
from .hexgrid import GridTopology, NodeId, build_grid
from .metrics import SimulationSummary, SweepPoint, summarize, sweep_points
from .probability import SensorParams, delta_table, derive_params
from .rng import BRANCH_EVENT, BRANCH_NORMAL, BRANCH_RECORDS, make_streams

logger = logging.getLogger(__name__)

Scenario = Literal["normal", "event", "both"]
_SCENARIOS = ("normal", "event", "both")

# Réplicas por bloque de trabajo (unidad de reparto entre procesos).
_BLOCK_SIZE = 500


# ======================================================================================
# Verdad simulada y configuración
# ======================================================================================
@dataclass(frozen=True)
class TruthScenario:
    """
    Verdad de una réplica:
    - kind="normal"        ⇒ M0.
    - kind="event_at"      ⇒ M_N con N = `node`.
    - kind="event_uniform" ⇒ M_N con N sorteado uniformemente en cada réplica, entre todos
      los nodos o sólo entre `nodes` (en orden row-major) si se indican.
    """

    kind: Literal["normal", "event_at", "event_uniform"]
    node: NodeId | None = None
    nodes: tuple[NodeId, ...] | None = None

    @classmethod
    def normal(cls) -> TruthScenario:
        return cls("normal")

    @classmethod
    def event_at(cls, node: NodeId) -> TruthScenario:
        return cls("event_at", node)

    @classmethod
    def event_uniform(cls, nodes: Iterable[NodeId] | None = None) -> TruthScenario:
        return cls("event_uniform", nodes=None if nodes is None else tuple(sorted(nodes)))

    def draw(self, topology: GridTopology, rng: np.random.Generator) -> ModelId:
        if self.kind == "normal":
            return ModelId.normal()
        if self.kind == "event_at":
            assert self.node is not None
            topology.check(self.node)
            return ModelId.event(self.node)
        if self.nodes is not None:
            return ModelId.event(self.nodes[int(rng.integers(len(self.nodes)))])
        return ModelId.event(topology.node_at(int(rng.integers(topology.size))))


@dataclass(frozen=True)
class DetectorSettings:
    """
    occam_c  : umbral C de S5/N5 (por defecto 0.9).
    p_norm   : si se indica, se puntúa también la regla BMA con prior p_norm para M0 y el resto
               repartido uniformemente entre los nodos.
    feasible : restricción opcional de los modelos de evento considerados.
    """

    occam_c: float = 0.9
    p_norm: float | None = None
    feasible: frozenset[NodeId] | None = None


@dataclass(frozen=True)
class SimulationConfig:
    """Configuración completa de un experimento (validada antes de simular)."""

    params: SensorParams
    topology: GridTopology
    scenario: Scenario = "both"
    replications: int = 10_000
    seed: int = 12345
    detectors: DetectorSettings = field(default_factory=DetectorSettings)
    event_node: NodeId | None = None
    workers: int = 1
    log_every: int = 1000

    def validate(self) -> None:
        if self.scenario not in _SCENARIOS:
            raise ConfigurationError(f"scenario={self.scenario!r}; usa uno de {_SCENARIOS}")
        if self.replications < 1:
            raise ConfigurationError(f"replications={self.replications} debe ser >= 1")
        if self.seed < 0:
            raise ConfigurationError(f"seed={self.seed} debe ser >= 0")
        if not 0.0 < self.detectors.occam_c < 1.0:
            raise ConfigurationError(f"occam_c={self.detectors.occam_c} debe estar en (0, 1)")
        p_norm = self.detectors.p_norm
        if p_norm is not None and not 0.0 < p_norm < 1.0:
            raise ConfigurationError(f"p_norm={p_norm} debe estar en (0, 1)")
        if self.event_node is not None and not self.topology.contains(self.event_node):
            raise ConfigurationError(f"event_node={self.event_node} fuera de la rejilla")
        feasible = self.detectors.feasible
        if feasible is not None:
            if not feasible:
                raise ConfigurationError("feasible no puede ser vacío")
            if any(not self.topology.contains(n) for n in feasible):
                raise ConfigurationError("feasible contiene nodos fuera de la rejilla")
            if self.event_node is not None and self.event_node not in feasible:
                raise ConfigurationError(
                    f"event_node={self.event_node} queda fuera de los modelos factibles"
                )
        if self.workers < 1:
            raise ConfigurationError(f"workers={self.workers} debe ser >= 1")

    @property
    def event_truth(self) -> TruthScenario:
        if self.event_node is not None:
            return TruthScenario.event_at(self.event_node)
        return TruthScenario.event_uniform(self.detectors.feasible)


# ======================================================================================
# Fases del proceso
# ======================================================================================
def detection_phase(
    truth: ModelId, params: SensorParams, topology: GridTopology, rng: np.random.Generator
) -> DetectionField:
    """
    Bajo M0 nadie detecta. Bajo M_N: y_N ~ Ber(p1), y_N' ~ Ber(p2) para N' ∈ B(N) (sorteos
    independientes) y 0 en el resto.
    """
    y = np.zeros(topology.size, dtype=np.uint8)
    if truth.node is not None:
        center = topology.index(truth.node)
        y[center] = rng.random() < params.p1
        around = topology.neighbor_indices(center)
        y[around] = rng.random(around.size) < params.p2
    return DetectionField.from_array(topology, y)


def response_phase(
    detections: DetectionField, params: SensorParams, rng: np.random.Generator
) -> ResponseField:
    """z_N ~ Ber(pc) si y_N = 1 y z_N ~ Ber(pw) si y_N = 0, independientes por nodo."""
    u = rng.random(detections.values.size)
    z = np.where(detections.values == 1, u < params.pc, u < params.pw)
    return ResponseField(detections.rows, detections.cols, z.astype(np.uint8))


# ======================================================================================
# Bloques de réplicas
# ======================================================================================
@dataclass(frozen=True)
class _BlockJob:
    """Trabajo serializable (picklable) para un proceso: réplicas [start, stop)."""

    params: SensorParams
    rows: int
    cols: int
    branch: int
    seed: int
    start: int
    stop: int
    thresholds: tuple[float, ...]
    p_norm: float | None
    feasible: frozenset[NodeId] | None
    truth: TruthScenario
    log_every: int


@dataclass
class ExperimentOutcomes:
    """
    Resultados por réplica (arrays alineados por índice de réplica).

    normal : {"s1", "s1_bma"}.
    event  : {"node", "s2", "n2", "fn", "s3", "n3", "s4", "n4", "s_bma",
              "occam_success" (R, nC), "occam_size" (R, nC)}.
    """

    config: SimulationConfig
    thresholds: tuple[float, ...]
    normal: dict[str, np.ndarray] | None = None
    event: dict[str, np.ndarray] | None = None


def _simulate_block(job: _BlockJob) -> dict[str, np.ndarray]:
    topology = build_grid(job.rows, job.cols)
    dp = derive_params(job.params)
    table = delta_table(dp)
    mask = feasible_mask(topology, job.feasible)
    n_reps = job.stop - job.start
    n_c = len(job.thresholds)
    is_event = job.branch == BRANCH_EVENT

    log_p_norm = log_p_events = None
    if job.p_norm is not None:
        log_p_norm = math.log(job.p_norm)
        # Prior de evento uniforme sobre los nodos factibles (0 fuera de ellos)
        support = topology.size if mask is None else int(mask.sum())
        base = np.full(topology.size, (1.0 - job.p_norm) / support)
        if mask is not None:
            base = np.where(mask, base, 0.0)
        with np.errstate(divide="ignore"):
            log_p_events = np.log(base)

    out: dict[str, np.ndarray] = {}
    if is_event:
        for key in ("node", "n2", "n3", "n4"):
            out[key] = np.zeros(n_reps, dtype=np.int64)
        for key in ("s2", "fn", "s3", "s4", "s_bma"):
            out[key] = np.zeros(n_reps, dtype=bool)
        out["occam_success"] = np.zeros((n_reps, n_c), dtype=bool)
        out["occam_size"] = np.zeros((n_reps, n_c), dtype=np.int64)
    else:
        out["s1"] = np.zeros(n_reps, dtype=bool)
        out["s1_bma"] = np.zeros(n_reps, dtype=bool)

    log_prefix = f"[branch:{job.branch}] "
    for j, rep in enumerate(range(job.start, job.stop)):
        streams = make_streams(job.seed, job.branch, rep)
        truth = job.truth.draw(topology, streams.field)
        y = detection_phase(truth, job.params, topology, streams.field)
        z = response_phase(y, job.params, streams.field)
        _, deltas = node_deltas(z.values, topology, table)
        deltas = restrict(deltas, mask)
        idx, dmax = argmax_indices(deltas)

        # Selección simple (-1 ⇒ M0)
        chosen = -1 if dmax < 0.0 else pick_one(idx, streams.decision)

        # BMA (posición 0 ⇒ M0, i+1 ⇒ nodo i)
        bma_pick = None
        if log_p_events is not None and log_p_norm is not None:
            weights = bma_log_weights(deltas, log_p_norm, log_p_events)
            top = np.flatnonzero(weights == weights.max())
            bma_pick = pick_one(top, streams.decision)

        if not is_event:
            out["s1"][j] = chosen == -1
            out["s1_bma"][j] = bma_pick == 0
        else:
            assert truth.node is not None
            target = topology.index(truth.node)
            out["node"][j] = target
            out["s2"][j] = chosen == target
            out["n2"][j] = int(chosen >= 0)
            out["fn"][j] = chosen == -1
            if dmax >= 0.0:
                near = neighborhood_indices(idx, topology, mask)
                out["s3"][j] = target in idx
                out["n3"][j] = idx.size
                out["s4"][j] = target in near
                out["n4"][j] = near.size
            for col, c in enumerate(job.thresholds):
                window = occam_indices(deltas, c)
                out["occam_success"][j, col] = target in window
                out["occam_size"][j, col] = window.size
            out["s_bma"][j] = bma_pick == target + 1

        i = rep + 1
        msg = f"{log_prefix}rep={i} truth={truth} max_delta={dmax:.4f} chosen={chosen}"
        if i == 1 or (job.log_every > 0 and i % job.log_every == 0):
            logger.info(msg)
        else:
            logger.debug(msg)
    return out


def _run_branch(
    config: SimulationConfig, branch: int, thresholds: tuple[float, ...]
) -> dict[str, np.ndarray]:
    truth = TruthScenario.normal() if branch == BRANCH_NORMAL else config.event_truth
    jobs = [
        _BlockJob(
            params=config.params,
            rows=config.topology.rows,
            cols=config.topology.cols,
            branch=branch,
            seed=config.seed,
            start=start,
            stop=min(start + _BLOCK_SIZE, config.replications),
            thresholds=thresholds,
            p_norm=config.detectors.p_norm,
            feasible=config.detectors.feasible,
            truth=truth,
            log_every=config.log_every,
        )
        for start in range(0, config.replications, _BLOCK_SIZE)
    ]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            blocks = list(pool.map(_simulate_block, jobs))
    else:
        blocks = [_simulate_block(job) for job in jobs]
    return {key: np.concatenate([b[key] for b in blocks]) for key in blocks[0]}


def _check_thresholds(thresholds: tuple[float, ...]) -> None:
    if not thresholds:
        raise InvalidThresholdError("Se necesita al menos un umbral C")
    for c in thresholds:
        if not 0.0 < c < 1.0:
            raise InvalidThresholdError(f"C={c} debe estar en (0, 1)")


# ======================================================================================
# API pública
# ======================================================================================
def simulate_replications(
    config: SimulationConfig, thresholds: tuple[float, ...] | None = None
) -> ExperimentOutcomes:
    """
    Ejecuta las réplicas del escenario configurado y devuelve los resultados por réplica.
    `thresholds` son los C de Occam a evaluar (por defecto sólo `occam_c`).
    """
    config.validate()
    ths = tuple(thresholds) if thresholds is not None else (config.detectors.occam_c,)
    _check_thresholds(ths)
    p = config.params
    logger.info(
        "Simulación: p1=%s p2=%s pc=%s pw=%s grid=%sx%s reps=%s seed=%s scenario=%s workers=%s",
        p.p1,
        p.p2,
        p.pc,
        p.pw,
        config.topology.rows,
        config.topology.cols,
        config.replications,
        config.seed,
        config.scenario,
        config.workers,
    )
    outcomes = ExperimentOutcomes(config=config, thresholds=ths)
    if config.scenario in ("normal", "both"):
        outcomes.normal = _run_branch(config, BRANCH_NORMAL, ths)
    if config.scenario in ("event", "both"):
        outcomes.event = _run_branch(config, BRANCH_EVENT, ths)
    return outcomes


def run_experiment(config: SimulationConfig) -> SimulationSummary:
    """S1..S5, N1..N5 y tasa de falsos negativos con errores estándar."""
    outcomes = simulate_replications(config)
    return summarize(outcomes)


def threshold_sweep(config: SimulationConfig, thresholds: list[float]) -> list[SweepPoint]:
    """
    Éxito y búsqueda media de la ventana de Occam para cada C, sobre los mismos campos de
    respuesta (réplicas de evento) en todos los umbrales.
    """
    ths = tuple(float(c) for c in thresholds)
    _check_thresholds(ths)
    event_only = SimulationConfig(
        params=config.params,
        topology=config.topology,
        scenario="event",
        replications=config.replications,
        seed=config.seed,
        detectors=config.detectors,
        event_node=config.event_node,
        workers=config.workers,
        log_every=config.log_every,
    )
    return sweep_points(simulate_replications(event_only, ths))


def simulate_calibration_runs(
    params: SensorParams,
    topology: GridTopology,
    n_normal: int,
    n_event: int,
    seed: int,
    event_node: NodeId | None = None,
) -> list[CalibrationRun]:
    """
    Experimentos controlados para calibración: `n_normal` runs con ROI normal seguidos de
    `n_event` runs con evento en `event_node` (o en un nodo uniforme por run). Cada run
    guarda sus detecciones internas y sus respuestas.
    """
    if n_normal < 0 or n_event < 0 or n_normal + n_event == 0:
        raise ConfigurationError("Se necesita al menos un run (n_normal + n_event >= 1)")
    if seed < 0:
        raise ConfigurationError(f"seed={seed} debe ser >= 0")
    if event_node is not None and not topology.contains(event_node):
        raise ConfigurationError(f"event_node={event_node} fuera de la rejilla")
    event_truth = (
        TruthScenario.event_at(event_node)
        if event_node is not None
        else TruthScenario.event_uniform()
    )
    runs: list[CalibrationRun] = []
    for i in range(n_normal + n_event):
        streams = make_streams(seed, BRANCH_RECORDS, i)
        truth_scenario = TruthScenario.normal() if i < n_normal else event_truth
        truth = truth_scenario.draw(topology, streams.field)
        y = detection_phase(truth, params, topology, streams.field)
        z = response_phase(y, params, streams.field)
        if truth.node is None:
            # Bajo M0 las detecciones son nulas por construcción: no se registran
            runs.append(CalibrationRun("normal", z))
        else:
            runs.append(CalibrationRun("event", z, y, truth.node))
    logger.info("Runs de calibración simulados: %s normales, %s de evento", n_normal, n_event)
    return runs

# src/hexdetect/metrics.py
"""
Agregación de métricas de la simulación y filas para exportar.

Flujo general (usado desde simulator.py y __main__.py):
-------------------------------------------------------
1) `simulator.simulate_replications` devuelve arrays por réplica (aciertos y tamaños).
2) Aquí los reducimos a estimaciones con su error estándar:
   - Proporciones (S_i, fnr, S1_bma, S2_bma): media y SE binomial sqrt(p(1-p)/R).
   - Medias de recuento (N2..N5): media y SE = SD muestral / sqrt(R) (NaN si R = 1).
   - N1 = 1 - S1 (con el mismo SE que S1).
3) `summary_row` / `sweep_rows` producen filas planas en el orden de `const.SIMULATE_COLUMNS`
   y `const.SWEEP_COLUMNS`; `trace_frame` produce el detalle por réplica (`--trace`).

Las sumas usan `math.fsum` (sumación compensada) para que R grandes no acumulen error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
import pandas as pd

from .const import SCHEMA_VERSION

if TYPE_CHECKING:
    from .simulator import ExperimentOutcomes, SimulationConfig


@dataclass(frozen=True)
class Estimate:
    """Estimación Monte Carlo: valor, error estándar y número de réplicas."""

    value: float
    se: float
    n: int

    @classmethod
    def missing(cls) -> Estimate:
        return cls(math.nan, math.nan, 0)


def proportion(hits: np.ndarray) -> Estimate:
    n = int(hits.size)
    if n == 0:
        return Estimate.missing()
    p = math.fsum(hits.astype(float)) / n
    return Estimate(p, math.sqrt(max(p * (1.0 - p), 0.0) / n), n)


def mean_count(counts: np.ndarray) -> Estimate:
    n = int(counts.size)
    if n == 0:
        return Estimate.missing()
    values = counts.astype(float)
    mean = math.fsum(values) / n
    if n == 1:
        return Estimate(mean, math.nan, n)
    var = math.fsum((values - mean) ** 2) / (n - 1)
    return Estimate(mean, math.sqrt(var / n), n)


@dataclass(frozen=True)
class SimulationSummary:
    """
    Resultados agregados de `run_experiment`.

    Las métricas de un escenario no simulado (p. ej. S1 con scenario="event") quedan como
    `Estimate.missing()`. S1_bma / S2_bma sólo existen si se configuró p_norm.
    """

    config: SimulationConfig
    S1: Estimate
    N1: Estimate
    S2: Estimate
    N2: Estimate
    S3: Estimate
    N3: Estimate
    S4: Estimate
    N4: Estimate
    S5: Estimate
    N5: Estimate
    false_negative_rate: Estimate
    S1_bma: Estimate | None = None
    S2_bma: Estimate | None = None

    @property
    def replications(self) -> int:
        return self.config.replications

    @property
    def seed(self) -> int:
        return self.config.seed


@dataclass(frozen=True)
class SweepPoint:
    """Éxito y búsqueda media de la ventana de Occam para un umbral C."""

    C: float
    success: Estimate
    search: Estimate


def summarize(outcomes: ExperimentOutcomes) -> SimulationSummary:
    config = outcomes.config
    # run_experiment siempre evalúa occam_c entre sus umbrales
    col = outcomes.thresholds.index(config.detectors.occam_c)
    with_bma = config.detectors.p_norm is not None

    missing = Estimate.missing()
    s1 = n1 = missing
    s1_bma: Estimate | None = None
    if outcomes.normal is not None:
        s1 = proportion(outcomes.normal["s1"])
        n1 = Estimate(1.0 - s1.value, s1.se, s1.n)
        if with_bma:
            s1_bma = proportion(outcomes.normal["s1_bma"])

    s2 = n2 = s3 = n3 = s4 = n4 = s5 = n5 = fnr = missing
    s2_bma: Estimate | None = None
    ev = outcomes.event
    if ev is not None:
        s2 = proportion(ev["s2"])
        n2 = mean_count(ev["n2"])
        s3 = proportion(ev["s3"])
        n3 = mean_count(ev["n3"])
        s4 = proportion(ev["s4"])
        n4 = mean_count(ev["n4"])
        s5 = proportion(ev["occam_success"][:, col])
        n5 = mean_count(ev["occam_size"][:, col])
        fnr = proportion(ev["fn"])
        if with_bma:
            s2_bma = proportion(ev["s_bma"])

    if with_bma:
        s1_bma = s1_bma or missing
        s2_bma = s2_bma or missing

    return SimulationSummary(
        config=config,
        S1=s1,
        N1=n1,
        S2=s2,
        N2=n2,
        S3=s3,
        N3=n3,
        S4=s4,
        N4=n4,
        S5=s5,
        N5=n5,
        false_negative_rate=fnr,
        S1_bma=s1_bma,
        S2_bma=s2_bma,
    )


def sweep_points(outcomes: ExperimentOutcomes) -> list[SweepPoint]:
    ev = outcomes.event
    if ev is None:
        raise ValueError("El barrido de umbrales necesita réplicas de evento")
    return [
        SweepPoint(
            C=c,
            success=proportion(ev["occam_success"][:, j]),
            search=mean_count(ev["occam_size"][:, j]),
        )
        for j, c in enumerate(outcomes.thresholds)
    ]


# --------------------------------------------------------------------------------------
# Filas para CSV
# --------------------------------------------------------------------------------------
def run_config_row(config: SimulationConfig) -> dict[str, Any]:
    """Columnas de `const.RUN_CONFIG_COLUMNS`; p_norm y event_node vacíos si no se fijan."""
    topology = config.topology
    feasible = config.detectors.feasible
    node = config.event_node
    interior_only = feasible is not None and feasible == frozenset(topology.interior_nodes())
    return {
        "seed": config.seed,
        "rows": topology.rows,
        "cols": topology.cols,
        "interior_only": interior_only,
        "replications": config.replications,
        "scenario": config.scenario,
        "occam_c": config.detectors.occam_c,
        "p_norm": math.nan if config.detectors.p_norm is None else config.detectors.p_norm,
        "event_node": "" if node is None else f"{node.row},{node.col}",
    }


def summary_row(summary: SimulationSummary) -> dict[str, Any]:
    """Fila plana con el orden de `const.SIMULATE_COLUMNS`."""
    metrics = {
        "S1": summary.S1,
        "S2": summary.S2,
        "S3": summary.S3,
        "N3": summary.N3,
        "S4": summary.S4,
        "N4": summary.N4,
        "S5": summary.S5,
        "N5": summary.N5,
        "fnr": summary.false_negative_rate,
    }
    row: dict[str, Any] = {**summary.config.params.as_dict()}
    row.update({name: est.value for name, est in metrics.items()})
    row.update({f"{name}_se": est.se for name, est in metrics.items()})
    row["N1"] = summary.N1.value
    row["N2"] = summary.N2.value
    row["N2_se"] = summary.N2.se
    row["S1_bma"] = summary.S1_bma.value if summary.S1_bma is not None else math.nan
    row["S2_bma"] = summary.S2_bma.value if summary.S2_bma is not None else math.nan
    row.update(run_config_row(summary.config))
    row["schema_version"] = SCHEMA_VERSION
    return row


def sweep_rows(config: SimulationConfig, points: list[SweepPoint]) -> list[dict[str, Any]]:
    """Una fila por umbral, orden de `const.SWEEP_COLUMNS`."""
    rows = []
    for p in points:
        row: dict[str, Any] = {**config.params.as_dict()}
        row.update(
            {
                "C": p.C,
                "success": p.success.value,
                "success_se": p.success.se,
                "search": p.search.value,
                "search_se": p.search.se,
            }
        )
        row.update(run_config_row(config))
        row["schema_version"] = SCHEMA_VERSION
        rows.append(row)
    return rows


def trace_frame(outcomes: ExperimentOutcomes) -> pd.DataFrame:
    """
    Detalle por réplica (una fila por réplica y escenario) para `--trace`.

    Columnas: scenario, replication, event_node, success_single, searched_single,
    success_set, searched_set, success_neighborhood, searched_neighborhood,
    success_occam, searched_occam, false_negative.
    """
    frames = []
    col = outcomes.thresholds.index(outcomes.config.detectors.occam_c)
    cols = outcomes.config.topology.cols
    if outcomes.normal is not None:
        n = outcomes.normal["s1"].size
        frames.append(
            pd.DataFrame(
                {
                    "scenario": "normal",
                    "replication": np.arange(n),
                    "event_node": "",
                    "success_single": outcomes.normal["s1"].astype(int),
                    "searched_single": (~outcomes.normal["s1"]).astype(int),
                }
            )
        )
    ev = outcomes.event
    if ev is not None:
        n = ev["s2"].size
        frames.append(
            pd.DataFrame(
                {
                    "scenario": "event",
                    "replication": np.arange(n),
                    "event_node": [f"{i // cols},{i % cols}" for i in ev["node"]],
                    "success_single": ev["s2"].astype(int),
                    "searched_single": ev["n2"],
                    "success_set": ev["s3"].astype(int),
                    "searched_set": ev["n3"],
                    "success_neighborhood": ev["s4"].astype(int),
                    "searched_neighborhood": ev["n4"],
                    "success_occam": ev["occam_success"][:, col].astype(int),
                    "searched_occam": ev["occam_size"][:, col],
                    "false_negative": ev["fn"].astype(int),
                }
            )
        )
    if not frames:
        return pd.DataFrame()
    out = pd.concat(frames, ignore_index=True)
    # Enteros con huecos (columnas de evento en filas normales) como Int64 nullable
    counts = [c for c in out.columns if c not in ("scenario", "event_node")]
    return out.astype({c: "Int64" for c in counts})

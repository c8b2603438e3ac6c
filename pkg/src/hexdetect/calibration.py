"""
Estimación de (p1, p2, pc, pw) a partir de experimentos controlados repetidos.

Cada `CalibrationRun` es una repetición del experimento:
- `kind="normal"`: ROI normal; sólo hacen falta las respuestas {z_N}.
- `kind="event"` : evento provocado en `event_node`; para estimar p1/p2/pc hace falta
  además conocer las detecciones internas {y_N}.

Estimadores
-----------
- pw (runs normales): media de las proporciones por run de z = 1; SE = SD / sqrt(runs).
- p1: media sobre runs de y en el nodo del evento (SE binomial).
- p2: media sobre runs de la proporción de y = 1 en B(nodo del evento); el denominador es
  el número real de vecinos (k = 2 en una esquina). SE = SD / sqrt(runs).
- pc / pw (pares (y, z)): proporción agrupada de z = 1 entre las observaciones con y = 1 / y = 0
  (SE binomial).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .core import DetectionField, ResponseField
from .errors import InestimableParameterError, InsufficientDataError, InvalidNodeError
from .hexgrid import GridTopology, NodeId
from .metrics import Estimate, mean_count, proportion

logger = logging.getLogger(__name__)

RunKind = Literal["normal", "event"]


@dataclass(frozen=True)
class CalibrationRun:
    kind: RunKind
    responses: ResponseField
    detections: DetectionField | None = None
    event_node: NodeId | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("normal", "event"):
            raise ValueError(f"kind={self.kind!r}; usa 'normal' o 'event'")
        if self.kind == "event" and self.event_node is None:
            raise InvalidNodeError("Un run de evento necesita event_node")
        if self.kind == "normal" and self.event_node is not None:
            raise InvalidNodeError("Un run normal no lleva event_node")
        if self.detections is not None and (
            (self.detections.rows, self.detections.cols)
            != (self.responses.rows, self.responses.cols)
        ):
            raise ValueError("detections y responses deben tener las mismas dimensiones")


@dataclass(frozen=True)
class CalibrationReport:
    """Resultado de `calibrate`: una entrada por parámetro estimable (None si no lo es)."""

    p1: Estimate | None
    p2: Estimate | None
    pc: Estimate | None
    pw: Estimate | None
    pw_normal: Estimate | None
    n_normal: int
    n_event: int

    def missing(self) -> list[str]:
        """Parámetros sin estimación; pw cuenta como estimado si lo está pw o pw_normal."""
        names = [n for n in ("p1", "p2", "pc") if getattr(self, n) is None]
        if self.pw is None and self.pw_normal is None:
            names.append("pw")
        return names

    def as_rows(self) -> list[dict[str, object]]:
        rows = []
        for name in ("p1", "p2", "pc", "pw", "pw_normal"):
            est: Estimate | None = getattr(self, name)
            if est is not None:
                rows.append({"parameter": name, "estimate": est.value, "se": est.se, "n": est.n})
        return rows


# --------------------------------------------------------------------------------------
# Estimadores
# --------------------------------------------------------------------------------------
def estimate_pw(runs: Sequence[CalibrationRun]) -> Estimate:
    normal = [r for r in runs if r.kind == "normal"]
    if not normal:
        raise InsufficientDataError("estimate_pw necesita al menos un run normal")
    props = np.array([r.responses.values.mean() for r in normal], dtype=float)
    return mean_count(props)


def estimate_detection(
    runs: Sequence[CalibrationRun], topology: GridTopology
) -> tuple[Estimate, Estimate]:
    """(p1, p2) a partir de runs de evento con detecciones conocidas."""
    event = [r for r in runs if r.kind == "event"]
    if not event:
        raise InsufficientDataError("estimate_detection necesita al menos un run de evento")
    if any(r.detections is None for r in event):
        raise InsufficientDataError("Hay runs de evento sin detecciones internas {y_N}")

    centers = np.zeros(len(event), dtype=bool)
    around: list[float] = []
    for i, run in enumerate(event):
        assert run.detections is not None and run.event_node is not None
        if not run.detections.matches(topology):
            raise InvalidNodeError("Las dimensiones del run no casan con la rejilla")
        idx = topology.index(run.event_node)
        y = run.detections.values
        centers[i] = bool(y[idx])
        nb = topology.neighbor_indices(idx)
        if nb.size:
            around.append(float(y[nb].mean()))

    if not around:
        raise InestimableParameterError("p2 no estimable: ningún nodo de evento tiene vecinos")
    return proportion(centers), mean_count(np.array(around))


def estimate_response(runs: Sequence[CalibrationRun]) -> tuple[Estimate, Estimate]:
    """(pc, pw) agrupando todas las observaciones nodo a nodo con y conocida."""
    paired = [r for r in runs if r.detections is not None]
    if not paired:
        raise InsufficientDataError("estimate_response necesita pares (y, z)")
    y = np.concatenate([r.detections.values for r in paired if r.detections is not None])
    z = np.concatenate([r.responses.values for r in paired])
    z_given_y1 = z[y == 1].astype(bool)
    z_given_y0 = z[y == 0].astype(bool)
    if z_given_y1.size == 0:
        raise InestimableParameterError("pc no estimable: no hay observaciones con y = 1")
    if z_given_y0.size == 0:
        raise InestimableParameterError("pw no estimable: no hay observaciones con y = 0")
    return proportion(z_given_y1), proportion(z_given_y0)


def calibrate(runs: Sequence[CalibrationRun], topology: GridTopology) -> CalibrationReport:
    """
    Estima todo lo que los datos permiten. Los parámetros no estimables por falta de
    datos quedan en None; si no hay ningún run, InsufficientDataError.
    """
    if not runs:
        raise InsufficientDataError("No hay runs de calibración")
    n_normal = sum(r.kind == "normal" for r in runs)
    n_event = len(runs) - n_normal

    pw_normal = estimate_pw(runs) if n_normal else None

    p1 = p2 = None
    if n_event and all(r.detections is not None for r in runs if r.kind == "event"):
        p1, p2 = estimate_detection(runs, topology)

    pc = pw = None
    if any(r.detections is not None for r in runs):
        pc, pw = estimate_response(runs)

    logger.info(
        "Calibración: %s runs normales, %s runs de evento | p1=%s p2=%s pc=%s pw=%s",
        n_normal,
        n_event,
        _fmt(p1),
        _fmt(p2),
        _fmt(pc),
        _fmt(pw if pw is not None else pw_normal),
    )
    return CalibrationReport(
        p1=p1, p2=p2, pc=pc, pw=pw, pw_normal=pw_normal, n_normal=n_normal, n_event=n_event
    )


def _fmt(est: Estimate | None) -> str:
    if est is None or math.isnan(est.value):
        return "-"
    return f"{est.value:.4f}±{est.se:.4f}"

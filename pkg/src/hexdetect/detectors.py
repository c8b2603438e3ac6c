"""
Reglas de decisión de la estación base.

Dado un campo de respuestas {z_N}, cada detector devuelve un modelo (selección simple) o un
conjunto de modelos candidatos (selección múltiple):

- `select_single`            : máxima verosimilitud; acepta M0 si Δ_N < 0 para todo N, si no
                               elige al azar (con `rng`) entre los nodos que maximizan Δ_N.
- `select_argmax_set`        : todos los modelos que alcanzan el máximo (M0 incluido si empata
                               o gana).
- `select_with_neighborhood` : el conjunto anterior más los vecinos B(N) de sus nodos.
- `select_occam`             : ventana de Occam {M_K : L_K / max_N L_N > C}, en escala log.
- `select_q_ratio`           : {M_K : Q_K > C*·max_N Q_N}, implementado literalmente.
- `select_bma`               : posterior de los |R|+1 modelos (log-sum-exp) y su máximo.

Estructura
----------
Cada detector público trabaja sobre arrays: calcula (t_N, Δ_N) para todos los nodos con una
suma vectorizada sobre `GridTopology.neighbor_index` y una búsqueda en `delta_table`. Las
funciones `*_indices` operan directamente sobre el vector Δ y son las que usa el simulador,
de modo que ambos caminos comparten exactamente el mismo código de decisión.

Restricción de modelos factibles
--------------------------------
Todos los selectores aceptan `feasible` (conjunto de nodos, p. ej. sólo los interiores):
los modelos fuera de él quedan con Δ = -inf, no compiten por el máximo y nunca entran en
los conjuntos candidatos.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.special import logsumexp

from .core import ModelId, ResponseField
from .errors import (
    InvalidNodeError,
    InvalidParametersError,
    InvalidThresholdError,
    QUndefinedError,
    UndefinedPosteriorError,
)
from .hexgrid import MAX_DEGREE, GridTopology, NodeId
from .probability import DerivedParams, delta_table

logger = logging.getLogger(__name__)

# Tolerancia para la normalización de probabilidades a priori / a posteriori.
PRIOR_TOLERANCE = 1e-9


# ======================================================================================
# Tipos
# ======================================================================================
@dataclass(frozen=True)
class NodeStatistics:
    """Estadísticos del nodo N: z_N, t_N, k(N), Δ_N y Q_N (si beta > 0)."""

    z: int
    t: int
    k: int
    delta: float
    q: float | None = None


@dataclass(frozen=True)
class Priors:
    """
    Probabilidades a priori: p_norm para M0 y p_event[N] para cada M_N.

    Deben ser no negativas y sumar 1 (tolerancia 1e-9). Los nodos que no aparecen en
    `p_event` tienen prior 0.
    """

    p_norm: float
    p_event: dict[NodeId, float]

    def __post_init__(self) -> None:
        values = [self.p_norm, *self.p_event.values()]
        if any(v < 0 or math.isnan(v) for v in values):
            raise InvalidParametersError("Las probabilidades a priori deben ser no negativas")
        total = math.fsum(values)
        if abs(total - 1.0) > PRIOR_TOLERANCE:
            raise InvalidParametersError(f"Las probabilidades a priori suman {total}, no 1")

    @classmethod
    def equal(cls, topology: GridTopology) -> Priors:
        """Los |R|+1 modelos equiprobables."""
        p = 1.0 / (topology.size + 1)
        return cls(p_norm=p, p_event={n: p for n in topology.nodes()})

    @classmethod
    def uniform_events(cls, topology: GridTopology, p_norm: float) -> Priors:
        """M0 con p_norm y el resto repartido por igual entre los nodos."""
        if not 0.0 <= p_norm <= 1.0:
            raise InvalidParametersError(f"p_norm={p_norm} fuera de [0, 1]")
        p = (1.0 - p_norm) / topology.size
        return cls(p_norm=p_norm, p_event={n: p for n in topology.nodes()})

    def log_event_array(self, topology: GridTopology) -> np.ndarray:
        """ln p_N en orden row-major (-inf donde el prior es 0)."""
        probs = np.zeros(topology.size)
        for node, p in self.p_event.items():
            probs[topology.index(node)] = p
        with np.errstate(divide="ignore"):
            return np.log(probs)


@dataclass(frozen=True)
class SelectionResult:
    """
    Resultado de un detector.

    chosen        : modelo elegido (selección simple y BMA); None en los selectores de conjunto.
    candidate_set : conjunto de modelos seleccionados (para la selección simple, el conjunto
                    de máximos del que se sorteó `chosen`).
    posterior     : sólo BMA; suma 1.
    metadata      : indicadores auxiliares (max_delta, normal_dominates, q_nonpositive_max...).
    """

    chosen: ModelId | None
    candidate_set: frozenset[ModelId]
    posterior: dict[ModelId, float] | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def event_nodes(self) -> list[NodeId]:
        """Nodos a inspeccionar (miembros M_N del conjunto, orden row-major)."""
        return sorted(m.node for m in self.candidate_set if m.node is not None)

    @property
    def search_count(self) -> int:
        return len(self.event_nodes)


# ======================================================================================
# Estadísticos vectorizados
# ======================================================================================
def neighbor_sums(z: np.ndarray, topology: GridTopology) -> np.ndarray:
    """t_N = Σ_{N' ∈ B(N)} z_{N'} para todos los nodos a la vez."""
    z_ext = np.append(z.astype(np.intp), 0)  # centinela: posición n siempre a cero
    return z_ext[topology.neighbor_index].sum(axis=1)


def node_deltas(
    z: np.ndarray, topology: GridTopology, table: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Devuelve (t, Δ) para todos los nodos; `table` viene de `delta_table(dp)`."""
    t = neighbor_sums(z, topology)
    return t, table[z.astype(np.intp), t, topology.degrees]


def feasible_mask(topology: GridTopology, feasible: Iterable[NodeId] | None) -> np.ndarray | None:
    if feasible is None:
        return None
    mask = np.zeros(topology.size, dtype=bool)
    for node in feasible:
        if not topology.contains(node):
            raise InvalidNodeError(f"Nodo factible {node} fuera de la rejilla")
        mask[topology.index(node)] = True
    return mask


def restrict(deltas: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    """Δ con -inf fuera del conjunto factible."""
    if mask is None:
        return deltas
    return np.where(mask, deltas, -np.inf)


def argmax_indices(deltas: np.ndarray) -> tuple[np.ndarray, float]:
    """
    Índices que alcanzan max Δ (igualdad exacta) y el propio máximo. Si ningún modelo de
    evento es posible (max = -inf) el conjunto es vacío.
    """
    dmax = float(deltas.max()) if deltas.size else -math.inf
    if dmax == -math.inf:
        return np.empty(0, dtype=np.intp), dmax
    return np.flatnonzero(deltas == dmax), dmax


def occam_indices(deltas: np.ndarray, c: float) -> np.ndarray:
    """{K : Δ_K > max Δ + ln C}, es decir L_K / L_max > C sin formar verosimilitudes."""
    dmax = float(deltas.max()) if deltas.size else -math.inf
    if dmax == math.inf:
        return np.flatnonzero(deltas == math.inf)
    return np.flatnonzero(deltas > dmax + math.log(c))


def neighborhood_indices(
    indices: np.ndarray, topology: GridTopology, mask: np.ndarray | None = None
) -> np.ndarray:
    """Unión (sin duplicados) de los índices y de sus vecinos en la rejilla."""
    if indices.size == 0:
        return indices
    around = topology.neighbor_index[indices].ravel()
    merged = np.unique(np.concatenate([indices, around[around < topology.size]]))
    if mask is not None:
        merged = merged[mask[merged]]
    return merged


def pick_one(indices: np.ndarray, rng: np.random.Generator) -> int:
    """Sorteo uniforme entre los empatados (sólo consume azar si hay empate)."""
    if indices.size == 1:
        return int(indices[0])
    return int(indices[rng.integers(indices.size)])


def bma_log_weights(
    deltas: np.ndarray, log_p_norm: float, log_p_events: np.ndarray
) -> np.ndarray:
    """ln(p·L / L0) de cada modelo: posición 0 para M0 y 1..n para los M_N."""
    with np.errstate(invalid="ignore"):
        events = np.where(np.isneginf(log_p_events), -np.inf, log_p_events + deltas)
    return np.concatenate([[log_p_norm], events])


def _check_threshold(value: float, name: str) -> None:
    if not 0.0 < value < 1.0:
        raise InvalidThresholdError(f"{name}={value} debe estar en (0, 1)")


def _models(indices: np.ndarray, topology: GridTopology) -> set[ModelId]:
    return {ModelId.event(topology.node_at(int(i))) for i in indices}


def _field_deltas(
    field_: ResponseField, topology: GridTopology, dp: DerivedParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not field_.matches(topology):
        raise InvalidNodeError(
            f"Campo {field_.rows}x{field_.cols} y rejilla {topology.rows}x{topology.cols} no casan"
        )
    z = field_.values
    t, deltas = node_deltas(z, topology, delta_table(dp))
    return z, t, deltas


# ======================================================================================
# API pública
# ======================================================================================
def compute_statistics(
    field_: ResponseField, topology: GridTopology, dp: DerivedParams
) -> dict[NodeId, NodeStatistics]:
    """(z, t, k, Δ, Q) de cada nodo, en orden row-major."""
    z, t, deltas = _field_deltas(field_, topology, dp)
    stats: dict[NodeId, NodeStatistics] = {}
    for i, node in enumerate(topology.nodes()):
        zi, ti, ki = int(z[i]), int(t[i]), int(topology.degrees[i])
        q = None
        if dp.has_q:
            assert dp.c is not None and dp.d is not None
            q = dp.c * zi + ti - dp.d * ki
        stats[node] = NodeStatistics(z=zi, t=ti, k=ki, delta=float(deltas[i]), q=q)
    return stats


def select_single(
    field_: ResponseField,
    topology: GridTopology,
    dp: DerivedParams,
    rng: np.random.Generator,
    feasible: Iterable[NodeId] | None = None,
) -> SelectionResult:
    """
    Selección de un único modelo por máxima verosimilitud.

    - Δ_N < 0 para todo N factible ⇒ M0.
    - En otro caso M_N* con N* sorteado uniformemente entre los que maximizan Δ_N. Un Δ = 0
      exacto bloquea M0 (la regla de aceptación de M0 es estricta).
    """
    _, _, deltas = _field_deltas(field_, topology, dp)
    idx, dmax = argmax_indices(restrict(deltas, feasible_mask(topology, feasible)))
    if dmax < 0.0:
        normal = ModelId.normal()
        return SelectionResult(normal, frozenset({normal}), metadata={"max_delta": dmax})
    chosen = ModelId.event(topology.node_at(pick_one(idx, rng)))
    return SelectionResult(
        chosen, frozenset(_models(idx, topology)), metadata={"max_delta": dmax}
    )


def select_argmax_set(
    field_: ResponseField,
    topology: GridTopology,
    dp: DerivedParams,
    feasible: Iterable[NodeId] | None = None,
) -> SelectionResult:
    """Todos los M_N con Δ_N máximo, más M0 si 0 >= max Δ (sólo M0 si 0 > max Δ)."""
    _, _, deltas = _field_deltas(field_, topology, dp)
    idx, dmax = argmax_indices(restrict(deltas, feasible_mask(topology, feasible)))
    models = _models(idx, topology) if dmax >= 0.0 else set()
    if dmax <= 0.0:
        models.add(ModelId.normal())
    return SelectionResult(None, frozenset(models), metadata={"max_delta": dmax})


def select_with_neighborhood(
    field_: ResponseField,
    topology: GridTopology,
    dp: DerivedParams,
    feasible: Iterable[NodeId] | None = None,
) -> SelectionResult:
    """Conjunto de máximos ampliado con B(N) de cada nodo; B(M0) es vacío."""
    _, _, deltas = _field_deltas(field_, topology, dp)
    mask = feasible_mask(topology, feasible)
    idx, dmax = argmax_indices(restrict(deltas, mask))
    models = _models(neighborhood_indices(idx, topology, mask), topology) if dmax >= 0 else set()
    if dmax <= 0.0:
        models.add(ModelId.normal())
    return SelectionResult(None, frozenset(models), metadata={"max_delta": dmax})


def select_occam(
    field_: ResponseField,
    topology: GridTopology,
    dp: DerivedParams,
    c: float,
    feasible: Iterable[NodeId] | None = None,
) -> SelectionResult:
    """
    Ventana de Occam sobre los modelos de evento: {M_K : Δ_K > max_N Δ_N + ln C}.

    `metadata["normal_dominates"]` indica si L0 supera a todos los L_N (max Δ < 0); M0 no
    entra en el conjunto.
    """
    _check_threshold(c, "C")
    _, _, deltas = _field_deltas(field_, topology, dp)
    restricted = restrict(deltas, feasible_mask(topology, feasible))
    idx = occam_indices(restricted, c)
    dmax = float(restricted.max())
    return SelectionResult(
        None,
        frozenset(_models(idx, topology)),
        metadata={"max_delta": dmax, "normal_dominates": dmax < 0.0, "C": c},
    )


def select_q_ratio(
    field_: ResponseField,
    topology: GridTopology,
    dp: DerivedParams,
    c_star: float,
    feasible: Iterable[NodeId] | None = None,
) -> SelectionResult:
    """
    {M_K : Q_K > C*·max_N Q_N}, tal cual. Con max Q <= 0 la desigualdad deja de ser un
    recorte alrededor del máximo; se marca en `metadata["q_nonpositive_max"]`.

    Si todos los nodos factibles son interiores (k = 6) el término -d·k es común a todos y
    se compara c·z_K + t_K > C*·max(c·z_N + t_N); la razón no es invariante a ese
    desplazamiento, así que el conjunto difiere del de Q. `metadata["interior_form"]` dice
    qué forma se usó.
    """
    if not dp.has_q:
        raise QUndefinedError(f"Q_N no está definido con beta={dp.beta}")
    _check_threshold(c_star, "C*")
    assert dp.c is not None and dp.d is not None
    if not field_.matches(topology):
        raise InvalidNodeError("El campo no corresponde a la rejilla")
    mask = feasible_mask(topology, feasible)
    interior_form = bool(
        mask is not None and mask.any() and (topology.degrees[mask] == MAX_DEGREE).all()
    )
    z = field_.values.astype(float)
    q = dp.c * z + neighbor_sums(field_.values, topology)
    if not interior_form:
        q = q - dp.d * topology.degrees
    q = restrict(q, mask)
    q_max = float(q.max())
    idx = np.flatnonzero(q > c_star * q_max)
    return SelectionResult(
        None,
        frozenset(_models(idx, topology)),
        metadata={
            "q_max": q_max,
            "q_nonpositive_max": q_max <= 0.0,
            "C*": c_star,
            "interior_form": interior_form,
        },
    )


def select_bma(
    field_: ResponseField,
    topology: GridTopology,
    dp: DerivedParams,
    priors: Priors,
    rng: np.random.Generator | None = None,
    feasible: Iterable[NodeId] | None = None,
) -> SelectionResult:
    """
    Promediado bayesiano de modelos.

    El posterior de cada modelo es p·L / Σ p_l·L_l; dividiendo por L0 basta con los pesos
    ln p_norm (M0) y ln p_N + Δ_N (M_N), normalizados con log-sum-exp. `chosen` es el modelo de
    mayor peso (empates sorteados con `rng`; sin `rng` gana el primero: M0 y luego orden
    row-major) y `candidate_set` recoge todos los empatados en el máximo.
    """
    _, _, deltas = _field_deltas(field_, topology, dp)
    deltas = restrict(deltas, feasible_mask(topology, feasible))
    log_p_norm = math.log(priors.p_norm) if priors.p_norm > 0 else -math.inf
    weights = bma_log_weights(deltas, log_p_norm, priors.log_event_array(topology))

    w_max = float(weights.max())
    if w_max == -math.inf:
        raise UndefinedPosteriorError("Ningún modelo posible tiene masa a priori")

    if w_max == math.inf:
        # L0 = 0: sólo compiten los modelos con Δ = +inf; se reparten según su prior.
        top = np.isposinf(weights)
        prior_mass = np.concatenate([[priors.p_norm], np.exp(priors.log_event_array(topology))])
        mass = np.where(top, prior_mass, 0.0)
        posterior_arr = mass / mass.sum()
        logger.debug("Posterior degenerado: %d modelos con Δ = +inf", int(top.sum()))
    else:
        posterior_arr = np.exp(weights - logsumexp(weights))

    top_idx = np.flatnonzero(weights == w_max)
    pick = int(top_idx[0]) if rng is None else pick_one(top_idx, rng)

    def to_model(i: int) -> ModelId:
        return ModelId.normal() if i == 0 else ModelId.event(topology.node_at(i - 1))

    posterior = {to_model(i): float(p) for i, p in enumerate(posterior_arr)}
    return SelectionResult(
        chosen=to_model(pick),
        candidate_set=frozenset(to_model(int(i)) for i in top_idx),
        posterior=posterior,
        metadata={"max_log_weight": w_max},
    )

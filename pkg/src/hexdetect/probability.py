"""
Núcleo numérico: probabilidades de respuesta, coeficientes de log-verosimilitud,
distribuciones exactas de (T_N, Z_N) y de Q_N, y probabilidades de error exactas.

Modelo en dos fases (por nodo N)
--------------------------------
- Detección: bajo M_N el sensor central detecta con p1 y cada vecino con p2; bajo M0 nadie
  detecta.
- Respuesta: responde con pc si detectó y con pw si no. Marginalmente, bajo M_N:
    P1 = p1 (pc - pw) + pw   (nodo del evento)
    P2 = p2 (pc - pw) + pw   (vecinos)
  y pw para el resto de nodos.

Estadístico canónico
--------------------
Sólo necesitamos diferencias respecto a M0:

    Δ_N = ln L_N - ln L0 = alpha·z + beta·t + gamma + delta·k

con alpha = ln[P1(1-pw) / (pw(1-P1))], beta = ln[P2(1-pw) / (pw(1-P2))],
gamma = ln[(1-P1)/(1-pw)] y delta = ln[(1-P2)/(1-pw)]. Cuando beta > 0 existe además la forma
afín Δ_N = gamma + beta·(c·z + t - d·k), con c = alpha/beta, d = -delta/beta y el umbral
tau0 = -gamma/beta sobre Q_N = c·z + t - d·k. Con p2 = 0 se tiene P2 = pw y beta = 0: por eso
(c, d, Q, tau0) son opcionales y Δ es siempre el estadístico de referencia.

Notas de diseño
---------------
- `loglik_delta` suma término a término con la convención 0·ln 0 = 0 (via
  `scipy.special.xlogy`): con probabilidades en la frontera (pw = 0, P1 = 1, ...) devuelve
  ±inf en lugar de NaN. Un término -inf significa L_N = 0 y domina.
- `delta_table` precalcula Δ para todas las combinaciones (z, t, k); los detectores indexan
  esa tabla, así los valores vectorizados son idénticos bit a bit a `loglik_delta` y los
  empates se detectan con igualdad exacta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from scipy.special import xlogy
from scipy.stats import binom

from .errors import (
    DegenerateParametersError,
    InvalidParametersError,
    InvalidStatisticError,
    QUndefinedError,
)
from .hexgrid import MAX_DEGREE, GridTopology

# Modelo respecto al nodo central N: M0 ("null") o M_N ("event").
CenterModel = Literal["null", "event"]


# ======================================================================================
# Parámetros del sensor
# ======================================================================================
@dataclass(frozen=True)
class SensorParams:
    """
    Parámetros (p1, p2, pc, pw) del modelo de dos fases.

    Se validan al construir:
    - todos en [0, 1];
    - p1 > p2 (el nodo central detecta mejor que sus vecinos);
    - pc > pw, si no P1 = P2 = pw y los modelos son indistinguibles
      (`DegenerateParametersError`).
    """

    p1: float
    p2: float
    pc: float
    pw: float

    def __post_init__(self) -> None:
        for name in ("p1", "p2", "pc", "pw"):
            value = float(getattr(self, name))
            if not 0.0 <= value <= 1.0 or math.isnan(value):
                raise InvalidParametersError(f"{name}={value} fuera de [0, 1]")
            object.__setattr__(self, name, value)
        if not self.p1 > self.p2:
            raise InvalidParametersError(f"Se requiere p1 > p2 (p1={self.p1}, p2={self.p2})")
        if not self.pc > self.pw:
            raise DegenerateParametersError(
                f"Se requiere pc > pw (pc={self.pc}, pw={self.pw}): modelos indistinguibles"
            )

    def as_dict(self) -> dict[str, float]:
        return {"p1": self.p1, "p2": self.p2, "pc": self.pc, "pw": self.pw}


@dataclass(frozen=True)
class DerivedParams:
    """
    Cantidades derivadas de `SensorParams`.

    P1, P2      : probabilidades marginales de respuesta del nodo del evento y de sus vecinos.
    alpha       : peso de z_N en Δ_N.
    beta        : peso de t_N en Δ_N (b en la forma afín); 0 exactamente cuando p2 = 0.
    gamma       : término constante ln[(1-P1)/(1-pw)] < 0.
    delta       : término por vecino ln[(1-P2)/(1-pw)] <= 0.
    c, d, tau0  : sólo cuando 0 < beta < inf; en otro caso None.
    params      : los parámetros originales (pw hace falta para el modelo nulo).
    """

    params: SensorParams
    P1: float
    P2: float
    alpha: float
    beta: float
    gamma: float
    delta: float
    c: float | None
    d: float | None
    tau0: float | None

    @property
    def pw(self) -> float:
        return self.params.pw

    @property
    def has_q(self) -> bool:
        """True si Q_N (y por tanto c, d, tau0) está definido."""
        return self.c is not None

    def as_row(self) -> dict[str, Any]:
        """Fila plana para exportar (cmd_derive)."""
        return {
            **self.params.as_dict(),
            "P1": self.P1,
            "P2": self.P2,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "delta": self.delta,
            "c": self.c,
            "d": self.d,
            "tau0": self.tau0,
        }


def _log_ratio(count: float, num: float, den: float) -> float:
    """count·ln(num/den) con 0·ln(·) = 0 y ln(x/x) = 0 incluso si x = 0."""
    if count == 0 or num == den:
        return 0.0
    return float(xlogy(count, num) - xlogy(count, den))


def derive_params(params: SensorParams) -> DerivedParams:
    """Calcula (P1, P2, alpha, beta, gamma, delta, c, d, tau0)."""
    pc, pw = params.pc, params.pw
    if not pc > pw:
        raise DegenerateParametersError(f"pc={pc} <= pw={pw}")

    P1 = params.p1 * (pc - pw) + pw
    P2 = params.p2 * (pc - pw) + pw

    gamma = _log_ratio(1, 1.0 - P1, 1.0 - pw)
    delta = _log_ratio(1, 1.0 - P2, 1.0 - pw)
    alpha = _log_ratio(1, P1, pw) - gamma
    beta = _log_ratio(1, P2, pw) - delta

    c = d = tau0 = None
    if 0.0 < beta < math.inf:
        c = alpha / beta
        d = -delta / beta
        tau0 = -gamma / beta

    return DerivedParams(
        params=params,
        P1=P1,
        P2=P2,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        delta=delta,
        c=c,
        d=d,
        tau0=tau0,
    )


# ======================================================================================
# Δ_N = ln L_N - ln L0
# ======================================================================================
def _check_statistic(z: int, t: int, k: int) -> None:
    if z not in (0, 1):
        raise InvalidStatisticError(f"z={z} debe ser 0 o 1")
    if not 0 <= k <= MAX_DEGREE:
        raise InvalidStatisticError(f"k={k} fuera de [0, {MAX_DEGREE}]")
    if not 0 <= t <= k:
        raise InvalidStatisticError(f"t={t} fuera de [0, k={k}]")


def loglik_delta(z: int, t: int, k: int, dp: DerivedParams) -> float:
    """
    ln L_N - ln L0 para un nodo con respuesta propia z, t vecinos respondiendo y k vecinos.

    Equivale a z·alpha + t·beta + gamma + k·delta (y, si beta > 0, a
    gamma + beta·(c·z + t - d·k)); se evalúa término a término para tolerar probabilidades
    en la frontera.
    """
    _check_statistic(z, t, k)
    pw = dp.pw
    terms = (
        _log_ratio(z, dp.P1, pw),
        _log_ratio(1 - z, 1.0 - dp.P1, 1.0 - pw),
        _log_ratio(t, dp.P2, pw),
        _log_ratio(k - t, 1.0 - dp.P2, 1.0 - pw),
    )
    # L_N = 0 manda aunque algún otro término sea +inf (L0 = 0 también).
    if any(term == -math.inf for term in terms):
        return -math.inf
    return math.fsum(terms)


def delta_table(dp: DerivedParams) -> np.ndarray:
    """
    Tabla Δ[z, t, k] de forma (2, 7, 7). Las celdas imposibles (t > k) quedan en NaN.
    """
    table = np.full((2, MAX_DEGREE + 1, MAX_DEGREE + 1), np.nan)
    for z in (0, 1):
        for k in range(MAX_DEGREE + 1):
            for t in range(k + 1):
                table[z, t, k] = loglik_delta(z, t, k, dp)
    table.setflags(write=False)
    return table


# ======================================================================================
# Distribuciones exactas
# ======================================================================================
@dataclass(frozen=True)
class JointTZTable:
    """Distribución conjunta de (T_N, Z_N) para un nodo con k vecinos."""

    model: CenterModel
    k: int
    entries: dict[tuple[int, int], float]

    def total(self) -> float:
        return math.fsum(self.entries.values())

    def __getitem__(self, key: tuple[int, int]) -> float:
        return self.entries[key]


@dataclass(frozen=True)
class QDistribution:
    """
    Distribución de Q_N = c·i + j - d·k. El soporte conserva los 2(k+1) puntos aunque
    alguno coincida numéricamente (no se fusionan).
    """

    model: CenterModel
    k: int
    support: list[tuple[float, float]]

    def total(self) -> float:
        return math.fsum(p for _, p in self.support)


def _check_degree(k: int) -> None:
    if not 0 <= k <= MAX_DEGREE:
        raise InvalidStatisticError(f"k={k} fuera de [0, {MAX_DEGREE}]")


def joint_tz(model: CenterModel, k: int, dp: DerivedParams) -> JointTZTable:
    """
    P(T_N = t, Z_N = z) bajo M0 ("null") o M_N ("event"). T_N y Z_N son independientes:
    T_N ~ Bin(k, q_t) y Z_N ~ Ber(q_z), con (q_t, q_z) = (pw, pw) bajo M0 y (P2, P1) bajo M_N.
    """
    _check_degree(k)
    if model == "null":
        q_t, q_z = dp.pw, dp.pw
    elif model == "event":
        q_t, q_z = dp.P2, dp.P1
    else:
        raise ValueError(f"Modelo desconocido: {model!r}")

    t_pmf = binom.pmf(np.arange(k + 1), k, q_t)
    z_pmf = (1.0 - q_z, q_z)
    entries = {(t, z): float(t_pmf[t] * z_pmf[z]) for t in range(k + 1) for z in (0, 1)}
    return JointTZTable(model=model, k=k, entries=entries)


def q_distribution(model: CenterModel, k: int, dp: DerivedParams) -> QDistribution:
    """Pushforward de `joint_tz` por (i, j) -> c·i + j - d·k. Requiere beta > 0."""
    if not dp.has_q:
        raise QUndefinedError(f"Q_N no está definido con beta={dp.beta}; usa loglik_delta")
    assert dp.c is not None and dp.d is not None
    table = joint_tz(model, k, dp)
    support = [
        (dp.c * i + j - dp.d * k, table[(j, i)]) for i in (0, 1) for j in range(k + 1)
    ]
    return QDistribution(model=model, k=k, support=support)


# ======================================================================================
# Probabilidades de error exactas
# ======================================================================================
def exact_false_detect(k: int, dp: DerivedParams) -> float:
    """P_{M0}(L_N > L0) para un nodo con k vecinos."""
    table = joint_tz("null", k, dp)
    return math.fsum(
        p for (t, z), p in table.entries.items() if loglik_delta(z, t, k, dp) > 0.0
    )


def exact_miss(k: int, dp: DerivedParams) -> float:
    """P_{M_N}(L_N < L0) para un nodo con k vecinos (región estricta)."""
    table = joint_tz("event", k, dp)
    return math.fsum(
        p for (t, z), p in table.entries.items() if loglik_delta(z, t, k, dp) < 0.0
    )


def false_positive_bounds(topology: GridTopology, dp: DerivedParams) -> tuple[float, float]:
    """
    Cotas de la probabilidad de que, con la ROI normal, algún nodo supere a M0:
    - inferior: max_N P_{M0}(L_N > L0);
    - superior: min(1, Σ_N P_{M0}(L_N > L0)).
    Se evalúa una vez por grado distinto y se pondera por el histograma de grados.
    """
    per_degree = {k: exact_false_detect(k, dp) for k in topology.degree_histogram()}
    lower = max(per_degree.values())
    total = math.fsum(count * per_degree[k] for k, count in topology.degree_histogram().items())
    return lower, min(1.0, total)

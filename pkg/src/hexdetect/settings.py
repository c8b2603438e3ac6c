# src/hexdetect/settings.py
"""
Valores por defecto de hexdetect, sobreescribibles con variables de entorno HEXDETECT_*.

El CLI los usa como última capa (CLI > YAML > settings). Los valores fuera de rango se
recortan (REPS >= 1, WORKERS >= 1) o vuelven al default (OCCAM_C fuera de (0,1), SCENARIO
desconocido). reports/ no se crea al importar, sólo al pedir una carpeta de run.
"""

import os
import re
from collections.abc import Iterable
from datetime import UTC, datetime
from pathlib import Path


_TRUTHY = {"1", "true", "yes", "y", "on"}


# ---------------------------
# Lectura de variables HEXDETECT_*
# ---------------------------
def _f(name: str, default: float) -> float:
    """Variable numérica real; vacía o no convertible => `default`."""
    raw = os.getenv(name)
    try:
        return float(raw) if raw else float(default)
    except (TypeError, ValueError):
        return float(default)


def _i(name: str, default: int) -> int:
    """Entero; acepta "2000" pero no "2e3" (se vuelve al default)."""
    raw = os.getenv(name)
    try:
        return int(raw) if raw else int(default)
    except (TypeError, ValueError):
        return int(default)


def _b(name: str, default: bool) -> bool:
    """Booleano: 1/true/yes/y/on (sin distinguir mayúsculas) => True; otro texto => False."""
    raw = os.getenv(name)
    if raw is None:
        return default
    return raw.strip().lower() in _TRUTHY


def _s(name: str, default: str, allowed: Iterable[str]) -> str:
    """Cadena restringida a `allowed`; si no es válida, fallback al valor por defecto."""
    val = os.getenv(name, default).strip().lower()
    return val if val in set(allowed) else default


# ---------------------------
# Rejilla
# ---------------------------

# Dimensiones de la ROI (32x32 = 1024 nodos en los experimentos de referencia).
ROWS = max(1, _i("HEXDETECT_ROWS", 32))
COLS = max(1, _i("HEXDETECT_COLS", 32))

# Si True, sólo se consideran modelos de evento en nodos interiores (grado 6).
INTERIOR_ONLY = _b("HEXDETECT_INTERIOR_ONLY", False)


# ---------------------------
# Simulación
# ---------------------------

# Réplicas Monte Carlo por escenario y semilla maestra (reproducibilidad).
REPS = max(1, _i("HEXDETECT_REPS", 10_000))
SEED = max(0, _i("HEXDETECT_SEED", 12345))

# Escenarios simulados: normal (S1), event (S2..S5) o ambos.
SCENARIO = _s("HEXDETECT_SCENARIO", "both", {"normal", "event", "both"})

# Procesos para repartir réplicas (1 = en serie). Resultado idéntico en ambos casos.
WORKERS = max(1, _i("HEXDETECT_WORKERS", 1))

# Frecuencia de logging del motor (cada cuántas réplicas loguear en nivel INFO).
# 0 => desactiva logs intermedios (solo la primera réplica).
LOG_EVERY = max(0, _i("HEXDETECT_LOG_EVERY", 1000))

LOGLEVEL = _s("HEXDETECT_LOGLEVEL", "info", {"debug", "info", "warning", "error"}).upper()


# ---------------------------
# Detectores
# ---------------------------

# Umbral C de la ventana de Occam; fuera de (0,1) se vuelve a 0.9.
_OCCAM = _f("HEXDETECT_OCCAM_C", 0.9)
OCCAM_C = _OCCAM if 0.0 < _OCCAM < 1.0 else 0.9

# Umbrales por defecto del barrido (subcomando `sweep`).
SWEEP_C = [0.6, 0.7, 0.8, 0.9]


# ---------------------------
# Rutas de proyecto (fuera de src/)
# ---------------------------

# src/hexdetect/settings.py -> parents[2] es la raíz del repo
PROJECT_ROOT = Path(__file__).resolve().parents[2]
REPORTS_DIR = PROJECT_ROOT / "reports"


# ---------------------------
# Carpetas de salida: <comando>_<YYYY-MM-DD>_runNN
# ---------------------------
def _next_run_number(existing_dirs: Iterable[Path], prefix: str) -> int:
    """Siguiente NN tras el mayor `prefix + NN` existente (los huecos no se reutilizan)."""
    pat = re.compile(rf"^{re.escape(prefix)}(\d+)$")
    used = [int(m.group(1)) for p in existing_dirs if (m := pat.match(p.name))]
    return max(used, default=0) + 1


def generate_report_dir(command: str, base_dir: Path | None = None) -> Path:
    """
    Crea `<base_dir or reports/>/<comando>_<fecha UTC>_runNN` y la devuelve.

    Ej.: reports/simulate_2026-03-02_run01, reports/simulate_2026-03-02_run02...
    """
    date_str = datetime.now(tz=UTC).strftime("%Y-%m-%d")
    safe_command = re.sub(r"[^A-Za-z0-9_-]", "", command)

    root = base_dir if base_dir is not None else REPORTS_DIR
    root.mkdir(parents=True, exist_ok=True)
    prefix = f"{safe_command}_{date_str}_run"
    existing = (p for p in root.glob(f"{prefix}*") if p.is_dir())

    report_dir = root / f"{prefix}{_next_run_number(existing, prefix):02d}"
    report_dir.mkdir(parents=True, exist_ok=True)
    return report_dir

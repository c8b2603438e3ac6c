"""
Constantes globales del paquete.

Este módulo debe contener únicamente valores **estables** que tengan impacto
en la compatibilidad entre partes del sistema (p. ej., el formato/contrato de
los CSVs de salida y de los ficheros de registros). Al centralizarlos aquí:

- Los tests pueden verificar expectativas claras (p. ej., schema_version).
- Cambiar una constante “de contrato” es una decisión explícita (PR dedicado).
- Evitamos “magia” o números sueltos repartidos por el código.

Convención
----------
- Usa nombres en MAYÚSCULAS.
- Añade comentarios que expliquen el propósito y consecuencias de editar la constante.
"""

# =============================================================================
# Versión del esquema de salida (CSVs de derive / exact / simulate / sweep)
# =============================================================================
# Los tests (tests/test_results_schema.py) esperan que esta constante valga 1 y
# que los CSV contengan las columnas listadas abajo. Si añades, renombras o
# eliminas columnas, incrementa este número y ajusta los tests.
SCHEMA_VERSION = 1

# Formato de los números en todos los CSV: decimal fijo, sin dependencia de locale.
FLOAT_FORMAT = "%.6f"

# =============================================================================
# Columnas (orden estable) de cada tabla
# =============================================================================
PARAM_COLUMNS = ["p1", "p2", "pc", "pw"]
DERIVED_COLUMNS = ["P1", "P2", "alpha", "beta", "gamma", "delta", "c", "d", "tau0"]
DERIVE_COLUMNS = [*PARAM_COLUMNS, *DERIVED_COLUMNS, "schema_version"]

# Columnas de configuración que acompañan a cada fila de simulación (trazabilidad).
# interior_only, p_norm y event_node cambian las métricas: van en la fila, no sólo en el manifest.
RUN_CONFIG_COLUMNS = [
    "seed",
    "rows",
    "cols",
    "interior_only",
    "replications",
    "scenario",
    "occam_c",
    "p_norm",
    "event_node",
]

# Métricas de la simulación; cada una lleva su error estándar en "<métrica>_se".
METRIC_COLUMNS = ["S1", "S2", "S3", "N3", "S4", "N4", "S5", "N5", "fnr"]
EXTRA_METRIC_COLUMNS = ["N1", "N2", "N2_se", "S1_bma", "S2_bma"]
SIMULATE_COLUMNS = [
    *PARAM_COLUMNS,
    *METRIC_COLUMNS,
    *[f"{m}_se" for m in METRIC_COLUMNS],
    *EXTRA_METRIC_COLUMNS,
    *RUN_CONFIG_COLUMNS,
    "schema_version",
]

SWEEP_COLUMNS = [
    *PARAM_COLUMNS,
    "C",
    "success",
    "success_se",
    "search",
    "search_se",
    *RUN_CONFIG_COLUMNS,
    "schema_version",
]

# Tablas exactas (cmd_exact): cada fila lleva los parámetros que la generan.
JOINT_COLUMNS = [*PARAM_COLUMNS, "model", "k", "t", "z", "probability", "q", "schema_version"]
# Etiqueta de `model` en el CSV: "null" lo lee pandas como NA, así que M0 sale como "normal".
JOINT_MODEL_LABELS = {"null": "normal", "event": "event"}
ERROR_COLUMNS = [*PARAM_COLUMNS, "k", "false_detect", "miss", "schema_version"]
BOUNDS_COLUMNS = [*PARAM_COLUMNS, "rows", "cols", "lower", "upper", "schema_version"]

# Estimaciones de calibración (cmd_calibrate). `true_value` vacío si la cabecera no trae params.
CALIBRATION_COLUMNS = ["parameter", "estimate", "se", "n", "true_value", "schema_version"]

# =============================================================================
# Fichero de registros de calibración
# =============================================================================
# Cabecera: "# hexdetect-runs v<RECORD_FORMAT_VERSION> rows=.. cols=.. [p1=.. ...]".
# Cambiar la versión rompe la lectura de ficheros antiguos: decisión explícita.
RECORD_MAGIC = "hexdetect-runs"
RECORD_FORMAT_VERSION = 1

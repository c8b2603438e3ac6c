"""
Jerarquía de excepciones del paquete.

Todas heredan de `HexDetectError` (que a su vez es un `ValueError`), de modo que:
- El código de librería lanza errores con nombre propio y mensaje claro.
- El CLI (`__main__.py`) captura `HexDetectError` y sale con código 2 (error de datos).
- Quien use la librería puede seguir capturando `ValueError` si no le interesa el detalle.
"""


class HexDetectError(ValueError):
    """Base de todos los errores de dominio de hexdetect."""


# --- Topología ---
class InvalidDimensionError(HexDetectError):
    """Filas o columnas de la rejilla fuera de rango (< 1)."""


class InvalidNodeError(HexDetectError):
    """Nodo fuera de los límites de la rejilla."""


# --- Parámetros y probabilidades ---
class InvalidParametersError(HexDetectError):
    """Algún parámetro del sensor fuera de [0, 1] o incumpliendo p1 > p2."""


class DegenerateParametersError(InvalidParametersError):
    """pc <= pw: P1 = P2 = pw y los modelos dejan de ser distinguibles."""


class InvalidStatisticError(HexDetectError):
    """Estadístico (z, t, k) imposible, p. ej. t > k."""


class QUndefinedError(HexDetectError):
    """Q_N sólo existe cuando beta > 0 (p2 > 0)."""


# --- Detectores ---
class InvalidThresholdError(HexDetectError):
    """Umbral C (o C*) fuera del intervalo abierto (0, 1)."""


class UndefinedPosteriorError(HexDetectError):
    """Ningún modelo con verosimilitud finita tiene masa a priori."""


# --- Calibración y ficheros ---
class InsufficientDataError(HexDetectError):
    """No hay datos suficientes para estimar."""


class InestimableParameterError(HexDetectError):
    """El conjunto condicionante está vacío (p. ej. ninguna observación con y = 1)."""


class RecordFormatError(HexDetectError):
    """Fichero de registros de calibración mal formado."""


# --- Configuración ---
class ConfigurationError(HexDetectError):
    """Configuración inválida detectada antes de simular."""

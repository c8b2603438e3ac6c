"""
Fichero de registros de experimentos de calibración (“runs file”).

Formato (texto, UTF-8, una línea por repetición):

    # hexdetect-runs v1 rows=32 cols=32 p1=0.9 p2=0.5 pc=0.9 pw=0.01
    normal - - 0000...00
    event 3,4 0001c0...00 0001c4...00

- Cabecera obligatoria: magia + versión + dimensiones; los parámetros son opcionales (se
  escriben cuando el fichero viene de una simulación y se conocen).
- Cada run: `<kind> <nodo|-> <y_hex|-> <z_hex>`. `kind` es `normal` o `event`; el nodo va como
  `fila,columna`; `-` indica campo ausente (y desconocido o nodo en un run normal).
- Los campos binarios van empaquetados en hexadecimal: bits en orden row-major, 8 nodos por
  byte, big-endian (ver `BinaryField.to_hex`).
- Se ignoran líneas vacías y comentarios `#` posteriores a la cabecera.

Los tests (`tests/test_records.py`) validan la lectura/escritura y los errores de formato.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path

from .calibration import CalibrationRun
from .const import RECORD_FORMAT_VERSION, RECORD_MAGIC
from .core import DetectionField, ResponseField
from .errors import InsufficientDataError, RecordFormatError
from .hexgrid import GridTopology, NodeId, build_grid
from .probability import SensorParams

logger = logging.getLogger(__name__)

_PARAM_KEYS = ("p1", "p2", "pc", "pw")


@dataclass
class RecordSet:
    """Contenido de un fichero de registros."""

    topology: GridTopology
    params: dict[str, float] = field(default_factory=dict)
    runs: list[CalibrationRun] = field(default_factory=list)

    @property
    def known_params(self) -> SensorParams | None:
        """Parámetros de la cabecera si están los cuatro."""
        if all(k in self.params for k in _PARAM_KEYS):
            return SensorParams(**{k: self.params[k] for k in _PARAM_KEYS})
        return None


# --------------------------------------------------------------------------------------
# Escritura
# --------------------------------------------------------------------------------------
def format_header(topology: GridTopology, params: SensorParams | None = None) -> str:
    parts = [f"# {RECORD_MAGIC} v{RECORD_FORMAT_VERSION}", f"rows={topology.rows}"]
    parts.append(f"cols={topology.cols}")
    if params is not None:
        parts.extend(f"{k}={v!r}" for k, v in params.as_dict().items())
    return " ".join(parts)


def format_run(run: CalibrationRun) -> str:
    node = "-" if run.event_node is None else f"{run.event_node.row},{run.event_node.col}"
    y = "-" if run.detections is None else run.detections.to_hex()
    return f"{run.kind} {node} {y} {run.responses.to_hex()}"


def write_records(
    path: str | Path,
    topology: GridTopology,
    runs: Iterable[CalibrationRun],
    params: SensorParams | None = None,
) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with out.open("w", encoding="utf-8", newline="\n") as f:
        f.write(format_header(topology, params) + "\n")
        for run in runs:
            if not run.responses.matches(topology):
                raise RecordFormatError("Run con dimensiones distintas a la cabecera")
            f.write(format_run(run) + "\n")
            n += 1
    logger.info("Registros exportados a %s (%s runs)", out, n)
    return out


# --------------------------------------------------------------------------------------
# Lectura
# --------------------------------------------------------------------------------------
def _parse_header(line: str) -> tuple[GridTopology, dict[str, float]]:
    tokens = line.lstrip("#").split()
    if len(tokens) < 2 or tokens[0] != RECORD_MAGIC:
        raise RecordFormatError(f"Cabecera no reconocida: {line!r}")
    if tokens[1] != f"v{RECORD_FORMAT_VERSION}":
        raise RecordFormatError(f"Versión de formato no soportada: {tokens[1]}")
    fields: dict[str, str] = {}
    for tok in tokens[2:]:
        key, sep, value = tok.partition("=")
        if not sep:
            raise RecordFormatError(f"Campo de cabecera mal formado: {tok!r}")
        fields[key] = value
    try:
        rows, cols = int(fields.pop("rows")), int(fields.pop("cols"))
        params = {k: float(fields[k]) for k in _PARAM_KEYS if k in fields}
    except (KeyError, ValueError) as e:
        raise RecordFormatError(f"Cabecera incompleta o inválida: {line!r}") from e
    return build_grid(rows, cols), params


def _parse_node(text: str, topology: GridTopology, lineno: int) -> NodeId:
    try:
        r, c = (int(x) for x in text.split(","))
    except ValueError as e:
        raise RecordFormatError(f"Línea {lineno}: nodo inválido {text!r}") from e
    node = NodeId(r, c)
    if not topology.contains(node):
        raise RecordFormatError(f"Línea {lineno}: nodo {node} fuera de la rejilla")
    return node


def parse_run(line: str, topology: GridTopology, lineno: int = 0) -> CalibrationRun:
    tokens = line.split()
    if len(tokens) != 4:
        raise RecordFormatError(f"Línea {lineno}: se esperaban 4 campos y hay {len(tokens)}")
    kind, node_txt, y_txt, z_txt = tokens
    if kind not in ("normal", "event"):
        raise RecordFormatError(f"Línea {lineno}: tipo de run desconocido {kind!r}")
    if kind == "normal" and node_txt != "-":
        raise RecordFormatError(f"Línea {lineno}: un run normal no lleva nodo")
    node = None if kind == "normal" else _parse_node(node_txt, topology, lineno)
    rows, cols = topology.rows, topology.cols
    detections = None if y_txt == "-" else DetectionField.from_hex(rows, cols, y_txt)
    responses = ResponseField.from_hex(rows, cols, z_txt)
    return CalibrationRun(kind, responses, detections, node)


def read_records(path: str | Path) -> RecordSet:
    src = Path(path)
    lines = src.read_text(encoding="utf-8").splitlines()
    content = [(i, ln.strip()) for i, ln in enumerate(lines, start=1) if ln.strip()]
    if not content:
        raise InsufficientDataError(f"{src} está vacío")

    _, header = content[0]
    topology, params = _parse_header(header)
    records = RecordSet(topology=topology, params=params)
    for lineno, line in content[1:]:
        if line.startswith("#"):
            continue
        records.runs.append(parse_run(line, topology, lineno))
    logger.info(
        "Registros leídos de %s: %s runs en rejilla %sx%s",
        src,
        len(records.runs),
        topology.rows,
        topology.cols,
    )
    return records

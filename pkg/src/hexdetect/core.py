"""
Tipos de datos “núcleo” compartidos por varios módulos.

Por ahora incluye:
- `ModelId`: el modelo M0 (ROI normal) o M_N (evento en el hexágono del nodo N).
- `ResponseField` / `DetectionField`: campos binarios {z_N} y {y_N} sobre toda la rejilla,
  guardados como un array uint8 en orden row-major. Los consumen los detectores, el
  simulador, la calibración y el formato de registros.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import total_ordering
from typing import Self

import numpy as np

from .errors import InvalidNodeError, RecordFormatError
from .hexgrid import GridTopology, NodeId


@total_ordering
@dataclass(frozen=True)
class ModelId:
    """
    Identificador de modelo.

    - `node is None`  ⇒ M0 (normal).
    - `node = N`      ⇒ M_N (evento en N).

    El orden pone M0 antes que cualquier M_N y los M_N en orden row-major, así que
    `sorted(conjunto)` es determinista.
    """

    node: NodeId | None = None

    @staticmethod
    def normal() -> ModelId:
        return ModelId(None)

    @staticmethod
    def event(node: NodeId) -> ModelId:
        return ModelId(node)

    @property
    def is_normal(self) -> bool:
        return self.node is None

    def __lt__(self, other: object) -> bool:
        if not isinstance(other, ModelId):
            return NotImplemented
        if self.node is None or other.node is None:
            return self.node is None and other.node is not None
        return self.node < other.node

    def __str__(self) -> str:
        return "M0" if self.node is None else f"M{self.node}"


@dataclass(frozen=True, eq=False)
class BinaryField:
    """
    Campo binario sobre la rejilla (un bit por nodo, orden row-major).

    `values` se copia a uint8 y se congela en la construcción.
    """

    rows: int
    cols: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.values)
        if arr.shape != (self.rows * self.cols,):
            raise ValueError(
                f"Se esperaban {self.rows * self.cols} valores y llegaron {arr.shape}"
            )
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("Un campo binario sólo admite valores 0/1")
        frozen = arr.astype(np.uint8, copy=True)
        frozen.setflags(write=False)
        object.__setattr__(self, "values", frozen)

    # --- Constructores ---
    @classmethod
    def zeros(cls, topology: GridTopology) -> Self:
        return cls(topology.rows, topology.cols, np.zeros(topology.size, dtype=np.uint8))

    @classmethod
    def from_array(cls, topology: GridTopology, values: np.ndarray) -> Self:
        return cls(topology.rows, topology.cols, np.asarray(values).reshape(-1))

    @classmethod
    def from_mapping(cls, topology: GridTopology, mapping: Mapping[NodeId, int]) -> Self:
        """Exige exactamente un valor por nodo de la rejilla."""
        if len(mapping) != topology.size or any(not topology.contains(n) for n in mapping):
            raise InvalidNodeError("El campo debe tener exactamente un valor por nodo")
        values = np.zeros(topology.size, dtype=np.uint8)
        for node, bit in mapping.items():
            values[topology.index(node)] = bit
        return cls(topology.rows, topology.cols, values)

    # --- Consultas ---
    def __getitem__(self, node: NodeId) -> int:
        if not (0 <= node.row < self.rows and 0 <= node.col < self.cols):
            raise InvalidNodeError(f"Nodo {node} fuera del campo {self.rows}x{self.cols}")
        return int(self.values[node.row * self.cols + node.col])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryField):
            return NotImplemented
        return (
            type(self) is type(other)
            and (self.rows, self.cols) == (other.rows, other.cols)
            and bool(np.array_equal(self.values, other.values))
        )

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.rows, self.cols, self.values.tobytes()))

    def to_mapping(self) -> dict[NodeId, int]:
        return {
            NodeId(i // self.cols, i % self.cols): int(v) for i, v in enumerate(self.values)
        }

    def count(self) -> int:
        return int(self.values.sum())

    def matches(self, topology: GridTopology) -> bool:
        return (self.rows, self.cols) == (topology.rows, topology.cols)

    # --- Empaquetado hexadecimal (formato de registros) ---
    def to_hex(self) -> str:
        """Bits en orden row-major empaquetados big-endian y escritos en hexadecimal."""
        return np.packbits(self.values).tobytes().hex()

    @classmethod
    def from_hex(cls, rows: int, cols: int, text: str) -> Self:
        n = rows * cols
        try:
            raw = bytes.fromhex(text)
        except ValueError as e:
            raise RecordFormatError(f"Hexadecimal inválido: {text[:16]}...") from e
        if len(raw) != (n + 7) // 8:
            raise RecordFormatError(f"Longitud {len(raw)} bytes no cuadra con {n} nodos")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), count=n)
        return cls(rows, cols, bits)


class ResponseField(BinaryField):
    """Respuestas observadas {z_N} que recibe la estación base."""


class DetectionField(BinaryField):
    """Detecciones internas {y_N} (sólo observables en experimentos controlados)."""

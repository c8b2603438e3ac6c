"""
Topología de la rejilla hexagonal de sensores.

Cada celda (hexágono) tiene un sensor en su centro; identificamos el nodo por su
posición (fila, columna) en coordenadas *offset*:

- Convención "odd-r" (filas impares desplazadas media celda a la derecha).
- Vecinos laterales: (r, c-1) y (r, c+1).
- Filas pares: vecinos diagonales en columnas c-1 y c de las filas r-1 y r+1.
- Filas impares: vecinos diagonales en columnas c y c+1 de las filas r-1 y r+1.
- Los candidatos fuera de la rejilla se descartan (los nodos de borde tienen k(N) < 6).

Decisiones
----------
- `NodeId` es un dataclass *frozen* y ordenable: el orden natural (fila, columna) es el
  orden row-major que usan todas las iteraciones deterministas del paquete.
- `GridTopology` es inmutable tras construirse y puede compartirse entre hilos/procesos.
- Además del mapa de adyacencia B(N) guardamos un array de índices de vecinos
  (relleno con un índice centinela) para sumar respuestas vecinas de forma vectorizada.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Iterator
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidDimensionError, InvalidNodeError

# Máximo de vecinos en una rejilla hexagonal.
MAX_DEGREE = 6

# Desplazamientos (dr, dc) según la paridad de la fila.
_EVEN_ROW_OFFSETS = ((0, -1), (0, 1), (-1, -1), (-1, 0), (1, -1), (1, 0))
_ODD_ROW_OFFSETS = ((0, -1), (0, 1), (-1, 0), (-1, 1), (1, 0), (1, 1))


@dataclass(frozen=True, order=True)
class NodeId:
    """Nodo N de la rejilla: fila y columna con índice 0."""

    row: int
    col: int

    def __str__(self) -> str:
        return f"({self.row},{self.col})"


@dataclass(frozen=True)
class GridTopology:
    """
    Rejilla hexagonal rows×cols ya resuelta.

    Campos
    ------
    rows, cols : dimensiones de la rejilla.
    adjacency  : NodeId -> frozenset de vecinos, es decir B(N).
    degree     : NodeId -> k(N) = |B(N)|.

    Atributos derivados (para cálculo vectorizado)
    ----------------------------------------------
    neighbor_index : array (n, 6) con los índices row-major de los vecinos; las posiciones
                     vacías apuntan al centinela `n` (una celda extra siempre a cero).
    degrees        : array (n,) con k(N) en orden row-major.
    """

    rows: int
    cols: int
    adjacency: dict[NodeId, frozenset[NodeId]] = field(repr=False)
    degree: dict[NodeId, int] = field(repr=False)
    neighbor_index: np.ndarray = field(repr=False, compare=False)
    degrees: np.ndarray = field(repr=False, compare=False)

    @property
    def size(self) -> int:
        """|R|, número total de nodos."""
        return self.rows * self.cols

    def contains(self, node: NodeId) -> bool:
        return 0 <= node.row < self.rows and 0 <= node.col < self.cols

    def check(self, node: NodeId) -> None:
        if not self.contains(node):
            raise InvalidNodeError(f"Nodo {node} fuera de una rejilla {self.rows}x{self.cols}")

    def index(self, node: NodeId) -> int:
        """Posición row-major del nodo (la misma que usan los arrays de campos)."""
        self.check(node)
        return node.row * self.cols + node.col

    def node_at(self, index: int) -> NodeId:
        if not 0 <= index < self.size:
            raise InvalidNodeError(f"Índice {index} fuera de [0, {self.size})")
        return NodeId(index // self.cols, index % self.cols)

    def nodes(self) -> Iterator[NodeId]:
        """Itera los nodos en orden row-major."""
        for r in range(self.rows):
            for c in range(self.cols):
                yield NodeId(r, c)

    def interior_nodes(self) -> list[NodeId]:
        return [n for n in self.nodes() if self.degree[n] == MAX_DEGREE]

    def degree_histogram(self) -> dict[int, int]:
        """k -> número de nodos con ese grado (ordenado por k)."""
        hist = Counter(self.degree.values())
        return dict(sorted(hist.items()))

    def neighbor_indices(self, index: int) -> np.ndarray:
        """Índices row-major de B(N) para el nodo en `index` (sin centinelas)."""
        row = self.neighbor_index[index]
        return row[row < self.size]


# ======================================================================================
# Construcción y consultas
# ======================================================================================


def _candidate_neighbors(row: int, col: int) -> list[tuple[int, int]]:
    offsets = _ODD_ROW_OFFSETS if row % 2 else _EVEN_ROW_OFFSETS
    return [(row + dr, col + dc) for dr, dc in offsets]


def build_grid(rows: int, cols: int) -> GridTopology:
    """
    Construye la topología odd-r de una rejilla rows×cols.

    Lanza `InvalidDimensionError` si rows < 1 o cols < 1. Una rejilla 1×1 es válida
    (un único nodo sin vecinos, k = 0).
    """
    if rows < 1 or cols < 1:
        raise InvalidDimensionError(f"Dimensiones inválidas: rows={rows} cols={cols}")

    n = rows * cols
    adjacency: dict[NodeId, frozenset[NodeId]] = {}
    degree: dict[NodeId, int] = {}
    neighbor_index = np.full((n, MAX_DEGREE), n, dtype=np.intp)

    for r in range(rows):
        for c in range(cols):
            inside = [
                NodeId(rr, cc)
                for rr, cc in _candidate_neighbors(r, c)
                if 0 <= rr < rows and 0 <= cc < cols
            ]
            node = NodeId(r, c)
            adjacency[node] = frozenset(inside)
            degree[node] = len(inside)
            idx = sorted(nb.row * cols + nb.col for nb in inside)
            neighbor_index[r * cols + c, : len(idx)] = idx

    degrees = np.fromiter((degree[NodeId(i // cols, i % cols)] for i in range(n)), dtype=np.intp)
    neighbor_index.setflags(write=False)
    degrees.setflags(write=False)
    return GridTopology(
        rows=rows,
        cols=cols,
        adjacency=adjacency,
        degree=degree,
        neighbor_index=neighbor_index,
        degrees=degrees,
    )


def neighbors(topology: GridTopology, node: NodeId) -> frozenset[NodeId]:
    """B(N). Lanza `InvalidNodeError` si el nodo no pertenece a la rejilla."""
    topology.check(node)
    return topology.adjacency[node]

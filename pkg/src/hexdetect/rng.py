"""
Flujos aleatorios reproducibles por réplica.

Usamos PCG64 (`numpy.random.default_rng`) sembrado con `numpy.random.SeedSequence`:

    SeedSequence([seed, branch, replication])
        ├── field     (verdad simulada + fase de detección + fase de respuesta)
        └── decision  (sorteos de desempate de los detectores)

- `branch` separa los escenarios (0 = normal, 1 = evento, 2 = registros de calibración), de
  modo que añadir réplicas normales no altera las de evento.
- Cada réplica depende sólo de (seed, branch, replication): el resultado es el mismo en
  serie o repartiendo réplicas entre procesos.
- Separar `field` de `decision` garantiza que todos los detectores (y todos los umbrales C
  de un barrido) ven exactamente el mismo campo de respuestas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BRANCH_NORMAL = 0
BRANCH_EVENT = 1
BRANCH_RECORDS = 2


@dataclass(frozen=True)
class ReplicationStreams:
    field: np.random.Generator
    decision: np.random.Generator


def make_streams(seed: int, branch: int, replication: int) -> ReplicationStreams:
    """Crea los dos flujos independientes de una réplica."""
    root = np.random.SeedSequence([seed, branch, replication])
    ss_field, ss_decision = root.spawn(2)
    return ReplicationStreams(
        field=np.random.default_rng(ss_field),
        decision=np.random.default_rng(ss_decision),
    )

"""Qubit encoding of a post-POVM block and its GHZ stabilizer group.

Qubit register of one block: center qubit first, then one qubit per bond half.

* bond half: qubit ``|0>`` is spin up, so ``X, Y, Z = 2 I^x, 2 I^y, 2 I^z``;
* center: qubit ``|0>`` is ``|S^z = -s>`` and qubit ``|1>`` is
  ``(-1)**(2s) |S^z = +s>``.

With these phases the ``z``-outcome block state is ``(|0...0> + |1...1>)/sqrt 2``
and both check families ``X_c prod_a X_a`` and ``Z_c Z_a`` have eigenvalue +1.
On the center, ``Z = -S^z / s`` restricted to the two maximal-``|m|`` states.
"""

from __future__ import annotations

import numpy as np

from .model_blocks import BlockSpec
from .pauli import PauliString, StabilizerSet


def center_isometry(spec: BlockSpec) -> np.ndarray:
    """Columns: the physical center states encoding qubit 0 and qubit 1."""
    d = spec.center_dim
    v = np.zeros((d, 2), dtype=complex)
    v[d - 1, 0] = 1.0
    v[0, 1] = (-1.0) ** int(2 * spec.center_spin)
    return v


def block_isometry(spec: BlockSpec) -> np.ndarray:
    return np.kron(center_isometry(spec), np.eye(2**spec.num_bonds))


def ghz_state(num_qubits: int) -> np.ndarray:
    v = np.zeros(2**num_qubits, dtype=complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return v


def ghz_generators(num_bonds: int) -> StabilizerSet:
    """The X-type check followed by the ``num_bonds`` Z-type checks."""
    n = num_bonds + 1
    gens = [PauliString.from_label("X" * n)]
    for a in range(1, n):
        gens.append(PauliString.from_ops(n, {0: "Z", a: "Z"}))
    return StabilizerSet(gens)

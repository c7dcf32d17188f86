"""Pauli strings in binary symplectic form, stabilizer sets and Pauli frames.

A ``PauliString`` is ``i**phase * P_0 (x) P_1 (x) ...`` with each ``P_j`` one of
I, X, Y, Z given by bits ``(x_j, z_j)``: (1,0)=X, (1,1)=Y, (0,1)=Z. Under this
convention ``X @ Z == -1j * Y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

_LETTERS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_MATRICES = {
    (0, 0): np.eye(2, dtype=complex),
    (1, 0): np.array([[0, 1], [1, 0]], dtype=complex),
    (1, 1): np.array([[0, -1j], [1j, 0]], dtype=complex),
    (0, 1): np.array([[1, 0], [0, -1]], dtype=complex),
}


def _g(x1, z1, x2, z2):
    """Exponent of i picked up by sigma(x1,z1) @ sigma(x2,z2), per qubit."""
    x1, z1, x2, z2 = (np.asarray(a, dtype=np.int64) for a in (x1, z1, x2, z2))
    out = np.zeros_like(x1)
    y = (x1 == 1) & (z1 == 1)
    xo = (x1 == 1) & (z1 == 0)
    zo = (x1 == 0) & (z1 == 1)
    out = np.where(y, z2 - x2, out)
    out = np.where(xo, z2 * (2 * x2 - 1), out)
    out = np.where(zo, x2 * (1 - 2 * z2), out)
    return out


@dataclass(frozen=True, eq=False)
class PauliString:
    x: np.ndarray
    z: np.ndarray
    phase: int = 0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.uint8) & 1
        z = np.asarray(self.z, dtype=np.uint8) & 1
        if x.shape != z.shape or x.ndim != 1:
            raise ValueError("x and z must be equal-length bit vectors")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(np.zeros(n), np.zeros(n))

    @classmethod
    def from_label(cls, label: str, phase: int = 0) -> PauliString:
        bits = [_LETTERS[c] for c in label.upper()]
        return cls([b[0] for b in bits], [b[1] for b in bits], phase)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str) -> PauliString:
        label = ["I"] * n
        label[qubit] = letter
        return cls.from_label("".join(label))

    @classmethod
    def from_ops(cls, n: int, ops: dict[int, str], phase: int = 0) -> PauliString:
        out = cls.identity(n)
        for q, letter in ops.items():
            out = out @ cls.single(n, q, letter)
        return out.with_phase((out.phase + phase) % 4)

    def with_phase(self, phase: int) -> PauliString:
        return PauliString(self.x, self.z, phase)

    @property
    def num_qubits(self) -> int:
        return self.x.size

    @property
    def label(self) -> str:
        inv = {v: k for k, v in _LETTERS.items()}
        return "".join(inv[int(a), int(b)] for a, b in zip(self.x, self.z))

    @property
    def weight(self) -> int:
        return int(np.count_nonzero(self.x | self.z))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(k) for k in np.flatnonzero(self.x | self.z))

    def __matmul__(self, other: PauliString) -> PauliString:
        if self.num_qubits != other.num_qubits:
            raise ValueError("Pauli strings act on different registers")
        extra = int(_g(self.x, self.z, other.x, other.z).sum())
        return PauliString(self.x ^ other.x, self.z ^ other.z, self.phase + other.phase + extra)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliString):
            return NotImplemented
        return (
            self.phase == other.phase
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )

    def __hash__(self):
        return hash((self.phase, self.x.tobytes(), self.z.tobytes()))

    def equal_up_to_sign(self, other: PauliString) -> bool:
        return np.array_equal(self.x, other.x) and np.array_equal(self.z, other.z)

    def commutes(self, other: PauliString) -> bool:
        return int((self.x & other.z).sum() + (self.z & other.x).sum()) % 2 == 0

    def to_matrix(self) -> np.ndarray:
        mats = [_MATRICES[int(a), int(b)] for a, b in zip(self.x, self.z)]
        return (1j**self.phase) * reduce(np.kron, mats, np.eye(1, dtype=complex))

    def __repr__(self) -> str:
        sign = ["+", "+i", "-", "-i"][self.phase]
        return f"PauliString({sign}{self.label})"


def gf2_rank(rows: np.ndarray) -> int:
    m = (np.asarray(rows, dtype=np.uint8) & 1).copy()
    rank = 0
    n_rows, n_cols = m.shape
    for col in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if m[r, col]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(n_rows):
            if r != rank and m[r, col]:
                m[r] ^= m[rank]
        rank += 1
        if rank == n_rows:
            break
    return rank


@dataclass
class StabilizerSet:
    generators: list[PauliString] = field(default_factory=list)

    def __post_init__(self):
        if not self.commuting():
            raise ValueError("stabilizer generators must commute")
        if not self.independent():
            raise ValueError("stabilizer generators must be independent")

    def symplectic(self) -> np.ndarray:
        return np.array([np.concatenate([g.x, g.z]) for g in self.generators], dtype=np.uint8)

    def commuting(self) -> bool:
        gens = self.generators
        return all(a.commutes(b) for i, a in enumerate(gens) for b in gens[i + 1 :])

    def independent(self) -> bool:
        if not self.generators:
            return True
        return gf2_rank(self.symplectic()) == len(self.generators)

    def group(self):
        """Yield every element of the (abelian) group, with phases."""
        n = self.generators[0].num_qubits
        for mask in range(2 ** len(self.generators)):
            out = PauliString.identity(n)
            for k, g in enumerate(self.generators):
                if mask >> k & 1:
                    out = out @ g
            yield out

    def syndrome(self, error: PauliString) -> tuple[int, ...]:
        return tuple(0 if g.commutes(error) else 1 for g in self.generators)


@dataclass(frozen=True)
class PauliFrame:
    """Accumulated X and Z correction bits per center qubit."""

    x: tuple[int, ...]
    z: tuple[int, ...]

    @classmethod
    def empty(cls, n: int) -> PauliFrame:
        return cls((0,) * n, (0,) * n)

    def flip_z(self, qubit: int) -> PauliFrame:
        z = list(self.z)
        z[qubit] ^= 1
        return PauliFrame(self.x, tuple(z))

    def flip_x(self, qubit: int) -> PauliFrame:
        x = list(self.x)
        x[qubit] ^= 1
        return PauliFrame(tuple(x), self.z)

    def compose(self, other: PauliFrame) -> PauliFrame:
        return PauliFrame(
            tuple(a ^ b for a, b in zip(self.x, other.x)),
            tuple(a ^ b for a, b in zip(self.z, other.z)),
        )

    def is_identity(self) -> bool:
        return not any(self.x) and not any(self.z)

    def as_pauli(self) -> PauliString:
        return PauliString(np.array(self.x), np.array(self.z))

"""Single-site block Hamiltonians ``h_r = delta * S_r . I_r``.

A block acts on the center spin tensored with the ``num_bonds`` spin-1/2
halves of its incident bond particles, center first. Each half uses the
spin-1/2 basis ``[up, down]``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .spin_algebra import SpinRep, build_spin_rep

MODELS = ("2d", "3d")
_CENTER_SPIN = {"2d": Fraction(3, 2), "3d": Fraction(2)}
_NUM_BONDS = {"2d": 3, "3d": 4}


def normalize_model(model: str) -> str:
    key = str(model).lower()
    if key not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    return key


@dataclass(frozen=True)
class BlockSpec:
    model: str
    delta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "model", normalize_model(self.model))
        if not self.delta > 0:
            raise ValueError("coupling delta must be positive")

    @property
    def center_spin(self) -> Fraction:
        return _CENTER_SPIN[self.model]

    @property
    def num_bonds(self) -> int:
        return _NUM_BONDS[self.model]

    @property
    def center_dim(self) -> int:
        return int(2 * self.center_spin) + 1

    @property
    def dim(self) -> int:
        return self.center_dim * 2**self.num_bonds


def _embed(op: np.ndarray, index: int, dims: list[int]) -> np.ndarray:
    out = np.eye(1)
    for k, d in enumerate(dims):
        out = np.kron(out, op if k == index else np.eye(d))
    return out


def block_operators(spec: BlockSpec) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Center spin components and summed half-qubit spin, embedded in the block."""
    center = build_spin_rep(spec.center_spin)
    half = build_spin_rep(Fraction(1, 2))
    dims = [spec.center_dim] + [2] * spec.num_bonds
    s_ops = [_embed(op, 0, dims) for op in center.components]
    i_ops = [
        sum(_embed(op, k, dims) for k in range(1, spec.num_bonds + 1))
        for op in half.components
    ]
    return s_ops, i_ops


def total_spin_squared(spec: BlockSpec) -> np.ndarray:
    s_ops, i_ops = block_operators(spec)
    return sum((s + i) @ (s + i) for s, i in zip(s_ops, i_ops))


def bond_spin_squared(spec: BlockSpec) -> np.ndarray:
    _, i_ops = block_operators(spec)
    return sum(i @ i for i in i_ops)


@dataclass(frozen=True)
class BlockHamiltonian:
    spec: BlockSpec
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)

    @cached_property
    def ground_state(self) -> np.ndarray:
        return ground_state_from(self)

    @property
    def ground_projector(self) -> np.ndarray:
        g = self.ground_state
        return np.outer(g, g.conj())

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def gap(self) -> float:
        e = self.eigenvalues
        excited = e[e > e[0] + 1e-9 * self.spec.delta]
        return float(excited[0] - e[0])

    def levels(self, tol: float = 1e-9) -> list[tuple[float, int]]:
        """Distinct energies with their degeneracies."""
        out: list[list] = []
        for e in self.eigenvalues:
            if out and abs(e - out[-1][0]) < tol * self.spec.delta:
                out[-1][1] += 1
            else:
                out.append([float(e), 1])
        return [(e, n) for e, n in out]


def build_block(spec: BlockSpec) -> BlockHamiltonian:
    s_ops, i_ops = block_operators(spec)
    h = spec.delta * sum(s @ i for s, i in zip(s_ops, i_ops))
    h = (h + h.conj().T) / 2
    evals, evecs = np.linalg.eigh(h)
    return BlockHamiltonian(spec, h, evals, evecs)


def ground_state_from(block: BlockHamiltonian) -> np.ndarray:
    e = block.eigenvalues
    degenerate = np.sum(np.abs(e - e[0]) < 1e-9 * block.spec.delta)
    if degenerate != 1:
        raise RuntimeError(f"ground space has dimension {degenerate}, expected 1")
    g = block.eigenvectors[:, 0].copy()
    # fix the global phase: largest component real positive
    k = np.argmax(np.abs(g))
    g *= np.abs(g[k]) / g[k]
    return g


def ground_state(spec: BlockSpec) -> np.ndarray:
    return build_block(spec).ground_state


def _couple(j1: Fraction, j2: Fraction) -> list[Fraction]:
    return [abs(j1 - j2) + k for k in range(int(j1 + j2 - abs(j1 - j2)) + 1)]


def bond_spin_multiplicities(num_bonds: int) -> Counter:
    """Total-spin content of ``num_bonds`` spin-1/2's, by repeated coupling."""
    counts: Counter = Counter({Fraction(0): 1})
    half = Fraction(1, 2)
    for _ in range(num_bonds):
        nxt: Counter = Counter()
        for j, mult in counts.items():
            for j_new in _couple(j, half):
                nxt[j_new] += mult
        counts = nxt
    return counts


def exact_spectrum_oracle(spec: BlockSpec) -> list[tuple[float, int]]:
    """Closed-form block spectrum from angular-momentum addition.

    Returns sorted ``(energy, multiplicity)`` pairs.
    """
    s = spec.center_spin
    levels: Counter = Counter()
    for i_spin, mult in bond_spin_multiplicities(spec.num_bonds).items():
        for t in _couple(s, i_spin):
            e = Fraction(1, 2) * (t * (t + 1) - s * (s + 1) - i_spin * (i_spin + 1))
            levels[e] += mult * int(2 * t + 1)
    return [(float(e) * spec.delta, n) for e, n in sorted(levels.items())]


def center_rep(spec: BlockSpec) -> SpinRep:
    return build_spin_rep(spec.center_spin)

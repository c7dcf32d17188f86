"""Spin matrices, bond half-qubit operators, POVM elements and the
outcome-correction rotations.

Basis convention: ``Sz`` is diagonal with entries ``s, s-1, ..., -s``; index 0
is the maximal-``m`` state.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import expm

HERMITIAN_TOL = 1e-12
POVM_TOL = 1e-12
RANK_TOL = 1e-10


@dataclass(frozen=True)
class SpinRep:
    s: float
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray

    @property
    def dim(self) -> int:
        return self.sz.shape[0]

    @property
    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.sx, self.sy, self.sz)

    def along(self, direction) -> np.ndarray:
        """Return ``n . S`` for a 3-vector ``n``."""
        n = np.asarray(direction, dtype=float)
        return n[0] * self.sx + n[1] * self.sy + n[2] * self.sz

    def casimir(self) -> np.ndarray:
        return self.sx @ self.sx + self.sy @ self.sy + self.sz @ self.sz


@dataclass(frozen=True)
class HalfQubitOps:
    """Two independent spin-1/2 algebras on the 4-dim bond space.

    The bond space is qubit(A) (x) qubit(B) in the product basis
    ``|A^z, B^z>`` with +1/2 first.
    """

    a: tuple[np.ndarray, np.ndarray, np.ndarray]
    b: tuple[np.ndarray, np.ndarray, np.ndarray]


@dataclass(frozen=True)
class PovmElement:
    label: str
    direction: np.ndarray
    weight: float
    matrix: np.ndarray


def build_spin_rep(s) -> SpinRep:
    """Angular-momentum matrices for spin ``s`` via the ladder operator."""
    try:
        two_s = Fraction(s) * 2
    except (TypeError, ValueError) as exc:
        raise ValueError(f"spin must be a half-integer, got {s!r}") from exc
    if two_s.denominator != 1 or two_s <= 0:
        raise ValueError(f"spin must be a positive half-integer, got {s!r}")
    spin = float(two_s) / 2
    dim = int(two_s) + 1
    m = spin - np.arange(dim)
    s_plus = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        # <m+1| S+ |m>
        s_plus[k - 1, k] = np.sqrt(spin * (spin + 1) - m[k] * (m[k] + 1))
    s_minus = s_plus.conj().T
    sx = (s_plus + s_minus) / 2
    sy = (s_plus - s_minus) / 2j
    sz = np.diag(m).astype(complex)
    return SpinRep(spin, sx, sy, sz)


def build_half_qubits() -> HalfQubitOps:
    half = build_spin_rep(Fraction(1, 2))
    eye = np.eye(2)
    a = tuple(np.kron(op, eye) for op in half.components)
    b = tuple(np.kron(eye, op) for op in half.components)
    return HalfQubitOps(a=a, b=b)


def povm_2d() -> list[PovmElement]:
    """The three-outcome POVM ``F^a = (S_a^2 - 1/4)/sqrt(6)`` on spin 3/2."""
    rep = build_spin_rep(Fraction(3, 2))
    eye = np.eye(rep.dim)
    elements = []
    for label, op, direction in zip("xyz", rep.components, np.eye(3)):
        matrix = (op @ op - 0.25 * eye) / np.sqrt(6)
        elements.append(PovmElement(label, direction.copy(), 1.0, matrix))
    _check_complete(elements)
    return elements


def povm_3d_directions() -> list[tuple[np.ndarray, float]]:
    """The seven (direction, weight) pairs of the spin-2 POVM.

    The body diagonals are chosen with non-negative z so the correction
    rotation formula applies to every outcome; ``P(n) = P(-n)``.
    """
    axes = [(np.array(v, dtype=float), 1.0 / 3.0) for v in np.eye(3)]
    diagonals = [(1, 1, 1), (-1, 1, 1), (1, -1, 1), (-1, -1, 1)]
    diag = [(np.array(v, dtype=float) / np.sqrt(3), 3.0 / 8.0) for v in diagonals]
    return axes + diag


def max_projector(rep: SpinRep, direction) -> np.ndarray:
    """Projector onto the ``n.S = +s`` and ``n.S = -s`` eigenstates."""
    evals, evecs = np.linalg.eigh(rep.along(direction))
    keep = np.abs(np.abs(evals) - rep.s) < 1e-8
    if keep.sum() != 2:
        raise RuntimeError("could not isolate the maximal-|m| eigenvectors")
    v = evecs[:, keep]
    return v @ v.conj().T


def povm_3d() -> list[PovmElement]:
    rep = build_spin_rep(2)
    elements = []
    for k, (direction, weight) in enumerate(povm_3d_directions(), start=1):
        matrix = np.sqrt(weight) * max_projector(rep, direction)
        elements.append(PovmElement(str(k), direction, weight, matrix))
    _check_complete(elements)
    return elements


def povm_sum(elements) -> np.ndarray:
    return sum(e.matrix.conj().T @ e.matrix for e in elements)


def _check_complete(elements) -> None:
    total = povm_sum(elements)
    err = np.abs(total - np.eye(total.shape[0])).max()
    if err > POVM_TOL:
        raise RuntimeError(f"POVM is not complete: max deviation {err:.3e}")


def rotation_vector(direction) -> np.ndarray:
    """``n(a) = (a x z) arcsin|a x z| / |a x z|``; zero for ``a = z``."""
    a = np.asarray(direction, dtype=float)
    a = a / np.linalg.norm(a)
    if a[2] < -1e-12:
        raise ValueError("direction must have non-negative z-component")
    cross = np.cross(a, [0.0, 0.0, 1.0])
    norm = np.linalg.norm(cross)
    if norm < 1e-15:
        return np.zeros(3)
    return cross * np.arcsin(min(norm, 1.0)) / norm


def correction_rotation(direction, rep: SpinRep) -> np.ndarray:
    """Single-particle factor of the outcome correction U(a), as applied to states.

    Returns ``exp(-i S.n(a))``, which satisfies ``U (a.S) U^dag = Sz`` and so
    carries the ``a``-outcome state onto the ``z``-outcome state. The operator
    ``exp(+i S.n(a))`` is its inverse and rotates ``z`` onto ``a`` instead.
    """
    n = rotation_vector(direction)
    if not n.any():
        return np.eye(rep.dim, dtype=complex)
    return expm(-1j * rep.along(n))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def matrix_rank(m: np.ndarray, tol: float = RANK_TOL) -> int:
    return int((np.linalg.svd(m, compute_uv=False) > tol).sum())

"""Labelled tensor-product state vectors with mixed local dimensions."""

from __future__ import annotations

import numpy as np

MAX_AMPLITUDES = 2**13


class RegisterTooLarge(ValueError):
    pass


class Register:
    """A pure state on factors identified by hashable labels."""

    def __init__(self, max_amplitudes: int = MAX_AMPLITUDES):
        self.labels: list = []
        self.psi = np.ones((), dtype=complex)
        self.max_amplitudes = max_amplitudes

    @property
    def dims(self) -> list[int]:
        return list(self.psi.shape)

    @property
    def size(self) -> int:
        return self.psi.size

    def copy(self) -> Register:
        out = Register(self.max_amplitudes)
        out.labels = list(self.labels)
        out.psi = self.psi.copy()
        return out

    def _axes(self, labels) -> list[int]:
        return [self.labels.index(lab) for lab in labels]

    def add(self, vector: np.ndarray, labels, dims) -> None:
        dims = list(dims)
        if self.size * int(np.prod(dims)) > self.max_amplitudes:
            raise RegisterTooLarge(
                f"state would need {self.size * int(np.prod(dims))} amplitudes "
                f"(limit {self.max_amplitudes})"
            )
        if any(lab in self.labels for lab in labels):
            raise ValueError("label already present in register")
        v = np.asarray(vector, dtype=complex).reshape(dims)
        self.psi = np.tensordot(self.psi, v, axes=0)
        self.labels.extend(labels)

    def apply(self, op: np.ndarray, labels) -> None:
        """Apply ``op`` (matrix on the listed factors, in order)."""
        axes = self._axes(labels)
        dims = [self.psi.shape[a] for a in axes]
        k = len(axes)
        op_t = np.asarray(op, dtype=complex).reshape(dims + dims)
        moved = np.tensordot(op_t, self.psi, axes=(list(range(k, 2 * k)), axes))
        self.psi = np.moveaxis(moved, list(range(k)), axes)

    def project_out(self, vector: np.ndarray, labels) -> float:
        """Contract ``<vector|`` on the listed factors, removing them.

        Returns the probability (squared norm) of the projection; the
        remaining state is renormalized unless that probability vanishes.
        """
        axes = self._axes(labels)
        dims = [self.psi.shape[a] for a in axes]
        bra = np.asarray(vector, dtype=complex).conj().reshape(dims)
        self.psi = np.tensordot(bra, self.psi, axes=(list(range(len(axes))), axes))
        for lab in labels:
            self.labels.remove(lab)
        prob = float(np.vdot(self.psi, self.psi).real)
        if prob > 0:
            self.psi = self.psi / np.sqrt(prob)
        return prob

    def compress(self, isometry: np.ndarray, label) -> None:
        """Replace one factor through ``isometry^dag`` (no renormalization)."""
        axis = self.labels.index(label)
        moved = np.tensordot(isometry.conj().T, self.psi, axes=([1], [axis]))
        self.psi = np.moveaxis(moved, 0, axis)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.psi, self.psi).real))

    def normalize(self) -> None:
        self.psi = self.psi / self.norm()

    def vector(self, order=None) -> np.ndarray:
        """Flattened state with factors in ``order`` (default: current)."""
        if order is None:
            return self.psi.reshape(-1)
        axes = self._axes(order)
        if len(axes) != len(self.labels):
            raise ValueError("order must list every factor")
        return np.transpose(self.psi, axes).reshape(-1)

"""Abstract center/bond adjacency for the 2D honeycomb and the 3D cluster lattice.

Each center ``r`` owns ``num_bonds`` half-qubit slots. A bond pairs the slot
of one center acting through its A half with a slot of another center acting
through its B half. Slots not used by any bond are dangling (open boundary).
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass

from .model_blocks import _NUM_BONDS, normalize_model


@dataclass(frozen=True)
class Bond:
    id: int
    a_center: int
    a_slot: int
    b_center: int
    b_slot: int

    def other(self, center: int) -> int:
        return self.b_center if center == self.a_center else self.a_center


@dataclass(frozen=True)
class LatticeAdjacency:
    model: str
    centers: tuple
    bonds: tuple[Bond, ...]
    num_bonds: int
    periodic: bool = False

    def __post_init__(self):
        used = Counter()
        for b in self.bonds:
            if b.a_center == b.b_center:
                raise ValueError(f"bond {b.id} couples a center to itself")
            for c, s in ((b.a_center, b.a_slot), (b.b_center, b.b_slot)):
                if c not in range(len(self.centers)) or not 0 <= s < self.num_bonds:
                    raise ValueError(f"bond {b.id} references an invalid slot")
                used[c, s] += 1
        if used and max(used.values()) > 1:
            raise ValueError("a half-qubit slot is shared by two bonds")

    @property
    def num_centers(self) -> int:
        return len(self.centers)

    def bonds_of(self, center: int) -> list[Bond]:
        return [b for b in self.bonds if center in (b.a_center, b.b_center)]

    def dangling_slots(self, center: int) -> list[int]:
        used = set()
        for b in self.bonds_of(center):
            used.add(b.a_slot if b.a_center == center else b.b_slot)
        return [s for s in range(self.num_bonds) if s not in used]

    def neighbors(self, center: int) -> list[int]:
        return [b.other(center) for b in self.bonds_of(center)]

    def cluster_edges(self) -> set[tuple[int, int]]:
        """Edges of the derived cluster graph (odd bond multiplicity)."""
        count = Counter(tuple(sorted((b.a_center, b.b_center))) for b in self.bonds)
        return {e for e, n in count.items() if n % 2}


def _finish(model, centers, pairs, periodic) -> LatticeAdjacency:
    """Assign slots in encounter order; ``pairs`` lists (A-center, B-center)."""
    index = {c: k for k, c in enumerate(centers)}
    next_slot = Counter()
    bonds = []
    for bid, (ca, cb) in enumerate(pairs):
        ia, ib = index[ca], index[cb]
        bonds.append(Bond(bid, ia, next_slot[ia], ib, next_slot[ib]))
        next_slot[ia] += 1
        next_slot[ib] += 1
    return LatticeAdjacency(model, tuple(centers), tuple(bonds), _NUM_BONDS[model], periodic)


def _honeycomb_open(rows: int, cols: int):
    # brick-wall embedding; sublattice (x + y) even couples through A halves
    verts = [(x, y) for y in range(rows + 1) for x in range(2 * cols + 1)]
    pairs = []
    for x, y in verts:
        if x + 1 <= 2 * cols:
            pairs.append(((x, y), (x + 1, y)))
        if y + 1 <= rows and (x + y) % 2 == 0:
            pairs.append(((x, y), (x, y + 1)))
    oriented = [(p, q) if sum(p) % 2 == 0 else (q, p) for p, q in pairs]
    while True:
        degree = Counter(v for pq in oriented for v in pq)
        pendant = {v for v, d in degree.items() if d < 2}
        if not pendant:
            break
        oriented = [pq for pq in oriented if not pendant.intersection(pq)]
    touched = {v for pq in oriented for v in pq}
    verts = [v for v in verts if v in touched]
    return verts, oriented


def _honeycomb_periodic(n: int):
    centers = [(i, j, s) for i in range(n) for j in range(n) for s in (0, 1)]
    pairs = []
    for i in range(n):
        for j in range(n):
            pairs.append(((i, j, 0), (i, j, 1)))
            pairs.append(((i, j, 0), ((i - 1) % n, j, 1)))
            pairs.append(((i, j, 0), (i, (j - 1) % n, 1)))
    return centers, pairs


def _cubic_cluster(n: int, periodic: bool):
    """Edge and face qubits of an ``n^3`` cubic lattice; faces couple to their edges."""
    axes = range(3)
    if periodic:
        pts = list(itertools.product(range(n), repeat=3))
        wrap = lambda p: tuple(c % n for c in p)  # noqa: E731
    else:
        pts = list(itertools.product(range(n + 1), repeat=3))
        wrap = lambda p: tuple(p)  # noqa: E731
    inside = set(pts)

    def edge_ok(p, a):
        return periodic or p[a] < n

    def face_ok(p, a):
        return periodic or all(p[b] < n for b in axes if b != a)

    edges = [("e", p, a) for p in pts for a in axes if edge_ok(p, a)]
    faces = [("f", p, a) for p in pts for a in axes if face_ok(p, a)]
    edge_set = set(edges)
    face_set = set(faces)
    pairs = []
    for _, p, a in edges:
        # the four faces containing edge (p, a): normal b != a, shifted by 0 or -1 along c
        for b in axes:
            if b == a:
                continue
            c = 3 - a - b
            for shift in (0, -1):
                q = list(p)
                q[c] += shift
                q = wrap(q)
                if q in inside and ("f", q, b) in face_set:
                    pairs.append((("e", p, a), ("f", q, b)))
    centers = edges + faces
    assert all(e in edge_set for e, _ in pairs)
    return centers, pairs


def build_lattice(model: str, cells: int = 1, periodic: bool = False) -> LatticeAdjacency:
    """Build the center lattice.

    2D open: a brick-wall honeycomb patch with ``cells`` rows and columns of
    bricks, pendant sites pruned (``cells=1`` is a single hexagon).
    2D periodic: ``cells x cells`` honeycomb torus (``2n^2`` centers, ``3n^2`` bonds).
    3D: qubits on edges and faces of a cubic lattice, each face coupled to its
    four edges.
    """
    model = normalize_model(model)
    if not isinstance(cells, int) or cells < 1:
        raise ValueError("cells must be a positive integer")
    if model == "2d":
        if periodic:
            centers, pairs = _honeycomb_periodic(cells)
        else:
            centers, pairs = _honeycomb_open(cells, cells)
    else:
        centers, pairs = _cubic_cluster(cells, periodic)
    return _finish(model, centers, pairs, periodic)


def build_pair(model: str) -> LatticeAdjacency:
    """Two centers sharing one bond, all other slots dangling."""
    model = normalize_model(model)
    return _finish(model, [0, 1], [(0, 1)], False)


def build_chain(model: str, length: int) -> LatticeAdjacency:
    """Open chain of ``length`` centers; even centers sit on the A side."""
    model = normalize_model(model)
    if length < 1:
        raise ValueError("chain length must be >= 1")
    pairs = [(k, k + 1) if k % 2 == 0 else (k + 1, k) for k in range(length - 1)]
    return _finish(model, list(range(length)), pairs, False)


def build_single(model: str) -> LatticeAdjacency:
    model = normalize_model(model)
    return LatticeAdjacency(model, (0,), (), _NUM_BONDS[model], False)

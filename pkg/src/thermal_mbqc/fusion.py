"""State-vector simulation of the reduction to a cluster state.

Per block: POVM on the center, rotation U(a) on the whole block, encoding of
the center as a qubit. Then every dangling half is measured in the ``2I^x``
basis and every shared bond is measured jointly in ``4A^xB^z`` and
``4A^zB^x``. Outcomes are absorbed into a Pauli frame of Z corrections on the
center qubits.

Register labels: ``("c", r)`` for center qubits, ``("h", r, slot)`` for the bond
half of center ``r`` in ``slot``. Center ``r`` couples to its half in bond ``b``
through A when it is ``b.a_center`` and through B otherwise.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .ghz import center_isometry, ghz_generators
from .lattice import Bond, LatticeAdjacency
from .model_blocks import BlockSpec
from .pauli import PauliFrame, PauliString, StabilizerSet
from .register import MAX_AMPLITUDES, Register
from .spin_algebra import build_half_qubits
from .thermal_channel import _block, block_rotation, povm_elements

PAULI_2 = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def center(r):
    return ("c", r)


def half(r, slot):
    return ("h", r, slot)


@dataclass(frozen=True)
class BondMeasurementRecord:
    bond_id: int
    s1: int  # outcome of 4 A^x B^z
    s2: int  # outcome of 4 A^z B^x


@dataclass(frozen=True)
class DanglingRecord:
    center: int
    slot: int
    outcome: int  # outcome of 2 I^x


# --- observables -------------------------------------------------------------


def bond_observables() -> tuple[np.ndarray, np.ndarray]:
    ops = build_half_qubits()
    ax, _, az = ops.a
    bx, _, bz = ops.b
    return 4 * ax @ bz, 4 * az @ bx


@lru_cache(maxsize=None)
def bond_eigenbasis() -> tuple[tuple[tuple[int, int], np.ndarray], ...]:
    """Joint eigenvectors of the two bond observables with their ``(s1, s2)``."""
    o1, o2 = bond_observables()
    if np.abs(o1 @ o2 - o2 @ o1).max() > 1e-12:
        raise RuntimeError("bond observables do not commute")
    _, vecs = np.linalg.eigh(o1 + 2 * o2)
    out = []
    for v in vecs.T:
        s1 = int(round(np.vdot(v, o1 @ v).real))
        s2 = int(round(np.vdot(v, o2 @ v).real))
        out.append(((s1, s2), v))
    return tuple(sorted(out, key=lambda item: (-item[0][0], -item[0][1])))


_X_BASIS = ((1, np.array([1, 1]) / np.sqrt(2)), (-1, np.array([1, -1]) / np.sqrt(2)))


# --- frame bookkeeping ---------------------------------------------------------


def frame_update(frame: PauliFrame, record, lattice: LatticeAdjacency) -> PauliFrame:
    """Fold one measurement outcome into the Pauli frame.

    A ``-1`` for ``4A^xB^z`` flips the A-side center, a ``-1`` for ``4A^zB^x``
    flips the B-side center, and a ``-1`` on a dangling half flips its center.
    """
    if isinstance(record, BondMeasurementRecord):
        bond = lattice.bonds[record.bond_id]
        if record.s1 == -1:
            frame = frame.flip_z(bond.a_center)
        if record.s2 == -1:
            frame = frame.flip_z(bond.b_center)
        return frame
    if isinstance(record, DanglingRecord):
        return frame.flip_z(record.center) if record.outcome == -1 else frame
    raise TypeError(f"unknown record {record!r}")


# --- cluster targets -----------------------------------------------------------


@lru_cache(maxsize=64)
def cluster_stabilizers(lattice: LatticeAdjacency) -> StabilizerSet:
    n = lattice.num_centers
    edges = lattice.cluster_edges()
    gens = []
    for r in range(n):
        ops = {r: "X"}
        for a, b in edges:
            if r in (a, b):
                ops[b if a == r else a] = "Z"
        gens.append(PauliString.from_ops(n, ops))
    return StabilizerSet(gens)


def cluster_state(lattice: LatticeAdjacency) -> np.ndarray:
    """Graph state of the derived cluster graph, qubit ``r`` = center ``r``."""
    return _cluster_state(lattice).copy()


@lru_cache(maxsize=64)
def _cluster_state(lattice: LatticeAdjacency) -> np.ndarray:
    n = lattice.num_centers
    bits = np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)
    parity = np.zeros(len(bits), dtype=np.int64)
    for a, b in lattice.cluster_edges():
        parity += bits[:, a] * bits[:, b]
    return ((-1.0) ** parity).astype(complex) / np.sqrt(2**n)


def overlap(a: np.ndarray, b: np.ndarray) -> float:
    """``|<a|b>|^2`` for normalized vectors."""
    return float(abs(np.vdot(a, b)) ** 2)


# --- block preparation -------------------------------------------------------


def block_labels(r: int, spec: BlockSpec) -> list:
    return [center(r)] + [half(r, s) for s in range(spec.num_bonds)]


def apply_povm(reg: Register, r: int, spec: BlockSpec, outcome=None, rng=None):
    """Measure the POVM on center ``r`` (physical level); returns (label, weight).

    With ``outcome`` given the result is forced; otherwise it is sampled from
    the Born weights with ``rng``.
    """
    elements = povm_elements(spec)
    weights = []
    for el in elements:
        trial = reg.copy()
        trial.apply(el.matrix, [center(r)])
        weights.append(trial.norm() ** 2)
    weights = np.array(weights)
    if outcome is None:
        if rng is None:
            raise ValueError("need rng or a forced outcome")
        k = rng.choice(len(elements), p=weights / weights.sum())
    else:
        k = [el.label for el in elements].index(str(outcome))
        if weights[k] < 1e-14:
            raise ValueError(f"POVM outcome {outcome!r} has zero Born weight")
    reg.apply(elements[k].matrix, [center(r)])
    reg.normalize()
    return elements[k].label, float(weights[k])


def apply_correction(reg: Register, r: int, spec: BlockSpec, label: str) -> None:
    el = {e.label: e for e in povm_elements(spec)}[label]
    reg.apply(block_rotation(spec, el.direction), block_labels(r, spec))


def prepare_block(spec: BlockSpec, r: int, physical_state: np.ndarray, label: str) -> Register:
    """POVM (forced ``label``) + U(a) on one block, center encoded as a qubit."""
    reg = Register()
    dims = [spec.center_dim] + [2] * spec.num_bonds
    reg.add(physical_state, block_labels(r, spec), dims)
    apply_povm(reg, r, spec, outcome=label)
    apply_correction(reg, r, spec, label)
    reg.compress(center_isometry(spec), center(r))
    leak = abs(reg.norm() - 1)
    if leak > 1e-10:
        raise RuntimeError(f"center left the qubit subspace ({leak:.2e})")
    return reg


@lru_cache(maxsize=None)
def block_kraus(spec: BlockSpec) -> tuple[tuple[str, np.ndarray, np.ndarray], ...]:
    """Per POVM outcome: the map ``V^dag U F`` to block qubits and ``F^dag F``.

    Equivalent to ``prepare_block`` without renormalization.
    """
    eye = np.eye(2**spec.num_bonds)
    v = np.kron(center_isometry(spec), eye)
    out = []
    for el in povm_elements(spec):
        f = np.kron(el.matrix, eye)
        k = v.conj().T @ block_rotation(spec, el.direction) @ f
        e = f.conj().T @ f
        if np.abs(k.conj().T @ k - e).max() > 1e-10:
            raise RuntimeError("corrected POVM output leaves the qubit subspace")
        out.append((el.label, k, e))
    return tuple(out)


def measure_bond(reg: Register, bond: Bond, outcome=None, rng=None):
    """Joint measurement of ``4A^xB^z`` and ``4A^zB^x`` on one bond."""
    labels = [half(bond.a_center, bond.a_slot), half(bond.b_center, bond.b_slot)]
    options = _measure_options(reg, labels, bond_eigenbasis())
    key, prob, new = _pick(options, outcome, rng)
    reg.labels, reg.psi = new.labels, new.psi
    return BondMeasurementRecord(bond.id, key[0], key[1]), prob


def measure_dangling(reg: Register, r: int, slot: int, outcome=None, rng=None):
    options = _measure_options(reg, [half(r, slot)], _X_BASIS)
    key, prob, new = _pick(options, outcome, rng)
    reg.labels, reg.psi = new.labels, new.psi
    return DanglingRecord(r, slot, key), prob


def _measure_options(reg, labels, basis):
    out = []
    for key, vec in basis:
        trial = reg.copy()
        prob = trial.project_out(vec, labels)
        out.append((key, prob, trial))
    return out


def _pick(options, outcome, rng):
    if outcome is None:
        if rng is None:
            raise ValueError("need rng or a forced outcome")
        p = np.array([o[1] for o in options])
        return options[rng.choice(len(options), p=p / p.sum())]
    for o in options:
        if o[0] == outcome:
            if o[1] < 1e-14:
                raise ValueError(f"outcome {outcome!r} has zero Born weight")
            return o
    raise ValueError(f"unknown outcome {outcome!r}")


# --- the protocol as a sequence of steps -------------------------------------


def protocol_steps(lattice: LatticeAdjacency) -> list[tuple]:
    """Blocks in center order; dangling halves right after their block; each
    bond as soon as both of its centers are present."""
    steps = []
    added: set[int] = set()
    done: set[int] = set()
    for r in range(lattice.num_centers):
        steps.append(("block", r))
        added.add(r)
        for slot in lattice.dangling_slots(r):
            steps.append(("dangling", r, slot))
        for b in lattice.bonds:
            if b.id not in done and b.a_center in added and b.b_center in added:
                steps.append(("bond", b.id))
                done.add(b.id)
    return steps


@dataclass
class Branch:
    """Running state of one execution of the protocol."""

    register: Register
    frame: PauliFrame
    records: list = field(default_factory=list)
    povm: dict = field(default_factory=dict)
    probability: float = 1.0

    def copy(self) -> Branch:
        return Branch(self.register.copy(), self.frame, list(self.records), dict(self.povm), self.probability)

    def corrected(self) -> np.ndarray:
        """State with the current frame applied to the center qubits present."""
        reg = self.register.copy()
        for lab in reg.labels:
            if lab[0] == "c" and self.frame.z[lab[1]]:
                reg.apply(PAULI_2["Z"], [lab])
            if lab[0] == "c" and self.frame.x[lab[1]]:
                reg.apply(PAULI_2["X"], [lab])
        return reg.vector()


def _block_state(spec: BlockSpec, T: float, rng) -> np.ndarray:
    block = _block(spec)
    if T == 0:
        return block.ground_state
    e = block.eigenvalues
    w = np.exp(-(e - e[0]) / T)
    k = rng.choice(len(e), p=w / w.sum())
    return block.eigenvectors[:, k]


def _step_options(branch: Branch, step, lattice, spec, state_for, inject):
    """All outcomes of one step as (key, probability, new Branch)."""
    kind = step[0]
    out = []
    if kind == "block":
        r = step[1]
        phys = state_for(r)
        labels = block_labels(r, spec)
        for label, k, e in block_kraus(spec):
            weight = float(np.vdot(phys, e @ phys).real)
            if weight < 1e-14:
                continue
            blk = Register()
            blk.add(k @ phys / np.sqrt(weight), labels, [2] * len(labels))
            for lab, letter in inject.get(r, {}).items():
                blk.apply(PAULI_2[letter], [lab])
            new = branch.copy()
            new.register.add(blk.vector(), labels, blk.dims)
            new.povm[r] = label
            out.append((label, weight, new))
        return out
    if kind == "dangling":
        _, r, slot = step
        basis = _X_BASIS
        labels = [half(r, slot)]
        make = lambda key: DanglingRecord(r, slot, key)  # noqa: E731
    else:
        bond = lattice.bonds[step[1]]
        basis = bond_eigenbasis()
        labels = [half(bond.a_center, bond.a_slot), half(bond.b_center, bond.b_slot)]
        make = lambda key: BondMeasurementRecord(bond.id, key[0], key[1])  # noqa: E731
    for key, prob, reg in _measure_options(branch.register, labels, basis):
        if prob < 1e-14:
            continue
        new = Branch(reg, branch.frame, list(branch.records), dict(branch.povm), branch.probability)
        record = make(key)
        new.records.append(record)
        new.frame = frame_update(new.frame, record, lattice)
        out.append((key, prob, new))
    return out


@dataclass
class ClusterResult:
    lattice: LatticeAdjacency
    state: np.ndarray
    frame: PauliFrame
    records: list
    povm: dict
    stabilizers: StabilizerSet
    probability: float = 1.0

    def corrected_state(self) -> np.ndarray:
        reg = Register(max_amplitudes=self.state.size)
        n = self.lattice.num_centers
        reg.add(self.state, [center(r) for r in range(n)], [2] * n)
        for r in range(n):
            if self.frame.x[r]:
                reg.apply(PAULI_2["X"], [center(r)])
            if self.frame.z[r]:
                reg.apply(PAULI_2["Z"], [center(r)])
        return reg.vector()

    def fidelity(self) -> float:
        return overlap(cluster_state(self.lattice), self.corrected_state())


def _finish(branch: Branch, lattice: LatticeAdjacency) -> ClusterResult:
    order = [center(r) for r in range(lattice.num_centers)]
    return ClusterResult(
        lattice, branch.register.vector(order), branch.frame, branch.records,
        branch.povm, cluster_stabilizers(lattice), branch.probability,
    )


def _new_branch(lattice, max_amplitudes):
    return Branch(Register(max_amplitudes), PauliFrame.empty(lattice.num_centers))


def run_protocol(
    lattice: LatticeAdjacency,
    spec: BlockSpec,
    choose: Callable,
    T: float = 0.0,
    rng=None,
    inject=None,
    max_amplitudes: int = MAX_AMPLITUDES,
) -> ClusterResult:
    """Execute the protocol once; ``choose(step, options)`` picks an option."""
    inject = inject or {}
    states = {}

    def state_for(r):
        if r not in states:
            states[r] = _block_state(spec, T, rng)
        return states[r]

    branch = _new_branch(lattice, max_amplitudes)
    for step in protocol_steps(lattice):
        options = _step_options(branch, step, lattice, spec, state_for, inject)
        _, prob, branch = choose(step, options)
        branch.probability *= prob
    return _finish(branch, lattice)


def _check_spec(lattice, spec):
    if spec is None:
        spec = BlockSpec(lattice.model)
    if spec.model != lattice.model or spec.num_bonds != lattice.num_bonds:
        raise ValueError("block spec does not match the lattice model")
    return spec


def reduce_to_cluster(
    lattice: LatticeAdjacency,
    T: float = 0.0,
    spec: BlockSpec | None = None,
    rng=None,
    outcomes: dict | None = None,
    inject: dict | None = None,
) -> ClusterResult:
    """One run of the reduction; ``T`` in the same units as ``spec.delta``.

    Outcomes are sampled with ``rng`` unless forced through ``outcomes``, which
    maps ``("block", r)`` to a POVM label, ``("bond", id)`` to ``(s1, s2)`` and
    ``("dangling", r, slot)`` to ``+1``/``-1``. At ``T > 0`` each block starts in
    an energy eigenstate drawn from its Gibbs weights.
    """
    spec = _check_spec(lattice, spec)
    if T < 0:
        raise ValueError("temperature must be non-negative")
    outcomes = outcomes or {}
    if rng is None and (T > 0 or len(outcomes) < len(protocol_steps(lattice))):
        rng = np.random.default_rng(0)

    def choose(step, options):
        if step in outcomes:
            for opt in options:
                if opt[0] == outcomes[step]:
                    return opt
            raise ValueError(f"forced outcome {outcomes[step]!r} unavailable at {step}")
        p = np.array([o[1] for o in options])
        return options[rng.choice(len(options), p=p / p.sum())]

    return run_protocol(lattice, spec, choose, T=T, rng=rng, inject=inject)


def all_branches(lattice, spec=None, inject=None, max_branches: int = 20000):
    """Every outcome branch at ``T = 0`` by depth-first enumeration."""
    spec = _check_spec(lattice, spec)
    inject = inject or {}
    steps = protocol_steps(lattice)
    per_block = len(povm_elements(spec))
    count = 1
    for s in steps:
        count *= {"block": per_block, "dangling": 2, "bond": 4}[s[0]]
    if count > max_branches:
        raise ValueError(f"{count} branches exceed the enumeration limit {max_branches}")
    ground = _block(spec).ground_state
    results = []

    def walk(branch, k):
        if k == len(steps):
            results.append(_finish(branch, lattice))
            return
        for _, prob, new in _step_options(branch, steps[k], lattice, spec, lambda r: ground, inject):
            new.probability = branch.probability * prob
            walk(new, k + 1)

    walk(_new_branch(lattice, MAX_AMPLITUDES), 0)
    return results


def collapse_check(lattice, spec=None, inject=None) -> tuple[ClusterResult, float]:
    """Verify every outcome of every step at ``T = 0`` without enumerating the tree.

    At each step all outcomes must give the same frame-corrected state (up to
    phase); later operations act on other factors and Z corrections commute
    with them, so this covers every branch. Returns a representative result
    and the worst overlap found between sibling outcomes.
    """
    spec = _check_spec(lattice, spec)
    worst = 1.0

    def choose(step, options):
        nonlocal worst
        ref = options[0][2].corrected()
        for _, _, br in options[1:]:
            worst = min(worst, overlap(ref, br.corrected()))
        return options[0]

    return run_protocol(lattice, spec, choose, inject=inject), worst


def exact_cluster_fidelity(lattice: LatticeAdjacency, spec: BlockSpec, sigmas: list[np.ndarray]) -> float:
    """Average post-frame cluster fidelity for mixed block states, computed with
    density matrices and summed over every measurement outcome.

    ``sigmas[r]`` is the qubit-level post-POVM state of block ``r`` (after U);
    outcome-independent, so the POVM result needs no enumeration.
    """
    labels = []
    for r in range(lattice.num_centers):
        labels += block_labels(r, spec)
    rho = np.ones((1, 1), dtype=complex)
    for s in sigmas:
        rho = np.kron(rho, s)
    target = cluster_state(lattice)
    measure = [("dangling", r, s) for r in range(lattice.num_centers) for s in lattice.dangling_slots(r)]
    measure += [("bond", b.id) for b in lattice.bonds]
    choices = []
    for m in measure:
        choices.append(_X_BASIS if m[0] == "dangling" else bond_eigenbasis())
    total = 0.0
    for combo in itertools.product(*choices):
        frame = PauliFrame.empty(lattice.num_centers)
        reg = Register(max_amplitudes=rho.shape[0])
        reg.add(target, [center(r) for r in range(lattice.num_centers)], [2] * lattice.num_centers)
        for m, (key, vec) in zip(measure, combo):
            if m[0] == "dangling":
                record = DanglingRecord(m[1], m[2], key)
                reg.add(vec, [half(m[1], m[2])], [2])
            else:
                b = lattice.bonds[m[1]]
                record = BondMeasurementRecord(b.id, key[0], key[1])
                reg.add(vec, [half(b.a_center, b.a_slot), half(b.b_center, b.b_slot)], [2, 2])
            frame = frame_update(frame, record, lattice)
        for r in range(lattice.num_centers):
            if frame.z[r]:
                reg.apply(PAULI_2["Z"], [center(r)])
        w = reg.vector(labels)
        total += float(np.vdot(w, rho @ w).real)
    return total


# --- symbolic checks ------------------------------------------------------------


def qubit_layout(lattice: LatticeAdjacency) -> dict:
    labels = [center(r) for r in range(lattice.num_centers)]
    labels += [half(r, s) for r in range(lattice.num_centers) for s in range(lattice.num_bonds)]
    return {lab: k for k, lab in enumerate(labels)}


def pauli_decompose_2q(m: np.ndarray) -> tuple[str, int]:
    """Write a 4x4 matrix that is ``i**k`` times a two-qubit Pauli as (label, k)."""
    for a, b in itertools.product("IXYZ", repeat=2):
        p = np.kron(PAULI_2[a], PAULI_2[b])
        c = np.trace(p.conj().T @ m) / 4
        if abs(abs(c) - 1) < 1e-12:
            k = int(round(np.angle(c) / (np.pi / 2))) % 4
            if np.abs(m - (1j**k) * p).max() < 1e-12:
                return a + b, k
    raise ValueError("matrix is not a scaled Pauli operator")


def block_checks(lattice: LatticeAdjacency, r: int):
    """``W_r`` and the ``W_{r,slot}`` checks of block ``r`` on the full layout."""
    idx = qubit_layout(lattice)
    n = len(idx)
    x_ops = {idx[center(r)]: "X"}
    for s in range(lattice.num_bonds):
        x_ops[idx[half(r, s)]] = "X"
    w_r = PauliString.from_ops(n, x_ops)
    z_checks = {s: PauliString.from_ops(n, {idx[center(r)]: "Z", idx[half(r, s)]: "Z"}) for s in range(lattice.num_bonds)}
    return w_r, z_checks


def stabilizer_product_identities(lattice: LatticeAdjacency) -> list[tuple[PauliString, PauliString]]:
    """For each center: (product of W checks, X_r prod Z_neighbors times bond observables)."""
    idx = qubit_layout(lattice)
    n = len(idx)
    obs1, obs2 = bond_observables()
    out = []
    for r in range(lattice.num_centers):
        w_r, _ = block_checks(lattice, r)
        lhs = w_r
        rhs = PauliString.from_ops(n, {idx[center(r)]: "X"})
        for bond in lattice.bonds_of(r):
            other = bond.other(r)
            other_slot = bond.b_slot if bond.a_center == r else bond.a_slot
            _, z_checks = block_checks(lattice, other)
            lhs = lhs @ z_checks[other_slot]
            rhs = rhs @ PauliString.from_ops(n, {idx[center(other)]: "Z"})
            # r-side X with the other side's Z: 4 A^x B^z if r holds A, else 4 A^z B^x
            label, k = pauli_decompose_2q(obs1 if bond.a_center == r else obs2)
            qa = idx[half(bond.a_center, bond.a_slot)]
            qb = idx[half(bond.b_center, bond.b_slot)]
            rhs = rhs @ PauliString.from_ops(n, {qa: label[0], qb: label[1]}, phase=k)
        for s in lattice.dangling_slots(r):
            rhs = rhs @ PauliString.from_ops(n, {idx[half(r, s)]: "X"})
        out.append((lhs, rhs))
    return out


def stabilizer_product_check(lattice: LatticeAdjacency) -> bool:
    return all(lhs == rhs for lhs, rhs in stabilizer_product_identities(lattice))


def ghz_layer_stabilizers(lattice: LatticeAdjacency) -> StabilizerSet:
    gens = []
    for r in range(lattice.num_centers):
        w_r, z_checks = block_checks(lattice, r)
        gens.append(w_r)
        gens.extend(z_checks.values())
    return StabilizerSet(gens)


def predicted_cluster_error(lattice: LatticeAdjacency, r: int, block_error: PauliString) -> PauliString:
    """Cluster-qubit Pauli produced by a block error on block ``r``.

    Z on the center or on any half gives Z on ``r``; X on a half gives Z on the
    center across that bond (nothing if dangling); X on the center stays as X
    on ``r``, which an X-basis readout of ``r`` ignores.
    """
    n = lattice.num_centers
    out = PauliString.identity(n)
    if int(block_error.z.sum()) % 2:
        out = out @ PauliString.single(n, r, "Z")
    slot_partner = {}
    for b in lattice.bonds_of(r):
        slot_partner[b.a_slot if b.a_center == r else b.b_slot] = b.other(r)
    for s in range(lattice.num_bonds):
        if block_error.x[1 + s] and s in slot_partner:
            out = out @ PauliString.single(n, slot_partner[s], "Z")
    if block_error.x[0]:
        out = out @ PauliString.single(n, r, "X")
    return out.with_phase(0)


__all__ = [name for name in dir() if not name.startswith("_")] + ["ghz_generators"]

"""Always-on evolution: revival periods of the block Hamiltonians, a greedy
revival-time schedule for the reduction, and an interleaved simulation of
that schedule under ``exp(-iHt)``.
"""

from __future__ import annotations

import math
from collections import defaultdict, deque
from dataclasses import dataclass, field

import numpy as np

from .ghz import center_isometry
from .lattice import LatticeAdjacency
from .model_blocks import BlockSpec, exact_spectrum_oracle
from .pauli import PauliFrame
from .register import MAX_AMPLITUDES, Register
from .spin_algebra import build_spin_rep, correction_rotation
from . import fusion
from .thermal_channel import _block, gibbs_block, povm_elements

MAX_HORIZON = 5


def revival_period(spec: BlockSpec) -> float:
    return (4 * math.pi if spec.model == "2d" else 2 * math.pi) / spec.delta


def block_propagator(spec: BlockSpec, t: float) -> np.ndarray:
    block = _block(spec)
    v = block.eigenvectors
    return (v * np.exp(-1j * block.eigenvalues * t)) @ v.conj().T


def phase_residual(u: np.ndarray) -> float:
    """``max|U - e^{i phi} I|`` with ``phi`` the phase of ``U[0, 0]``."""
    phase = u[0, 0] / abs(u[0, 0]) if abs(u[0, 0]) > 0 else 1.0
    return float(np.abs(u - phase * np.eye(u.shape[0])).max())


@dataclass(frozen=True)
class EvolutionCheck:
    model: str
    period: float
    residual: float
    control_time: float
    control_residual: float


def revival_check(spec: BlockSpec) -> EvolutionCheck:
    period = revival_period(spec)
    control = period / 2
    return EvolutionCheck(
        spec.model,
        period,
        phase_residual(block_propagator(spec, period)),
        control,
        phase_residual(block_propagator(spec, control)),
    )


def spectrum_in_units(spec: BlockSpec) -> list[float]:
    """Oracle energies in units of ``delta/4`` (2D) or ``delta`` (3D)."""
    unit = spec.delta / 4 if spec.model == "2d" else spec.delta
    return [e / unit for e, _ in exact_spectrum_oracle(spec)]


def half_period_action(spec: BlockSpec) -> np.ndarray:
    """Propagator at half the revival period with its global phase removed."""
    u = block_propagator(spec, revival_period(spec) / 2)
    return u / (u[0, 0] / abs(u[0, 0]))


def gibbs_invariance(spec: BlockSpec, T: float, t: float) -> float:
    """Max deviation of an untouched thermal block after evolving for time ``t``."""
    rho = gibbs_block(spec, T).rho
    u = block_propagator(spec, t)
    return float(np.abs(u @ rho @ u.conj().T - rho).max())


# --- scheduling --------------------------------------------------------------


@dataclass(frozen=True)
class Operation:
    tick: int
    kind: str  # "povm", "rotate", "bond_measure", "measure_x"
    particle: tuple
    source: int  # consumed qubit whose step emitted this operation


@dataclass
class Schedule:
    lattice: LatticeAdjacency
    operations: list[Operation]
    frame_updates: list[tuple[int, int]] = field(default_factory=list)  # (tick, center)

    @property
    def ticks(self) -> list[int]:
        return sorted({op.tick for op in self.operations})

    def by_particle(self) -> dict:
        out = defaultdict(list)
        for op in self.operations:
            out[op.particle].append(op)
        return dict(out)

    def neighborhood(self, particle) -> list:
        """The particle together with the particles it interacts with."""
        lat = self.lattice
        kind = particle[0]
        if kind == "center":
            r = particle[1]
            out = [particle] + [("bond", b.id) for b in lat.bonds_of(r)]
            return out + [("dangling", r, s) for s in lat.dangling_slots(r)]
        if kind == "bond":
            b = lat.bonds[particle[1]]
            return [particle, ("center", b.a_center), ("center", b.b_center)]
        return [particle, ("center", particle[1])]

    def relative_ticks(self) -> dict:
        """Revival index ``n`` of each particle's last operation, counted from the
        first operation on the particle or any particle it interacts with."""
        ops = self.by_particle()
        out = {}
        for particle, mine in ops.items():
            first = min(op.tick for p in self.neighborhood(particle) for op in ops.get(p, []))
            out[particle] = max(op.tick for op in mine) - first
        return out

    @property
    def horizon(self) -> int:
        rel = self.relative_ticks()
        return max(rel.values()) if rel else 0

    def one_operation_per_revival(self) -> bool:
        seen = set()
        for op in self.operations:
            key = (op.particle, op.tick)
            if key in seen:
                return False
            seen.add(key)
        return True


class ScheduleError(RuntimeError):
    def __init__(self, message, schedule):
        super().__init__(message)
        self.schedule = schedule


def breadth_first_order(lattice: LatticeAdjacency, start: int = 0) -> list[int]:
    """Centers in BFS order from ``start``, then any other components."""
    order: list[int] = []
    for root in [start] + list(range(lattice.num_centers)):
        if root in order or root >= lattice.num_centers:
            continue
        order.append(root)
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in lattice.neighbors(u):
                if v not in order:
                    order.append(v)
                    queue.append(v)
    return order


def walk_order(lattice: LatticeAdjacency, start: int = 0) -> list[int]:
    """DFS preorder; on a ring this walks around it."""
    order: list[int] = []
    for root in [start] + list(range(lattice.num_centers)):
        if root >= lattice.num_centers:
            continue
        stack = [root]
        while stack:
            u = stack.pop()
            if u in order:
                continue
            order.append(u)
            stack.extend(v for v in sorted(lattice.neighbors(u), reverse=True) if v not in order)
    return order


def build_schedule(lattice: LatticeAdjacency, order=None, max_horizon: int = MAX_HORIZON) -> Schedule:
    """Greedy earliest-revival schedule consuming center qubits in ``order``.

    For each consumed qubit ``r``: POVM on ``r`` and its not yet measured
    neighbors, then U(a) on those centers, then the measurements of the bonds
    and dangling halves of ``r`` (with U(a) on the halves folded into the
    measurement basis), then the frame update. Each particle takes at most one
    operation per revival; the next qubit is requested at the revival where
    the previous qubit's frame is complete. The default order is breadth
    first from center 0.
    """
    n = lattice.num_centers
    order = breadth_first_order(lattice) if order is None else list(order)
    if sorted(order) != list(range(n)):
        raise ValueError("consumption order must list every center exactly once")
    busy = defaultdict(set)
    ops: list[Operation] = []
    frames = []
    povm_tick: dict[int, int] = {}
    measured = set()

    def place(particle, earliest, kind, source):
        t = earliest
        while t in busy[particle]:
            t += 1
        busy[particle].add(t)
        ops.append(Operation(t, kind, particle, source))
        return t

    cursor = 0
    for r in order:
        fresh = [c for c in [r] + lattice.neighbors(r) if c not in povm_tick]
        for c in dict.fromkeys(fresh):
            povm_tick[c] = place(("center", c), cursor, "povm", r)
        for c in dict.fromkeys(fresh):
            place(("center", c), povm_tick[c] + 1, "rotate", r)
        done = [cursor]
        for b in lattice.bonds_of(r):
            if b.id in measured:
                continue
            earliest = max(cursor, povm_tick[b.a_center] + 1, povm_tick[b.b_center] + 1)
            done.append(place(("bond", b.id), earliest, "bond_measure", r))
            measured.add(b.id)
        for s in lattice.dangling_slots(r):
            done.append(place(("dangling", r, s), max(cursor, povm_tick[r] + 1), "measure_x", r))
        cursor = max(done)
        frames.append((cursor, r))
    schedule = Schedule(lattice, sorted(ops, key=lambda o: (o.tick, o.kind, o.particle)), frames)
    if schedule.horizon > max_horizon:
        raise ScheduleError(
            f"schedule needs revival index {schedule.horizon} > {max_horizon}", schedule
        )
    return schedule


# --- interleaved simulation ----------------------------------------------------


@dataclass
class EvolutionReport:
    fidelity: float
    pipeline_overlap: float
    leaked: float
    frame: PauliFrame
    final_time: float


def evolve_and_verify(
    lattice: LatticeAdjacency,
    schedule: Schedule,
    spec: BlockSpec | None = None,
    tick_duration: float | None = None,
    offset: float = 0.0,
    seed: int = 0,
    max_amplitudes: int = MAX_AMPLITUDES,
) -> EvolutionReport:
    """Run the schedule on the ground state with ``exp(-iHt)`` between operations.

    Operations at revival index ``k`` happen at time
    ``k * (tick_duration + offset)``; ``tick_duration`` defaults to one revival
    period, so a nonzero ``offset`` mistimes every interval. The final
    center state is compared with the cluster state and with the result of the
    instantaneous pipeline.
    """
    spec = fusion._check_spec(lattice, spec)
    if schedule.lattice is not lattice and schedule.lattice != lattice:
        raise ValueError("schedule was built for a different lattice")
    tau = revival_period(spec) if tick_duration is None else tick_duration
    rng = np.random.default_rng(seed)
    m = spec.num_bonds

    known = {("center", r) for r in range(lattice.num_centers)}
    known |= {("bond", b.id) for b in lattice.bonds}
    known |= {("dangling", r, s) for r in range(lattice.num_centers) for s in lattice.dangling_slots(r)}
    for op in schedule.operations:
        if op.particle not in known:
            raise ValueError(f"schedule references unknown particle {op.particle}")

    reg = Register(max_amplitudes)
    ground = _block(spec).ground_state
    dims = [spec.center_dim] + [2] * m
    for r in range(lattice.num_centers):
        reg.add(ground, fusion.block_labels(r, spec), dims)

    elements = {e.label: e for e in povm_elements(spec)}
    center_rep = build_spin_rep(spec.center_spin)
    half_rep = build_spin_rep(0.5)
    outcome_of: dict[int, str] = {}
    contractions = []
    frame = PauliFrame.empty(lattice.num_centers)

    def half_rotation(r):
        return correction_rotation(elements[outcome_of[r]].direction, half_rep)

    def project(vec, labels):
        # keep the factor: measured particles still feel the Hamiltonian
        d = int(np.prod([reg.psi.shape[reg.labels.index(lab)] for lab in labels]))
        proj = np.outer(vec, vec.conj()).reshape(d, d)
        reg.apply(proj, labels)
        prob = reg.norm() ** 2
        reg.normalize()
        contractions.append((vec, labels))
        return prob

    def choose(options):
        p = np.array([o[1] for o in options])
        return options[rng.choice(len(options), p=p / p.sum())]

    kind_rank = {"povm": 0, "rotate": 1, "measure_x": 2, "bond_measure": 2}
    by_tick = defaultdict(list)
    for op in schedule.operations:
        by_tick[op.tick].append(op)
    time_now = 0.0
    for tick in sorted(by_tick):
        target_time = tick * (tau + offset)
        dt = target_time - time_now
        if abs(dt) > 0:
            for r in range(lattice.num_centers):
                reg.apply(block_propagator(spec, dt), fusion.block_labels(r, spec))
        time_now = target_time
        for op in sorted(by_tick[tick], key=lambda o: kind_rank[o.kind]):
            if op.kind == "povm":
                r = op.particle[1]
                label, _ = fusion.apply_povm(reg, r, spec, rng=rng)
                outcome_of[r] = label
            elif op.kind == "rotate":
                r = op.particle[1]
                u = correction_rotation(elements[outcome_of[r]].direction, center_rep)
                reg.apply(u, [fusion.center(r)])
            elif op.kind == "measure_x":
                _, r, s = op.particle
                lab = fusion.half(r, s)
                reg.apply(half_rotation(r), [lab])
                opts = []
                for key, vec in fusion._X_BASIS:
                    trial = reg.copy()
                    opts.append((key, trial.project_out(vec, [lab]), vec))
                key, _, vec = choose(opts)
                project(vec, [lab])
                frame = fusion.frame_update(frame, fusion.DanglingRecord(r, s, key), lattice)
            elif op.kind == "bond_measure":
                b = lattice.bonds[op.particle[1]]
                la, lb = fusion.half(b.a_center, b.a_slot), fusion.half(b.b_center, b.b_slot)
                reg.apply(half_rotation(b.a_center), [la])
                reg.apply(half_rotation(b.b_center), [lb])
                opts = []
                for key, vec in fusion.bond_eigenbasis():
                    trial = reg.copy()
                    opts.append((key, trial.project_out(vec, [la, lb]), vec))
                key, _, vec = choose(opts)
                project(vec, [la, lb])
                record = fusion.BondMeasurementRecord(b.id, key[0], key[1])
                frame = fusion.frame_update(frame, record, lattice)
            else:
                raise ValueError(f"unknown operation kind {op.kind!r}")

    for vec, labels in contractions:
        reg.project_out(vec, labels)
    for r in range(lattice.num_centers):
        reg.compress(center_isometry(spec), fusion.center(r))
    order = [fusion.center(r) for r in range(lattice.num_centers)]
    psi = reg.vector(order)
    leaked = 1.0 - float(np.vdot(psi, psi).real)
    result = fusion.ClusterResult(
        lattice, psi, frame, [], dict(outcome_of), fusion.cluster_stabilizers(lattice)
    )
    corrected = result.corrected_state()
    target = fusion.cluster_state(lattice)
    instant, _ = fusion.collapse_check(lattice, spec)
    return EvolutionReport(
        fidelity=float(abs(np.vdot(target, corrected)) ** 2),
        pipeline_overlap=float(abs(np.vdot(instant.corrected_state(), corrected)) ** 2),
        leaked=leaked,
        frame=frame,
        final_time=time_now,
    )

"""Thermal block states, their post-POVM GHZ states and the induced Pauli
error channel on cluster qubits.

Temperatures are in units of the coupling (``k_B = 1``).
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import bisect

from .ghz import block_isometry, ghz_generators, ghz_state
from .model_blocks import BlockSpec, build_block
from .pauli import PauliString
from .spin_algebra import build_spin_rep, correction_rotation, povm_2d, povm_3d

EC_THRESHOLD = 0.03  # topological error-correction threshold of the 3D cluster


@lru_cache(maxsize=None)
def _block(spec: BlockSpec):
    return build_block(spec)


@lru_cache(maxsize=None)
def _povm(model: str):
    return povm_2d() if model == "2d" else povm_3d()


def povm_elements(spec: BlockSpec):
    return _povm(spec.model)


def z_label(spec: BlockSpec) -> str:
    """Label of the POVM outcome along +z."""
    return "z" if spec.model == "2d" else "3"


@dataclass(frozen=True)
class GibbsBlock:
    spec: BlockSpec
    T: float
    rho: np.ndarray
    populations: np.ndarray
    log_partition: float

    @property
    def beta(self) -> float:
        return math.inf if self.T == 0 else 1.0 / self.T

    @property
    def partition(self) -> float:
        """``Z_r = tr exp(-beta h_r)``; overflows to inf at low temperature."""
        try:
            return math.exp(self.log_partition)
        except OverflowError:
            return math.inf


def gibbs_block(spec: BlockSpec, T: float) -> GibbsBlock:
    if T < 0 or not np.isfinite(T):
        raise ValueError("temperature must be finite and non-negative")
    block = _block(spec)
    e = block.eigenvalues
    if T == 0:
        pops = np.zeros_like(e)
        pops[0] = 1.0
        log_z = math.inf
    else:
        w = np.exp(-(e - e[0]) / T)
        pops = w / w.sum()
        log_z = float(-e[0] / T + np.log(w.sum()))
    v = block.eigenvectors
    rho = (v * pops) @ v.conj().T
    return GibbsBlock(spec, float(T), (rho + rho.conj().T) / 2, pops, log_z)


@dataclass(frozen=True)
class PostPovmState:
    spec: BlockSpec
    sigma: np.ndarray
    outcome: str
    probability: float

    @property
    def num_qubits(self) -> int:
        return self.spec.num_bonds + 1


def block_rotation(spec: BlockSpec, direction) -> np.ndarray:
    """U(a) on the whole block: the product of single-particle rotations."""
    center = correction_rotation(direction, build_spin_rep(spec.center_spin))
    half = correction_rotation(direction, build_spin_rep(0.5))
    out = center
    for _ in range(spec.num_bonds):
        out = np.kron(out, half)
    return out


def post_povm_state(gb: GibbsBlock, outcome: str | None = None) -> PostPovmState:
    """Apply ``F`` for ``outcome`` (default: +z), rotate back with U, encode as qubits."""
    spec = gb.spec
    outcome = z_label(spec) if outcome is None else str(outcome)
    elements = {e.label: e for e in povm_elements(spec)}
    if outcome not in elements:
        raise ValueError(f"unknown POVM outcome {outcome!r}")
    el = elements[outcome]
    f = np.kron(el.matrix, np.eye(2**spec.num_bonds))
    u = block_rotation(spec, el.direction)
    k = u @ f
    phys = k @ gb.rho @ k.conj().T
    prob = float(np.trace(phys).real)
    if prob <= 0:
        raise RuntimeError("POVM outcome has zero probability")
    v = block_isometry(spec)
    sigma = v.conj().T @ phys @ v
    leak = abs(np.trace(sigma).real - prob) / prob
    if leak > 1e-10:
        raise RuntimeError(f"post-POVM state leaves the qubit subspace ({leak:.2e})")
    sigma = sigma / np.trace(sigma).real
    return PostPovmState(spec, (sigma + sigma.conj().T) / 2, outcome, prob)


def ghz_fidelity(s: PostPovmState) -> float:
    g = ghz_state(s.num_qubits)
    return float(np.vdot(g, s.sigma @ g).real)


def ghz_infidelity(s: PostPovmState) -> float:
    return float(min(1.0, max(0.0, 1.0 - ghz_fidelity(s))))


# --- twirling and syndrome extraction -------------------------------------


def twirl(sigma: np.ndarray, num_bonds: int) -> np.ndarray:
    """Average ``g sigma g^dag`` over the GHZ stabilizer group."""
    mats = [g.to_matrix() for g in ghz_generators(num_bonds).group()]
    return sum(m @ sigma @ m.conj().T for m in mats) / len(mats)


def syndrome_of(error: PauliString, num_bonds: int) -> tuple[int, ...]:
    """``(x_check_flip, z_check_flip_1, ..., z_check_flip_m)``."""
    return ghz_generators(num_bonds).syndrome(error)


def representative_key(p: PauliString):
    """Weight first, then errors touching the center, then lowest bond indices."""
    return (p.weight, 0 if 0 in p.support else 1, p.support, p.label)


def _syndrome_seed(syndrome, num_bonds: int) -> PauliString:
    n = num_bonds + 1
    ops = {}
    if syndrome[0]:
        ops[0] = "Z"
    pauli = PauliString.from_ops(n, ops)
    for a, bit in enumerate(syndrome[1:], start=1):
        if bit:
            pauli = pauli @ PauliString.single(n, a, "X")
    return pauli


@lru_cache(maxsize=None)
def minimal_representatives(num_bonds: int) -> dict[tuple[int, ...], PauliString]:
    """Minimal-weight Pauli per syndrome, searched over each stabilizer coset."""
    group = list(ghz_generators(num_bonds).group())
    out = {}
    for syndrome in itertools.product((0, 1), repeat=num_bonds + 1):
        seed = _syndrome_seed(syndrome, num_bonds)
        coset = [(seed @ g).with_phase(0) for g in group]
        out[syndrome] = min(coset, key=representative_key)
    return out


@lru_cache(maxsize=None)
def material_ties(num_bonds: int) -> frozenset:
    """Syndromes whose minimal-weight candidates disagree on the cluster error,
    i.e. where the tie-break rule changes the propagated rates."""
    group = list(ghz_generators(num_bonds).group())
    out = set()
    for syndrome in itertools.product((0, 1), repeat=num_bonds + 1):
        seed = _syndrome_seed(syndrome, num_bonds)
        coset = [(seed @ g).with_phase(0) for g in group]
        w = min(p.weight for p in coset)
        if len({cluster_effect(p) for p in coset if p.weight == w}) > 1:
            out.add(syndrome)
    return frozenset(out)


@dataclass(frozen=True)
class SyndromeDistribution:
    num_bonds: int
    probabilities: dict
    representatives: dict
    twirled: np.ndarray = field(repr=False)

    @property
    def trivial(self) -> tuple[int, ...]:
        return (0,) * (self.num_bonds + 1)

    def fidelity(self) -> float:
        return self.probabilities[self.trivial]

    def tie_weight(self) -> float:
        """Probability carried by syndromes where the tie-break matters."""
        return float(sum(self.probabilities[s] for s in material_ties(self.num_bonds)))


def twirl_and_extract(s: PostPovmState) -> SyndromeDistribution:
    m = s.spec.num_bonds
    tw = twirl(s.sigma, m)
    g = ghz_state(m + 1)
    reps = minimal_representatives(m)
    probs = {}
    for syndrome, rep in reps.items():
        v = rep.to_matrix() @ g
        probs[syndrome] = float(np.vdot(v, tw @ v).real)
    return SyndromeDistribution(m, probs, dict(reps), tw)


def reconstruct_state(sd: SyndromeDistribution) -> np.ndarray:
    """``sum_s q_s E_s |ghz><ghz| E_s^dag`` from an extracted distribution."""
    g = ghz_state(sd.num_bonds + 1)
    out = np.zeros((g.size, g.size), dtype=complex)
    for syndrome, q in sd.probabilities.items():
        v = sd.representatives[syndrome].to_matrix() @ g
        out += q * np.outer(v, v.conj())
    return out


# --- propagation to the cluster ---------------------------------------------


def cluster_effect(rep: PauliString) -> tuple[int, tuple[int, ...]]:
    """Cluster-qubit error caused by a block error after fusion and X readout.

    Returns ``(z_on_own_center, z_on_each_neighbor)``. Z on the center or on a
    bond half flips the own center; X on a bond half flips that bond's
    neighbor; X on the center is absorbed by the X-basis readout.
    """
    z_own = int(rep.z.sum()) % 2
    neighbors = tuple(int(b) for b in rep.x[1:])
    return z_own, neighbors


@dataclass(frozen=True)
class ErrorRates:
    T_over_delta: float
    epsilon: float
    p1: float
    p2: float
    p3: float
    p_eff: float
    neighbor_marginals: tuple = field(default=(), compare=False)
    joint: dict = field(default_factory=dict, compare=False, repr=False)

    def as_row(self) -> tuple[float, ...]:
        return (self.T_over_delta, self.epsilon, self.p1, self.p2, self.p3, self.p_eff)


def propagate_errors(sd: SyndromeDistribution, spec: BlockSpec, T: float = math.nan) -> ErrorRates:
    m = spec.num_bonds
    joint: dict = {}
    for syndrome, q in sd.probabilities.items():
        key = cluster_effect(sd.representatives[syndrome])
        joint[key] = joint.get(key, 0.0) + q
    # neighbor correlations discarded: marginalize own-center and neighbor parts
    p1 = sum(q for (z, _), q in joint.items() if z)
    by_weight = np.zeros(m + 1)
    marginals = np.zeros(m)
    for (_, nb), q in joint.items():
        by_weight[sum(nb)] += q
        marginals += q * np.array(nb)
    p2 = float(by_weight[1])
    p3 = float(by_weight[2:].sum())
    eps = 1.0 - sd.fidelity()
    clip = lambda v: float(min(1.0, max(0.0, v)))  # noqa: E731
    p1, p2, p3, eps = clip(p1), clip(p2), clip(p3), clip(eps)
    return ErrorRates(
        T_over_delta=float(T),
        epsilon=eps,
        p1=p1,
        p2=p2,
        p3=p3,
        p_eff=p1 + p2 + 2 * p3,
        neighbor_marginals=tuple(float(x) for x in marginals),
        joint=joint,
    )


def error_rates(spec: BlockSpec, T: float) -> ErrorRates:
    """Full pipeline at one temperature ``T`` (same units as ``spec.delta``)."""
    if T == 0:
        zero = ErrorRates(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, (0.0,) * spec.num_bonds)
        return zero
    sd = twirl_and_extract(post_povm_state(gibbs_block(spec, T)))
    return propagate_errors(sd, spec, T / spec.delta)


def _check_grid(grid) -> list[float]:
    grid = [float(t) for t in grid]
    if not grid:
        raise ValueError("temperature grid is empty")
    if any(t < 0 for t in grid):
        raise ValueError("temperatures must be non-negative")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("temperature grid must be strictly increasing")
    return grid


MONOTONE_TOL = 1e-14


def temperature_sweep(spec: BlockSpec, grid, jobs: int = 1) -> list[ErrorRates]:
    """Error rates on a grid of ``T/delta`` values, returned in grid order."""
    grid = _check_grid(grid)

    def one(t):
        return error_rates(spec, t * spec.delta)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, grid))
    else:
        rows = [one(t) for t in grid]
    for prev, cur in zip(rows, rows[1:]):
        if cur.epsilon < prev.epsilon - MONOTONE_TOL or cur.p_eff < prev.p_eff - MONOTONE_TOL:
            raise RuntimeError(f"error rates decrease between T={prev.T_over_delta} and {cur.T_over_delta}")
    return rows


def threshold_temperature(
    spec: BlockSpec,
    p_target: float = EC_THRESHOLD,
    t_min: float = 0.0,
    t_max: float = 0.5,
    rtol: float = 1e-4,
) -> float:
    """Temperature ``T/delta`` at which ``p_eff`` reaches ``p_target``, by bisection."""
    if not 0 < p_target < 1:
        raise ValueError("p_target must lie strictly between 0 and 1")
    if not 0 <= t_min < t_max:
        raise ValueError("need 0 <= t_min < t_max")

    def excess(t):
        return error_rates(spec, t * spec.delta).p_eff - p_target

    lo, hi = excess(t_min), excess(t_max)
    if lo >= 0 or hi <= 0:
        raise ValueError(
            f"p_target={p_target} is not bracketed by T/delta in [{t_min}, {t_max}]"
        )
    probe = np.linspace(t_min, t_max, 41)
    vals = [excess(t) for t in probe]
    if any(b < a - MONOTONE_TOL for a, b in zip(vals, vals[1:])):
        raise RuntimeError("p_eff is not monotone over the bracket")
    return float(bisect(excess, t_min, t_max, xtol=1e-15, rtol=rtol))

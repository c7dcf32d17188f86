from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermal_mbqc.lattice import build_chain, build_lattice, build_pair, build_single
from thermal_mbqc.model_blocks import (
    BlockSpec,
    block_operators,
    bond_spin_multiplicities,
    build_block,
    exact_spectrum_oracle,
    ground_state,
    normalize_model,
    total_spin_squared,
)
from thermal_mbqc.spin_algebra import build_spin_rep, correction_rotation, povm_3d


def expand(levels):
    return np.repeat([e for e, _ in levels], [m for _, m in levels])


def test_2d_spectrum_exact():
    levels = exact_spectrum_oracle(BlockSpec("2d"))
    assert [Fraction(e).limit_denominator(8) for e, _ in levels] == [
        Fraction(-15, 4), Fraction(-11, 4), Fraction(-5, 4),
        Fraction(-3, 4), Fraction(3, 4), Fraction(9, 4),
    ]
    assert sum(m for _, m in levels) == 32
    block = build_block(BlockSpec("2d"))
    assert np.abs(np.sort(block.eigenvalues) - expand(levels)).max() < 1e-10


def test_3d_spectrum_low_levels():
    levels = exact_spectrum_oracle(BlockSpec("3d"))
    assert levels[0] == (-6.0, 1)
    assert levels[1][0] == -5.0
    assert sum(m for _, m in levels) == 80
    block = build_block(BlockSpec("3d"))
    assert block.matrix.shape == (80, 80)
    assert np.abs(np.sort(block.eigenvalues) - expand(levels)).max() < 1e-10


@pytest.mark.parametrize("model", ["2d", "3d"])
def test_gap_is_delta(model):
    assert build_block(BlockSpec(model)).gap == pytest.approx(1.0, abs=1e-10)


def test_bond_multiplicities():
    assert dict(bond_spin_multiplicities(3)) == {Fraction(3, 2): 1, Fraction(1, 2): 2}
    assert dict(bond_spin_multiplicities(4)) == {2: 1, 1: 3, 0: 2}


@pytest.mark.parametrize("model", ["2d", "3d"])
def test_ground_state_is_singlet(model):
    spec = BlockSpec(model)
    g = ground_state(spec)
    assert abs(np.vdot(g, total_spin_squared(spec) @ g)) < 1e-10
    assert abs(np.linalg.norm(g) - 1) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(-1, 1), st.floats(-1, 1))
def test_ground_state_rotation_invariant(z, x, y):
    spec = BlockSpec("3d")
    n = np.array([x, y, z])
    n /= np.linalg.norm(n)
    uc = correction_rotation(n, build_spin_rep(2))
    uh = correction_rotation(n, build_spin_rep(0.5))
    u = uc
    for _ in range(spec.num_bonds):
        u = np.kron(u, uh)
    g = ground_state(spec)
    assert abs(abs(np.vdot(g, u @ g)) - 1) < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 10.0))
def test_scale_covariance(delta):
    a = build_block(BlockSpec("2d", delta))
    b = build_block(BlockSpec("2d", 1.0))
    assert np.allclose(a.matrix, delta * b.matrix)
    assert a.gap == pytest.approx(delta, rel=1e-10)


def test_disjoint_blocks_commute():
    # two blocks on disjoint particles of a shared register
    spec = BlockSpec("2d")
    h = build_block(spec).matrix
    i = np.eye(h.shape[0])
    h1, h2 = np.kron(h, i), np.kron(i, h)
    assert np.abs(h1 @ h2 - h2 @ h1).max() < 1e-10


def test_block_operator_shapes():
    s_ops, i_ops = block_operators(BlockSpec("3d"))
    assert all(op.shape == (80, 80) for op in s_ops + i_ops)


def test_invalid_specs():
    with pytest.raises(ValueError):
        BlockSpec("4d")
    with pytest.raises(ValueError):
        BlockSpec("2d", delta=0)
    assert normalize_model("2D") == "2d"


def test_lattice_counts():
    assert (build_lattice("2d", 1).num_centers, len(build_lattice("2d", 1).bonds)) == (6, 6)
    per = build_lattice("2d", 3, periodic=True)
    assert (per.num_centers, len(per.bonds)) == (18, 27)
    cube = build_lattice("3d", 2, periodic=True)
    assert (cube.num_centers, len(cube.bonds)) == (48, 96)
    assert all(not cube.dangling_slots(r) for r in range(cube.num_centers))
    assert len(build_pair("3d").bonds) == 1
    assert build_single("2d").dangling_slots(0) == [0, 1, 2]
    chain = build_chain("2d", 4)
    assert chain.cluster_edges() == {(0, 1), (1, 2), (2, 3)}


def test_lattice_rejects_bad_size():
    with pytest.raises(ValueError):
        build_lattice("2d", 0)


def test_ground_energy_literals():
    spec = BlockSpec("2d")
    assert build_block(spec).ground_energy == pytest.approx(-15 / 4, abs=1e-10)
    assert build_block(BlockSpec("3d")).ground_energy == pytest.approx(-6, abs=1e-10)
    g = ground_state(spec)
    assert np.vdot(g, build_block(spec).matrix @ g).real == pytest.approx(-15 / 4, abs=1e-10)


def test_ground_state_in_top_bond_sector():
    from thermal_mbqc.model_blocks import bond_spin_squared
    spec = BlockSpec("2d")
    g = ground_state(spec)
    # I^2 = 15/4 on the I = 3/2 sector, so no weight on I = 1/2
    assert np.linalg.norm(bond_spin_squared(spec) @ g - 3.75 * g) < 1e-10


def test_adjacent_blocks_commute_through_shared_bond():
    # space: center0 (4) x bond (A, B) x center1 (4) x two dangling halves each
    from thermal_mbqc.spin_algebra import build_half_qubits
    rep = build_spin_rep(1.5)
    half = build_half_qubits()
    pauli_half = [m / 2 for m in (np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1]))]
    dims = [4, 4, 4, 2, 2, 2, 2]

    def embed(ops):
        out = np.array([[1.0]])
        for k, d in enumerate(dims):
            out = np.kron(out, ops.get(k, np.eye(d)))
        return out

    h0 = sum(embed({0: rep.components[a], 1: half.a[a]}) + embed({0: rep.components[a], 3: pauli_half[a]})
             + embed({0: rep.components[a], 4: pauli_half[a]}) for a in range(3))
    h1 = sum(embed({2: rep.components[a], 1: half.b[a]}) + embed({2: rep.components[a], 5: pauli_half[a]})
             + embed({2: rep.components[a], 6: pauli_half[a]}) for a in range(3))
    assert np.abs(h0 @ h1 - h1 @ h0).max() < 1e-12
    assert np.allclose(np.linalg.eigvalsh(h0)[0], -15 / 4)


def test_closed_form_energies():
    # Delta/2 [T(T+1) - S(S+1) - I(I+1)] over allowed couplings
    spec = BlockSpec("3d")
    s = 2
    energies = set()
    for i in (0, 1, 2):
        for t in range(abs(s - i), s + i + 1):
            energies.add(0.5 * (t * (t + 1) - s * (s + 1) - i * (i + 1)))
    assert {e for e, _ in exact_spectrum_oracle(spec)} == energies


def test_bond_slots_and_coordination():
    lat = build_lattice("2d", 2)
    for b in lat.bonds:
        assert b.a_center != b.b_center
    per = build_lattice("2d", 2, periodic=True)
    assert all(len(per.bonds_of(r)) == 3 for r in range(per.num_centers))
    cube = build_lattice("3d", 2, periodic=True)
    assert all(len(cube.bonds_of(r)) == 4 for r in range(cube.num_centers))
    assert per.num_centers == 2 * 2**2 and len(per.bonds) == 3 * 2**2

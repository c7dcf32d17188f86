import numpy as np
import pytest

from thermal_mbqc import fusion
from thermal_mbqc.fusion import (
    BondMeasurementRecord,
    DanglingRecord,
    all_branches,
    apply_povm,
    bond_eigenbasis,
    bond_observables,
    cluster_state,
    collapse_check,
    exact_cluster_fidelity,
    frame_update,
    measure_bond,
    overlap,
    predicted_cluster_error,
    reduce_to_cluster,
    stabilizer_product_check,
    stabilizer_product_identities,
)
from thermal_mbqc.ghz import block_isometry, ghz_state
from thermal_mbqc.lattice import build_chain, build_lattice, build_pair
from thermal_mbqc.model_blocks import BlockSpec, ground_state
from thermal_mbqc.pauli import PauliFrame, PauliString
from thermal_mbqc.register import Register, RegisterTooLarge
from thermal_mbqc.thermal_channel import block_rotation, ghz_infidelity, gibbs_block, post_povm_state, povm_elements

SPEC2 = BlockSpec("2d")


def block_register(spec, r=0):
    reg = Register()
    labels = fusion.block_labels(r, spec)
    reg.add(ground_state(spec), labels, [spec.center_dim] + [2] * spec.num_bonds)
    return reg, labels


def test_povm_z_gives_ghz():
    reg, labels = block_register(SPEC2)
    label, weight = apply_povm(reg, 0, SPEC2, outcome="z")
    assert weight == pytest.approx(1 / 3)
    reg.compress(fusion.center_isometry(SPEC2), labels[0])
    assert overlap(reg.vector(labels), ghz_state(4)) == pytest.approx(1, abs=1e-10)


def test_povm_x_then_rotation_gives_ghz():
    reg, labels = block_register(SPEC2)
    apply_povm(reg, 0, SPEC2, outcome="x")
    x = next(e for e in povm_elements(SPEC2) if e.label == "x")
    reg.apply(block_rotation(SPEC2, x.direction), labels)
    v = block_isometry(SPEC2).conj().T @ reg.vector(labels)
    assert overlap(v, ghz_state(4)) == pytest.approx(1, abs=1e-10)


def test_povm_zero_weight_outcome_rejected():
    reg = Register()
    center = np.zeros(4, complex)
    center[1] = 1  # S^z = 1/2 is annihilated by the z element
    halves = np.zeros(8, complex)
    halves[0] = 1
    reg.add(np.kron(center, halves), fusion.block_labels(0, SPEC2), [4, 2, 2, 2])
    with pytest.raises(ValueError):
        apply_povm(reg, 0, SPEC2, outcome="z")


def test_bond_observables():
    o1, o2 = bond_observables()
    assert np.allclose(o1 @ o2, o2 @ o1)
    assert np.allclose(o1 @ o1, np.eye(4))
    for (s1, s2), v in bond_eigenbasis():
        assert np.allclose(o1 @ v, s1 * v) and np.allclose(o2 @ v, s2 * v)


def ghz_pair_register():
    lat = build_pair("2d")
    reg = Register()
    for r in range(2):
        reg.add(ghz_state(4), [fusion.center(r)] + [fusion.half(r, s) for s in range(3)], [2] * 4)
    return lat, reg


def test_bond_outcomes_uniform_on_ghz_pair():
    lat, reg = ghz_pair_register()
    probs = [p for _, p, _ in fusion._measure_options(reg, [fusion.half(0, 0), fusion.half(1, 0)], bond_eigenbasis())]
    assert probs == pytest.approx([0.25] * 4, abs=1e-12)


def test_repeated_bond_measurement_rejected():
    lat, reg = ghz_pair_register()
    rng = np.random.default_rng(1)
    measure_bond(reg, lat.bonds[0], rng=rng)
    with pytest.raises(ValueError):
        measure_bond(reg, lat.bonds[0], rng=rng)


def test_frame_update_rules():
    lat = build_pair("2d")
    f = PauliFrame.empty(2)
    assert frame_update(f, BondMeasurementRecord(0, 1, 1), lat).is_identity()
    one = frame_update(f, BondMeasurementRecord(0, -1, 1), lat)
    assert sum(one.z) == 1 and sum(one.x) == 0
    other = frame_update(f, BondMeasurementRecord(0, 1, -1), lat)
    assert one.z != other.z
    assert one.compose(one).is_identity()
    dang = frame_update(f, DanglingRecord(1, 2, -1), lat)
    assert dang.z == (0, 1)


@pytest.mark.parametrize("model", ["2d", "3d"])
def test_pair_every_branch_exhaustive(model):
    lat = build_pair(model)
    if model == "2d":
        branches = all_branches(lat)
        assert len(branches) == 3 * 3 * 4 * 16
        assert sum(b.probability for b in branches) == pytest.approx(1, abs=1e-10)
        assert min(b.fidelity() for b in branches) > 1 - 1e-10
    result, worst = collapse_check(lat)
    assert worst > 1 - 1e-10 and result.fidelity() > 1 - 1e-10


def test_hexagon_all_outcomes():
    lat = build_lattice("2d", 1)
    result, worst = collapse_check(lat)
    assert worst > 1 - 1e-10
    assert result.fidelity() > 1 - 1e-10
    for k in result.stabilizers.generators:
        assert np.allclose(k.to_matrix() @ result.corrected_state(), result.corrected_state(), atol=1e-10)


def test_sampled_run_is_reproducible():
    lat = build_lattice("2d", 1)
    a = reduce_to_cluster(lat, rng=np.random.default_rng(3))
    b = reduce_to_cluster(lat, rng=np.random.default_rng(3))
    assert a.records == b.records and a.fidelity() > 1 - 1e-10


def test_size_guard():
    with pytest.raises(RegisterTooLarge):
        reduce_to_cluster(build_lattice("2d", 2))


@pytest.mark.parametrize("lat", [build_pair("2d"), build_pair("3d"), build_lattice("2d", 1),
                                 build_lattice("2d", 3, periodic=True), build_lattice("3d", 2, periodic=True)],
                         ids=["pair2d", "pair3d", "hexagon", "torus2d", "torus3d"])
def test_stabilizer_product_identity(lat):
    assert stabilizer_product_check(lat)
    # exact phases, not just up to sign
    for lhs, rhs in stabilizer_product_identities(lat):
        assert lhs.phase == rhs.phase


def single_paulis(spec):
    for q in range(spec.num_bonds + 1):
        for letter in "XYZ":
            yield q, letter


@pytest.mark.parametrize("model", ["2d", "3d"])
def test_injected_errors_follow_rules(model):
    spec = BlockSpec(model)
    lat = build_pair(model)
    for r in range(2):
        for q, letter in single_paulis(spec):
            label = fusion.center(r) if q == 0 else fusion.half(r, q - 1)
            result, worst = collapse_check(lat, inject={r: {label: letter}})
            ops = {q: letter}
            err = PauliString.from_ops(spec.num_bonds + 1, ops)
            expected = predicted_cluster_error(lat, r, err).to_matrix() @ cluster_state(lat)
            assert worst > 1 - 1e-10
            assert overlap(expected, result.corrected_state()) > 1 - 1e-10


def test_thermal_fidelity_bound():
    lat = build_pair("2d")
    s = post_povm_state(gibbs_block(SPEC2, 0.2))
    exact = exact_cluster_fidelity(lat, SPEC2, [s.sigma, s.sigma])
    eps = ghz_infidelity(s)
    assert (1 - eps) ** 2 - 1e-12 <= exact < 1


def test_exact_fidelity_zero_temperature():
    lat = build_pair("3d")
    s = post_povm_state(gibbs_block(BlockSpec("3d"), 0.0))
    assert exact_cluster_fidelity(lat, BlockSpec("3d"), [s.sigma, s.sigma]) == pytest.approx(1, abs=1e-10)


def test_monte_carlo_matches_exact():
    lat = build_pair("2d")
    T = 0.2
    s = post_povm_state(gibbs_block(SPEC2, T))
    exact = exact_cluster_fidelity(lat, SPEC2, [s.sigma, s.sigma])
    rng = np.random.default_rng(2024)
    shots = 10_000
    fids = np.array([reduce_to_cluster(lat, T, rng=rng).fidelity() for _ in range(shots)])
    sigma = fids.std(ddof=1) / np.sqrt(shots)
    assert abs(fids.mean() - exact) < 5 * sigma


def test_chain_cluster():
    lat = build_chain("2d", 3)
    result, worst = collapse_check(lat)
    assert worst > 1 - 1e-10 and result.fidelity() > 1 - 1e-10


def mirrored(lat):
    from dataclasses import replace
    from thermal_mbqc.lattice import Bond
    bonds = tuple(Bond(b.id, b.b_center, b.b_slot, b.a_center, b.a_slot) for b in lat.bonds)
    return replace(lat, bonds=bonds)


@pytest.mark.parametrize("lat", [build_pair("2d"), build_lattice("2d", 1), build_pair("3d")],
                         ids=["pair2d", "hexagon", "pair3d"])
def test_mirrored_side_assignment(lat):
    flipped = mirrored(lat)
    assert stabilizer_product_check(flipped)
    result, worst = collapse_check(flipped)
    assert worst > 1 - 1e-10 and result.fidelity() > 1 - 1e-10


@pytest.mark.parametrize("lat", [build_lattice("2d", 1), build_lattice("3d", 2, periodic=True)],
                         ids=["hexagon", "cube3d"])
def test_generators_commute(lat):
    for stab in (fusion.ghz_layer_stabilizers(lat), fusion.cluster_stabilizers(lat)):
        assert stab.commuting() and stab.independent()

import cmath
import math

import numpy as np
import pytest

from thermal_mbqc.dynamics import (
    Operation,
    Schedule,
    ScheduleError,
    block_propagator,
    build_schedule,
    evolve_and_verify,
    gibbs_invariance,
    half_period_action,
    phase_residual,
    revival_check,
    revival_period,
    spectrum_in_units,
    walk_order,
)
from thermal_mbqc.lattice import LatticeAdjacency, build_chain, build_lattice, build_pair, build_single
from thermal_mbqc.model_blocks import BlockSpec, exact_spectrum_oracle

SPEC2, SPEC3 = BlockSpec("2d"), BlockSpec("3d")


def test_spectrum_parity():
    assert all(abs(u - round(u)) < 1e-12 and round(u) % 2 == 1 for u in spectrum_in_units(SPEC2))
    assert all(abs(u - round(u)) < 1e-12 for u in spectrum_in_units(SPEC3))


@pytest.mark.parametrize("spec", [SPEC2, SPEC3])
def test_revival(spec):
    chk = revival_check(spec)
    assert chk.residual < 1e-10
    assert chk.period == pytest.approx((4 if spec.model == "2d" else 2) * math.pi)


def test_2d_half_period_is_not_revival():
    assert revival_check(SPEC2).control_residual > 0.1


def test_half_period_scalar_oracle():
    # phases e^{-iEt} level by level, compared with the matrix propagator
    t = revival_period(SPEC2) / 2
    phases = [cmath.exp(-1j * e * t) for e, _ in exact_spectrum_oracle(SPEC2)]
    spread = max(abs(p - phases[0]) for p in phases)
    eig = np.linalg.eigvals(block_propagator(SPEC2, t))
    assert spread > 0.1
    assert max(min(abs(e - p) for p in phases) for e in eig) < 1e-10


def test_half_period_acts_on_halves_only():
    g = half_period_action(SPEC2)
    # operator Schmidt rank 1 between center and halves, identity on the center
    m = g.reshape(4, 8, 4, 8).transpose(0, 2, 1, 3).reshape(16, 64)
    sv = np.linalg.svd(m, compute_uv=False)
    assert sv[1] < 1e-10
    center = m[:, :].reshape(16, 64)[:, 0].reshape(4, 4)
    assert np.allclose(center / center[0, 0], np.eye(4), atol=1e-10)


def test_phase_residual_gauge():
    u = np.exp(0.7j) * np.eye(5)
    assert phase_residual(u) < 1e-15


@pytest.mark.parametrize("T", [0.0, 0.2, 1.5])
def test_untouched_gibbs_invariant(T):
    for t in (0.3, 1.7, 11.0):
        assert gibbs_invariance(SPEC3, T, t) < 1e-12


def test_single_block_schedule():
    sched = build_schedule(build_single("2d"))
    assert set(sched.ticks) <= {0, 1}
    kinds = {op.kind for op in sched.operations if op.tick == 0}
    assert kinds == {"povm"}


def test_empty_schedule():
    empty = LatticeAdjacency("2d", (), (), 3)
    assert build_schedule(empty).operations == []


def test_hexagon_ring_order_horizon():
    lat = build_lattice("2d", 1)
    order = walk_order(lat)
    for a, b in zip(order, order[1:]):
        assert b in lat.neighbors(a)
    sched = build_schedule(lat, order)
    assert sched.horizon <= 5
    assert sched.one_operation_per_revival()


def test_schedule_ordering_constraints():
    lat = build_lattice("2d", 1)
    sched = build_schedule(lat)
    povm = {op.particle[1]: op.tick for op in sched.operations if op.kind == "povm"}
    assert sorted(povm) == list(range(6))
    for op in sched.operations:
        if op.kind == "bond_measure":
            b = lat.bonds[op.particle[1]]
            assert op.tick > max(povm[b.a_center], povm[b.b_center])
        if op.kind == "rotate":
            assert op.tick > povm[op.particle[1]]


def test_schedule_error_reports_horizon():
    lat = build_lattice("2d", 2)
    with pytest.raises(ScheduleError) as err:
        build_schedule(lat, walk_order(lat))
    assert err.value.schedule.horizon >= 6


def test_schedule_rejects_bad_order():
    with pytest.raises(ValueError):
        build_schedule(build_pair("2d"), [0, 0])


@pytest.mark.parametrize("model", ["2d", "3d"])
def test_evolution_correct_timing(model):
    lat = build_pair(model)
    rep = evolve_and_verify(lat, build_schedule(lat))
    assert rep.fidelity >= 1 - 1e-8
    assert rep.pipeline_overlap >= 1 - 1e-8


def test_zero_duration_matches_pipeline():
    lat = build_pair("2d")
    rep = evolve_and_verify(lat, build_schedule(lat), tick_duration=0.0)
    assert rep.final_time == 0.0
    assert rep.pipeline_overlap == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("model", ["2d", "3d"])
def test_quarter_period_mistiming_degrades(model):
    lat = build_pair(model)
    sched = build_schedule(lat)
    good = evolve_and_verify(lat, sched).fidelity
    bad = evolve_and_verify(lat, sched, offset=revival_period(BlockSpec(model)) / 4).fidelity
    assert good - bad > 1e-3


def test_half_period_mistiming_on_chain():
    # a half measured before the last round leaves the I = 3/2 sector
    lat = build_chain("2d", 3)
    rep = evolve_and_verify(lat, build_schedule(lat), offset=revival_period(SPEC2) / 2, max_amplitudes=2**15)
    assert rep.fidelity < 0.99


def test_unknown_particle_rejected():
    lat = build_pair("2d")
    bogus = Schedule(lat, [Operation(0, "povm", ("center", 7), 0)])
    with pytest.raises(ValueError):
        evolve_and_verify(lat, bogus)

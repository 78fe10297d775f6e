import math

import numpy as np
import pytest

import oracles
from secure_ris_uav import Scenario, ao, channel, conic
from secure_ris_uav.ao import Design
from secure_ris_uav.beamforming import PhaseSchedule
from secure_ris_uav.channel import TrajectoryPlan
from secure_ris_uav.power import PowerSchedule


@pytest.fixture
def short():
    return Scenario(Mx=2, Mz=2, q0=(-150.0, 60.0), q_f=(150.0, 60.0), T=24.8, delta_t=3.1)


def test_heuristic_against_stepper():
    sc = Scenario()
    plan = ao.heuristic_trajectory(sc)
    ref = oracles.step_path(sc.q0, sc.w_g, sc.q_f, sc.D, sc.N)
    np.testing.assert_allclose(plan.q, ref, atol=1e-9)
    travel = math.ceil(math.dist(sc.q0, sc.w_g) / sc.D)
    at_user = np.flatnonzero(np.all(np.isclose(plan.q, sc.w_g), axis=1))
    assert at_user[0] == travel
    assert plan.mobility_violation(sc) <= 1e-9


def test_heuristic_paper_scale():
    sc = Scenario.paper_scale()
    plan = ao.heuristic_trajectory(sc)
    np.testing.assert_allclose(plan.q, oracles.step_path(sc.q0, sc.w_g, sc.q_f, sc.D, sc.N), atol=1e-9)


def test_heuristic_zero_travel():
    sc = Scenario(q0=(0.0, 120.0), q_f=(0.0, 120.0))
    np.testing.assert_array_equal(ao.heuristic_trajectory(sc).q, np.tile([0.0, 120.0], (sc.N, 1)))


def _random_design(sc, rng):
    N = sc.N
    q = rng.uniform(-200, 200, (N, 2))
    vd = np.hstack([np.exp(1j * rng.uniform(0, 6.3, (N, sc.M))), np.ones((N, 1))])
    vu = np.hstack([np.exp(1j * rng.uniform(0, 6.3, (N, sc.M))), np.ones((N, 1))])
    return Design(TrajectoryPlan(q), PhaseSchedule(vd, vu),
                  PowerSchedule(rng.uniform(0, 0.4, N), rng.uniform(0, 0.4, N)))


def test_evaluate_against_end_to_end(short):
    sc = short.replace(delta_a=0.45, w=0.3)
    r = channel.sample_realization(sc, 13)
    d = _random_design(sc, np.random.default_rng(13))
    got = ao.evaluate_secrecy(d, r, sc).R_sec
    ref = oracles.secrecy_end_to_end(sc, r, d.trajectory.q, d.phases.v_d, d.phases.v_u,
                                     d.powers.p, d.powers.g, sc.delta_a)
    assert got == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_evaluate_collapses(short):
    r = channel.sample_realization(short, 1)
    d = _random_design(short, np.random.default_rng(1))
    zero = Design(d.trajectory, d.phases, PowerSchedule(np.zeros(short.N), np.zeros(short.N)))
    assert ao.evaluate_secrecy(zero, r, short).R_sec == 0
    s = ao.evaluate_secrecy(d, r, short, delta_a=0.0)
    nominal = channel.rates(r, d.trajectory.q, d.phases.v_d, d.phases.v_u, d.powers.p, d.powers.g, short)
    down = np.maximum(nominal.ug - nominal.ue, 0)
    up = np.maximum(nominal.gu - nominal.ge, 0)
    assert s.R_sec == pytest.approx(np.mean(0.5 * down + 0.5 * up), rel=1e-12)
    assert np.all(s.per_slot_down >= 0) and np.all(s.per_slot_up >= 0)


def test_zero_budget_terminates(short):
    sc = short.replace(P_bar=0.0, P_peak=0.0, G_bar=0.0, G_peak=0.0)
    r = channel.sample_realization(sc, 0)
    design, rep = ao.run_jo(sc, r)
    assert rep.iterations == 1 and rep.converged
    assert rep.per_iteration == (0.0,)
    np.testing.assert_array_equal(rep.per_slot_down, 0)


def _check_design(sc, d):
    assert d.trajectory.mobility_violation(sc) <= 1e-6
    assert np.all(d.powers.p >= 0) and np.all(d.powers.p <= sc.P_peak + 1e-12)
    assert d.powers.p.mean() <= sc.P_bar + 1e-9 and d.powers.g.mean() <= sc.G_bar + 1e-9
    np.testing.assert_allclose(np.abs(d.phases.v_d), 1, atol=1e-9)
    np.testing.assert_allclose(d.phases.v_u[:, -1], 1, atol=1e-9)


def test_jo_run_properties(short):
    r = channel.sample_realization(short, 2)
    seen = []
    design, rep = ao.run_jo(short, r, count=30, on_iteration=lambda j, d, R: (_check_design(short, d), seen.append(R)))
    assert list(rep.per_iteration) == seen
    assert rep.converged and rep.iterations <= short.j_max
    trace = (rep.initial,) + rep.per_iteration
    assert all(b >= a - 0.02 for a, b in zip(trace, trace[1:]))
    for diag in rep.diagnostics:
        assert diag["traj_surrogate"] >= diag["traj_surrogate_start"] - 1e-6
    assert rep.R_sec == pytest.approx(ao.evaluate_secrecy(design, r, short).R_sec)
    # deterministic
    _, rep2 = ao.run_jo(short, r, count=30)
    assert rep2.per_iteration == rep.per_iteration


def test_benchmarks(short):
    r = channel.sample_realization(short, 3)
    heuristic = ao.heuristic_trajectory(short)
    seen = []
    _, rep = ao.run_benchmark("JO_HT", short, r, count=30,
                              on_iteration=lambda j, d, R: seen.append(np.array_equal(d.trajectory.q, heuristic.q)))
    assert seen and all(seen)
    design, _ = ao.run_benchmark("JO_NPB", short, r)
    np.testing.assert_array_equal(design.phases.v_d, 1)
    with pytest.raises(ValueError):
        ao.run_benchmark("JO_X", short, r)


def test_nr_equals_jo_without_uncertainty(short):
    sc = short.replace(delta_a=0.0)
    r = channel.sample_realization(sc, 4)
    _, jo = ao.run_benchmark("JO", sc, r, count=30)
    _, nr = ao.run_benchmark("JO_NR", sc, r, count=30)
    assert jo.per_iteration == nr.per_iteration


def test_stage_error(short, monkeypatch):
    r = channel.sample_realization(short, 5)

    def boom(*a, **k):
        raise conic.SolverError("forced")

    monkeypatch.setattr(conic, "solve_or_raise", boom)
    with pytest.raises(ao.StageError) as info:
        ao.run_jo(short, r)
    assert info.value.stage == "trajectory" and info.value.iteration == 1
    with pytest.raises(ao.StageError) as info:
        ao.run_benchmark("JO_HT", short, r)
    assert info.value.stage == "beamforming"

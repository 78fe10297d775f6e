import math

import pytest

from secure_ris_uav import Scenario, ScenarioError, db, dbm


def test_defaults_desk():
    s = Scenario()
    assert s.N == 40
    assert s.M == 8
    assert s.D == pytest.approx(93.0)
    assert s.eps_c == 1e-3 and s.j_max == 40


def test_paper_scale():
    s = Scenario.paper_scale()
    assert s.N == 310
    assert s.M == 30
    assert s.D == pytest.approx(12.0)
    assert s.q0 == (-500.0, 20.0) and s.q_f == (500.0, 20.0) and s.w_g == (0.0, 120.0)


def test_link_budget_defaults():
    s = Scenario()
    assert s.rho == pytest.approx(1e-3)
    assert s.sigma2 == pytest.approx(1e-11)
    assert s.P_bar == pytest.approx(0.1)
    assert s.P_peak == pytest.approx(4 * s.P_bar)
    assert (s.alpha, s.kappa, s.varsigma) == (2.2, 3.3, 3.4)
    assert s.rician_ug == pytest.approx(10.0)
    assert s.rician_ur == pytest.approx(db(3.0))


def test_db_helpers():
    assert db(10) == pytest.approx(10.0)
    assert dbm(30) == pytest.approx(1.0)


@pytest.mark.parametrize("changes, field", [
    (dict(w=1.5), "w"),
    (dict(w=-0.1), "w"),
    (dict(T=100.0), "T"),          # not a multiple of delta_t
    (dict(T=31.0, delta_t=3.1), "T"),  # too short for the heuristic path
    (dict(P_peak=0.01), "P_peak"),
    (dict(delta_a=-1.0), "delta_a"),
    (dict(z_u=30.0), "z_u"),
    (dict(w_e=(0.0, 120.0)), "w_e"),
    (dict(Mx=0), "Mx"),
    (dict(rician_ur=-1.0), "rician_ur"),
    (dict(sigma2=math.nan), "sigma2"),
])
def test_invalid_fields_named(changes, field):
    with pytest.raises(ScenarioError) as info:
        Scenario(**changes)
    assert info.value.field == field


def test_replace_revalidates():
    with pytest.raises(ScenarioError):
        Scenario().replace(w=2.0)

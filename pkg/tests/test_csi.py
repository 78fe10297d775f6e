import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from secure_ris_uav import Scenario, channel, csi
from secure_ris_uav.ao import Design
from secure_ris_uav.beamforming import PhaseSchedule
from secure_ris_uav.channel import TrajectoryPlan
from secure_ris_uav.power import PowerSchedule


def _instance(rng, K):
    h = (rng.standard_normal(K) + 1j * rng.standard_normal(K)) / math.sqrt(2)
    H = rng.standard_normal(K) + 1j * rng.standard_normal(K)
    v = np.exp(1j * rng.uniform(0, 2 * np.pi, K))
    v[-1] = 1
    return h, H, v


def test_zero_radius():
    rng = np.random.default_rng(0)
    h, H, v = _instance(rng, 4)
    out = csi.worst_case_error(h, H, v, 0.0)
    np.testing.assert_array_equal(out.delta_h, 0)
    assert out.gain == pytest.approx(abs(np.vdot(h, H * v)) ** 2)


def test_scalar_case():
    out = csi.worst_case_error([0.3 + 0.4j], [2.0 - 1j], [1.0], 0.2)
    c = 2.0 - 1j
    assert out.gain == pytest.approx((abs(np.conj(0.3 + 0.4j) * c) + 0.2 * abs(c)) ** 2)


def test_m3_sampling_and_ascent():
    rng = np.random.default_rng(7)
    h, H, v = _instance(rng, 4)
    eps = 0.3
    out = csi.worst_case_error(h, H, v, eps)
    c = H * v
    sampled = oracles.sampled_gain_max(h, c, eps, rng)
    assert out.gain >= sampled
    ascent = oracles.gradient_ascent_gain(h, c, eps, rng)
    assert out.gain == pytest.approx(ascent, rel=1e-6)
    attained = abs(np.vdot(h + out.delta_h, c)) ** 2
    assert attained == pytest.approx(out.gain, rel=1e-12)


@given(st.integers(0, 2**31), st.integers(1, 6), st.floats(1e-3, 2.0))
def test_saturation_and_alignment(seed, K, eps):
    rng = np.random.default_rng(seed)
    h, H, v = _instance(rng, K)
    out = csi.worst_case_error(h, H, v, eps)
    assert np.linalg.norm(out.delta_h) == pytest.approx(eps, abs=1e-9)
    c = H * v
    nom = np.vdot(h, c)
    err = np.vdot(out.delta_h, c)
    if abs(nom) > 1e-9 and abs(err) > 1e-9:
        assert abs(np.angle(err / nom)) <= 1e-9
    assert out.gain >= abs(nom) ** 2


@given(st.integers(0, 2**31))
def test_gain_monotone_in_eps(seed):
    rng = np.random.default_rng(seed)
    h, H, v = _instance(rng, 3)
    gains = [float(csi.worst_case_error(h, H, v, e).gain) for e in np.linspace(0, 2, 30)]
    assert all(b >= a for a, b in zip(gains, gains[1:]))


def test_zero_coefficients():
    out = csi.worst_case_error([1.0, 1.0], [0.0, 0.0], [1.0, 1.0], 0.5)
    np.testing.assert_array_equal(out.delta_h, 0)
    assert out.gain == 0


def test_uncertainty_radii():
    sc = Scenario()
    r = channel.sample_realization(sc, 0)
    u = csi.uncertainty(r, 0.5)
    assert u.eps1 == pytest.approx(0.5 * np.linalg.norm(r.h_bar_e1))
    assert u.eps2 == pytest.approx(0.5 * np.linalg.norm(r.h_bar_e2))
    with pytest.raises(ValueError):
        csi.uncertainty(r, -0.1)


def _design(sc, rng, p=None):
    N = sc.N
    q = rng.uniform(-300, 300, (N, 2))
    v = np.hstack([np.exp(1j * rng.uniform(0, 6.3, (N, sc.M))), np.ones((N, 1))])
    p = rng.uniform(0, 0.4, N) if p is None else p
    return Design(TrajectoryPlan(q), PhaseSchedule(v, v), PowerSchedule(p, p))


def test_worst_case_rates_examples():
    sc = Scenario(Mx=2, Mz=1)
    r = channel.sample_realization(sc, 4)
    rng = np.random.default_rng(4)
    d = _design(sc, rng, p=np.zeros(sc.N))
    ue, ge = csi.worst_case_rates(r, d, sc)
    np.testing.assert_array_equal(ue, 0)
    np.testing.assert_array_equal(ge, 0)
    d = _design(sc, rng)
    ue, ge = csi.worst_case_rates(r, d, sc, delta_a=0.0)
    nominal = channel.rates(r, d.trajectory.q, d.phases.v_d, d.phases.v_u, d.powers.p, d.powers.g, sc)
    np.testing.assert_allclose(ue, nominal.ue, rtol=1e-12)
    np.testing.assert_allclose(ge, nominal.ge, rtol=1e-12)


def test_worst_case_rate_sampling_m2():
    sc = Scenario(Mx=2, Mz=1, delta_a=math.sqrt(0.3))
    r = channel.sample_realization(sc, 9)
    rng = np.random.default_rng(9)
    d = _design(sc, rng)
    ue, _ = csi.worst_case_rates(r, d, sc)
    comp = channel.composite_channels(r, d.trajectory.q, d.phases.v_d, d.phases.v_u, sc)
    eps = csi.uncertainty(r, sc.delta_a).eps1
    n = 0
    c = comp.H_e1[n] * d.phases.v_d[n]
    best = oracles.sampled_gain_max(r.h_bar_e1, c, eps, rng)
    sampled_rate = math.log2(1 + d.powers.p[n] * best / sc.sigma2)
    # one-sided: no sample beats the closed form
    assert ue[n] >= sampled_rate - 1e-5
    # tightness comes from the ascent oracle instead
    ascent = oracles.gradient_ascent_gain(r.h_bar_e1, c, eps, rng)
    assert ue[n] == pytest.approx(math.log2(1 + d.powers.p[n] * ascent / sc.sigma2), abs=1e-9)

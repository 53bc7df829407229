import math

import numpy as np
import pytest
from scipy import integrate

from mginf import lowerbound as lb

SMALL = dict(beta=1.0, L=1.0, K=1.0, x0=1.0, d=0.5, delta=1 / 16, T=64.0)


@pytest.fixture(scope="module")
def pair():
    return lb.build_pair(**SMALL)


def test_phi_hat_examples():
    phi = lb.build_phi_hat()
    assert phi(0.5) == 1.0
    assert phi(1.0) == 1.0
    assert phi(2.0) == 0.0
    assert phi(1.5) == 0.0
    assert 0 < phi(1.25) < 1
    assert phi(-1.25) == phi(1.25)
    w = np.linspace(1.0, 1.5, 501)
    assert np.all(np.diff(phi(w)) <= 0)


def test_phi_transform_against_quadrature():
    for s in (0.0, 1.3, 7.0, 20.0):
        want = 2 * integrate.quad(lambda u: lb.phi_hat(u) * math.cos(u * s), 0, 1.5, limit=200)[0]
        assert lb.phi_transform(np.array([s]))[0] == pytest.approx(want, abs=1e-9)


def test_zeta_hat_examples(rng):
    for ell in (2, 4, 8):
        assert lb.build_zeta_hat(ell, 1.0, 0.5, 0.0) == pytest.approx(2**ell * 0.5 / ell)
    w = rng.uniform(-500, 500, 10_000)
    assert lb.build_zeta_hat(8, 1.0, 0.5, w).min() >= 0
    with pytest.raises(ValueError):
        lb.build_zeta_hat(3, 1.0, 0.5, 0.0)
    with pytest.raises(ValueError):
        lb.build_zeta_hat(2, 1.0, 1.5, 0.0)


def test_zeta_inverse_transform_support():
    ell, x0, d = 8, 1.0, 0.5
    dw = 0.01
    omega = (np.arange(2**18) - 2**17) * dw
    t, z = lb.SpectralGrid(omega, lb.build_zeta_hat(ell, x0, d, omega)).inverse_transform()
    outside = np.abs(t) > x0 - d + 1e-9
    assert np.abs(z[outside]).max() < 1e-8
    inside = np.abs(t) < 2
    np.testing.assert_allclose(z[inside], lb.zeta_time(ell, x0, d, t[inside]), atol=1e-8)


def test_null_perturbation():
    p = lb.build_pair(**SMALL, c3=0.0)
    assert p.a == 0.0
    np.testing.assert_array_equal(p.gamma0, p.gamma1)
    np.testing.assert_array_equal(p.f0.values, p.f1.values)
    assert lb.kl_pair(p) == 0.0


def test_separation_closed_form(pair):
    c = pair.params
    assert pair.a == pytest.approx(c.c3 * c.L * pair.N ** (-c.beta) / (2 * np.pi), rel=1e-15)
    assert pair.a_numeric == pytest.approx(pair.a, rel=1e-3)
    assert pair.diagnostics["a_quadrature"] == pytest.approx(pair.a, rel=1e-6)


def test_frequency_choice(pair):
    assert pair.N == pytest.approx(2 * np.pi * (pair.N0 + 0.25))
    target = 4.0 * (SMALL["T"]) ** 0.25
    assert abs(pair.N - target) <= np.pi
    assert pair.diagnostics["band_condition"] <= np.pi


def test_band_condition_enforced():
    with pytest.raises(ValueError, match="pi"):
        lb.build_pair(**{**SMALL, "delta": 0.25, "T": 4096.0})


def test_b_grows_quadratically():
    ratios = []
    for n0 in (1, 2, 4, 8):
        con = lb.Construction(lb.PairParams(**{**SMALL, "delta": 1 / 64}, N0=n0))
        ratios.append(con.B / con.N**2)
    assert min(ratios) > 0
    assert max(ratios) / min(ratios) < 2


def test_alias_single_term():
    delta = 0.5
    f = lambda w: np.where(np.abs(w) < 3.0, 1.0 + np.cos(w), 0.0)  # noqa: E731
    w = np.linspace(-3, 3, 101)
    np.testing.assert_allclose(lb.alias_density(f, delta, w), f(w / delta) / delta, rtol=1e-15)


def test_alias_two_terms():
    f = lambda w: np.where(np.abs(w) <= 4.0, 1.0, 0.0)  # noqa: E731
    got = lb.alias_density(f, 1.0, np.array([0.0, 3.0, -3.0]))
    # at 0 only j = 0 lands inside [-4, 4]; at +-3 the shift by -+2 pi lands at -+3.28
    np.testing.assert_allclose(got, [1.0, 2.0, 2.0])


def test_alias_of_constructed_f0_bounded_below(pair):
    assert pair.diagnostics["f0_alias_min"] >= pair.params.c0


def test_round_trip(pair):
    t, g = pair.f0.inverse_transform()
    omega = np.array([0.0, 3.0, pair.N, 40.0, 60.0])
    back = lb.SpectralGrid.forward_transform(t, g, omega)
    assert np.abs(back - pair.construction.f0(omega)).max() <= 1e-8


def test_gamma0_on_interval_is_bump_transform(pair):
    c = pair.params
    k = np.arange(int(0.5 / c.delta), int(1.5 / c.delta) + 1)
    for kk in k[::4]:
        s = math.pi * kk * c.delta / c.delta
        want = 0.5 * c.c0 * 2 * integrate.quad(lambda u: lb.phi_hat(u) * math.cos(u * s), 0, 1.5, limit=400)[0]
        assert pair.gamma0[kk] == pytest.approx(want, abs=1e-10)


def test_positivity_and_class_membership(pair):
    assert pair.f1_min >= -1e-12
    assert lb.holder_constant(pair.construction, 1) <= pair.params.L
    assert lb.l1_norm(pair.f1) <= pair.params.K


def test_negative_c3_violates_positivity():
    with pytest.raises(ValueError, match="reduce c3"):
        lb.build_pair(**SMALL, c3=-400.0)


def test_dense_and_whittle_kl_agree(pair):
    dense = lb.kl_pair(pair, method="dense")
    assert dense > 0
    assert lb.kl_pair(pair, method="whittle") == pytest.approx(dense, rel=0.05)
    with pytest.raises(ValueError):
        lb.kl_pair(pair, method="other")


def test_risk_floor(pair):
    assert lb.two_point_risk_floor(pair, kl=0.0) == pytest.approx(pair.a**2 / 16)
    vals = [lb.two_point_risk_floor(pair, kl=k) for k in (0.0, 0.1, 1.0, 5.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    with pytest.raises(ValueError):
        lb.two_point_risk_floor(pair, kl=math.inf)


def test_calibration_reproduces_defaults():
    got = lb.calibrate_constants(1.0, 1.0, 1.0, 1.0, 0.5, 1 / 16, 2.0**12)
    assert got["c0"] == lb.DEFAULT_C0
    assert got["c1"] == lb.DEFAULT_C1
    assert got["c3"] == pytest.approx(lb.DEFAULT_C3, abs=0.01)

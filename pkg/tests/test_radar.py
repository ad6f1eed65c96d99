import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risisac import oracles, radar
from risisac.channels import ChannelSet, target_channel
from risisac.checks import crandn, random_channels, unit_phases
from risisac.scenario import desk_config


def scalar_channels(h=1.0):
    return ChannelSet(h_d=np.ones((1, 1)), h_r=np.zeros((1, 1)), G=np.zeros((1, 1)),
                      h_dt=np.array([h], dtype=complex), h_rt=np.zeros(1))


def unit_config(**kw):
    base = dict(M=1, K=1, N=1, L=1, sigma_t2=1.0, sigma_r2=1.0, sigma_k2=(1.0,), Gamma_t=1.0, P=1.0)
    base.update(kw)
    return desk_config(**base)


def test_bound_all_scalar():
    cs = scalar_channels()
    W = np.ones((1, 1))
    assert radar.radar_snr_bound(cs, np.zeros(1), W, np.ones(1), unit_config()) == pytest.approx(1.0, abs=1e-12)


def test_bound_matches_kronecker_evaluation(rng):
    cfg = desk_config()
    cs = random_channels(rng, 3, 2, 4)
    W, phi, u = crandn(rng, 3, 5), unit_phases(rng, 4), crandn(rng, 15)
    x = oracles.kron_target_product(cs, phi, W)
    direct = cfg.L * cfg.sigma_t2 * abs(np.vdot(u, x)) ** 2 / (cfg.sigma_r2 * np.vdot(u, u).real)
    assert radar.radar_snr_bound(cs, phi, W, u, cfg) == pytest.approx(direct, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), re=st.floats(-1e3, 1e3), im=st.floats(-1e3, 1e3))
def test_bound_invariant_to_filter_scaling(seed, re, im):
    beta = complex(re, im)
    if abs(beta) < 1e-6:
        beta = 1.0
    rng = np.random.default_rng(seed)
    cfg = desk_config()
    cs = random_channels(rng, 2, 1, 3)
    W, phi, u = crandn(rng, 2, 3), unit_phases(rng, 3), crandn(rng, 6)
    a = radar.radar_snr_bound(cs, phi, W, u, cfg)
    assert radar.radar_snr_bound(cs, phi, W, beta * u, cfg) == pytest.approx(a, rel=1e-12)


def test_update_u_scalar():
    cs = scalar_channels()
    u = radar.update_u(cs, np.zeros(1), 2 * np.ones((1, 1)))
    assert u.u == pytest.approx([0.5])


def test_update_u_makes_return_real_positive(rng):
    cs = random_channels(rng, 4, 2, 8)
    W, phi = crandn(rng, 4, 6), unit_phases(rng, 8)
    u = radar.update_u(cs, phi, W)
    z = np.vdot(u.u, radar.target_product(cs, phi, W))
    assert abs(z.imag) <= 1e-12
    assert z.real > 0


def test_update_u_beats_random_directions(rng):
    cs = random_channels(rng, 2, 1, 3)
    W, phi = crandn(rng, 2, 3), unit_phases(rng, 3)
    u = radar.update_u(cs, phi, W)
    x = radar.target_product(cs, phi, W)
    assert oracles.random_probe_rayleigh(x, u.u, 1000, rng) <= 1 + 1e-12


def test_update_u_never_lowers_bound(rng):
    cfg = desk_config()
    for _ in range(20):
        cs = random_channels(rng, 3, 2, 4)
        W, phi, u0 = crandn(rng, 3, 5), unit_phases(rng, 4), crandn(rng, 15)
        u = radar.update_u(cs, phi, W)
        assert radar.radar_snr_bound(cs, phi, W, u, cfg) >= radar.radar_snr_bound(cs, phi, W, u0, cfg) * (1 - 1e-12)
        assert radar.radar_snr_bound(cs, phi, W, u, cfg) == pytest.approx(radar.max_radar_snr(cs, phi, W, cfg))


def test_update_u_degenerate_target():
    cs = scalar_channels(h=0.0)
    with pytest.raises(radar.DegenerateTargetError):
        radar.update_u(cs, np.zeros(1), np.ones((1, 1)))


def test_epsilon3_cases():
    cfg = unit_config()
    assert radar.epsilon3(np.ones(1), cfg) == pytest.approx(1.0)
    assert radar.epsilon3(np.ones(1), unit_config(Gamma_t=4.0)) == pytest.approx(2.0)
    cfg = desk_config(Gamma_t=10**0.5, sigma_r2=1e-11, L=1000, sigma_t2=1.0)
    assert radar.epsilon3(np.ones(1), cfg) == pytest.approx(math.sqrt(10**0.5 * 1e-11 / 1000), rel=1e-12)
    assert radar.epsilon3(np.ones(1), cfg) == pytest.approx(1.7783e-7, rel=1e-4)
    # 5.623e-7 is the value for L = 100
    assert radar.epsilon3(np.ones(1), cfg.replace(L=100)) == pytest.approx(5.623e-7, rel=1e-3)


def test_halfspace_form_equals_snr_constraint(rng):
    """Re{v^H w} >= eps3 holds exactly when the bound meets Gamma_t at the updated filter."""
    for _ in range(20):
        cs = random_channels(rng, 3, 2, 4)
        W, phi = crandn(rng, 3, 5), unit_phases(rng, 4)
        u = radar.update_u(cs, phi, W)
        snr = radar.max_radar_snr(cs, phi, W, desk_config())
        cfg = desk_config(Gamma_t=float(snr * rng.uniform(0.5, 1.5)))
        v = radar.halfspace_normal(cs, phi, u)
        lhs = float(np.real(np.vdot(v, W.reshape(-1, order="F"))))
        eps3 = radar.epsilon3(u, cfg)
        bound = radar.radar_snr_bound(cs, phi, W, u, cfg)
        assert lhs == pytest.approx(1.0, abs=1e-9)
        assert math.sqrt(bound / cfg.Gamma_t) == pytest.approx(lhs / eps3, rel=1e-9)
        assert (lhs >= eps3) == (bound >= cfg.Gamma_t)


def test_halfspace_normal_matches_kronecker(rng):
    cs = random_channels(rng, 2, 1, 3)
    phi, u = unit_phases(rng, 3), crandn(rng, 6)
    H = target_channel(cs, phi)
    v = np.conj(np.kron(np.eye(3), H)).T @ u
    assert np.allclose(radar.halfspace_normal(cs, phi, u), v, atol=1e-12)


def test_feasibility_cases(rng):
    assert not radar.feasibility_check(np.zeros(3), 1.0, 0.1)
    assert radar.feasibility_check(np.array([1.0]), 4.0, 2.0)
    v = crandn(rng, 6)
    P = 2.0
    W = crandn(rng, 10_000, 6)
    W *= (math.sqrt(P) * np.sqrt(rng.uniform(size=(10_000, 1)))) / np.linalg.norm(W, axis=1, keepdims=True)
    assert float(np.max(np.real(W @ np.conj(v)))) <= math.sqrt(P) * np.linalg.norm(v) + 1e-12

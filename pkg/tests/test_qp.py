import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risisac import oracles
from risisac.checks import crandn, random_qp
from risisac.qp import QpFailure, QpInfeasible, QpProblem, kkt_residuals, solve_qp

TOL = 1e-8


def kkt_ok(prob, sol):
    res = kkt_residuals(prob, sol.w, sol.lam, sol.mu)
    return (
        res["stationarity"] <= 10 * TOL * (1 + np.linalg.norm(prob.linear))
        and max(res["radar_violation"], res["power_violation"]) <= TOL
        and max(res["radar_slackness"], res["power_slackness"]) <= TOL
        and sol.lam >= 0 and sol.mu >= 0
    )


def test_projection_onto_halfspace():
    prob = QpProblem(linear=np.zeros(1, complex), halfspace_normal=np.ones(1, complex), halfspace_offset=0.5,
                     power=1.0, gram=np.zeros((1, 1), complex))
    sol = solve_qp(prob, TOL)
    assert sol.w == pytest.approx([0.5], abs=1e-10)
    assert sol.kkt_case in ("radar", "both")


def test_unconstrained_minimum():
    a = np.zeros(3, complex)
    a[0] = 2
    prob = QpProblem(linear=a, halfspace_normal=np.ones(3, complex), halfspace_offset=-10.0, power=100.0,
                     gram=np.eye(3, dtype=complex))
    sol = solve_qp(prob, TOL)
    assert np.allclose(sol.w, [1, 0, 0], atol=1e-10)
    assert sol.kkt_case == "none"


def test_power_only_active():
    prob = QpProblem(linear=np.array([4.0, 0], complex), halfspace_normal=np.array([1.0, 0], complex),
                     halfspace_offset=-10.0, power=1.0, gram=np.eye(2, dtype=complex))
    sol = solve_qp(prob, TOL)
    assert np.allclose(sol.w, [1, 0], atol=1e-9)
    assert sol.kkt_case == "power"
    assert sol.mu == pytest.approx(1.0, rel=1e-6)


def test_boundary_case_tangent():
    v = np.array([1.0, 1.0j])
    prob = QpProblem(linear=crandn(np.random.default_rng(0), 2), halfspace_normal=v,
                     halfspace_offset=math.sqrt(2) * math.sqrt(3.0), power=3.0, gram=np.eye(2, dtype=complex))
    sol = solve_qp(prob, TOL)
    assert sol.kkt_case == "boundary"
    assert np.allclose(sol.w, v * math.sqrt(3.0 / 2.0))


def test_infeasible_raises_or_falls_back():
    prob = QpProblem(linear=np.zeros(2, complex), halfspace_normal=np.ones(2, complex), halfspace_offset=5.0,
                     power=1.0, gram=np.eye(2, dtype=complex))
    with pytest.raises(QpInfeasible):
        solve_qp(prob, TOL)
    prev = np.array([0.1, 0.1], complex)
    sol = solve_qp(prob, TOL, w_prev=prev)
    assert sol.kkt_case == "fallback"
    assert np.array_equal(sol.w, prev)


def test_failure_type_is_runtime_error():
    assert issubclass(QpFailure, RuntimeError)


def test_block_gram_matches_dense(rng):
    Q = crandn(rng, 3, 3)
    Q = np.conj(Q).T @ Q
    a, v = crandn(rng, 6), crandn(rng, 6)
    block = QpProblem(linear=a, halfspace_normal=v, halfspace_offset=0.5, power=2.0, gram_block=Q)
    dense = QpProblem(linear=a, halfspace_normal=v, halfspace_offset=0.5, power=2.0, gram=np.kron(np.eye(2), Q))
    s1, s2 = solve_qp(block, TOL), solve_qp(dense, TOL)
    assert np.allclose(s1.w, s2.w, atol=1e-9)
    assert block.objective(s1.w) == pytest.approx(dense.objective(s1.w), abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_matches_projected_gradient_oracle(seed):
    rng = np.random.default_rng(seed)
    prob = random_qp(rng)
    sol = solve_qp(prob, TOL)
    _, ref = oracles.qp_projected_gradient(prob.gram, prob.linear, prob.halfspace_normal,
                                           prob.halfspace_offset, prob.power)
    assert abs(sol.objective - ref) <= 1e-6 * max(1.0, abs(ref))
    assert sol.objective <= ref + 1e-9 * max(1.0, abs(ref))


def test_dykstra_oracle_agrees_with_exact_projection(rng):
    for _ in range(20):
        v = crandn(rng, 4)
        P = float(rng.uniform(0.5, 2.0))
        e = float(rng.uniform(-0.5, 0.9)) * math.sqrt(P) * np.linalg.norm(v)
        x = 3 * crandn(rng, 4)
        exact = oracles.project_ball_halfspace(x, v, e, P)
        alt = oracles.dykstra(x, [lambda z: oracles.project_ball(z, P), lambda z: oracles.project_halfspace(z, v, e)])
        assert np.allclose(exact, alt, atol=1e-7)


def test_dykstra_projection_oracle_run(rng):
    prob = random_qp(rng, n=4)
    sol = solve_qp(prob, TOL)
    _, ref = oracles.qp_projected_gradient(prob.gram, prob.linear, prob.halfspace_normal,
                                           prob.halfspace_offset, prob.power, iters=3000, projection="dykstra")
    assert abs(sol.objective - ref) <= 1e-5 * max(1.0, abs(ref))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 10))
def test_kkt_and_feasibility(seed, n):
    prob = random_qp(np.random.default_rng(seed), n=n)
    sol = solve_qp(prob, TOL)
    assert np.real(np.vdot(sol.w, sol.w)) <= prob.power + TOL
    assert prob.radar_value(sol.w) >= prob.halfspace_offset - TOL
    if sol.kkt_case != "boundary":
        assert kkt_ok(prob, sol)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_never_worse_than_previous_iterate(seed):
    rng = np.random.default_rng(seed)
    prob = random_qp(rng)
    # a feasible previous point: scaled toward the halfspace direction
    v = prob.halfspace_normal
    w_prev = v / np.linalg.norm(v) * math.sqrt(prob.power) * 0.999 + 0.01 * crandn(rng, v.size)
    if np.linalg.norm(w_prev) ** 2 > prob.power or prob.radar_value(w_prev) < prob.halfspace_offset:
        return
    sol = solve_qp(prob, TOL, w_prev=w_prev)
    assert sol.objective <= prob.objective(w_prev) + 1e-12 * (1 + abs(sol.objective))

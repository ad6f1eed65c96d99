"""Randomized invariant and oracle checks on small instances.

Each ``measure_*`` function returns the worst observed discrepancy so that
tests can assert on it with their own tolerance; ``run_checks`` applies the
default tolerances and is what ``risisac check`` prints.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import fp, oracles, radar
from .channels import ChannelSet, generate
from .driver import initial_beamformer, solve
from .qp import QpProblem, kkt_residuals, solve_qp
from .reflection import PhiStepSolver, build_surrogate, expand_target_response, solve_reflection
from .scenario import ScenarioGeometry, desk_config


def crandn(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def unit_phases(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.exp(2j * np.pi * rng.uniform(size=n))


def random_channels(rng: np.random.Generator, M: int, K: int, N: int) -> ChannelSet:
    """Unit-scale channels with the LoS structure kept (G rank one)."""
    return ChannelSet(
        h_d=crandn(rng, K, M),
        h_r=crandn(rng, K, N),
        G=np.outer(unit_phases(rng, N), unit_phases(rng, M)),
        h_dt=unit_phases(rng, M),
        h_rt=unit_phases(rng, N),
    )


def random_qp(rng: np.random.Generator, n: int = 8) -> QpProblem:
    """Random instance of the two-constraint QP; either constraint may bind."""
    rows = int(rng.integers(2, max(3, 2 * n)))
    B = crandn(rng, rows, n)
    v = crandn(rng, n)
    power = float(rng.uniform(0.5, 3.0))
    offset = float(rng.uniform(-0.5, 0.9)) * math.sqrt(power) * float(np.linalg.norm(v))
    return QpProblem(linear=3 * crandn(rng, n), halfspace_normal=v, halfspace_offset=offset, power=power,
                     gram=np.conj(B).T @ B)


def measure_vectorization(rng, instances: int = 100) -> float:
    worst = 0.0
    for _ in range(instances):
        M, N, K = (int(rng.choice(x)) for x in ((1, 2, 4), (1, 2, 8), (1, 2)))
        cs = random_channels(rng, M, K, N)
        W = crandn(rng, M, K + M)
        phi = unit_phases(rng, N)
        diff = expand_target_response(cs, W, phi) - oracles.kron_target_product(cs, phi, W)
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def measure_fp_tightness(rng, instances: int = 100) -> float:
    worst = 0.0
    for _ in range(instances):
        M, K, N = int(rng.integers(1, 5)), int(rng.integers(1, 4)), int(rng.integers(1, 9))
        cs = random_channels(rng, M, K, N)
        W = crandn(rng, M, K + M)
        phi = unit_phases(rng, N)
        noise = rng.uniform(0.1, 2.0, size=K)
        r = fp.update_r(cs, phi, W, noise)
        c = fp.update_c(cs, phi, W, r, noise)
        f = fp.transformed_objective(cs, phi, W, r, c, noise)
        worst = max(worst, abs(f - fp.sum_rate(cs, phi, W, noise)))
    return worst


def measure_majorization(rng, instances: int = 20, samples: int = 1000) -> tuple[float, float]:
    """(largest violation of surrogate >= quadratic, largest gap at the expansion point)."""
    violation, touch = -math.inf, 0.0
    for _ in range(instances):
        M, K, N = int(rng.integers(1, 5)), int(rng.integers(1, 3)), int(rng.integers(1, 9))
        cs = random_channels(rng, M, K, N)
        W = crandn(rng, M, K + M)
        phi_hat = unit_phases(rng, N)
        u = radar.update_u(cs, phi_hat, W)
        s = build_surrogate(cs, W, u, phi_hat, eps3=1.0)
        touch = max(touch, abs(s.bound(phi_hat) - s.quadratic(phi_hat)))
        for _ in range(samples):
            phi = unit_phases(rng, N)
            violation = max(violation, s.quadratic(phi) - s.bound(phi))
    return violation, touch


def measure_qp(rng, instances: int = 50, tol_qp: float = 1e-8) -> tuple[float, float]:
    """(worst relative objective gap to the projected-gradient oracle, worst scaled KKT residual)."""
    gap, kkt = 0.0, 0.0
    for _ in range(instances):
        prob = random_qp(rng)
        sol = solve_qp(prob, tol_qp)
        _, ref = oracles.qp_projected_gradient(prob.gram, prob.linear, prob.halfspace_normal,
                                               prob.halfspace_offset, prob.power)
        gap = max(gap, abs(sol.objective - ref) / max(1.0, abs(ref)))
        res = kkt_residuals(prob, sol.w, sol.lam, sol.mu)
        scaled = max(
            res["stationarity"] / (10 * (1 + np.linalg.norm(prob.linear))),
            res["radar_violation"], res["power_violation"], res["radar_slackness"], res["power_slackness"],
        )
        kkt = max(kkt, scaled / tol_qp)
    return gap, kkt


def reflection_instance(rng, seed: int, N: int = 2):
    """Operating point of the reflection subproblem from a generated desk-scale channel."""
    config = desk_config(N=N)
    cs = generate(config, ScenarioGeometry(), np.random.default_rng(seed))
    noise = np.asarray(config.sigma_k2)
    phi = unit_phases(rng, N)
    W = initial_beamformer(cs, phi, config)
    if W is None:
        return None
    r = fp.update_r(cs, phi, W, noise)
    c = fp.update_c(cs, phi, W, r, noise)
    compact = fp.assemble_compact(cs, phi, W, r, c, noise)
    u = radar.update_u(cs, phi, W)
    surrogate = build_surrogate(cs, W, u, phi, radar.epsilon3(u, config))
    return config, compact, surrogate, phi


def measure_phi_grid(rng, instances: int = 20, points: int = 360) -> list[float]:
    """Shortfall of the inner ADMM against the exhaustive N=2 phase grid, per instance."""
    gaps = []
    seed = 0
    while len(gaps) < instances:
        inst = reflection_instance(rng, seed)
        seed += 1
        if inst is None:
            continue
        config, compact, surrogate, phi = inst
        best, _ = oracles.phase_grid_n2(compact.D, compact.g, surrogate.u_tilde, surrogate.eps4, points)
        res = solve_reflection(compact, surrogate, phi, config.rho, config.tol_inner, config.max_inner,
                               config.tol_qp, sign=config.surrogate_sign)
        gaps.append(best - (compact.phi_objective(res.phi) - compact.eps2))
    return gaps


def measure_phi_step(rng, instances: int = 5, N: int = 4) -> float:
    """Worst relative gap of the phi-block solver to projected gradient with Dykstra projection."""
    worst = 0.0
    for _ in range(instances):
        B = crandn(rng, N, N)
        compact = fp.CompactForms(a=None, Q=None, eps1=0.0, g=crandn(rng, N), D=np.conj(B).T @ B, eps2=0.0,
                                  n_streams=0, Hk=None, c=None)
        normal = crandn(rng, N)
        offset = -0.3 * float(np.sum(np.abs(normal)))
        varphi, mu = unit_phases(rng, N), 0.3 * crandn(rng, N)
        phi = PhiStepSolver(compact.D, compact.g, 1.0, normal, offset, tol=1e-12).solve(varphi, mu)
        _, ref = oracles.phi_step_projected_gradient(compact.D, compact.g, 1.0, varphi, mu, normal, offset)
        r = phi - varphi + mu
        val = float(np.real(np.vdot(phi, compact.D @ phi)) - np.real(np.vdot(compact.g, phi)) + 0.5 * np.real(np.vdot(r, r)))
        worst = max(worst, abs(val - ref) / max(1.0, abs(ref)))
    return worst


def measure_receive_filter(rng, instances: int = 10, probes: int = 1000) -> float:
    """Best random-direction Rayleigh quotient relative to the updated filter (<= 1 expected)."""
    worst = 0.0
    for _ in range(instances):
        cs = random_channels(rng, 2, 1, 3)
        W = crandn(rng, 2, 3)
        phi = unit_phases(rng, 3)
        u = radar.update_u(cs, phi, W)
        x = radar.target_product(cs, phi, W)
        worst = max(worst, oracles.random_probe_rayleigh(x, u.u, probes, rng))
    return worst


def measure_solve(seed: int = 0) -> tuple[float, bool]:
    """(largest sum-rate decrease along the trace, exit feasibility) for one desk-scale solve."""
    config = desk_config(max_outer=30)
    cs = generate(config, ScenarioGeometry(), np.random.default_rng(seed))
    rep = solve(cs, config)
    rates = [rep.initial_sum_rate] + rep.sum_rate_trace
    drop = max([0.0] + [a - b for a, b in zip(rates, rates[1:])])
    feasible = (
        float(np.sum(np.abs(rep.W) ** 2)) <= config.P + 1e-8
        and bool(np.all(np.abs(np.abs(rep.phi) - 1) <= 1e-12))
        and rep.radar_snr >= config.Gamma_t * (1 - 1e-6)
    )
    return drop, feasible


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def run_checks(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    results = []

    def record(name, fn):
        t0 = time.perf_counter()
        passed, detail = fn()
        results.append(CheckResult(name, bool(passed), detail, time.perf_counter() - t0))

    def vectorization():
        dev = measure_vectorization(rng, 100)
        return dev <= 1e-10, f"max deviation {dev:.2e} (limit 1e-10)"

    def tightness():
        dev = measure_fp_tightness(rng, 100)
        return dev <= 1e-9, f"max |f - sum-rate| {dev:.2e} (limit 1e-9)"

    def majorization():
        viol, touch = measure_majorization(rng, 5, 200)
        return viol <= 1e-9 and touch <= 1e-10, f"max violation {viol:.2e}, gap at expansion point {touch:.2e}"

    def qp():
        gap, kkt = measure_qp(rng, 10)
        return gap <= 1e-6 and kkt <= 1.0, f"oracle gap {gap:.2e} (limit 1e-6), KKT residual {kkt:.2f} x bound"

    def phi_step():
        gap = measure_phi_step(rng, 2)
        return gap <= 1e-6, f"oracle gap {gap:.2e} (limit 1e-6)"

    def receive_filter():
        ratio = measure_receive_filter(rng, 5)
        return ratio <= 1 + 1e-12, f"best probe / optimum {ratio:.6f}"

    def grid():
        gaps = measure_phi_grid(rng, 5, 180)
        return max(gaps) <= 1e-3, f"worst shortfall {max(gaps):.2e} over {len(gaps)} instances (limit 1e-3)"

    def monotone():
        drop, feasible = measure_solve(seed)
        return drop <= 1e-6 and feasible, f"largest decrease {drop:.2e}, feasible at exit {feasible}"

    record("vectorization identity", vectorization)
    record("FP tightness", tightness)
    record("MM majorization", majorization)
    record("beamformer QP vs projected gradient", qp)
    record("phi-block vs projected gradient", phi_step)
    record("receive filter vs random probes", receive_filter)
    record("inner ADMM vs N=2 phase grid", grid)
    record("monotone outer ascent", monotone)
    return results

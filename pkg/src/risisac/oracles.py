"""Slow, independent reference computations used by tests and ``risisac check``.

Nothing here is called by the solvers. Each routine takes the most literal
route available (explicit Kronecker products, loops, plain projected
gradient, exhaustive grids) so that agreement with the fast paths means
something.
"""

from __future__ import annotations

import math

import numpy as np

from .channels import ChannelSet


def loop_composite_channel(cs: ChannelSet, phi, k: int) -> np.ndarray:
    out = np.array(cs.h_d[k], dtype=complex)
    for m in range(cs.M):
        for n in range(cs.N):
            out[m] += cs.G[n, m] * phi[n] * cs.h_r[k, n]
    return out


def loop_sinr(cs: ChannelSet, phi, W, noise) -> np.ndarray:
    K, J = cs.K, W.shape[1]
    out = np.zeros(K)
    for k in range(K):
        h = loop_composite_channel(cs, phi, k)
        p = [abs(sum(h[m] * W[m, j] for m in range(cs.M))) ** 2 for j in range(J)]
        out[k] = p[k] / (sum(p) - p[k] + noise[k])
    return out


def kron_target_product(cs: ChannelSet, phi, W) -> np.ndarray:
    """(I_J kron H_t(phi)) vec(W) with the Kronecker product materialized."""
    a = cs.h_dt + cs.G.T @ (np.asarray(phi) * cs.h_rt)
    H = np.outer(a, a)
    J = W.shape[1]
    return np.kron(np.eye(J), H) @ W.reshape(-1, order="F")


def materialized_quadratic_map(cs: ChannelSet, W) -> np.ndarray:
    """L with L vec(phi phi^T) equal to the quadratic part of the target product."""
    E = cs.G.T @ np.diag(cs.h_rt)
    return np.kron(W.T @ E, E)


# --- projections -------------------------------------------------------------


def _rdot(x, y) -> float:
    return float(np.real(np.vdot(x, y)))


def project_halfspace(x, v, e, upper: bool = False):
    """Onto {Re<v, x> >= e} (or <= e when ``upper``)."""
    gap = _rdot(v, x) - e
    if (gap >= 0 and not upper) or (gap <= 0 and upper):
        return x
    return x - gap * v / _rdot(v, v)


def project_ball(x, power):
    n = math.sqrt(_rdot(x, x))
    r = math.sqrt(power)
    return x if n <= r else x * (r / n)


def project_ball_halfspace(x, v, e, power):
    """Exact projection onto {||w||^2 <= P} and {Re<v, w> >= e}.

    Tries the two single-set projections; if neither lands in the other set
    the answer lies on the sphere-hyperplane intersection, reached by moving
    within the hyperplane toward x.
    """
    r = math.sqrt(power)
    vv = _rdot(v, v)

    def inside(z):
        return _rdot(z, z) <= power * (1 + 1e-12) and _rdot(v, z) >= e - 1e-12 * (1 + abs(e))

    if inside(x):
        return x
    for z in (project_ball(x, power), project_halfspace(x, v, e)):
        if inside(z):
            return z
    center = v * (e / vv)
    perp = x - v * (_rdot(v, x) / vv)
    t2 = power - e * e / vv
    if t2 < 0:
        raise ValueError("ball and halfspace do not intersect")
    norm = math.sqrt(_rdot(perp, perp))
    if norm == 0:
        return center
    return center + perp * (math.sqrt(t2) / norm)


def dykstra(x, projections, iters: int = 10000, tol: float = 1e-15):
    """Dykstra's alternating projections onto the intersection of convex sets."""
    y = np.array(x, dtype=complex)
    incr = [np.zeros_like(y) for _ in projections]
    for _ in range(iters):
        prev = y
        for i, proj in enumerate(projections):
            z = proj(y + incr[i])
            incr[i] = y + incr[i] - z
            y = z
        if np.max(np.abs(y - prev)) <= tol * (1 + np.max(np.abs(y))):
            break
    return y


def project_disks(x):
    mag = np.abs(x)
    return np.where(mag > 1, x / np.where(mag > 0, mag, 1), x)


# --- optimization oracles -------------------------------------------------------


def qp_projected_gradient(gram, a, v, e, power, iters: int = 100_000, projection: str = "exact"):
    """Plain projected gradient on w^H gram w - Re{a^H w}.

    ``projection`` is "exact" (closed form) or "dykstra" (ball then
    halfspace, alternated). Stops early once an iterate repeats to 1e-15.
    """
    lip = 2 * max(float(np.linalg.eigvalsh(gram)[-1]), 1e-12)
    step = 1.0 / lip
    if projection == "exact":
        proj = lambda x: project_ball_halfspace(x, v, e, power)  # noqa: E731
    else:
        proj = lambda x: dykstra(x, [lambda z: project_ball(z, power), lambda z: project_halfspace(z, v, e)])  # noqa: E731
    w = proj(np.zeros_like(a))
    for _ in range(iters):
        w_new = proj(w - step * (2 * gram @ w - a))
        if np.max(np.abs(w_new - w)) <= 1e-15 * (1 + np.max(np.abs(w))):
            w = w_new
            break
        w = w_new
    return w, float(np.real(np.vdot(w, gram @ w)) - np.real(np.vdot(a, w)))


def phi_step_projected_gradient(D, g, rho, varphi, mu, normal=None, offset=math.inf, iters: int = 100_000):
    """Projected gradient for phi^H D phi - Re{g^H phi} + rho/2 ||phi - varphi + mu/rho||^2
    over the unit disks, optionally intersected with {Re{normal^H phi} <= offset} (via Dykstra)."""
    A = D + 0.5 * rho * np.eye(D.shape[0])
    b = g + rho * varphi - mu
    step = 1.0 / (2 * float(np.linalg.eigvalsh(A)[-1]))
    if normal is None:
        proj = project_disks
    else:
        proj = lambda x: dykstra(x, [project_disks, lambda z: project_halfspace(z, normal, offset, upper=True)])  # noqa: E731
    x = proj(np.array(varphi, dtype=complex))
    for _ in range(iters):
        x_new = proj(x - step * (2 * A @ x - b))
        if np.max(np.abs(x_new - x)) <= 1e-15:
            x = x_new
            break
        x = x_new
    r = x - varphi + mu / rho
    value = float(np.real(np.vdot(x, D @ x)) - np.real(np.vdot(g, x)) + 0.5 * rho * np.real(np.vdot(r, r)))
    return x, value


def phase_grid_n2(D, g, normal=None, offset=math.inf, points: int = 360):
    """Exhaustive maximization of Re{g^H phi} - phi^H D phi over a points x points
    grid of unit-modulus pairs, optionally restricted to Re{normal^H phi} <= offset.

    Returns (best value, best phi); value is -inf if no grid point is feasible.
    """
    z = np.exp(2j * np.pi * np.arange(points) / points)
    grid = np.stack(np.meshgrid(z, z, indexing="ij"), axis=-1).reshape(-1, 2)
    values = np.real(grid @ np.conj(g)) - np.real(np.einsum("pi,ij,pj->p", np.conj(grid), D, grid))
    if normal is not None:
        values = np.where(np.real(grid @ np.conj(normal)) <= offset, values, -np.inf)
    best = int(np.argmax(values))
    return float(values[best]), grid[best]


def random_probe_rayleigh(x, u, probes: int = 1000, rng=None) -> float:
    """Largest |d^H x|^2 / d^H d over random directions d, relative to the value at u."""
    rng = rng or np.random.default_rng(0)
    base = abs(np.vdot(u, x)) ** 2 / _rdot(u, u)
    best = 0.0
    for _ in range(probes):
        d = rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size)
        best = max(best, abs(np.vdot(d, x)) ** 2 / _rdot(d, d))
    return best / base

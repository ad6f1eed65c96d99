"""Transmit-beamforming subproblem.

    minimize    w^H Gram w - Re{a^H w}
    subject to  Re{v^H w} >= eps3,   ||w||^2 <= P

Stationarity gives (Gram + mu I) w = (a + lam v) / 2. In the eigenbasis of
Gram both the radar value Re{v^H w} (affine in lam) and ||w||^2 are explicit,
so for fixed mu the radar multiplier has a closed form, and the remaining
scalar mu is found by a bracketed root on the power constraint. The dual
argument makes ||w(lam*(mu), mu)||^2 non-increasing in mu, so the root is
unique.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .fp import unvec, vec


class QpInfeasible(ValueError):
    """The halfspace and the power ball do not intersect."""


class QpFailure(RuntimeError):
    pass


@dataclass
class QpProblem:
    """Either a dense ``gram`` or a block-diagonal one given as I_J kron ``gram_block``."""

    linear: np.ndarray
    halfspace_normal: np.ndarray
    halfspace_offset: float
    power: float
    gram: np.ndarray | None = None
    gram_block: np.ndarray | None = None

    def gram_matrix(self) -> np.ndarray:
        if self.gram is not None:
            return self.gram
        J = self.linear.size // self.gram_block.shape[0]
        return np.kron(np.eye(J), self.gram_block)

    def objective(self, w) -> float:
        if self.gram is not None:
            quad = np.vdot(w, self.gram @ w)
        else:
            W = unvec(w, self.gram_block.shape[0])
            quad = np.sum(np.conj(W) * (self.gram_block @ W))
        return float(np.real(quad) - np.real(np.vdot(self.linear, w)))

    def radar_value(self, w) -> float:
        return float(np.real(np.vdot(self.halfspace_normal, w)))


@dataclass
class QpSolution:
    w: np.ndarray
    kkt_case: str  # "none" | "power" | "radar" | "both" | "boundary" | "fallback"
    objective: float
    lam: float
    mu: float
    residuals: dict = field(default_factory=dict)


class _Eigenbasis:
    def __init__(self, problem: QpProblem):
        if problem.gram is not None:
            G = 0.5 * (problem.gram + np.conj(problem.gram).T)
            d, V = np.linalg.eigh(G)
            self.block = None
        else:
            Q = problem.gram_block
            dq, V = np.linalg.eigh(0.5 * (Q + np.conj(Q).T))
            J = problem.linear.size // Q.shape[0]
            d = np.tile(dq, J)
            self.block = Q.shape[0]
        self.d = np.clip(d, 0.0, None)
        self.V = V

    def to(self, x):
        if self.block is None:
            return np.conj(self.V).T @ x
        return vec(np.conj(self.V).T @ unvec(x, self.block))

    def back(self, y):
        if self.block is None:
            return self.V @ y
        return vec(self.V @ unvec(y, self.block))


def kkt_residuals(problem: QpProblem, w, lam: float, mu: float) -> dict:
    gram_w = problem.gram_matrix() @ w
    a, v = problem.linear, problem.halfspace_normal
    radar_gap = problem.radar_value(w) - problem.halfspace_offset
    power_gap = float(np.real(np.vdot(w, w))) - problem.power
    return {
        "stationarity": float(np.linalg.norm(2 * gram_w - a - lam * v + 2 * mu * w)),
        "radar_violation": max(0.0, -radar_gap),
        "power_violation": max(0.0, power_gap),
        "radar_slackness": abs(lam * radar_gap),
        "power_slackness": abs(mu * power_gap),
    }


def solve_qp(problem: QpProblem, tol_qp: float = 1e-8, w_prev: np.ndarray | None = None) -> QpSolution:
    """Solve the two-constraint QP to machine-level accuracy.

    ``w_prev`` is returned unchanged (case "fallback") if the numerical solve
    fails or does not improve on it. Raises QpInfeasible when the constraint
    set is empty and no fallback is available.
    """
    v = problem.halfspace_normal
    eps3 = problem.halfspace_offset
    P = problem.power
    vnorm = float(np.linalg.norm(v))

    def fallback(reason):
        if w_prev is None:
            raise QpFailure(reason)
        obj = problem.objective(w_prev)
        return QpSolution(w_prev, "fallback", obj, 0.0, 0.0, {"reason": reason})

    if math.sqrt(P) * vnorm < eps3:
        if w_prev is not None:
            return fallback("infeasible")
        raise QpInfeasible(f"sqrt(P)*||v|| = {math.sqrt(P) * vnorm:.6e} < eps3 = {eps3:.6e}")

    if eps3 > 0 and P * vnorm**2 - eps3**2 <= 1e-12 * eps3**2:
        w = v * (math.sqrt(P) / vnorm)
        sol = QpSolution(w, "boundary", problem.objective(w), math.inf, math.inf)
        sol.residuals = {"radar_violation": max(0.0, eps3 - problem.radar_value(w))}
        return sol

    try:
        sol = _solve(problem, vnorm)
    except (np.linalg.LinAlgError, ValueError, RuntimeError) as exc:
        return fallback(str(exc))
    if not np.all(np.isfinite(sol.w)):
        return fallback("non-finite solution")

    sol.residuals = kkt_residuals(problem, sol.w, sol.lam, sol.mu)
    if w_prev is not None:
        prev_ok = (
            float(np.real(np.vdot(w_prev, w_prev))) <= P + tol_qp
            and problem.radar_value(w_prev) >= eps3 - tol_qp
        )
        if prev_ok and problem.objective(w_prev) < sol.objective:
            return fallback("no improvement")
    return sol


def _solve(problem: QpProblem, vnorm: float) -> QpSolution:
    basis = _Eigenbasis(problem)
    d = basis.d
    at = basis.to(problem.linear)
    vt = basis.to(problem.halfspace_normal)
    eps3 = problem.halfspace_offset
    P = problem.power

    scale = max(float(d.max(initial=0.0)), float(np.linalg.norm(at)) / math.sqrt(P), vnorm / math.sqrt(P), 1e-300)
    mu_lo = 1e-13 * scale
    cross = np.conj(vt) * at
    vt2 = np.abs(vt) ** 2

    def lam_of(mu):
        denom = 2.0 * (d + mu)
        beta = float(np.sum(vt2 / denom))
        if beta <= 0.0:
            return 0.0
        alpha = float(np.sum(np.real(cross) / denom))
        return max(0.0, (eps3 - alpha) / beta)

    def norm2(mu):
        lam = lam_of(mu)
        y = (at + lam * vt) / (2.0 * (d + mu))
        return float(np.real(np.vdot(y, y))), lam, y

    n_lo, lam, y = norm2(mu_lo)
    mu = mu_lo
    if n_lo > P:
        mu_hi = 2.0 * scale
        n_hi = norm2(mu_hi)[0]
        for _ in range(2000):
            if n_hi <= P:
                break
            mu_hi *= 2.0
            n_hi = norm2(mu_hi)[0]
        else:
            raise QpFailure("could not bracket the power multiplier")
        t = brentq(
            lambda s: math.log(norm2(math.exp(s))[0]) - math.log(P),
            math.log(mu_lo), math.log(mu_hi), xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500,
        )
        mu = math.exp(t)
        n, lam, y = norm2(mu)
        if n > P:
            y = y * math.sqrt(P / n)

    w = basis.back(y)
    power_active = mu > mu_lo
    radar_active = lam > 0.0
    case = {(False, False): "none", (True, False): "power", (False, True): "radar", (True, True): "both"}[
        (power_active, radar_active)
    ]
    return QpSolution(w, case, problem.objective(w), lam, mu)

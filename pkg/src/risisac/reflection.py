"""Reflection-coefficient update: explicit radar constraint, MM surrogate, ADMM.

The radar term u^H (I kron H_t(phi)) w is expanded as

    u^H (I kron h_dt h_dt^T) w + u^H F phi + phi^T Lt phi,

the non-concave quadratic is majorized at the previous iterate by a
curvature bound, and the resulting linear constraint is carried into an
ADMM loop that splits phi (relaxed to the unit disk) from a unit-modulus
copy psi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .channels import ChannelSet
from .fp import CompactForms, unvec, vec


class SurrogateInfeasible(ValueError):
    """The disk set and the linearized radar halfspace do not intersect."""


def _ris_target_map(cs: ChannelSet) -> np.ndarray:
    """E = G^T diag(h_rt), shape (M, N)."""
    return cs.G.T * cs.h_rt[None, :]


def direct_term(cs: ChannelSet, W) -> np.ndarray:
    """(I kron h_dt h_dt^T) w."""
    return vec(np.outer(cs.h_dt, cs.h_dt) @ W)


def linear_map(cs: ChannelSet, W) -> np.ndarray:
    """F = W^T h_dt kron E + W^T E kron h_dt, shape (M(K+M), N)."""
    E = _ris_target_map(cs)
    return np.kron((W.T @ cs.h_dt)[:, None], E) + np.kron(W.T @ E, cs.h_dt[:, None])


def quadratic_map(cs: ChannelSet, W) -> np.ndarray:
    """Materialized L = W^T E kron E, shape (M(K+M), N^2). Small problems only."""
    E = _ris_target_map(cs)
    return np.kron(W.T @ E, E)


def quadratic_term(cs: ChannelSet, W, phi) -> np.ndarray:
    """L vec(phi phi^T) evaluated as vec(E phi phi^T E^T W)."""
    Ephi = _ris_target_map(cs) @ phi
    return vec(np.outer(Ephi, Ephi) @ W)


def expand_target_response(cs: ChannelSet, W, phi) -> np.ndarray:
    return direct_term(cs, W) + linear_map(cs, W) @ phi + quadratic_term(cs, W, phi)


def reshaped_quadratic(cs: ChannelSet, W, u) -> np.ndarray:
    """Lt (N x N) with u^H L vec(phi phi^T) = phi^T Lt phi, i.e. E^T W U^H E."""
    E = _ris_target_map(cs)
    U = unvec(u, cs.M)
    return E.T @ (W @ np.conj(U).T) @ E


def realify(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=complex)
    return np.concatenate([phi.real, phi.imag])


def complexify(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.size // 2
    return x[:n] + 1j * x[n:]


def embed(Lt: np.ndarray) -> np.ndarray:
    """Real 2N x 2N matrix with realify(phi)^T Lbar realify(phi) = -Re{phi^T Lt phi}."""
    A, B = Lt.real, Lt.imag
    return np.block([[-A, B], [B, A]])


@dataclass(frozen=True)
class SurrogateData:
    F: np.ndarray
    Ltilde: np.ndarray
    Lbar: np.ndarray
    lambda_max: float
    u_tilde: np.ndarray
    eps4: float
    const_term: float
    phi_hat: np.ndarray
    linear: np.ndarray  # q with Re{q^T phi} = grad-term of the bound

    def quadratic(self, phi) -> float:
        """Exact realify(phi)^T Lbar realify(phi)."""
        x = realify(phi)
        return float(x @ self.Lbar @ x)

    def bound(self, phi) -> float:
        """Majorizer of quadratic() on the unit-modulus set, tight at phi_hat."""
        x_hat = realify(self.phi_hat)
        N = self.phi_hat.size
        return float(np.real(self.linear @ phi) - x_hat @ self.Lbar @ x_hat + self.lambda_max * N)

    def constraint_value(self, phi) -> float:
        """Re{u_tilde^H phi}; the linearized radar constraint asks for <= eps4."""
        return float(np.real(np.vdot(self.u_tilde, phi)))


def build_surrogate(cs: ChannelSet, W, u, phi_hat, eps3: float) -> SurrogateData:
    u = np.asarray(getattr(u, "u", u))
    phi_hat = np.asarray(phi_hat, dtype=complex)
    N = phi_hat.size
    F = linear_map(cs, W)
    uF = np.conj(u) @ F
    Lt = reshaped_quadratic(cs, W, u)
    Lbar = embed(Lt)
    S = Lbar + Lbar.T
    lam = float(np.linalg.eigvalsh(S)[-1])
    x_hat = realify(phi_hat)
    p = S @ x_hat - lam * x_hat
    q = p[:N] - 1j * p[N:]
    const = float(np.real(np.vdot(u, direct_term(cs, W))))
    u_tilde = np.conj(q - uF)
    eps4 = -eps3 + float(x_hat @ Lbar.T @ x_hat) + const - lam * N
    return SurrogateData(
        F=F, Ltilde=Lt, Lbar=Lbar, lambda_max=lam, u_tilde=u_tilde, eps4=eps4,
        const_term=const, phi_hat=phi_hat, linear=q,
    )


# --- ADMM ------------------------------------------------------------------


@dataclass
class AdmmState:
    phi: np.ndarray
    varphi: np.ndarray
    mu: np.ndarray
    rho: float


def update_varphi(phi, mu, rho: float, previous=None) -> np.ndarray:
    """Phase alignment exp(j angle(rho phi + mu)); zero entries keep ``previous``."""
    z = rho * np.asarray(phi) + np.asarray(mu)
    out = np.exp(1j * np.angle(z))
    if previous is not None:
        zero = z == 0
        if np.any(zero):
            out[zero] = previous[zero]
    return out


def update_mu(state: AdmmState) -> np.ndarray:
    return state.mu + state.rho * (state.phi - state.varphi)


@njit(cache=True)
def _project_disks_into(z, out):
    for n in range(z.size):
        mag = abs(z[n])
        out[n] = z[n] / mag if mag > 1.0 else z[n]


@njit(cache=True)
def _halfspace_value(c, z):
    total = 0.0
    for n in range(z.size):
        total += c[n].real * z[n].real + c[n].imag * z[n].imag
    return total


@njit(cache=True)
def _project_kernel(y, c, e, active, out):
    """Projection onto the disks, then onto disks-and-halfspace if violated.

    The multiplier nu of the halfspace is found by bisection on the monotone
    map nu -> Re{c^H P_disks(y - nu c / 2)}.
    """
    _project_disks_into(y, out)
    if not active or _halfspace_value(c, out) <= e:
        return
    shifted = np.empty_like(y)
    lo, hi = 0.0, 1.0
    while True:
        for n in range(y.size):
            shifted[n] = y[n] - 0.5 * hi * c[n]
        _project_disks_into(shifted, out)
        if _halfspace_value(c, out) <= e:
            break
        lo = hi
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        for n in range(y.size):
            shifted[n] = y[n] - 0.5 * mid * c[n]
        _project_disks_into(shifted, out)
        if _halfspace_value(c, out) <= e:
            hi = mid
        else:
            lo = mid
    for n in range(y.size):
        shifted[n] = y[n] - 0.5 * hi * c[n]
    _project_disks_into(shifted, out)


@njit(cache=True)
def _fista_kernel(A, b, x0, step, momentum, tol, max_iter, c, e, active):
    x = np.empty_like(x0)
    _project_kernel(x0, c, e, active, x)
    y = x.copy()
    x_new = np.empty_like(x0)
    scale = 1.0 + np.sqrt(np.sum(np.abs(b) ** 2))
    for _ in range(max_iter):
        grad = 2.0 * (A @ y) - b
        _project_kernel(y - step * grad, c, e, active, x_new)
        if np.sqrt(np.sum(np.abs(x_new - y) ** 2)) <= tol * step * scale:
            return x_new
        y = x_new + momentum * (x_new - x)
        x[:] = x_new
    return x


def _project_disks(z):
    z = np.ascontiguousarray(z, dtype=complex)
    out = np.empty_like(z)
    _project_disks_into(z, out)
    return out


class _Projector:
    """Euclidean projection onto {|phi_n| <= 1} intersect {Re{c^H phi} <= e}."""

    def __init__(self, normal, offset):
        self.active = normal is not None and bool(np.any(normal != 0))
        self.c = np.ascontiguousarray(normal if normal is not None else [0.0], dtype=complex)
        self.e = float(offset) if math.isfinite(offset) else 0.0
        if self.active:
            lowest = -float(np.sum(np.abs(self.c)))
            if lowest > offset + 1e-12 * (1 + abs(offset)):
                raise SurrogateInfeasible(f"min over disks {lowest:.6e} exceeds offset {offset:.6e}")

    def __call__(self, y):
        y = np.ascontiguousarray(y, dtype=complex)
        out = np.empty_like(y)
        _project_kernel(y, self.c, self.e, self.active, out)
        return out


def _halfspace(surrogate: SurrogateData | None, sign: str):
    if surrogate is None:
        return None, math.inf
    if sign == "le":
        return surrogate.u_tilde, surrogate.eps4
    return -surrogate.u_tilde, -surrogate.eps4


def phi_block_objective(compact: CompactForms, phi, varphi, mu, rho) -> float:
    """phi^H D phi - Re{g^H phi} + rho/2 ||phi - varphi + mu/rho||^2."""
    r = phi - varphi + mu / rho
    return float(
        np.real(np.vdot(phi, compact.D @ phi)) - np.real(np.vdot(compact.g, phi)) + 0.5 * rho * np.real(np.vdot(r, r))
    )


@dataclass
class PhiStepSolver:
    """Accelerated projected gradient for the convex phi-block.

    The curvature data depend only on D and rho, so one instance serves a
    whole inner ADMM loop.
    """

    D: np.ndarray
    g: np.ndarray
    rho: float
    normal: np.ndarray | None
    offset: float
    tol: float = 1e-10
    max_iter: int = 20000

    def __post_init__(self):
        eig = np.linalg.eigvalsh(0.5 * (self.D + np.conj(self.D).T))
        self.A = np.ascontiguousarray(self.D + 0.5 * self.rho * np.eye(self.D.shape[0]), dtype=complex)
        l_max = max(float(eig[-1]), 0.0) + 0.5 * self.rho
        l_min = max(float(eig[0]), 0.0) + 0.5 * self.rho
        self.step = 1.0 / (2.0 * l_max)
        kappa = l_max / l_min
        self.momentum = (math.sqrt(kappa) - 1.0) / (math.sqrt(kappa) + 1.0)
        self.project = _Projector(self.normal, self.offset)

    def solve(self, varphi, mu, start=None):
        b = np.ascontiguousarray(self.g + self.rho * varphi - mu, dtype=complex)
        x0 = np.ascontiguousarray(start if start is not None else varphi, dtype=complex)
        p = self.project
        return _fista_kernel(self.A, b, x0, self.step, self.momentum, self.tol, self.max_iter, p.c, p.e, p.active)


def solve_phi_step(compact: CompactForms, surrogate: SurrogateData | None, state: AdmmState,
                   tol_qp: float = 1e-8, sign: str = "le") -> np.ndarray:
    """Minimize the phi-block of the augmented Lagrangian over disks and the radar halfspace."""
    normal, offset = _halfspace(surrogate, sign)
    solver = PhiStepSolver(compact.D, compact.g, state.rho, normal, offset, tol=tol_qp)
    return solver.solve(state.varphi, state.mu, start=state.phi)


@dataclass
class ReflectionResult:
    phi: np.ndarray
    iterations: int
    residual: float
    converged: bool
    residuals: list = field(default_factory=list)


def solve_reflection(compact: CompactForms, surrogate: SurrogateData | None, phi_init, rho: float,
                     tol_inner: float = 1e-4, max_inner: int = 500, tol_qp: float = 1e-8,
                     sign: str = "le") -> ReflectionResult:
    """Inner ADMM loop; returns the unit-modulus iterate psi.

    Stops when both ||phi - psi||_inf and the change of psi over the last
    iteration are at most ``tol_inner``.
    """
    normal, offset = _halfspace(surrogate, sign)
    solver = PhiStepSolver(compact.D, compact.g, rho, normal, offset, tol=tol_qp)
    phi_init = np.asarray(phi_init, dtype=complex)
    state = AdmmState(phi=phi_init.copy(), varphi=phi_init.copy(), mu=np.zeros_like(phi_init), rho=rho)
    residuals = []
    residual = math.inf
    for it in range(1, max_inner + 1):
        previous = state.varphi
        state.phi = solver.solve(state.varphi, state.mu, start=state.phi)
        state.varphi = update_varphi(state.phi, state.mu, rho, previous=previous)
        state.mu = update_mu(state)
        residual = float(np.max(np.abs(state.phi - state.varphi)))
        residuals.append(residual)
        # phi landing on the circle gives psi == phi at once, so the primal
        # residual alone can fire while the iterates are still moving
        moved = float(np.max(np.abs(state.varphi - previous)))
        if residual <= tol_inner and moved <= tol_inner:
            return ReflectionResult(state.varphi, it, residual, True, residuals)
    return ReflectionResult(state.varphi, max_inner, residual, False, residuals)

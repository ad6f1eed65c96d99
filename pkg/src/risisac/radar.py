"""Receive filter, worst-case radar SNR and the linearized radar constraint."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet, target_channel
from .fp import vec
from .scenario import SystemConfig

# Below this norm the target return is treated as absent.
DEGENERATE_RESPONSE = 1e-14


class DegenerateTargetError(ArithmeticError):
    """The target response (I kron H_t) w vanishes, so no receive filter exists."""


@dataclass(frozen=True)
class ReceiveFilter:
    u: np.ndarray

    def __post_init__(self):
        if not np.linalg.norm(self.u) > 0:
            raise ValueError("receive filter must be non-zero")


def target_product(cs: ChannelSet, phi, W) -> np.ndarray:
    """(I_{K+M} kron H_t(phi)) w, evaluated blockwise as vec(H_t W)."""
    return vec(target_channel(cs, phi) @ W)


def _u_vector(u) -> np.ndarray:
    return u.u if isinstance(u, ReceiveFilter) else np.asarray(u)


def radar_snr_bound(cs: ChannelSet, phi, W, u, config: SystemConfig) -> float:
    """L s_t^2 |u^H (I kron H_t) w|^2 / (s_r^2 u^H u)."""
    u = _u_vector(u)
    uu = np.real(np.vdot(u, u))
    if not uu > 0:
        raise ValueError("receive filter must be non-zero")
    x = target_product(cs, phi, W)
    return float(config.L * config.sigma_t2 * abs(np.vdot(u, x)) ** 2 / (config.sigma_r2 * uu))


def max_radar_snr(cs: ChannelSet, phi, W, config: SystemConfig) -> float:
    """Worst-case radar SNR under the optimal receive filter."""
    x = target_product(cs, phi, W)
    return float(config.L * config.sigma_t2 * np.real(np.vdot(x, x)) / config.sigma_r2)


def update_u(cs: ChannelSet, phi, W) -> ReceiveFilter:
    """Rayleigh-quotient maximizer x / ||x||^2 with x = (I kron H_t) w.

    With this scaling u^H x = 1, real and positive.
    """
    x = target_product(cs, phi, W)
    norm2 = float(np.real(np.vdot(x, x)))
    if math.sqrt(norm2) < DEGENERATE_RESPONSE:
        raise DegenerateTargetError(f"target response norm {math.sqrt(norm2):.3e} below {DEGENERATE_RESPONSE}")
    return ReceiveFilter(x / norm2)


def epsilon3(u, config: SystemConfig) -> float:
    u = _u_vector(u)
    uu = float(np.real(np.vdot(u, u)))
    return math.sqrt(config.Gamma_t * config.sigma_r2 * uu / (config.L * config.sigma_t2))


def halfspace_normal(cs: ChannelSet, phi, u) -> np.ndarray:
    """v = (I kron H_t(phi))^H u, so that Re{v^H w} = Re{u^H (I kron H_t) w}."""
    u = _u_vector(u)
    H = target_channel(cs, phi)
    M = H.shape[0]
    U = u.reshape(M, -1, order="F")
    return vec(np.conj(H).T @ U)


def feasibility_check(v, P: float, eps3: float) -> bool:
    """Is {w : Re{v^H w} >= eps3, ||w||^2 <= P} non-empty?"""
    return math.sqrt(P) * float(np.linalg.norm(v)) >= eps3

"""Fractional-programming reformulation of the sum-rate objective.

The quadratic transform turns sum_k log(1 + SINR_k) into

    f = sum log(1+r) - sum r - sum |c|^2 s2
        + sum 2 sqrt(1+r) Re{c* h_k^T w_k} - sum |c|^2 sum_j |h_k^T w_j|^2,

which is concave in each of r, c, w and (for fixed r, c) a quadratic in phi.
Beamformers are handled either as the M x (K+M) matrix W or as its
column-major vectorization w = vec(W).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelSet, composite_user_channels


def vec(W: np.ndarray) -> np.ndarray:
    return W.reshape(-1, order="F")


def unvec(w: np.ndarray, M: int) -> np.ndarray:
    return w.reshape(M, -1, order="F")


def channel_gains(cs: ChannelSet, phi: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Matrix of h_k(phi)^T w_j, shape (K, K+M)."""
    return composite_user_channels(cs, phi) @ W


def sinr(cs: ChannelSet, phi, W, noise, k: int | None = None):
    """Per-user SINR; a scalar when ``k`` is given, else a length-K array."""
    noise = np.asarray(noise, dtype=float)
    p = np.abs(channel_gains(cs, phi, W)) ** 2
    K = p.shape[0]
    own = p[np.arange(K), np.arange(K)]
    mask = np.ones_like(p, dtype=bool)
    mask[np.arange(K), np.arange(K)] = False
    interference = np.where(mask, p, 0.0).sum(axis=1)
    values = own / (interference + noise)
    return values if k is None else float(values[k])


def sum_rate(cs: ChannelSet, phi, W, noise) -> float:
    """Achievable sum-rate in bit/s/Hz."""
    return float(np.sum(np.log2(1.0 + sinr(cs, phi, W, noise))))


@dataclass
class AuxiliaryState:
    r: np.ndarray
    c: np.ndarray


def update_r(cs: ChannelSet, phi, W, noise) -> np.ndarray:
    return sinr(cs, phi, W, noise)


def update_c(cs: ChannelSet, phi, W, r, noise) -> np.ndarray:
    """Optimal quadratic-transform auxiliaries (denominator includes j = k)."""
    gains = channel_gains(cs, phi, W)
    K = gains.shape[0]
    total = np.sum(np.abs(gains) ** 2, axis=1) + np.asarray(noise, dtype=float)
    return np.sqrt(1.0 + np.asarray(r)) * gains[np.arange(K), np.arange(K)] / total


def _log(x, base):
    return np.log(x) / math.log(base)


def transformed_objective(cs: ChannelSet, phi, W, r, c, noise, base: float = 2.0) -> float:
    """Evaluate f(w, phi, r, c) term by term.

    ``base`` selects the logarithm of the first term. With base e the r-update
    is the exact block maximizer; with base 2 the value is still tight
    (equal to the sum-rate) at r = SINR, c = c*.
    """
    r = np.asarray(r, dtype=float)
    c = np.asarray(c, dtype=complex)
    noise = np.asarray(noise, dtype=float)
    gains = channel_gains(cs, phi, W)
    K = gains.shape[0]
    own = gains[np.arange(K), np.arange(K)]
    c2 = np.abs(c) ** 2
    value = np.sum(_log(1.0 + r, base)) - np.sum(r) - np.sum(c2 * noise)
    value += np.sum(2.0 * np.sqrt(1.0 + r) * np.real(np.conj(c) * own))
    value -= np.sum(c2 * np.sum(np.abs(gains) ** 2, axis=1))
    return float(value)


@dataclass(frozen=True)
class CompactForms:
    """Quadratic forms of f in w and in phi.

    f = Re{a^H w} - ||B w||^2 + eps1 = Re{g^H phi} - phi^H D phi + eps2.

    B^H B is block diagonal, I_{K+M} kron Q, so only the M x M block Q is kept.
    """

    a: np.ndarray
    Q: np.ndarray
    eps1: float
    g: np.ndarray
    D: np.ndarray
    eps2: float
    n_streams: int
    Hk: np.ndarray  # composite user channels used to build a and Q, (K, M)
    c: np.ndarray

    def gram(self) -> np.ndarray:
        return np.kron(np.eye(self.n_streams), self.Q)

    def B(self) -> np.ndarray:
        """Materialized B, rows b_{k,j}^T = |c_k| h_k^T T_j, ordered (k, j) k-major."""
        K, M = self.Hk.shape
        J = self.n_streams
        B = np.zeros((K * J, M * J), dtype=complex)
        for k in range(K):
            for j in range(J):
                B[k * J + j, j * M:(j + 1) * M] = abs(self.c[k]) * self.Hk[k]
        return B

    def w_objective(self, w) -> float:
        """Re{a^H w} - ||Bw||^2 + eps1."""
        W = unvec(w, self.Q.shape[0])
        quad = np.real(np.sum(np.conj(W) * (self.Q @ W)))
        return float(np.real(np.vdot(self.a, w)) - quad + self.eps1)

    def phi_objective(self, phi) -> float:
        """Re{g^H phi} - phi^H D phi + eps2."""
        return float(np.real(np.vdot(self.g, phi)) - np.real(np.vdot(phi, self.D @ phi)) + self.eps2)


def assemble_compact(cs: ChannelSet, phi, W, r, c, noise, base: float = 2.0) -> CompactForms:
    r = np.asarray(r, dtype=float)
    c = np.asarray(c, dtype=complex)
    noise = np.asarray(noise, dtype=float)
    K, M, J = cs.K, cs.M, W.shape[1]
    c2 = np.abs(c) ** 2
    s = np.sqrt(1.0 + r)
    Hk = composite_user_channels(cs, phi)

    A = np.zeros((M, J), dtype=complex)
    A[:, :K] = (2.0 * s * c)[None, :] * np.conj(Hk).T
    a = vec(A)
    Q = (np.conj(Hk).T * c2[None, :]) @ Hk
    eps1 = float(np.sum(_log(1.0 + r, base)) - np.sum(r) - np.sum(c2 * noise))

    # h_k^T w_j = e[k, j] + V[k, j] . phi
    e = cs.h_d @ W
    V = cs.h_r[:, None, :] * (cs.G @ W).T[None, :, :]  # (K, J, N)
    weighted = (np.sqrt(c2)[:, None, None] * V).reshape(K * J, -1)
    D = np.conj(weighted).T @ weighted
    idx = np.arange(K)
    g = 2.0 * np.einsum("k,kn->n", s * c, np.conj(V[idx, idx]))
    g -= 2.0 * np.einsum("k,kj,kjn->n", c2, e, np.conj(V))
    eps2 = eps1 + float(np.sum(2.0 * s * np.real(np.conj(c) * e[idx, idx]) - c2 * np.sum(np.abs(e) ** 2, axis=1)))
    return CompactForms(a=a, Q=Q, eps1=eps1, g=g, D=D, eps2=eps2, n_streams=J, Hk=Hk, c=c)

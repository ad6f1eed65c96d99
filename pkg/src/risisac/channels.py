"""Channel realizations for the RIS-assisted ISAC downlink.

Array layout used across the package:

    h_d  (K, M)  BS -> user k direct links (row k)
    h_r  (K, N)  RIS -> user k links
    G    (N, M)  BS -> RIS (LoS, rank one)
    h_dt (M,)    BS -> target (LoS)
    h_rt (N,)    RIS -> target (LoS)
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .scenario import ScenarioGeometry, SystemConfig, _as_range, path_loss


def steering_vector(n_elements: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA response, element i equal to exp(j*pi*i*sin(angle))."""
    return np.exp(1j * np.pi * np.arange(n_elements) * np.sin(angle))


@dataclass(frozen=True)
class ChannelSet:
    h_d: np.ndarray
    h_r: np.ndarray
    G: np.ndarray
    h_dt: np.ndarray
    h_rt: np.ndarray

    def __post_init__(self):
        K, M = self.h_d.shape
        N = self.h_rt.shape[0]
        if self.h_r.shape != (K, N) or self.G.shape != (N, M) or self.h_dt.shape != (M,):
            raise ValueError(
                f"inconsistent channel shapes: h_d {self.h_d.shape}, h_r {self.h_r.shape}, "
                f"G {self.G.shape}, h_dt {self.h_dt.shape}, h_rt {self.h_rt.shape}"
            )
        for name in ("h_d", "h_r", "G", "h_dt", "h_rt"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {name}")
            arr.setflags(write=False)

    @property
    def M(self) -> int:
        return self.h_d.shape[1]

    @property
    def K(self) -> int:
        return self.h_d.shape[0]

    @property
    def N(self) -> int:
        return self.h_rt.shape[0]

    def without_ris(self) -> "ChannelSet":
        """Same realization with every RIS-reflected link zeroed."""
        return ChannelSet(
            h_d=self.h_d.copy(),
            h_r=np.zeros_like(self.h_r),
            G=np.zeros_like(self.G),
            h_dt=self.h_dt.copy(),
            h_rt=np.zeros_like(self.h_rt),
        )

    def digest(self) -> str:
        """Stable hash of all channel coefficients (common-random-number audits)."""
        h = hashlib.sha256()
        for name in ("h_d", "h_r", "G", "h_dt", "h_rt"):
            h.update(np.ascontiguousarray(getattr(self, name), dtype=np.complex128).tobytes())
        return h.hexdigest()[:16]

    def save(self, path) -> None:
        """Dump to an ``.npz`` archive with arrays h_d, h_r, G, h_dt, h_rt."""
        np.savez(Path(path), h_d=self.h_d, h_r=self.h_r, G=self.G, h_dt=self.h_dt, h_rt=self.h_rt)

    @classmethod
    def load(cls, path) -> "ChannelSet":
        with np.load(Path(path)) as data:
            return cls(**{k: np.array(data[k], dtype=np.complex128) for k in ("h_d", "h_r", "G", "h_dt", "h_rt")})


def _rayleigh(rng: np.random.Generator, shape, power) -> np.ndarray:
    power = np.asarray(power, dtype=float)
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return np.sqrt(power / 2.0) * z


def generate(config: SystemConfig, geometry: ScenarioGeometry, rng: np.random.Generator) -> ChannelSet:
    """Draw one channel realization.

    User links are Rayleigh with per-entry variance equal to the link path
    loss; BS-RIS, BS-target and RIS-target links are LoS steering responses.
    The draw order is fixed so a seed maps to a single realization.
    """
    M, K, N = config.M, config.K, config.N
    g = geometry

    lo, hi = _as_range(g.d_bs_user)
    d_user = rng.uniform(lo, hi, size=K)
    lo, hi = _as_range(g.d_bs_target)
    d_target = rng.uniform(lo, hi)

    pl_user = path_loss(d_user, g.alpha_bs_user)[:, None]
    h_d = _rayleigh(rng, (K, M), pl_user)
    h_r = _rayleigh(rng, (K, N), path_loss(g.d_ris_user, g.alpha_ris_user))

    a_ris = steering_vector(N, g.theta_ris_bs)
    a_bs = steering_vector(M, g.theta_bs_ris)
    G = np.sqrt(path_loss(g.d_bs_ris, g.alpha_bs_ris)) * np.outer(a_ris, a_bs)
    h_dt = np.sqrt(path_loss(d_target, g.alpha_bs_target)) * steering_vector(M, g.target_azimuth)
    h_rt = np.sqrt(path_loss(g.d_ris_target, g.alpha_ris_target)) * steering_vector(N, g.target_azimuth_ris)
    return ChannelSet(h_d=h_d, h_r=h_r, G=G, h_dt=h_dt, h_rt=h_rt)


def composite_user_channel(cs: ChannelSet, phi: np.ndarray, k: int) -> np.ndarray:
    """h_k(phi) = h_d[k] + G^T diag(phi) h_r[k]."""
    if not 0 <= k < cs.K:
        raise IndexError(f"user index {k} out of range for K={cs.K}")
    return cs.h_d[k] + cs.G.T @ (phi * cs.h_r[k])


def composite_user_channels(cs: ChannelSet, phi: np.ndarray) -> np.ndarray:
    """All composite channels stacked as rows, shape (K, M)."""
    return cs.h_d + (cs.h_r * phi) @ cs.G


def target_response(cs: ChannelSet, phi: np.ndarray) -> np.ndarray:
    """One-way target channel h_dt + G^T diag(phi) h_rt."""
    return cs.h_dt + cs.G.T @ (phi * cs.h_rt)


def target_channel(cs: ChannelSet, phi: np.ndarray) -> np.ndarray:
    """Round-trip target channel H_t(phi) = a a^T (plain transpose, symmetric)."""
    a = target_response(cs, phi)
    return np.outer(a, a)

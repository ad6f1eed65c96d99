"""System parameters, unit conversions, path loss and config loading.

Everything downstream works in Watts and linear power ratios. dB/dBm values
are only accepted at the config boundary and converted once.
"""

from __future__ import annotations

import dataclasses
import math
import numbers
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import yaml

# Reference path loss at d0 = 1 m (-30 dB).
PL0 = 1e-3


class ConfigError(ValueError):
    """Raised when a configuration violates one or more invariants."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def db_to_linear(x: float) -> float:
    return 10.0 ** (x / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def dbm_to_watt(x: float) -> float:
    return 10.0 ** ((x - 30.0) / 10.0)


def watt_to_dbm(x: float) -> float:
    return 10.0 * math.log10(x) + 30.0


def path_loss(d, alpha):
    """Distance-dependent path loss ``PL0 * d**-alpha`` (linear power gain)."""
    return PL0 * d ** (-alpha)


@dataclass(frozen=True)
class SystemConfig:
    M: int
    K: int
    N: int
    L: int
    P: float  # W
    Gamma_t: float  # linear
    sigma_t2: float
    sigma_r2: float  # W
    sigma_k2: tuple  # W, one per user
    rho: float = 1.0
    tol_outer: float = 1e-4
    tol_inner: float = 1e-4
    tol_qp: float = 1e-8
    max_outer: int = 100
    max_inner: int = 500
    seed: int = 0
    # "le" is the derived direction of the MM radar constraint; "ge" is the
    # direction printed in the ADMM problem statement, kept for comparison.
    surrogate_sign: str = "le"

    def replace(self, **changes) -> "SystemConfig":
        if "K" in changes and "sigma_k2" not in changes and len(set(self.sigma_k2)) == 1:
            changes["sigma_k2"] = (self.sigma_k2[0],) * changes["K"]
        if "sigma_k2" in changes:
            changes["sigma_k2"] = tuple(float(s) for s in changes["sigma_k2"])
        return dataclasses.replace(self, **changes)

    @property
    def n_streams(self) -> int:
        return self.K + self.M

    @property
    def Gamma_t_db(self) -> float:
        return linear_to_db(self.Gamma_t)


@dataclass(frozen=True)
class ScenarioGeometry:
    """Link distances (m), path-loss exponents and LoS angles (rad).

    Distances given as a ``(lo, hi)`` pair are drawn uniformly per channel
    realization.
    """

    d_bs_ris: float = 50.0
    d_ris_target: float = 3.0
    d_ris_user: float = 8.0
    d_bs_target: Any = (50.0, 53.0)
    d_bs_user: Any = (50.0, 58.0)
    alpha_bs_ris: float = 2.2
    alpha_ris_target: float = 2.2
    alpha_ris_user: float = 2.3
    alpha_bs_target: float = 2.4
    alpha_bs_user: float = 3.5
    target_azimuth: float = 0.0
    # BS departure / RIS arrival angles of the BS-RIS LoS link.
    theta_bs_ris: float = math.pi / 4
    theta_ris_bs: float = -math.pi / 4
    # Target angle seen from the RIS.
    target_azimuth_ris: float = 0.0


_DISTANCE_FIELDS = ("d_bs_ris", "d_ris_target", "d_ris_user", "d_bs_target", "d_bs_user")
_EXPONENT_FIELDS = ("alpha_bs_ris", "alpha_ris_target", "alpha_ris_user", "alpha_bs_target", "alpha_bs_user")


def _as_range(value) -> tuple[float, float]:
    if isinstance(value, (tuple, list)):
        lo, hi = value
        return float(lo), float(hi)
    return float(value), float(value)


def validate(config: SystemConfig, geometry: ScenarioGeometry | None = None) -> list[str]:
    """Return every invariant violation; an empty list means valid."""
    errors = []
    for name in ("M", "K", "N", "L"):
        value = getattr(config, name)
        if not isinstance(value, numbers.Integral) or isinstance(value, bool) or value < 1:
            errors.append(f"{name} must be an integer >= 1 (got {value!r})")
    if not config.P > 0:
        errors.append("power budget must be positive")
    if not config.Gamma_t > 0:
        errors.append("radar SNR threshold must be positive")
    if not config.rho > 0:
        errors.append("ADMM penalty rho must be positive")
    if not config.sigma_t2 > 0:
        errors.append("target RCS power sigma_t2 must be positive")
    if not config.sigma_r2 > 0:
        errors.append("radar noise power must be positive")
    if len(config.sigma_k2) != config.K:
        errors.append(f"sigma_k2 must have K={config.K} entries (got {len(config.sigma_k2)})")
    if any(not s > 0 for s in config.sigma_k2):
        errors.append("user noise powers must be positive")
    for name in ("tol_outer", "tol_inner", "tol_qp"):
        if not getattr(config, name) > 0:
            errors.append(f"{name} must be positive")
    for name in ("max_outer", "max_inner"):
        if getattr(config, name) < 1:
            errors.append(f"{name} must be >= 1")
    if config.surrogate_sign not in ("le", "ge"):
        errors.append("surrogate_sign must be 'le' or 'ge'")

    if geometry is not None:
        for name in _DISTANCE_FIELDS:
            lo, hi = _as_range(getattr(geometry, name))
            if not (lo > 0 and hi > 0):
                errors.append(f"{name} must be positive")
            elif hi < lo:
                errors.append(f"{name} range must satisfy lo <= hi")
        for name in _EXPONENT_FIELDS:
            if not getattr(geometry, name) >= 2:
                errors.append(f"{name} must be >= 2")
    return errors


def check(config: SystemConfig, geometry: ScenarioGeometry | None = None) -> None:
    errors = validate(config, geometry)
    if errors:
        raise ConfigError(errors)


# --- config files ----------------------------------------------------------

_REQUIRED_SYSTEM = ("M", "K", "N", "L", "power_w", "radar_snr_db", "rcs", "radar_noise_dbm", "user_noise_dbm")
_OPTIONAL_SYSTEM = ("rho", "tol_outer", "tol_inner", "tol_qp", "max_outer", "max_inner", "seed", "surrogate_sign")
_REQUIRED_GEOMETRY = _DISTANCE_FIELDS + _EXPONENT_FIELDS
_OPTIONAL_GEOMETRY = ("target_azimuth", "theta_bs_ris", "theta_ris_bs", "target_azimuth_ris")


def config_from_dict(data: dict) -> tuple[SystemConfig, ScenarioGeometry]:
    """Build config and geometry from the parsed YAML mapping.

    Layout::

        system:   {M, K, N, L, power_w, radar_snr_db, rcs, radar_noise_dbm,
                   user_noise_dbm, [rho, tol_*, max_*, seed, surrogate_sign]}
        geometry: {d_*, alpha_*, [target_azimuth, theta_bs_ris, theta_ris_bs,
                   target_azimuth_ris]}

    ``user_noise_dbm`` is a scalar (shared by all users) or a list of K values.
    """
    errors = []
    system = data.get("system")
    geo = data.get("geometry")
    if not isinstance(system, dict):
        raise ConfigError(["missing 'system' section"])
    if not isinstance(geo, dict):
        raise ConfigError(["missing 'geometry' section"])

    for key in _REQUIRED_SYSTEM:
        if key not in system:
            errors.append(f"missing field system.{key}")
    for key in _REQUIRED_GEOMETRY:
        if key not in geo:
            errors.append(f"missing field geometry.{key}")
    known = set(_REQUIRED_SYSTEM) | set(_OPTIONAL_SYSTEM)
    errors += [f"unknown field system.{k}" for k in system if k not in known]
    known = set(_REQUIRED_GEOMETRY) | set(_OPTIONAL_GEOMETRY)
    errors += [f"unknown field geometry.{k}" for k in geo if k not in known]
    if errors:
        raise ConfigError(errors)

    K = system["K"]
    noise = system["user_noise_dbm"]
    if isinstance(noise, (list, tuple)):
        sigma_k2 = tuple(dbm_to_watt(float(x)) for x in noise)
    else:
        sigma_k2 = (dbm_to_watt(float(noise)),) * (K if isinstance(K, int) and K > 0 else 0)

    extra = {k: system[k] for k in _OPTIONAL_SYSTEM if k in system}
    config = SystemConfig(
        M=system["M"],
        K=K,
        N=system["N"],
        L=system["L"],
        P=float(system["power_w"]),
        Gamma_t=db_to_linear(float(system["radar_snr_db"])),
        sigma_t2=float(system["rcs"]),
        sigma_r2=dbm_to_watt(float(system["radar_noise_dbm"])),
        sigma_k2=sigma_k2,
        **extra,
    )
    geo_kwargs = {}
    for key, value in geo.items():
        geo_kwargs[key] = tuple(float(v) for v in value) if isinstance(value, list) else float(value)
    geometry = ScenarioGeometry(**geo_kwargs)
    check(config, geometry)
    return config, geometry


def load_config(path) -> tuple[SystemConfig, ScenarioGeometry]:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
    except yaml.YAMLError as exc:
        raise ConfigError([f"cannot parse config {path}: {exc}"]) from exc
    if not isinstance(data, dict):
        raise ConfigError([f"config {path} must be a mapping"])
    return config_from_dict(data)


def desk_config(**overrides) -> SystemConfig:
    """Small default scenario: M=4, K=2, N=16, L=100, P=10 W, 5 dB radar SNR."""
    base = dict(
        M=4, K=2, N=16, L=100, P=10.0,
        Gamma_t=db_to_linear(5.0),
        sigma_t2=1.0,
        sigma_r2=dbm_to_watt(-80.0),
        sigma_k2=(dbm_to_watt(-80.0),) * 2,
    )
    cfg = SystemConfig(**base)
    return cfg.replace(**overrides) if overrides else cfg


def full_scale_config(**overrides) -> SystemConfig:
    """Full-size scenario: M=8, K=4, N=100, L=1000, P=15 W, 5 dB radar SNR."""
    cfg = desk_config().replace(M=8, K=4, N=100, L=1000, P=15.0)
    return cfg.replace(**overrides) if overrides else cfg

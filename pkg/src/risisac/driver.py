"""Joint beamforming / receive filter / reflection design.

Outer loop order per iteration: r, c, u, w (QP), then the inner ADMM loop for
phi. Every block either maximizes the transformed objective exactly or is
rejected, so the sum-rate trace is non-decreasing.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import fp, radar
from .channels import ChannelSet, composite_user_channels, target_response
from .fp import unvec, vec
from .qp import QpFailure, QpInfeasible, QpProblem, solve_qp
from .reflection import SurrogateInfeasible, build_surrogate, solve_reflection
from .scenario import SystemConfig, check, linear_to_db

log = logging.getLogger(__name__)

METHODS = ("proposed", "random-ris", "no-ris")
INIT_DESCRIPTION = (
    "phi co-phases the RIS-cascaded target return with the direct return at BS antenna 0; "
    "user columns of W are matched filters to h_k(phi)*, radar columns to the target response*, "
    "||W||_F^2 = P, radar power share on a 1/64 grid; "
    "the feasible combination with the largest sum-rate is used"
)


@dataclass
class IterationRecord:
    iteration: int
    sum_rate: float
    objective: float
    radar_snr: float
    power: float
    qp_case: str
    inner_iterations: int
    inner_residual: float
    phi_accepted: bool
    seconds: float


@dataclass
class SolverState:
    W: np.ndarray
    phi: np.ndarray
    u: radar.ReceiveFilter | None = None
    aux: fp.AuxiliaryState | None = None
    trace: list = field(default_factory=list)


@dataclass
class SolveReport:
    """Outcome of one solve.

    ``termination`` is one of converged, max-iters, infeasible, degenerate.
    ``radar_snr`` is the worst-case radar SNR bound (linear) under the
    optimal receive filter for the returned (W, phi).
    """

    method: str
    sum_rate: float
    radar_snr: float
    radar_snr_db: float
    iterations: int
    termination: str
    trace: list
    W: np.ndarray | None = None
    phi: np.ndarray | None = None
    u: np.ndarray | None = None
    initial_sum_rate: float = math.nan
    message: str = ""
    channel_digest: str = ""
    init: str = INIT_DESCRIPTION
    tol_qp: float = 1e-8

    @property
    def sum_rate_trace(self) -> list:
        return [rec.sum_rate for rec in self.trace]

    @property
    def inner_iterations(self) -> int:
        return sum(rec.inner_iterations for rec in self.trace)

    def to_dict(self) -> dict:
        def cplx(a):
            if a is None:
                return None
            a = np.asarray(a)
            return {"shape": list(a.shape), "re": a.real.ravel().tolist(), "im": a.imag.ravel().tolist()}

        return {
            "schema": "risisac.solve_report/1",
            "method": self.method,
            "termination": self.termination,
            "message": self.message,
            "sum_rate": self.sum_rate,
            "initial_sum_rate": self.initial_sum_rate,
            "radar_snr": self.radar_snr,
            "radar_snr_db": self.radar_snr_db,
            "iterations": self.iterations,
            "channel_digest": self.channel_digest,
            "init": self.init,
            "tol_qp": self.tol_qp,
            "W": cplx(self.W),
            "phi": cplx(self.phi),
            "u": cplx(self.u),
            "trace": [asdict(rec) for rec in self.trace],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict) -> "SolveReport":
        def cplx(d):
            if d is None:
                return None
            return (np.asarray(d["re"]) + 1j * np.asarray(d["im"])).reshape(d["shape"])

        return cls(
            method=data["method"],
            sum_rate=data["sum_rate"],
            radar_snr=data["radar_snr"],
            radar_snr_db=data["radar_snr_db"],
            iterations=data["iterations"],
            termination=data["termination"],
            trace=[IterationRecord(**rec) for rec in data["trace"]],
            W=cplx(data["W"]),
            phi=cplx(data["phi"]),
            u=cplx(data["u"]),
            initial_sum_rate=data["initial_sum_rate"],
            message=data["message"],
            channel_digest=data["channel_digest"],
            init=data["init"],
            tol_qp=data["tol_qp"],
        )


def _unit(x: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(x)
    if n == 0:
        return np.ones_like(x) / math.sqrt(x.size)
    return x / n


def initial_phi(cs: ChannelSet) -> np.ndarray:
    cascade = cs.G[:, 0] * cs.h_rt
    return np.exp(1j * (np.angle(cs.h_dt[0]) - np.angle(cascade)))


def initial_beamformer(cs: ChannelSet, phi, config: SystemConfig) -> np.ndarray | None:
    """Matched-filter W with ||W||_F^2 = P; None if Gamma_t is out of reach.

    User columns are matched to h_k(phi)*, radar columns to the target
    response. The radar power share runs over a grid of 1/64; among the
    shares that meet Gamma_t the one with the largest sum-rate is returned.
    """
    M, K = cs.M, cs.K
    noise = np.asarray(config.sigma_k2, dtype=float)
    Hk = composite_user_channels(cs, phi)
    comm = np.stack([_unit(np.conj(h)) for h in Hk], axis=1)
    target = _unit(np.conj(target_response(cs, phi)))

    best, best_rate = None, -math.inf
    for share in np.linspace(0.0, 1.0, 65):
        W = np.hstack([comm * math.sqrt((1 - share) * config.P / K),
                       np.repeat(target[:, None], M, axis=1) * math.sqrt(share * config.P / M)])
        if radar.max_radar_snr(cs, phi, W, config) < config.Gamma_t * (1 + 1e-6):
            continue
        rate = fp.sum_rate(cs, phi, W, noise)
        if rate > best_rate:
            best, best_rate = W, rate
    return best


def initialize(cs: ChannelSet, config: SystemConfig):
    phi = initial_phi(cs)
    return initial_beamformer(cs, phi, config), phi


def _finish(report_kwargs, cs, W, phi, config) -> SolveReport:
    snr = radar.max_radar_snr(cs, phi, W, config)
    try:
        u = radar.update_u(cs, phi, W).u
    except radar.DegenerateTargetError:
        u = None
    noise = np.asarray(config.sigma_k2)
    return SolveReport(
        sum_rate=fp.sum_rate(cs, phi, W, noise),
        radar_snr=snr,
        radar_snr_db=linear_to_db(snr) if snr > 0 else -math.inf,
        W=W, phi=phi, u=u,
        channel_digest=cs.digest(),
        tol_qp=config.tol_qp,
        **report_kwargs,
    )


def _run(cs: ChannelSet, config: SystemConfig, phi: np.ndarray, method: str, update_phi: bool,
         W: np.ndarray | None = None) -> SolveReport:
    check(config)
    if (cs.M, cs.K, cs.N) != (config.M, config.K, config.N):
        raise ValueError(f"channel dims {(cs.M, cs.K, cs.N)} do not match config {(config.M, config.K, config.N)}")
    noise = np.asarray(config.sigma_k2, dtype=float)
    if W is None:
        W = initial_beamformer(cs, phi, config)
    if W is None:
        return SolveReport(method=method, sum_rate=math.nan, radar_snr=math.nan, radar_snr_db=math.nan,
                           iterations=0, termination="infeasible", trace=[], phi=phi,
                           message="radar SNR threshold unreachable at initialization",
                           channel_digest=cs.digest(), tol_qp=config.tol_qp)

    state = SolverState(W=W, phi=phi)
    rate = fp.sum_rate(cs, phi, W, noise)
    initial_rate = rate
    termination = "max-iters"
    message = ""
    for it in range(1, config.max_outer + 1):
        t0 = time.perf_counter()
        W, phi = state.W, state.phi
        r = fp.update_r(cs, phi, W, noise)
        c = fp.update_c(cs, phi, W, r, noise)
        state.aux = fp.AuxiliaryState(r, c)
        try:
            u = radar.update_u(cs, phi, W)
        except radar.DegenerateTargetError as exc:
            termination, message = "degenerate", str(exc)
            break
        state.u = u
        eps3 = radar.epsilon3(u, config)
        compact = fp.assemble_compact(cs, phi, W, r, c, noise)
        problem = QpProblem(
            linear=compact.a, gram_block=compact.Q,
            halfspace_normal=radar.halfspace_normal(cs, phi, u), halfspace_offset=eps3, power=config.P,
        )
        try:
            sol = solve_qp(problem, config.tol_qp, w_prev=vec(W))
        except (QpInfeasible, QpFailure) as exc:
            termination, message = "infeasible", str(exc)
            break
        W = unvec(sol.w, cs.M)

        accepted = False
        inner_its, inner_res = 0, 0.0
        if update_phi:
            compact = fp.assemble_compact(cs, phi, W, r, c, noise)
            surrogate = build_surrogate(cs, W, u, phi, eps3)
            try:
                res = solve_reflection(compact, surrogate, phi, config.rho, config.tol_inner, config.max_inner,
                                       config.tol_qp, sign=config.surrogate_sign)
            except SurrogateInfeasible:
                res = None
            if res is not None:
                inner_its, inner_res = res.iterations, res.residual
                cand = res.phi
                feasible = radar.radar_snr_bound(cs, cand, W, u, config) >= config.Gamma_t * (1 - 1e-9)
                improves = compact.phi_objective(cand) >= compact.phi_objective(phi)
                if feasible and improves:
                    phi, accepted = cand, True
        state.W, state.phi = W, phi

        new_rate = fp.sum_rate(cs, phi, W, noise)
        state.trace.append(IterationRecord(
            iteration=it,
            sum_rate=new_rate,
            objective=fp.transformed_objective(cs, phi, W, r, c, noise),
            radar_snr=radar.max_radar_snr(cs, phi, W, config),
            power=float(np.real(np.vdot(W, W))),
            qp_case=sol.kkt_case,
            inner_iterations=inner_its,
            inner_residual=inner_res,
            phi_accepted=accepted,
            seconds=time.perf_counter() - t0,
        ))
        log.debug("iter %d sum-rate %.6f (%s, inner %d, accepted %s)", it, new_rate, sol.kkt_case,
                  inner_its, accepted)
        if abs(new_rate - rate) <= config.tol_outer:
            rate = new_rate
            termination = "converged"
            break
        rate = new_rate

    report = _finish(dict(method=method, iterations=len(state.trace), termination=termination,
                          trace=state.trace, initial_sum_rate=initial_rate, message=message),
                     cs, state.W, state.phi, config)
    return report


def solve(cs: ChannelSet, config: SystemConfig) -> SolveReport:
    """Run the full joint design from the matched-filter initialization."""
    return _run(cs, config, initial_phi(cs), "proposed", update_phi=True)


def solve_baseline(cs: ChannelSet, config: SystemConfig, mode: str, rng: np.random.Generator | None = None) -> SolveReport:
    """Beamforming-only baselines: ``no-ris`` (reflected links zeroed) or ``random-ris``."""
    if mode == "no-ris":
        cs0 = cs.without_ris()
        report = _run(cs0, config, initial_phi(cs0), mode, update_phi=False)
        # report the realization that was drawn, so paired trials share a digest
        report.channel_digest = cs.digest()
        return report
    if mode == "random-ris":
        if rng is None:
            rng = np.random.default_rng(config.seed)
        phi = np.exp(2j * np.pi * rng.uniform(size=cs.N))
        return _run(cs, config, phi, mode, update_phi=False)
    raise ValueError(f"unknown baseline mode {mode!r}")


def solve_method(cs: ChannelSet, config: SystemConfig, method: str, rng: np.random.Generator | None = None) -> SolveReport:
    if method == "proposed":
        return solve(cs, config)
    return solve_baseline(cs, config, method, rng)

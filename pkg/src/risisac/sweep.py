"""Monte-Carlo sweeps over power, RIS size or radar SNR threshold.

Every trial index t draws its channel from one seeded stream, so at a given
t all methods (and, for power and radar-SNR sweeps, all swept values) see the
same realization. Element sweeps change N and therefore the channel shapes;
the per-trial seed is still shared.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .channels import ChannelSet, generate
from .driver import METHODS, SolveReport, solve_method
from .scenario import ConfigError, ScenarioGeometry, SystemConfig, check, db_to_linear, desk_config, load_config

log = logging.getLogger(__name__)

PARAMS = ("power", "elements", "radar_snr")
CSV_HEADER = ("method", "param", "value", "mean_sum_rate", "std_sum_rate", "trials", "mean_iters", "failures")
FAILED_TERMINATIONS = ("infeasible", "degenerate")


def trial_streams(seed: int, trial: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (channel, random-RIS phase) generators for one trial."""
    channel, phases = np.random.SeedSequence([seed, trial]).spawn(2)
    return np.random.default_rng(channel), np.random.default_rng(phases)


def apply_value(config: SystemConfig, param: str, value) -> SystemConfig:
    if param == "power":
        return config.replace(P=float(value))
    if param == "elements":
        return config.replace(N=int(value))
    if param == "radar_snr":
        return config.replace(Gamma_t=db_to_linear(float(value)))
    raise ValueError(f"unknown sweep parameter {param!r}")


@dataclass
class SweepSpec:
    param: str
    values: list
    trials: int = 20
    methods: tuple = METHODS
    config: SystemConfig = field(default_factory=desk_config)
    geometry: ScenarioGeometry = field(default_factory=ScenarioGeometry)
    seed: int = 0

    def validate(self) -> list[str]:
        errors = []
        if self.param not in PARAMS:
            errors.append(f"swept parameter must be one of {', '.join(PARAMS)}, got {self.param!r}")
        if not self.values:
            errors.append("value list must be non-empty")
        elif any(b <= a for a, b in zip(self.values, self.values[1:])):
            errors.append("value list must be strictly increasing")
        if self.param == "elements" and any(int(v) != v or v < 1 for v in self.values):
            errors.append("element counts must be positive integers")
        if self.param == "power" and any(v <= 0 for v in self.values):
            errors.append("power values must be positive")
        if not isinstance(self.trials, int) or self.trials < 1:
            errors.append("trials must be an integer >= 1")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            errors.append(f"methods must be a non-empty subset of {', '.join(METHODS)}")
        return errors

    def check(self) -> None:
        errors = self.validate()
        if errors:
            raise ConfigError(errors)


def load_sweep_spec(path) -> SweepSpec:
    """Read a sweep file.

    Layout::

        param: power            # power | elements | radar_snr
        values: [5, 15, 25]     # W | count | dB
        trials: 20
        methods: [proposed, random-ris, no-ris]
        seed: 0
        base: desk.yaml         # scenario config, relative to this file (optional)
    """
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError([f"cannot read sweep spec {path}: {exc}"]) from exc
    except yaml.YAMLError as exc:
        raise ConfigError([f"cannot parse sweep spec {path}: {exc}"]) from exc
    if not isinstance(data, dict):
        raise ConfigError([f"sweep spec {path} must be a mapping"])
    known = {"param", "values", "trials", "methods", "seed", "base"}
    errors = [f"unknown field {k}" for k in data if k not in known]
    errors += [f"missing field {k}" for k in ("param", "values") if k not in data]
    if errors:
        raise ConfigError(errors)
    if "base" in data:
        config, geometry = load_config(path.parent / data["base"])
    else:
        config, geometry = desk_config(), ScenarioGeometry()
    values = data["values"]
    if not isinstance(values, list):
        raise ConfigError(["values must be a list"])
    spec = SweepSpec(
        param=data["param"],
        values=list(values),
        trials=data.get("trials", 20),
        methods=tuple(data.get("methods", METHODS)),
        config=config,
        geometry=geometry,
        seed=data.get("seed", config.seed),
    )
    spec.check()
    return spec


@dataclass(frozen=True)
class TrialOutcome:
    method: str
    value: float
    trial: int
    sum_rate: float
    iterations: int
    termination: str
    channel_digest: str

    @property
    def failed(self) -> bool:
        return self.termination in FAILED_TERMINATIONS or not math.isfinite(self.sum_rate)


@dataclass(frozen=True)
class SweepRow:
    method: str
    param: str
    value: float
    mean_sum_rate: float
    std_sum_rate: float
    trials: int
    mean_iters: float
    failures: int

    @property
    def all_failed(self) -> bool:
        return self.failures == self.trials


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)

    def row(self, method: str, value) -> SweepRow:
        for r in self.rows:
            if r.method == method and r.value == value:
                return r
        raise KeyError((method, value))

    def means(self, method: str) -> list:
        return [r.mean_sum_rate for r in self.rows if r.method == method]

    @property
    def flagged(self) -> list:
        """Cells in which every trial failed."""
        return [r for r in self.rows if r.all_failed]


def run_trial(config: SystemConfig, geometry: ScenarioGeometry, seed: int, trial: int,
              method: str) -> tuple[ChannelSet, SolveReport]:
    """One solve on the channel of trial ``trial``; shared by ``run`` and ``sweep``."""
    channel_rng, phase_rng = trial_streams(seed, trial)
    cs = generate(config, geometry, channel_rng)
    return cs, solve_method(cs, config, method, phase_rng)


def _cell_task(args):
    config, geometry, seed, trial, value, methods = args
    out = []
    channel_rng, phase_rng = trial_streams(seed, trial)
    cs = generate(config, geometry, channel_rng)
    state = phase_rng.bit_generator.state
    for method in methods:
        # restart the phase stream per method so random-ris phases do not
        # depend on which other methods were requested
        phase_rng.bit_generator.state = state
        report = solve_method(cs, config, method, phase_rng)
        out.append(TrialOutcome(method, value, trial, report.sum_rate, report.iterations,
                                report.termination, cs.digest()))
    return out


def _summarize(param: str, method: str, value, outcomes: list) -> SweepRow:
    ok = [o for o in outcomes if not o.failed]
    rates = np.array([o.sum_rate for o in ok])
    iters = np.array([o.iterations for o in ok])
    return SweepRow(
        method=method,
        param=param,
        value=value,
        mean_sum_rate=float(rates.mean()) if ok else math.nan,
        std_sum_rate=float(rates.std()) if ok else math.nan,
        trials=len(outcomes),
        mean_iters=float(iters.mean()) if ok else math.nan,
        failures=len(outcomes) - len(ok),
    )


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    """Run every (value, trial) cell for all requested methods.

    ``jobs > 1`` spreads trials over worker processes; results do not depend
    on ``jobs`` because each trial owns its seed.
    """
    spec.check()
    tasks = []
    for value in spec.values:
        config = apply_value(spec.config, spec.param, value)
        check(config, spec.geometry)
        for t in range(spec.trials):
            tasks.append((config, spec.geometry, spec.seed, t, value, tuple(spec.methods)))

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(_cell_task, tasks))
    else:
        batches = [_cell_task(task) for task in tasks]
    outcomes = [o for batch in batches for o in batch]

    for value in spec.values:
        digests = {o.trial: set() for o in outcomes if o.value == value}
        for o in outcomes:
            if o.value == value:
                digests[o.trial].add(o.channel_digest)
        for t, seen in sorted(digests.items()):
            log.debug("%s=%s trial %d channel %s", spec.param, value, t, ",".join(sorted(seen)))
            if len(seen) != 1:
                raise RuntimeError(f"methods saw different channels at trial {t}")

    result = SweepResult(outcomes=outcomes)
    for method in spec.methods:
        for value in spec.values:
            cell = [o for o in outcomes if o.method == method and o.value == value]
            row = _summarize(spec.param, method, value, cell)
            if row.all_failed:
                log.warning("all %d trials failed for %s at %s=%s", row.trials, method, spec.param, value)
            result.rows.append(row)
    return result


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def format_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in result.rows:
        writer.writerow([r.method, r.param, _fmt(r.value), _fmt(r.mean_sum_rate), _fmt(r.std_sum_rate),
                         r.trials, _fmt(r.mean_iters), r.failures])
    return buf.getvalue()


def emit_csv(result: SweepResult, path) -> None:
    path = Path(path)
    try:
        path.write_text(format_csv(result))
    except OSError as exc:
        raise OSError(f"cannot write sweep CSV to {path}: {exc}") from exc


def parse_csv(text: str) -> SweepResult:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    rows = []
    for fields in reader:
        method, param, value, mean, std, trials, iters, failures = fields
        num = int(value) if value.lstrip("-").isdigit() else float(value)
        rows.append(SweepRow(method, param, num, float(mean), float(std), int(trials), float(iters), int(failures)))
    return SweepResult(rows=rows)

"""Run orchestration, persistence of run artifacts, and amplitude bisection."""

from __future__ import annotations

import enum
import json
import math
import time as _time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .checkpoint import GridMismatchError, checkpoint_save, read_checkpoint
from .config import ScenarioSpec, dump_config
from .diagnostics import (
    DiagnosticsLedger,
    Energetics,
    audit_energy,
    bootstrap_check,
    dissipation_rate,
    global_regularity_monitor,
    gradu4_update,
    magnetic_lq_update,
    serrin_update,
    smallness_check,
)
from .fields import NonFiniteFieldError
from .initial import generate_initial_data, make_grid
from .solver import NaNFault, SolverFault, State, VacuumFault, cfl_dt, step_with_report

__all__ = [
    "Termination",
    "RunResult",
    "CSV_COLUMNS",
    "run_scenario",
    "BisectReport",
    "bisect_threshold",
]

CSV_COLUMNS = (
    "time", "kinetic", "magnetic", "thermal", "viscous_diss", "ohmic_diss", "res36", "res313",
    "serrin_int", "gradu4_int", "Hq_sup", "Hq_int", "E_sup", "rho_min", "rho_max", "theta_min",
)


class Termination(str, enum.Enum):
    horizon_reached = "horizon_reached"
    nan_fault = "nan_fault"
    vacuum_fault = "vacuum_fault"
    user_stop = "user_stop"


@dataclass(eq=False)
class RunResult:
    state: State
    ledger: DiagnosticsLedger
    termination: Termination
    termination_time: float
    steps: int
    wall_time: float
    summary: dict
    rows: list = field(default_factory=list)
    fault_message: str | None = None
    out_dir: Path | None = None

    @property
    def verdict(self) -> str:
        return self.summary["verdict"]["label"]


def _fmt(x: float) -> str:
    return repr(float(x))


def _row(ledger: DiagnosticsLedger, state: State, budget, residuals: bool = True) -> list[float]:
    nan = math.nan
    b = budget
    return [
        state.time,
        b.kinetic if b else nan,
        b.magnetic if b else nan,
        b.thermal if b else nan,
        b.viscous_dissipation if b else nan,
        b.ohmic_dissipation if b else nan,
        b.identity_residual_36 if b and residuals else nan,
        b.identity_residual_313 if b and residuals else nan,
        ledger.serrin_integral,
        ledger.gradu4_integral,
        ledger.Hq_sup,
        ledger.Hq_integral,
        ledger.E_sup,
        ledger.rho_min,
        ledger.rho_max,
        ledger.theta_min,
    ]


def write_csv(path: Path, rows: list[list[float]]):
    lines = [",".join(CSV_COLUMNS)]
    lines += [",".join(_fmt(v) for v in r) for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def _json_safe(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


class _Observer:
    """Per-step ledger bookkeeping; one instance per run."""

    def __init__(self, spec: ScenarioSpec, ledger: DiagnosticsLedger):
        self.spec = spec
        self.constants = spec.constants.build()
        self.config = spec.scheme.build()
        self.ledger = ledger
        self.prev: Energetics | None = None

    def observe(self, state: State, dt: float) -> Energetics:
        led = self.ledger
        e = Energetics.of(state, self.constants)
        gradu4_update(led, e.grad_u_sq, e.grad_H_sq, self.constants, dt)
        serrin_update(led, state, dt)
        magnetic_lq_update(led, state, dt)
        led.observe_extrema(state)
        led.mass = e.mass
        led.time = state.time
        return e

    def audit(self, prev_state: State, prev_e: Energetics, state: State, e: Energetics, dt: float):
        c, cfg = self.constants, self.config
        hermite = self.spec.diagnostics.hermite_audit
        rates = ((dissipation_rate(prev_state, c, cfg), dissipation_rate(state, c, cfg))
                 if hermite and dt > 0 else (0.0, 0.0))
        rep = audit_energy(prev_state, state, dt, c, cfg, hermite=hermite, _cache=(prev_e, e, *rates))
        self.ledger.budget.append(rep)
        return rep


def _sidecar(path: Path) -> Path:
    return path.with_suffix(".json")


def _summary(spec: ScenarioSpec, initial: State, ledger: DiagnosticsLedger, termination,
             t_end: float, steps: int, wall: float, fault: str | None) -> dict:
    c = spec.constants.build()
    M = spec.diagnostics.M
    small = smallness_check(initial, c, M)
    boot = bootstrap_check(M, small.C0, small.grad_u0_sq, small.grad_H0_sq, c.mu, c.nu)
    verdict = global_regularity_monitor(ledger)
    led = ledger.to_dict()
    led.pop("budget")
    return _json_safe({
        "spec": dump_config_dict(spec),
        "termination": termination.value,
        "termination_time": t_end,
        "fault": fault,
        "steps": steps,
        "wall_time": wall,
        "smallness": asdict(small),
        "bootstrap_inputs": {"M": M, "C0": small.C0, "grad_u0_sq": small.grad_u0_sq,
                             "grad_H0_sq": small.grad_H0_sq, "mu": c.mu, "nu": c.nu},
        "bootstrap": asdict(boot),
        "verdict": {**asdict(verdict), "label": verdict.label},
        "ledger": led,
        "mass_drift_rel": (ledger.mass - ledger.mass0) / ledger.mass0 if ledger.mass0 else 0.0,
    })


def dump_config_dict(spec: ScenarioSpec) -> dict:
    import yaml

    return yaml.safe_load(dump_config(spec))


def run_scenario(
    spec: ScenarioSpec,
    out_dir: str | Path | None = None,
    resume: str | Path | None = None,
    should_stop: Callable[[State, int], bool] | None = None,
) -> RunResult:
    """Step to the horizon or a fault.  Faults end the run; they never raise."""
    t_wall = _time.perf_counter()
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    c = spec.constants.build()
    cfg = spec.scheme.build()
    initial = generate_initial_data(spec)

    if resume is not None:
        resume = Path(resume)
        ck = read_checkpoint(resume, expect_grid=make_grid(spec))
        side = json.loads(_sidecar(resume).read_text())
        if side["spec"] != dump_config_dict(spec):
            raise GridMismatchError(f"{resume}: checkpoint was written by a different scenario")
        state = ck.state
        ledger = DiagnosticsLedger.from_dict(side["ledger"])
        step_no = side["step"]
        rows = side["rows"]
        obs = _Observer(spec, ledger)
        prev_e = Energetics.of(state, c)
    else:
        state = initial
        ledger = DiagnosticsLedger(
            serrin=spec.diagnostics.serrin(), magnetic_q=spec.diagnostics.magnetic_q, mu=c.mu,
        )
        small = smallness_check(initial, c, spec.diagnostics.M)
        ledger.C0, ledger.G0 = small.C0, small.G0
        obs = _Observer(spec, ledger)
        prev_e = obs.observe(state, 0.0)
        ledger.mass0 = prev_e.mass
        step_no = 0
        b0 = audit_energy(state, state, 0.0, c, cfg, hermite=False, _cache=(prev_e, prev_e, 0.0, 0.0))
        ledger.budget.append(b0)
        rows = [_row(ledger, state, b0, residuals=False)]

    T = spec.horizon
    every = spec.output.every
    ck_every = spec.output.checkpoint_every
    termination = None
    fault = None
    last_row_step = step_no
    while termination is None:
        remaining = T - state.time
        if remaining <= 1e-12 * max(T, 1.0):
            termination = Termination.horizon_reached
            break
        if (spec.max_steps is not None and step_no >= spec.max_steps) or (
            should_stop is not None and should_stop(state, step_no)
        ):
            termination = Termination.user_stop
            break
        try:
            dt = cfg.fixed_dt if cfg.fixed_dt is not None else cfl_dt(state, cfg, c)
            if dt >= remaining or remaining - dt < 1e-9 * dt:
                dt = remaining
            new, rep = step_with_report(state, cfg, c, dt)
        except VacuumFault as exc:
            termination, fault = Termination.vacuum_fault, str(exc)
            break
        except (NaNFault, NonFiniteFieldError, FloatingPointError) as exc:
            termination, fault = Termination.nan_fault, str(exc)
            break
        except SolverFault as exc:
            termination, fault = Termination.nan_fault, str(exc)
            break
        step_no += 1
        ledger.theta_min_before_clip = min(ledger.theta_min_before_clip, rep.theta_min_before_clip)
        ledger.clipped_mass_total += rep.clipped_mass
        heat = float(np.sum(new.rho.data * new.theta.data) * new.grid.cell_volume)
        if rep.clipped_mass > 0:
            ratio = rep.clipped_mass / heat if heat > 0 else math.inf
            ledger.clipped_mass_max_ratio = max(ledger.clipped_mass_max_ratio, ratio)
        e = obs.observe(new, dt)
        at_end = T - new.time <= 1e-12 * max(T, 1.0)
        if step_no % every == 0 or at_end:
            b = obs.audit(state, prev_e, new, e, dt)
            rows.append(_row(ledger, new, b))
            last_row_step = step_no
        state, prev_e = new, e
        if out is not None and ck_every and step_no % ck_every == 0:
            path = out / f"state_{step_no:06d}.mhd3"
            checkpoint_save(state, path, c)
            _sidecar(path).write_text(json.dumps({
                "step": step_no, "spec": dump_config_dict(spec),
                "ledger": ledger.to_dict(), "rows": rows,
            }))

    if last_row_step != step_no and rows:
        # close the series on the final state when it fell between ticks
        e = Energetics.of(state, c)
        b = audit_energy(state, state, 0.0, c, cfg, hermite=False, _cache=(e, e, 0.0, 0.0))
        rows.append(_row(ledger, state, b, residuals=False))
    wall = _time.perf_counter() - t_wall
    summary = _summary(spec, initial, ledger, termination, state.time, step_no, wall, fault)
    if out is not None:
        write_csv(out / "timeseries.csv", rows)
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return RunResult(
        state=state,
        ledger=ledger,
        termination=termination,
        termination_time=state.time,
        steps=step_no,
        wall_time=wall,
        summary=summary,
        rows=rows,
        fault_message=fault,
        out_dir=out,
    )


# -- bisection ------------------------------------------------------------------


@dataclass
class BisectReport:
    status: str  # "bisected" | "degenerate" | "same_verdict"
    lo: float
    hi: float
    critical_scale: float | None
    critical_product: float | None
    iterations: int
    trials: list  # (scale, verdict) in evaluation order
    monotone: bool

    def to_dict(self) -> dict:
        return _json_safe(asdict(self))


def _verdict(spec: ScenarioSpec, c: float) -> str:
    res = run_scenario(spec.scaled(c))
    if res.termination in (Termination.nan_fault, Termination.vacuum_fault):
        return f"bound_exceeded(fault:{res.termination.value})"
    return res.verdict


def _is_monotone(trials) -> bool:
    ordered = sorted(trials)
    flags = [v != "within_theory" for _, v in ordered]
    # one switch at most, in either direction
    switches = sum(1 for a, b in zip(flags, flags[1:]) if a != b)
    return switches <= 1


def bisect_threshold(
    spec: ScenarioSpec,
    lo: float,
    hi: float,
    max_iter: int = 12,
    rel_tol: float = 0.02,
    verdict_fn: Callable[[ScenarioSpec, float], str] | None = None,
) -> BisectReport:
    """Locate the amplitude scale where the monitor verdict changes."""
    verdict_fn = _verdict if verdict_fn is None else verdict_fn
    if lo > hi:
        raise ValueError("need lo <= hi")
    c = spec.constants.build()

    def product(scale):
        return smallness_check(generate_initial_data(spec.scaled(scale)), c, spec.diagnostics.M).product

    v_lo = verdict_fn(spec, lo)
    trials = [(lo, v_lo)]
    if lo == hi:
        return BisectReport("degenerate", lo, hi, None, None, 0, trials, True)
    v_hi = verdict_fn(spec, hi)
    trials.append((hi, v_hi))
    small_lo = v_lo == "within_theory"
    if small_lo == (v_hi == "within_theory"):
        return BisectReport("same_verdict", lo, hi, None, None, 0, trials, True)
    a, b = lo, hi
    it = 0
    while it < max_iter and (b - a) > rel_tol * max(abs(b), 1e-300):
        mid = 0.5 * (a + b)
        v = verdict_fn(spec, mid)
        trials.append((mid, v))
        if (v == "within_theory") == small_lo:
            a = mid
        else:
            b = mid
        it += 1
    crit = 0.5 * (a + b)
    return BisectReport("bisected", a, b, crit, product(crit), it, trials, _is_monotone(trials))

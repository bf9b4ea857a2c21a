"""Run orchestration and the deterministic output layout shared by every command."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from bsq import analysis, io
from bsq.config import RunConfig
from bsq.diagnostics import TIMESERIES_COLUMNS
from bsq.dynamics import State, Trajectory, make_initial, run
from bsq.spectral import GridSpec, forward

COMPONENT_NAMES = ("x", "y", "z")


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    limit: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} value={float(self.value)!r} limit={float(self.limit)!r}"


@dataclass
class RunResult:
    config: RunConfig
    trajectory: Trajectory
    initial: State
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)


def initial_state(cfg: RunConfig) -> State:
    ic = cfg.ic
    kind = ic.pop("kind")
    return make_initial(kind, cfg.grid, cfg["R"], **ic)


def run_checks(initial: State, traj: Trajectory, cfg: RunConfig) -> list:
    """Invariants every run must satisfy; one :class:`Check` per line of summary.txt."""
    final = traj.final_state
    checks = []
    div = final.u.divergence_residual()
    checks.append(Check("divergence_free", div <= 1e-12, div, 1e-12))
    outside = ~final.grid.ball_mask(cfg["R"])
    leak = float(max(np.abs(final.u.coeffs[:, outside]).max(initial=0.0),
                     np.abs(final.theta.coeffs[outside]).max(initial=0.0)))
    checks.append(Check("band_limit", leak == 0.0, leak, 0.0))
    drift = abs(float(np.real(final.theta.mean - initial.theta.mean)))
    checks.append(Check("theta_mean_drift", drift <= 1e-12, drift, 1e-12))
    finite = all(r.is_finite() for r in traj.records)
    checks.append(Check("records_finite", finite, float(finite), 1.0))
    mon = analysis.blowup_monitor(traj.records)
    checks.append(Check("integrals_monotone", mon.monotone and mon.start_at_zero,
                        float(mon.monotone and mon.start_at_zero), 1.0))
    checks.append(Check("bmo_le_2_linf", mon.bmo_linf_ok, mon.bmo_linf_max_ratio, 2.0))
    return checks


def execute(cfg: RunConfig) -> RunResult:
    init = initial_state(cfg)
    traj = run(init, cfg.spec, cfg.stepper, cfg["t_end"], every=cfg["diagnostics.every"],
               ceiling=cfg["blowup.ceiling"], bmo_depth=cfg.bmo_depth)
    return RunResult(cfg, traj, init, run_checks(init, traj, cfg))


def timeseries_csv(traj: Trajectory) -> str:
    return io.csv_text(TIMESERIES_COLUMNS, [r.timeseries_row() for r in traj.records])


def summary_text(result: RunResult) -> str:
    cfg, traj = result.config, result.trajectory
    lines = [
        f"system={cfg['system']}",
        f"grid={cfg['grid.dim']}D n={cfg['grid.n']} R={io.fmt17(cfg['R'])}",
        f"steps={len(traj.dts)} t_final={io.fmt17(traj.final_state.t)} records={len(traj.records)}",
    ]
    if traj.flagged:
        lines.append(f"BLOWUP_SIGNAL t={io.fmt17(traj.blowup_t)} reason={traj.blowup_reason}")
    lines += [c.line() for c in result.checks]
    return "\n".join(lines) + "\n"


def emit_outputs(result: RunResult, out_dir=None) -> Path:
    """Write resolved_config.txt, timeseries.csv, final snapshots and summary.txt."""
    out = Path(out_dir if out_dir is not None else result.config["output.dir"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise io.OutputError(f"cannot create {out}: {exc}") from exc
    with io.output_lock(out):
        io.atomic_write(out / "resolved_config.txt", result.config.serialize())
        io.atomic_write(out / "timeseries.csv", timeseries_csv(result.trajectory))
        final = result.trajectory.final_state
        up = final.u.physical()
        for i in range(final.grid.dim):
            io.write_snapshot(out / f"u_{COMPONENT_NAMES[i]}.bsq", up[i], final.t)
        io.write_snapshot(out / "theta.bsq", final.theta.physical(), final.t)
        io.atomic_write(out / "summary.txt", summary_text(result))
    return out


def load_state(run_dir) -> State:
    """Reload the final-state snapshots written by :func:`emit_outputs`."""
    run_dir = Path(run_dir)
    theta, t = io.read_snapshot(run_dir / "theta.bsq")
    grid = GridSpec(theta.ndim, theta.shape[0])
    comps = [io.read_snapshot(run_dir / f"u_{COMPONENT_NAMES[i]}.bsq")[0] for i in range(grid.dim)]
    return State(forward(np.stack(comps), grid), forward(theta, grid), t)


class CsvRecord:
    """Attribute view of one timeseries.csv row, for :func:`analysis.blowup_monitor`."""

    _map = {"u_L2": "u_l2", "u_Hs": "u_hs", "theta_Hs": "theta_hs", "curl_u_Linf": "curl_u_linf",
            "curl_u_BMO": "curl_u_bmo", "grad_theta_Linf": "grad_theta_linf",
            "grad_theta_BMO": "grad_theta_bmo", "I_BKM": "I_bkm", "I_curl": "I_curl",
            "I_linf": "I_linf"}

    def __init__(self, header, row):
        for name, value in zip(header, row):
            setattr(self, self._map.get(name, name), float(value))
        self.flagged = False


def read_timeseries(run_dir) -> list:
    header, rows = io.read_csv(Path(run_dir) / "timeseries.csv")
    if tuple(header) != TIMESERIES_COLUMNS:
        raise io.OutputError(f"{run_dir}/timeseries.csv has unexpected header {header}")
    return [CsvRecord(header, r) for r in rows]

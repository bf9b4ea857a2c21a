"""Desk-scale property suite behind ``bsq selftest``.

Each check is a small version of one acceptance property. Results go to
``selftest_checks.csv`` together with the raw artifacts (a short time series
and probe ratios). Nothing time- or host-dependent is written, so two runs on
the same machine produce byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from bsq import analysis, io, norms, oracles
from bsq.diagnostics import TIMESERIES_COLUMNS
from bsq.dynamics import ForcingSpec, State, StepperConfig, SystemSpec, make_initial, rhs, run, step
from bsq.orchestrate import Check
from bsq.spectral import (
    GridSpec,
    gradient,
    inner,
    leray_project,
    random_scalar,
    random_vector,
    truncate,
)

CHECK_COLUMNS = ("name", "status", "value", "limit")


def operator_checks(cases: int = 16, seed0: int = 0) -> list:
    """Plancherel, the gradient/Riesz identity, truncation and Leray properties."""
    grids = [GridSpec(2, 16), GridSpec(2, 32), GridSpec(3, 8)]
    worst = {"plancherel": 0.0, "grad_identity": 0.0, "truncation": 0.0, "leray": 0.0}
    for c in range(cases):
        grid = grids[c % len(grids)]
        f = random_scalar(grid, [seed0, c], mean_zero=True, decay=1.0)
        phys = f.physical()
        l2 = math.sqrt(np.sum(phys**2) * grid.cell_volume)
        worst["plancherel"] = max(worst["plancherel"], abs(l2 - norms.l2_norm(f)) / l2)
        s = 1.0 + (c % 3) * 0.5
        lhs = norms.sobolev_norm(gradient(f), s - 1, homogeneous=True)
        rhs_ = norms.sobolev_norm(f, s, homogeneous=True)
        worst["grad_identity"] = max(worst["grad_identity"], abs(lhs - rhs_) / rhs_)
        R = 1.5 + c % 2
        tf = truncate(f, R)
        err = max(np.abs(truncate(tf, R).coeffs - tf.coeffs).max(),
                  abs(norms.l2_norm(f) ** 2 - norms.l2_norm(tf) ** 2 - norms.l2_norm(f - tf) ** 2)
                  / norms.l2_norm(f) ** 2)
        worst["truncation"] = max(worst["truncation"], err)
        v = random_vector(grid, [seed0, c, 1])
        p = leray_project(v)
        idem = np.abs(leray_project(p).coeffs - p.coeffs).max()
        orth = abs(inner(p, v - p)) / norms.l2_norm(v) ** 2
        worst["leray"] = max(worst["leray"], idem, orth, p.divergence_residual())
    return [Check(f"operators_{k}", v <= 1e-12, v, 1e-12) for k, v in worst.items()]


def rhs_oracle_checks(seeds=(0, 1), n: int = 16, R: float = 5.0) -> list:
    grid = GridSpec(2, n)
    spec = SystemSpec(nu=0.01, kappa=0.02, R=R)
    worst = 0.0
    for seed in seeds:
        u = truncate(random_vector(grid, [seed, 7], divergence_free=True), R)
        th = truncate(random_scalar(grid, [seed, 8]), R)
        du, dth = rhs(State(u, th), spec)
        ou, oth = oracles.galerkin_rhs(u.coeffs, th.coeffs, spec.nu, spec.kappa, R)
        scale = max(np.abs(ou).max(), np.abs(oth).max())
        worst = max(worst, np.abs(du.coeffs - ou).max() / scale, np.abs(dth.coeffs - oth).max() / scale)
    return [Check("rhs_oracle", worst <= 1e-10, worst, 1e-10)]


def commutator_checks(n: int = 16) -> list:
    grid = GridSpec(2, n)
    u = random_vector(grid, [3, 0], divergence_free=True, band=4)
    th = random_scalar(grid, [3, 1], band=4)
    fast = norms.commutator(u, th, 1.5).coeffs
    ref = oracles.commutator(u.coeffs, th.coeffs, 1.5)
    err = np.abs(fast - ref).max() / np.abs(ref).max()
    zero = np.abs(norms.commutator(u, th, 0.0).coeffs).max()
    return [Check("commutator_oracle", err <= 1e-10, err, 1e-10),
            Check("commutator_s0_zero", zero <= 1e-13, zero, 1e-13)]


def bmo_checks() -> list:
    grid = GridSpec(2, 8)
    f = random_scalar(grid, 11)
    fast = norms.bmo_norm(f, 2)
    ref = oracles.bmo_all_cubes(f.physical()[None], 2)
    err = abs(fast - ref) / ref
    ratio = fast / norms.lebesgue_norm(f, math.inf)
    return [Check("bmo_oracle", err <= 1e-12, err, 1e-12),
            Check("bmo_le_2_linf", ratio <= 2.0, ratio, 2.0)]


def conservation_run(n: int = 32, t_end: float = 0.1, dt: float = 1e-3):
    grid = GridSpec(2, n)
    R = n // 3
    spec = SystemSpec(nu=0.0, kappa=0.0, forcing=ForcingSpec("zero"), R=R)
    init = make_initial("random_spectrum", grid, R, seed=5)
    traj = run(init, spec, StepperConfig("rk4", dt), t_end, every=10)
    r0, r1 = traj.records[0], traj.records[-1]
    du = abs(r1.u_l2 - r0.u_l2) / r0.u_l2
    dth = abs(r1.theta_l2 - r0.theta_l2) / r0.theta_l2
    drift = abs(r1.theta_mean - r0.theta_mean)
    checks = [Check("conservation_u_l2", du <= 1e-8, du, 1e-8),
              Check("conservation_theta_l2", dth <= 1e-8, dth, 1e-8),
              Check("conservation_theta_mean", drift <= 1e-12, drift, 1e-12)]
    return checks, traj


def viscous_balance_checks(n: int = 32, t_end: float = 0.2, dt: float = 2e-3) -> list:
    grid = GridSpec(2, n)
    spec = SystemSpec(nu=0.01, R=n // 3)
    traj = run(make_initial("taylor_green", grid, spec.R), spec, StepperConfig("rk4_if", dt), t_end, every=1)
    rel = analysis.energy_balance_check(traj, spec).relative_per_time
    return [Check("viscous_balance", rel <= 1e-6, rel, 1e-6)]


def order_checks(n: int = 32, t_end: float = 0.5) -> list:
    grid = GridSpec(2, n)
    spec = SystemSpec(nu=0.0, R=n // 3)
    init = make_initial("taylor_green", grid, spec.R, theta_amplitude=1.0)
    finals = []
    for dt in (0.1, 0.05, 0.025, 0.0125):
        tr = run(init, spec, StepperConfig("rk4", dt), t_end, every=10**6)
        finals.append(tr.final_state)
    errs = [math.hypot(norms.l2_norm(a.u - b.u), norms.l2_norm(a.theta - b.theta))
            for a, b in zip(finals[:-1], finals[1:])]
    slope = math.log2(errs[-2] / errs[-1])
    # exactness of the integrating factor on pure diffusion
    dspec = SystemSpec(nu=0.05, kappa=0.03, forcing=ForcingSpec("zero"), R=n // 3)
    st = make_initial("single_mode", grid, dspec.R, k=(3, 2))
    h = 0.3
    new = step(st, dspec, StepperConfig("rk4_if"), h)
    exact_u = st.u.coeffs * np.exp(-dspec.nu * grid.k2 * h)
    exact_t = st.theta.coeffs * np.exp(-dspec.kappa * grid.k2 * h)
    err_if = max(np.abs(new.u.coeffs - exact_u).max() / np.abs(exact_u).max(),
                 np.abs(new.theta.coeffs - exact_t).max() / np.abs(exact_t).max())
    return [Check("rk4_order", abs(slope - 4.0) <= 0.2, slope, 0.2),
            Check("rk4_if_diffusion_exact", err_if <= 1e-14, err_if, 1e-14)]


def transport_checks(n: int = 32, t_end: float = 0.5) -> list:
    grid = GridSpec(2, n)
    spec = SystemSpec(nu=0.0, R=n // 3)
    tr = run(make_initial("taylor_green", grid, spec.R), spec, StepperConfig("rk4", 5e-3), t_end,
             every=5, keep_states=True)
    rep = analysis.grad_theta_bound_check(tr, spec, (2, 4), tol=0.01)
    worst = max(float(r.max()) for r in rep.ratios.values())
    return [Check("transport_bound", rep.holds, worst, 1.01),
            Check("gradient_identity", rep.identity_residual <= 1e-10, rep.identity_residual, 1e-10)]


def probe_checks(n_draws: int = 8):
    ens = analysis.Ensemble(seeds=tuple(range(n_draws)), resolutions=(16, 32), band=4)
    rep = analysis.inequality_probe("kato_ponce", ens)
    return [Check("kp_ratios_finite", rep.all_finite, float(rep.all_finite), 1.0)], rep


def run_selftest(out_dir, verbose: bool = True) -> bool:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    checks = []
    checks += operator_checks()
    checks += rhs_oracle_checks()
    checks += commutator_checks()
    checks += bmo_checks()
    cons, traj = conservation_run()
    checks += cons
    checks += viscous_balance_checks()
    checks += order_checks()
    checks += transport_checks()
    pc, probe = probe_checks()
    checks += pc
    with io.output_lock(out):
        io.atomic_write(out / "selftest_checks.csv",
                        io.csv_text(CHECK_COLUMNS, [(c.name, "PASS" if c.passed else "FAIL",
                                                     float(c.value), float(c.limit)) for c in checks]))
        io.atomic_write(out / "selftest_timeseries.csv",
                        io.csv_text(TIMESERIES_COLUMNS, [r.timeseries_row() for r in traj.records]))
        io.atomic_write(out / "selftest_probe_kp.csv", probe.to_csv())
    if verbose:
        for c in checks:
            print(c.line())
    return all(c.passed for c in checks)

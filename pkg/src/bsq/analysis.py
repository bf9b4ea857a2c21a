"""Verification harness built on trajectories and field ensembles.

Energy balances, truncation (Cauchy-in-R) studies, blow-up monitors, the
transported-gradient bound, ratio probes for the commutator and Lipschitz
inequalities, and the Bihari local-existence time.

None of the inequality constants are known numerically. Probes therefore
report ratios with every constant set to one; empirical constants are stored
in ``calibration.json`` and only their stability is checked.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.interpolate import CubicSpline

from bsq import norms
from bsq._backend import kernels
from bsq.dynamics import SystemSpec, StepperConfig, Trajectory, make_initial, run
from bsq.errors import ConfigurationError, NotApplicableError, ParameterError, ReportError
from bsq.spectral import (
    GridSpec,
    SpectralField,
    VectorField,
    _to_physical,
    advect,
    curl,
    dealias,
    forward,
    gradient,
    jacobian,
    random_scalar,
    random_vector,
    truncate,
)

# ---------------------------------------------------------------- calibration


def load_calibration() -> dict:
    text = resources.files("bsq").joinpath("calibration.json").read_text()
    return json.loads(text)


# ---------------------------------------------------------------- energy balance


def _cumulative(values: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Running integral from t[0]: not-a-knot cubic spline, fourth order in the spacing."""
    if len(t) >= 4:
        return CubicSpline(t, values).antiderivative()(t)
    return cumulative_trapezoid(values, x=t, initial=0.0)


@dataclass
class EnergyBalanceReport:
    times: np.ndarray
    u_residual: np.ndarray
    theta_residual: np.ndarray
    u_relative: float
    theta_relative: float
    max_interval_residual: float
    X: np.ndarray
    below_ceiling: bool
    flagged: bool = False

    @property
    def relative_per_time(self) -> float:
        span = self.times[-1] - self.times[0]
        return max(self.u_relative, self.theta_relative) / max(span, 1e-300)


def energy_balance_check(traj: Trajectory, spec: SystemSpec, ceiling: float = 1e6) -> EnergyBalanceReport:
    """L2 balances d/dt(|u|^2/2) + nu|grad u|^2 - (theta f, u) = 0 and the theta analogue.

    Time integrals use a cubic-spline quadrature over the record times, so
    the trajectory should be recorded every step.
    """
    recs = traj.records
    if len(recs) < 2:
        raise ReportError("energy balance needs at least two records")
    t = np.array([r.t for r in recs])
    Eu = np.array([0.5 * r.u_l2**2 for r in recs])
    Et = np.array([0.5 * r.theta_l2**2 for r in recs])
    Du = np.array([spec.nu * r.grad_u_l2**2 for r in recs])
    Dt = np.array([spec.kappa * r.grad_theta_l2**2 for r in recs])
    W = np.array([r.buoyancy_work for r in recs])

    int_u = _cumulative(Du - W, t)
    int_t = _cumulative(Dt, t)
    res_u = Eu - Eu[0] + int_u
    res_t = Et - Et[0] + int_t
    scale_u = Eu[0] + _cumulative(np.abs(Du), t)[-1] + _cumulative(np.abs(W), t)[-1]
    scale_t = Et[0] + _cumulative(Dt, t)[-1]
    rel_u = float(np.abs(res_u).max() / scale_u) if scale_u > 0 else 0.0
    rel_t = float(np.abs(res_t).max() / scale_t) if scale_t > 0 else 0.0
    X = np.array([r.X for r in recs])
    return EnergyBalanceReport(
        times=t,
        u_residual=res_u,
        theta_residual=res_t,
        u_relative=rel_u,
        theta_relative=rel_t,
        max_interval_residual=float(max(np.abs(np.diff(res_u)).max(), np.abs(np.diff(res_t)).max())),
        X=X,
        below_ceiling=bool(np.all(np.sqrt([r.u_hs**2 for r in recs]) <= ceiling)),
        flagged=traj.flagged,
    )


# ---------------------------------------------------------------- Cauchy in R


@dataclass
class ConvergenceStudyResult:
    R_list: list
    ref_R: float
    Y: np.ndarray  # Y[i, j] over R_all = R_list + [ref_R]
    R_all: list
    Y_ref: np.ndarray  # Y(R, ref) for R in R_list
    epsilon_hat: float
    lift: dict = field(default_factory=dict)  # s' -> (max actual, max bound, holds)
    M: float = 0.0

    def is_decreasing(self) -> bool:
        y = self.Y_ref
        return bool(np.all(np.diff(y) < 0))


def _pair_distance(a, b) -> np.ndarray:
    out = []
    for sa, sb in zip(a.states, b.states):
        out.append(norms.l2_norm(sa.u - sb.u) + norms.l2_norm(sa.theta - sb.theta))
    return np.array(out)


def truncation_convergence_study(grid: GridSpec, spec: SystemSpec, stepper: StepperConfig,
                                 ic: dict, R_list: Sequence[float], t_end: float,
                                 ref_R: float | None = None, every: int = 10,
                                 s_primes: Sequence[float] = (0.5, 1.0, 1.5)) -> ConvergenceStudyResult:
    """Solve at each radius from the same initial data and compare in sup_t L2.

    ``ic`` holds keyword arguments for :func:`make_initial`. The time step
    must be fixed so differences are due to truncation alone.
    """
    if stepper.dt is None:
        raise ConfigurationError("the convergence study needs a fixed dt (not CFL-adaptive)")
    R_list = [float(r) for r in R_list]
    ref_R = float(ref_R if ref_R is not None else max(R_list))
    R_all = list(R_list) + ([ref_R] if ref_R not in R_list else [])
    for R in R_all:
        if R > grid.n_points / 3.0:
            raise ConfigurationError(f"R={R} exceeds n_points/3 on {grid}")
    ic = dict(ic)
    kind = ic.pop("kind")
    trajs = {}
    for R in R_all:
        if R in trajs:
            continue
        sp = SystemSpec(spec.nu, spec.kappa, spec.forcing, R, spec.s)
        init = make_initial(kind, grid, R, **ic)
        trajs[R] = run(init, sp, stepper, t_end, every=every, keep_states=True)
        if trajs[R].flagged:
            raise ReportError(f"run with R={R} hit a blow-up signal at t={trajs[R].blowup_t}")
    n = len(R_all)
    Y = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if R_all[i] == R_all[j]:
                continue
            Y[i, j] = Y[j, i] = float(_pair_distance(trajs[R_all[i]], trajs[R_all[j]]).max())
    iref = R_all.index(ref_R)
    Y_ref = np.array([Y[R_all.index(R), iref] for R in R_list])
    use = [(R, y) for R, y in zip(R_list, Y_ref) if R != ref_R and y > 0]
    if len(use) >= 2:
        slope = np.polyfit(np.log([r for r, _ in use]), np.log([y for _, y in use]), 1)[0]
        eps = float(-slope)
    else:
        eps = math.nan

    # interpolation lift: ||d||_{H^s'} <= ||d||_{L2}^(1-s'/s) (2M)^(s'/s)
    s = spec.s
    lift = {}
    ref = trajs[ref_R]
    for sp_ in s_primes:
        if not 0 < sp_ < s:
            continue
        theta_ = sp_ / s
        worst_actual, worst_bound, holds = 0.0, 0.0, True
        for R in R_list:
            if R == ref_R:
                continue
            tr = trajs[R]
            M = math.sqrt(max(max(r.X for r in tr.records), max(r.X for r in ref.records)))
            for sa, sb in zip(tr.states, ref.states):
                du = sa.u - sb.u
                dth = sa.theta - sb.theta
                l2 = math.hypot(norms.l2_norm(du), norms.l2_norm(dth))
                actual = math.hypot(norms.sobolev_norm(du, sp_), norms.sobolev_norm(dth, sp_))
                bound = l2 ** (1 - theta_) * (2 * M) ** theta_
                holds &= actual <= bound * (1 + 1e-12)
                worst_actual = max(worst_actual, actual)
                worst_bound = max(worst_bound, bound)
        lift[sp_] = (worst_actual, worst_bound, holds)
    M_ref = math.sqrt(max(r.X for r in ref.records))
    return ConvergenceStudyResult(R_list, ref_R, Y, R_all, Y_ref, eps, lift, M_ref)


def diffusion_tail(theta0: SpectralField, R: float, R_ref: float, kappa: float,
                   times: Sequence[float]) -> float:
    """Closed-form sup_t ||S_R theta(t) - S_R' theta(t)||_{L2} for pure diffusion."""
    grid = theta0.grid
    k2 = grid.k2
    shell = (k2 > min(R, R_ref) ** 2) & (k2 <= max(R, R_ref) ** 2)
    a2 = np.abs(theta0.coeffs) ** 2 * shell
    best = 0.0
    for t in times:
        best = max(best, math.sqrt(grid.volume * float(np.sum(a2 * np.exp(-2 * kappa * k2 * t)))))
    return best


# ---------------------------------------------------------------- blow-up monitor

_MONITOR_FIELDS = ("t", "u_hs", "theta_hs", "curl_u_bmo", "grad_theta_bmo", "curl_u_linf",
                   "grad_theta_linf", "I_bkm", "I_curl", "I_linf")


@dataclass
class MonitorReport:
    times: np.ndarray
    I_bkm: np.ndarray
    I_curl: np.ndarray
    I_linf: np.ndarray
    X: np.ndarray
    monotone: bool
    start_at_zero: bool
    finite: bool
    C_required: float
    C_emp: float | None
    envelope_factor: float
    envelope_ok: bool | None
    bmo_linf_ok: bool
    bmo_linf_max_ratio: float
    recorded_match: float


def gronwall_constant(times: np.ndarray, X: np.ndarray, I_linf: np.ndarray) -> float:
    """Smallest C with X(t) <= X(0) exp(C * (I_linf(t) + t)) on the sampled times."""
    best = 0.0
    for t, x, il in zip(times[1:], X[1:], I_linf[1:]):
        denom = il + (t - times[0])
        if denom > 0 and x > 0 and X[0] > 0:
            best = max(best, math.log(x / X[0]) / denom)
    return best


def blowup_monitor(records, C_emp: float | None = None, envelope_factor: float = 2.0) -> MonitorReport:
    """Blow-up integrals by trapezoid over record times plus the Gronwall envelope.

    ``records`` is a list of :class:`~bsq.diagnostics.DiagnosticsRecord` or any
    objects exposing the same attribute names. With ``C_emp`` given, the run
    passes if its own required constant is at most ``envelope_factor * C_emp``.
    """
    recs = [r for r in records if not getattr(r, "flagged", False)]
    if not recs:
        raise ReportError("no unflagged records to monitor")
    for name in _MONITOR_FIELDS:
        if not hasattr(recs[0], name):
            raise ReportError(f"records lack field {name!r}")
    t = np.array([r.t for r in recs])
    curl_bmo = np.array([r.curl_u_bmo for r in recs])
    gt_bmo = np.array([r.grad_theta_bmo for r in recs])
    I_bkm = cumulative_trapezoid(curl_bmo + gt_bmo, x=t, initial=0.0) if len(t) > 1 else np.zeros(1)
    I_curl = cumulative_trapezoid(curl_bmo, x=t, initial=0.0) if len(t) > 1 else np.zeros(1)
    I_linf = np.array([r.I_linf for r in recs])
    X = np.array([r.u_hs**2 + r.theta_hs**2 for r in recs])
    rec_bkm = np.array([r.I_bkm for r in recs])
    match = float(np.abs(rec_bkm - I_bkm).max() / max(np.abs(I_bkm).max(), 1e-300))

    monotone = all(bool(np.all(np.diff(a) >= 0)) for a in (I_bkm, I_curl, I_linf, rec_bkm))
    at_zero = bool(I_bkm[0] == 0 and I_curl[0] == 0 and I_linf[0] == 0)
    finite = bool(np.all(np.isfinite(np.concatenate([I_bkm, I_curl, I_linf, X]))))
    C_req = gronwall_constant(t, X, I_linf)
    ok = None if C_emp is None else bool(C_req <= envelope_factor * C_emp)

    ratios = []
    bmo_ok = True
    for r in recs:
        bmo_ok &= r.curl_u_bmo <= 2.0 * r.curl_u_linf
        bmo_ok &= r.grad_theta_bmo <= 2.0 * r.grad_theta_linf
        for b, l in ((r.curl_u_bmo, r.curl_u_linf), (r.grad_theta_bmo, r.grad_theta_linf)):
            if l > 0:
                ratios.append(b / l)
    return MonitorReport(t, I_bkm, I_curl, I_linf, X, monotone, at_zero, finite, C_req, C_emp,
                         envelope_factor, ok, bool(bmo_ok), max(ratios, default=0.0), match)


# ---------------------------------------------------------------- transported gradient


@dataclass
class GradThetaReport:
    p_list: list
    times: np.ndarray
    ratios: dict  # p -> array of ||grad theta(t)||_p / (||grad theta0||_p exp(int ||grad u||_inf))
    holds: bool
    identity_residual: float
    tol: float


def remark_identity_residual(u: VectorField, theta: SpectralField) -> float:
    """Relative max difference between grad(u.grad theta) and (u.grad)grad theta + (grad u)^T grad theta.

    The inputs are first restricted to the 2/3 band. Every product is then
    alias-free after dealiasing, so both orders of evaluation represent the
    same band-limited field.
    """
    grid = u.grid
    u, theta = dealias(u), dealias(theta)
    lhs = gradient(advect(u, theta)).physical()
    first = advect(u, gradient(theta)).physical()
    J = _to_physical(jacobian(u), grid)  # [i, j] = d_j u_i
    gt = gradient(theta).physical()
    prods = np.stack([kernels.contract(J[:, j], gt) for j in range(grid.dim)])
    second = VectorField(grid, forward(prods, grid).coeffs * grid.dealias_mask).physical()
    scale = max(np.abs(first).max(), np.abs(second).max(), 1e-300)
    return float(np.abs(lhs - first - second).max() / scale)


def grad_theta_bound_check(traj: Trajectory, spec: SystemSpec, p_list: Sequence[float] = (2, 4),
                           tol: float = 1e-2) -> GradThetaReport:
    """``||grad theta(t)||_p <= ||grad theta0||_p exp(int_0^t ||grad u||_inf) (1 + tol)``."""
    if spec.kappa > 0:
        raise NotApplicableError("the transported-gradient bound needs kappa = 0")
    if not traj.states or len(traj.states) != len(traj.records):
        raise ReportError("grad_theta_bound_check needs states kept at every record")
    recs = traj.records[: len(traj.states)]
    t = np.array([r.t for r in recs])
    gu = np.array([r.grad_u_linf for r in recs])
    integral = cumulative_trapezoid(gu, x=t, initial=0.0) if len(t) > 1 else np.zeros(1)
    growth = np.exp(integral)
    ps = sorted(set(float(p) for p in p_list) | {math.inf})
    ratios = {}
    holds = True
    for p in ps:
        vals = np.array([norms.lebesgue_norm(gradient(s.theta), p) for s in traj.states])
        if vals[0] == 0:
            r = np.where(vals == 0, 0.0, math.inf)
        else:
            r = vals / (vals[0] * growth)
        ratios[p] = r
        holds &= bool(np.all(r <= 1.0 + tol))
    final = traj.states[-1]
    resid = remark_identity_residual(final.u, final.theta)
    return GradThetaReport(ps, t, ratios, holds, resid, tol)


# ---------------------------------------------------------------- ratio probes


@dataclass(frozen=True)
class Ensemble:
    seeds: tuple = tuple(range(32))
    resolutions: tuple = (32, 64)
    dim: int = 2
    s: float = 2.0
    band: float = 8.0
    decay: float = 3.0

    def fields(self, seed: int, n: int, tag: int = 0):
        """Divergence-free u and scalar theta for one draw, identical on every resolution."""
        grid = GridSpec(self.dim, n)
        u = random_vector(grid, [seed, tag, 0], divergence_free=True, band=self.band, decay=self.decay)
        th = random_scalar(grid, [seed, tag, 1], band=self.band, decay=self.decay)
        return u, th


PROBE_KINDS = ("kato_ponce", "fefferman", "lipschitz_F")
COMMUTATOR_COLUMNS = ("seed", "resolution", "s", "lhs", "kp_bound", "feff_bound", "kp_ratio", "feff_ratio")
LIPSCHITZ_COLUMNS = ("seed", "resolution", "s", "branch", "lhs", "bound", "ratio")


@dataclass
class ProbeReport:
    kind: str
    columns: tuple
    rows: list
    summary: dict  # resolution -> {"max": .., "median": ..}
    stable: bool
    spread: float
    all_finite: bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def lipschitz_F(u: VectorField, theta: SpectralField, R: float) -> SpectralField:
    """The truncated transport nonlinearity S_R[(u.grad)theta]."""
    return truncate(advect(u, theta), R)


def inequality_probe(kind: str, ensemble: Ensemble = Ensemble(), stability: float = 0.2) -> ProbeReport:
    """Per-draw ratios lhs/rhs (constants one) over ``ensemble`` at each resolution."""
    if kind not in PROBE_KINDS:
        raise ParameterError(f"unknown probe kind {kind!r}; expected one of {PROBE_KINDS}")
    if ensemble.s <= ensemble.dim / 2:
        raise ParameterError("probes need s > n/2")
    rows = []
    per_res: dict = {}
    for n in ensemble.resolutions:
        ratios = []
        for seed in ensemble.seeds:
            if kind in ("kato_ponce", "fefferman"):
                u, th = ensemble.fields(seed, n)
                op = "bessel" if kind == "kato_ponce" else "riesz"
                pr = norms.commutator_probe(u, th, ensemble.s, op)
                rows.append((seed, n, ensemble.s, pr.lhs_norm, pr.kp_bound, pr.feff_bound,
                             pr.kp_ratio, pr.feff_ratio))
                ratios.append(pr.kp_ratio if kind == "kato_ponce" else pr.feff_ratio)
            else:
                u1, th1 = ensemble.fields(seed, n, 0)
                u2, th2 = ensemble.fields(seed, n, 1)
                R = ensemble.band
                lhs_u = norms.l2_norm(lipschitz_F(u1, th1, R) - lipschitz_F(u2, th1, R))
                b_u = norms.sobolev_norm(th1, ensemble.s) * norms.sobolev_norm(u1 - u2, ensemble.s)
                lhs_t = norms.l2_norm(lipschitz_F(u1, th1, R) - lipschitz_F(u1, th2, R))
                b_t = norms.sobolev_norm(u1, ensemble.s) * norms.sobolev_norm(th1 - th2, ensemble.s)
                r_u = lhs_u / b_u if lhs_u else 0.0
                r_t = lhs_t / b_t if lhs_t else 0.0
                rows.append((seed, n, ensemble.s, "u", lhs_u, b_u, r_u))
                rows.append((seed, n, ensemble.s, "theta", lhs_t, b_t, r_t))
                ratios.extend([r_u, r_t])
        per_res[n] = np.array(ratios)
    summary = {n: {"max": float(r.max()), "median": float(np.median(r))} for n, r in per_res.items()}
    maxima = [v["max"] for v in summary.values()]
    spread = (max(maxima) - min(maxima)) / max(min(maxima), 1e-300)
    finite = all(bool(np.all(np.isfinite(r))) for r in per_res.values())
    columns = LIPSCHITZ_COLUMNS if kind == "lipschitz_F" else COMMUTATOR_COLUMNS
    return ProbeReport(kind, columns, rows, summary, spread <= stability, spread, finite)


def calderon_zygmund_ratio(u: VectorField, max_depth: int | None = None) -> float:
    """``max_ij ||d_j u_i||_BMO / ||curl u||_BMO``."""
    J = _to_physical(jacobian(u), u.grid)
    num = max(norms.bmo_norm(J[i, j], max_depth, u.grid)
              for i in range(u.grid.dim) for j in range(u.grid.dim))
    den = norms.bmo_norm(curl(u), max_depth)
    return num / den if den > 0 else math.inf


def log_sobolev_ratio(f: SpectralField, s: float, max_depth: int | None = None) -> float:
    """``||f||_inf / (1 + ||f||_BMO (1 + log+ ||f||_{H^s}))``."""
    hs = norms.sobolev_norm(f, s)
    logp = math.log(hs) if hs >= 1 else 0.0
    return norms.lebesgue_norm(f, math.inf) / (1 + norms.bmo_norm(f, max_depth) * (1 + logp))


def invariant_ratios(ensemble: Ensemble = Ensemble(), bmo_depth: int = 4) -> dict:
    """Max Calderon-Zygmund and log-Sobolev ratios per resolution over ``ensemble``."""
    out = {}
    for n in ensemble.resolutions:
        cz, ls = [], []
        for seed in ensemble.seeds:
            u, _ = ensemble.fields(seed, n)
            cz.append(calderon_zygmund_ratio(u, bmo_depth))
            ls.append(log_sobolev_ratio(curl(u), ensemble.s, bmo_depth))
        out[n] = {"cz_max": max(cz), "logsob_max": max(ls)}
    return out


# ---------------------------------------------------------------- Bihari predictor


@dataclass(frozen=True)
class PredictorInput:
    X0: float
    nu: float
    C1: float
    C2: float
    C3: float


def blowup_time_predictor(inp: PredictorInput) -> float:
    """Local existence time 2 nu / ((2 C1 + nu C2)(X0 + C3)) from the quadratic energy inequality.

    X0 must be positive; the constants may vanish. Returns ``inf`` when the
    denominator does (the nu = 0, C1 = 0 edge).
    """
    if not (inp.X0 > 0 and math.isfinite(inp.X0)):
        raise ParameterError(f"X0 must be positive and finite, got {inp.X0}")
    for name in ("nu", "C1", "C2", "C3"):
        v = getattr(inp, name)
        if not (v >= 0 and math.isfinite(v)):
            raise ParameterError(f"{name} must be nonnegative and finite, got {v}")
    denom = (2 * inp.C1 + inp.nu * inp.C2) * (inp.X0 + inp.C3)
    if denom == 0:
        return math.inf
    return 2 * inp.nu / denom


def _doubling_time(traj: Trajectory) -> float:
    X = np.array([r.X for r in traj.records])
    hit = np.nonzero(X >= 2 * X[0])[0]
    return float(traj.records[hit[0]].t) if hit.size else math.inf


def calibrate_predictor(traj: Trajectory, nu: float) -> tuple:
    """Fit C1 from the observed growth dX/dt <= (C1/nu) X^2 on ``traj``.

    C2 and C3 are set to zero (forcing absorbed into C1). Returns the
    predictor input and the observed time for X to double (inf if it never does).
    """
    t = np.array([r.t for r in traj.records])
    X = np.array([r.X for r in traj.records])
    if len(t) < 2:
        raise ReportError("calibration needs at least two records")
    dX = np.gradient(X, t)
    C1 = float(np.max(nu * np.clip(dX, 0, None) / X**2))
    return PredictorInput(float(X[0]), nu, C1, 0.0, 0.0), _doubling_time(traj)


@dataclass
class PredictorStudy:
    C1: float
    predicted: np.ndarray
    observed: np.ndarray

    @property
    def conservative_fraction(self) -> float:
        return float(np.mean(self.predicted <= self.observed))

    @property
    def half_time_fraction(self) -> float:
        """Fraction with T/2 <= observed; the Riccati bound guarantees doubling no earlier than T/2."""
        return float(np.mean(0.5 * self.predicted <= self.observed))


def predictor_study(grid: GridSpec, spec: SystemSpec, seeds: Sequence[int], t_end: float,
                    decay_p: float = 4.0, amplitude: float = 1.0) -> PredictorStudy:
    """Predicted existence time against observed X-doubling time over random initial data.

    One C1 (the ensemble maximum) is used for every member. The conservative
    fraction is recorded, not asserted.
    """
    trajs = [run(make_initial("random_spectrum", grid, spec.R, seed=s, decay_p=decay_p,
                              amplitude=amplitude), spec, StepperConfig(), t_end, every=1)
             for s in seeds]
    fits = [calibrate_predictor(tr, spec.nu) for tr in trajs]
    C1 = max(f[0].C1 for f in fits)
    pred = np.array([blowup_time_predictor(PredictorInput(f[0].X0, spec.nu, C1, 0.0, 0.0)) for f in fits])
    obs = np.array([f[1] for f in fits])
    return PredictorStudy(C1, pred, obs)

"""Truncated Boussinesq dynamics: right-hand sides, RK4 steppers and the run loop.

The Galerkin system evolved here is

    du/dt     = -S_R P[(u.grad)u] + nu*Lap(u) + S_R P[theta f]
    dtheta/dt = -S_R[(u.grad)theta] + kappa*Lap(theta)

with P the Leray projector standing in for the pressure gradient and S_R the
sharp Fourier truncation onto |k| <= R. Quadratic products are evaluated
pseudo-spectrally; since R <= N/3 they are alias-free, so the scheme is the
exact Galerkin truncation up to round-off.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

import numpy as np

from bsq import norms
from bsq._backend import kernels
from bsq.diagnostics import DiagnosticsRecord, measure
from bsq.errors import BlowupSignal, ConfigurationError, DimensionError, ParameterError
from bsq.spectral import (
    GridSpec,
    SpectralField,
    VectorField,
    _axes,
    _to_physical,
    check_radius,
    curl,
    forward,
    leray_project,
    random_phases,
)

log = logging.getLogger(__name__)

SYSTEMS = ("B_nu_0", "B_0_kappa", "B_0_0", "full")


@dataclass(frozen=True, eq=False)
class ForcingSpec:
    """Buoyancy direction field f in ``theta * f``.

    ``unit_vector_en`` is the constant last unit vector; ``spectral_field``
    carries an arbitrary time-independent vector field.
    """

    kind: str = "unit_vector_en"
    field: VectorField | None = None

    def __post_init__(self):
        if self.kind not in ("unit_vector_en", "spectral_field", "zero"):
            raise ConfigurationError(f"unknown forcing kind {self.kind!r}")
        if self.kind == "spectral_field" and self.field is None:
            raise ConfigurationError("spectral_field forcing needs a field")

    @property
    def potential_flag(self) -> bool:
        """True when curl f vanishes (to round-off)."""
        if self.kind != "spectral_field":
            return True
        w = curl(self.field).coeffs
        return bool(np.abs(w).max() <= 1e-12 * max(np.abs(self.field.coeffs).max(), 1e-300))

    def buoyancy(self, theta: SpectralField, grid: GridSpec) -> VectorField | None:
        """Coefficients of ``theta * f`` (dealiased), or None for zero forcing."""
        if self.kind == "zero":
            return None
        if self.kind == "unit_vector_en":
            out = np.zeros((grid.dim,) + grid.shape, dtype=complex)
            out[-1] = theta.coeffs
            return VectorField(grid, out)
        tp = theta.physical()
        fp = self.field.physical()
        return VectorField(grid, forward(tp[None] * fp, grid).coeffs * grid.dealias_mask)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    nu: float = 0.01
    kappa: float = 0.0
    forcing: ForcingSpec = field(default_factory=ForcingSpec)
    R: float = 10.0
    s: float = 3.0

    def __post_init__(self):
        if not (self.nu >= 0 and math.isfinite(self.nu)):
            raise ParameterError(f"nu must be >= 0, got {self.nu}")
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ParameterError(f"kappa must be >= 0, got {self.kappa}")

    @property
    def system(self) -> str:
        if self.nu > 0 and self.kappa == 0:
            return "B_nu_0"
        if self.nu == 0 and self.kappa > 0:
            return "B_0_kappa"
        if self.nu == 0 and self.kappa == 0:
            return "B_0_0"
        return "full"

    @property
    def is_core_system(self) -> bool:
        return self.system != "full"

    def validate_for(self, grid: GridSpec) -> None:
        check_radius(grid, self.R)
        if self.R > grid.n_points / 3.0:
            raise ConfigurationError(
                f"R={self.R} lies outside the dealiased band n_points/3 = {grid.n_points / 3:.3f}"
            )


@dataclass(frozen=True)
class StepperConfig:
    scheme: str = "auto"  # rk4 | rk4_if | auto
    dt: float | None = None  # None selects CFL control
    cfl_safety: float = 0.5
    dt_max: float = 0.01

    def __post_init__(self):
        if self.scheme not in ("rk4", "rk4_if", "auto"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.dt is not None and not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if not 0 < self.cfl_safety <= 1:
            raise ParameterError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if not self.dt_max > 0:
            raise ParameterError(f"dt_max must be positive, got {self.dt_max}")

    def resolve_scheme(self, spec: SystemSpec) -> str:
        if self.scheme != "auto":
            return self.scheme
        return "rk4_if" if (spec.nu > 0 or spec.kappa > 0) else "rk4"


@dataclass(frozen=True, eq=False)
class State:
    u: VectorField
    theta: SpectralField
    t: float = 0.0

    @property
    def grid(self) -> GridSpec:
        return self.u.grid

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u.coeffs)) and np.all(np.isfinite(self.theta.coeffs)))


# ---------------------------------------------------------------- initial data


def _truncated_state(u_raw: VectorField, theta_raw: SpectralField, R: float) -> State:
    mask = u_raw.grid.ball_mask(R)
    u = leray_project(u_raw)
    return State(u.with_coeffs(u.coeffs * mask), theta_raw.with_coeffs(theta_raw.coeffs * mask), 0.0)


def make_initial(kind: str, grid: GridSpec, R: float, *, amplitude: float = 1.0,
                 theta_amplitude: float | None = None, k=(1, 0), decay_p: float = 4.0,
                 seed: int = 0) -> State:
    """Initial state ``u = S_R P u0``, ``theta = S_R theta0``.

    kinds: ``taylor_green``, ``single_mode`` (wavevector ``k``) and
    ``random_spectrum`` (|u0_k| ~ |k|^-decay_p with random phases, rescaled so
    the RMS values of u0 and theta0 equal the requested amplitudes).
    """
    check_radius(grid, R)
    if R > grid.n_points / 3.0:
        raise ConfigurationError(f"R={R} outside the dealiased band n_points/3")
    ta = amplitude if theta_amplitude is None else theta_amplitude
    X = grid.coords
    if kind == "taylor_green":
        if grid.dim == 2:
            x, y = X
            up = np.stack([-np.cos(x) * np.sin(y), np.sin(x) * np.cos(y)])
            tp = np.cos(x)
        else:
            x, y, z = X
            up = np.stack([np.sin(x) * np.cos(y) * np.cos(z),
                           -np.cos(x) * np.sin(y) * np.cos(z),
                           np.zeros_like(x)])
            tp = np.cos(x)
        return _truncated_state(forward(amplitude * up, grid), forward(ta * tp, grid), R)
    if kind == "single_mode":
        kv = np.asarray(k, dtype=float)
        if kv.shape != (grid.dim,) or not np.any(kv):
            raise ParameterError(f"single_mode needs a nonzero {grid.dim}-vector k, got {k}")
        phase = np.tensordot(kv, X, axes=1)
        if grid.dim == 2:
            a = np.array([-kv[1], kv[0]])
        else:
            e = np.eye(3)[int(np.argmin(np.abs(kv)))]
            a = np.cross(kv, e)
        a = a / np.linalg.norm(a)
        up = amplitude * a[:, None, None] * np.cos(phase) if grid.dim == 2 else \
            amplitude * a[:, None, None, None] * np.cos(phase)
        return _truncated_state(forward(up, grid), forward(ta * np.cos(phase), grid), R)
    if kind == "random_spectrum":
        if not decay_p > 0:
            raise ParameterError(f"decay_p must be positive, got {decay_p}")
        rng = np.random.default_rng(seed)
        mag = np.zeros(grid.shape)
        nz = grid.k2 > 0
        mag[nz] = grid.k2[nz] ** (-decay_p / 2.0)
        nyq = np.any(grid.kvec == -(grid.n_points // 2), axis=0)
        mag[nyq] = 0.0
        comps = [mag * np.exp(1j * random_phases(grid, rng)) for _ in range(grid.dim + 1)]
        u0 = leray_project(VectorField(grid, np.stack(comps[: grid.dim])))
        th0 = SpectralField(grid, comps[grid.dim])
        u0 = u0 * _rms_scale(u0, amplitude)
        th0 = th0 * _rms_scale(th0, ta)
        return _truncated_state(u0, th0, R)
    raise ParameterError(f"unknown initial condition kind {kind!r}")


def _rms_scale(f, target: float) -> float:
    rms = norms.l2_norm(f) / math.sqrt(f.grid.volume)
    return target / rms if rms > 0 else 0.0


# ---------------------------------------------------------------- tendencies


class _Operators:
    """Per-(grid, spec) cached arrays used by the time loop."""

    def __init__(self, grid: GridSpec, spec: SystemSpec):
        self.grid = grid
        self.spec = spec
        self.mask = grid.ball_mask(spec.R)
        self.ik = 1j * grid.deriv_kvec
        self.lin_u = -spec.nu * grid.k2
        self.lin_theta = -spec.kappa * grid.k2
        self.axes = _axes(grid)


_OPS_CACHE: dict = {}


def _ops(grid: GridSpec, spec: SystemSpec) -> _Operators:
    key = (grid, id(spec))
    ops = _OPS_CACHE.get(key)
    if ops is None or ops.spec is not spec:
        if len(_OPS_CACHE) > 32:
            _OPS_CACHE.clear()
        ops = _OPS_CACHE[key] = _Operators(grid, spec)
    return ops


def _nonlinear(uc: np.ndarray, tc: np.ndarray, spec: SystemSpec, ops: _Operators):
    """Advective and buoyancy tendencies (no diffusion), as coefficient arrays."""
    grid = ops.grid
    dim = grid.dim
    n = grid.size
    # one batched inverse FFT: u, grad u_i (row-major), grad theta
    stack = np.concatenate([
        uc,
        (ops.ik[None, :] * uc[:, None]).reshape((dim * dim,) + grid.shape),
        ops.ik * tc[None],
    ])
    phys = np.fft.ifftn(stack, axes=ops.axes).real * n
    up = phys[:dim]
    grads = phys[dim:dim + dim * dim].reshape((dim, dim) + grid.shape)
    gtheta = phys[dim + dim * dim:]
    prods = np.empty((dim + 1,) + grid.shape)
    for i in range(dim):
        prods[i] = kernels.contract(up, grads[i])
    prods[dim] = kernels.contract(up, gtheta)
    adv = np.fft.fftn(prods, axes=ops.axes) / n
    adv *= grid.dealias_mask
    nu_u = -adv[:dim]
    buoy = spec.forcing.buoyancy(SpectralField(grid, tc), grid)
    if buoy is not None:
        nu_u = nu_u + buoy.coeffs
    nu_u = kernels.leray_project(nu_u, grid.wavenumbers) * ops.mask
    nu_t = -adv[dim] * ops.mask
    return nu_u, nu_t


def rhs(state: State, spec: SystemSpec):
    """Full tendency ``(du/dt, dtheta/dt)`` of the truncated system."""
    if state.u.grid != state.theta.grid:
        raise DimensionError("u and theta live on different grids")
    grid = state.grid
    spec.validate_for(grid)
    ops = _ops(grid, spec)
    nu_u, nu_t = _nonlinear(state.u.coeffs, state.theta.coeffs, spec, ops)
    du = nu_u + ops.lin_u * state.u.coeffs
    dt_ = nu_t + ops.lin_theta * state.theta.coeffs
    return VectorField(grid, du), SpectralField(grid, dt_)


# ---------------------------------------------------------------- stepping


def _check_finite(uc, tc, t):
    if not (np.all(np.isfinite(uc)) and np.all(np.isfinite(tc))):
        raise BlowupSignal(f"non-finite state at t={t}", t)


def _rk4(uc, tc, h, spec, ops):
    def F(a, b):
        nu, nt = _nonlinear(a, b, spec, ops)
        return nu + ops.lin_u * a, nt + ops.lin_theta * b

    k1u, k1t = F(uc, tc)
    k2u, k2t = F(uc + 0.5 * h * k1u, tc + 0.5 * h * k1t)
    k3u, k3t = F(uc + 0.5 * h * k2u, tc + 0.5 * h * k2t)
    k4u, k4t = F(uc + h * k3u, tc + h * k3t)
    return (uc + (h / 6.0) * (k1u + 2 * k2u + 2 * k3u + k4u),
            tc + (h / 6.0) * (k1t + 2 * k2t + 2 * k3t + k4t))


def _rk4_if(uc, tc, h, spec, ops):
    """Lawson RK4 in the integrating-factor variable; diffusion is exact."""
    Eu = np.exp(ops.lin_u * h)
    Et = np.exp(ops.lin_theta * h)
    Eu2 = np.exp(ops.lin_u * (0.5 * h))
    Et2 = np.exp(ops.lin_theta * (0.5 * h))

    k1u, k1t = _nonlinear(uc, tc, spec, ops)
    k2u, k2t = _nonlinear(Eu2 * (uc + 0.5 * h * k1u), Et2 * (tc + 0.5 * h * k1t), spec, ops)
    k3u, k3t = _nonlinear(Eu2 * uc + 0.5 * h * k2u, Et2 * tc + 0.5 * h * k2t, spec, ops)
    k4u, k4t = _nonlinear(Eu * uc + h * Eu2 * k3u, Et * tc + h * Et2 * k3t, spec, ops)
    new_u = Eu * uc + (h / 6.0) * (Eu * k1u + 2.0 * Eu2 * (k2u + k3u) + k4u)
    new_t = Et * tc + (h / 6.0) * (Et * k1t + 2.0 * Et2 * (k2t + k3t) + k4t)
    return new_u, new_t


def step(state: State, spec: SystemSpec, stepper: StepperConfig, dt: float | None = None) -> State:
    """Advance one RK4 (or integrating-factor RK4) step of size ``dt``."""
    h = stepper.dt if dt is None else dt
    if h is None or not h > 0:
        raise ParameterError(f"step needs dt > 0, got {h}")
    grid = state.grid
    spec.validate_for(grid)
    ops = _ops(grid, spec)
    scheme = stepper.resolve_scheme(spec)
    integrate = _rk4_if if scheme == "rk4_if" else _rk4
    uc, tc = integrate(state.u.coeffs, state.theta.coeffs, h, spec, ops)
    t_new = state.t + h
    _check_finite(uc, tc, t_new)
    uc = uc * ops.mask
    tc = tc * ops.mask
    return State(state.u.with_coeffs(uc), state.theta.with_coeffs(tc), t_new)


def cfl_dt(state: State, spec: SystemSpec, stepper: StepperConfig | None = None,
           safety: float | None = None) -> float:
    """``safety * dx / ||u||_inf`` capped by ``dt_max`` (and an explicit-diffusion limit
    when plain RK4 integrates a diffusive system)."""
    stepper = stepper or StepperConfig()
    safety = stepper.cfl_safety if safety is None else safety
    if not state.is_finite():
        raise BlowupSignal(f"non-finite state at t={state.t}", state.t)
    grid = state.grid
    umax = max(norms.lebesgue_norm(state.u, math.inf), 1e-12)
    dt = min(safety * grid.dx / umax, stepper.dt_max)
    diff = max(spec.nu, spec.kappa)
    if diff > 0 and stepper.resolve_scheme(spec) == "rk4":
        dt = min(dt, safety * 2.78 / (diff * max(spec.R, 1.0) ** 2))
    return dt


# ---------------------------------------------------------------- run loop


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    states: list = field(default_factory=list)
    dts: list = field(default_factory=list)
    final_state: State | None = None
    flagged: bool = False
    blowup_t: float | None = None
    blowup_reason: str = ""

    @property
    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])


def run(initial: State, spec: SystemSpec, stepper: StepperConfig, t_end: float,
        observers: Iterable[Callable] = (), every: int = 10, keep_states: bool = False,
        ceiling: float = 1e6, bmo_depth: int | None = None) -> Trajectory:
    """Integrate from ``initial`` to ``t_end`` recording diagnostics every ``every`` steps.

    A blow-up signal (non-finite values or ``||u||_{H^s} > ceiling``) stops the
    run; the trajectory is returned with ``flagged=True`` and a flagged copy
    of the last finite record.
    """
    if t_end < initial.t:
        raise ParameterError(f"t_end={t_end} precedes the initial time {initial.t}")
    if every < 1:
        raise ParameterError(f"diagnostics cadence must be >= 1, got {every}")
    grid = initial.grid
    spec.validate_for(grid)
    observers = tuple(observers)
    traj = Trajectory()

    def emit(state, dt):
        prev = traj.records[-1] if traj.records else None
        rec = measure(state, spec, dt, prev, bmo_depth)
        traj.records.append(rec)
        if keep_states:
            traj.states.append(state)
        for obs in observers:
            obs(state, rec)
        return rec

    state = initial
    emit(state, 0.0)
    t0 = initial.t
    nstep = 0
    while True:
        remaining = t_end - state.t
        if remaining <= 1e-12 * max(1.0, abs(t_end)):
            break
        if stepper.dt is not None:
            nfixed = max(1, math.ceil((t_end - t0) / stepper.dt - 1e-9))
            target = t0 + (nstep + 1) * stepper.dt if nstep + 1 < nfixed else t_end
            h = target - state.t
        else:
            try:
                h = min(cfl_dt(state, spec, stepper), remaining)
            except BlowupSignal as sig:
                _flag(traj, sig.t, str(sig))
                break
            target = state.t + h if h < remaining else t_end
        try:
            new = step(state, spec, stepper, h)
        except BlowupSignal as sig:
            _flag(traj, sig.t, str(sig))
            break
        new = State(new.u, new.theta, target)
        nstep += 1
        traj.dts.append(h)
        state = new
        hs = norms.sobolev_norm(state.u, spec.s)
        done = t_end - state.t <= 1e-12 * max(1.0, abs(t_end))
        if hs > ceiling:
            rec = emit(state, h)
            traj.records[-1] = replace(rec, flagged=True)
            traj.flagged, traj.blowup_t = True, state.t
            traj.blowup_reason = f"||u||_H^s={hs:.6g} exceeded ceiling {ceiling:g}"
            break
        if nstep % every == 0 or done:
            emit(state, h)
    traj.final_state = state
    if traj.flagged:
        log.warning("blow-up signal at t=%s: %s", traj.blowup_t, traj.blowup_reason)
    return traj


def _flag(traj: Trajectory, t: float, reason: str) -> None:
    traj.flagged = True
    traj.blowup_t = t
    traj.blowup_reason = reason
    if traj.records:
        traj.records.append(replace(traj.records[-1], flagged=True))

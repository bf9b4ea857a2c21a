"""Per-record diagnostics: norms, sup norms, BMO seminorms and running integrals."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from bsq import norms
from bsq.spectral import curl, gradient, inner

# Column order of timeseries.csv.
TIMESERIES_COLUMNS = (
    "t",
    "dt",
    "u_L2",
    "u_Hs",
    "theta_Hs",
    "curl_u_Linf",
    "curl_u_BMO",
    "grad_theta_Linf",
    "grad_theta_BMO",
    "I_BKM",
    "I_curl",
    "I_linf",
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    dt: float
    u_l2: float
    theta_l2: float
    u_hs: float
    theta_hs: float
    grad_u_hs: float
    grad_theta_hs: float
    grad_u_linf: float
    grad_theta_linf: float
    curl_u_linf: float
    curl_u_bmo: float
    grad_theta_bmo: float
    grad_u_l2: float
    grad_theta_l2: float
    buoyancy_work: float
    theta_mean: float
    I_bkm: float = 0.0
    I_curl: float = 0.0
    I_linf: float = 0.0
    flagged: bool = False

    @property
    def X(self) -> float:
        """``||u||_{H^s}^2 + ||theta||_{H^s}^2``."""
        return self.u_hs**2 + self.theta_hs**2

    def is_finite(self) -> bool:
        return all(math.isfinite(getattr(self, f.name)) for f in fields(self)
                   if f.name != "flagged")

    def timeseries_row(self) -> tuple:
        return (self.t, self.dt, self.u_l2, self.u_hs, self.theta_hs, self.curl_u_linf,
                self.curl_u_bmo, self.grad_theta_linf, self.grad_theta_bmo, self.I_bkm,
                self.I_curl, self.I_linf)


def measure(state, spec, dt: float = 0.0, previous: DiagnosticsRecord | None = None,
            bmo_depth: int | None = None) -> DiagnosticsRecord:
    """Evaluate every diagnostic on ``state`` and advance the running integrals."""
    u, theta = state.u, state.theta
    s = spec.s
    vort = curl(u)
    grad_theta = gradient(theta)
    buoy = spec.forcing.buoyancy(theta, u.grid)
    rec = DiagnosticsRecord(
        t=float(state.t),
        dt=float(dt),
        u_l2=norms.l2_norm(u),
        theta_l2=norms.l2_norm(theta),
        u_hs=norms.sobolev_norm(u, s),
        theta_hs=norms.sobolev_norm(theta, s),
        grad_u_hs=norms.gradient_sobolev_norm(u, s),
        grad_theta_hs=norms.gradient_sobolev_norm(theta, s),
        grad_u_linf=norms.gradient_linf(u),
        grad_theta_linf=norms.gradient_linf(theta),
        curl_u_linf=norms.lebesgue_norm(vort, math.inf),
        curl_u_bmo=norms.bmo_norm(vort, bmo_depth),
        grad_theta_bmo=norms.bmo_norm(grad_theta, bmo_depth),
        grad_u_l2=norms.gradient_sobolev_norm(u, 0.0),
        grad_theta_l2=norms.gradient_sobolev_norm(theta, 0.0),
        buoyancy_work=inner(buoy, u) if buoy is not None else 0.0,
        theta_mean=float(np.real(theta.mean)),
    )
    if previous is None:
        return rec
    return accumulate(previous, rec)


def accumulate(prev: DiagnosticsRecord, rec: DiagnosticsRecord) -> DiagnosticsRecord:
    """Trapezoid update of the three blow-up integrals from ``prev`` to ``rec``."""
    from dataclasses import replace

    h = rec.t - prev.t
    bkm = 0.5 * h * ((prev.curl_u_bmo + prev.grad_theta_bmo) + (rec.curl_u_bmo + rec.grad_theta_bmo))
    cur = 0.5 * h * (prev.curl_u_bmo + rec.curl_u_bmo)
    lin = 0.5 * h * ((prev.grad_u_linf + prev.grad_theta_linf) + (rec.grad_u_linf + rec.grad_theta_linf))
    return replace(rec, I_bkm=prev.I_bkm + bkm, I_curl=prev.I_curl + cur, I_linf=prev.I_linf + lin)

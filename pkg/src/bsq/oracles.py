"""Brute-force reference computations.

Slow, loop-based evaluations used to check the fast paths: direct DFT sums,
exact Fourier convolutions over explicit mode lists, per-mode projections and
exhaustive enumeration of dyadic cubes. Nothing here calls the FFT-based
operators in :mod:`bsq.spectral`.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def direct_dft(values: np.ndarray) -> np.ndarray:
    """Forward transform by explicit summation, normalized by 1/N^d."""
    shape = values.shape
    n = shape[0]
    d = values.ndim
    idx = list(itertools.product(range(n), repeat=d))
    out = np.zeros(shape, dtype=complex)
    for k in idx:
        acc = 0j
        for x in idx:
            phase = sum(ki * xi for ki, xi in zip(k, x))
            acc += values[x] * complex(math.cos(-2 * math.pi * phase / n), math.sin(-2 * math.pi * phase / n))
        out[k] = acc / n**d
    return out


def _wrap(k, n):
    return tuple(int(ki) % n for ki in k)


def _signed(i, n):
    return i - n if i >= n // 2 else i


def modes(coeffs: np.ndarray, tol: float = 0.0) -> dict:
    """Map signed integer wavevector -> coefficient for all entries above ``tol``."""
    n = coeffs.shape[-1]
    out = {}
    for idx in zip(*np.nonzero(np.abs(coeffs) > tol)):
        out[tuple(_signed(int(i), n) for i in idx)] = complex(coeffs[idx])
    return out


def _deriv_factor(q, n):
    # Nyquist wavenumber carries no odd derivative
    return tuple(0.0 if qi == -(n // 2) else float(qi) for qi in q)


def advect_scalar(u_modes: list, g_modes: dict, n: int, keep) -> dict:
    """Exact Fourier coefficients of (u.grad) g restricted to wavevectors in ``keep``.

    ``u_modes`` is one mode dict per velocity component.
    """
    dim = len(u_modes)
    out = {}
    for j in range(dim):
        for p, up in u_modes[j].items():
            for q, gq in g_modes.items():
                k = tuple(a + b for a, b in zip(p, q))
                if not keep(k):
                    continue
                dq = _deriv_factor(q, n)[j]
                out[k] = out.get(k, 0j) + up * 1j * dq * gq
    return out


def to_array(mode_dict: dict, n: int, dim: int) -> np.ndarray:
    out = np.zeros((n,) * dim, dtype=complex)
    for k, v in mode_dict.items():
        out[_wrap(k, n)] += v
    return out


def project_mode(k, vec):
    """Per-mode Leray projection of a complex vector at wavevector k."""
    k2 = sum(ki * ki for ki in k)
    if k2 == 0:
        return list(vec)
    kdot = sum(ki * vi for ki, vi in zip(k, vec))
    return [vi - ki * kdot / k2 for ki, vi in zip(k, vec)]


def galerkin_rhs(u_coeffs: np.ndarray, theta_coeffs: np.ndarray, nu: float, kappa: float,
                 R: float, forcing_en: bool = True):
    """Truncated Boussinesq tendency by explicit convolution over the ball |k| <= R."""
    dim = u_coeffs.shape[0]
    n = u_coeffs.shape[-1]
    in_ball = lambda k: sum(ki * ki for ki in k) <= R * R
    um = [modes(c) for c in u_coeffs]
    tm = modes(theta_coeffs)
    adv_u = [advect_scalar(um, um[i], n, in_ball) for i in range(dim)]
    adv_t = advect_scalar(um, tm, n, in_ball)
    lattice = [k for k in itertools.product(range(-(n // 2) + 1, n // 2), repeat=dim) if in_ball(k)]
    du = np.zeros_like(u_coeffs)
    dt = np.zeros_like(theta_coeffs)
    for k in lattice:
        k2 = sum(ki * ki for ki in k)
        vec = [-adv_u[i].get(k, 0j) for i in range(dim)]
        if forcing_en:
            vec[-1] += tm.get(k, 0j)
        vec = project_mode(k, vec)
        w = _wrap(k, n)
        for i in range(dim):
            du[(i,) + w] = vec[i] - nu * k2 * um[i].get(k, 0j)
        dt[w] = -adv_t.get(k, 0j) - kappa * k2 * tm.get(k, 0j)
    return du, dt


def commutator(u_coeffs: np.ndarray, theta_coeffs: np.ndarray, s: float, kind: str = "bessel") -> np.ndarray:
    """Op^s[(u.grad)theta] - (u.grad)(Op^s theta) by explicit convolution, 2/3-rule band."""
    dim = u_coeffs.shape[0]
    n = u_coeffs.shape[-1]
    cut = n / 3.0

    def sym(k):
        k2 = sum(ki * ki for ki in k)
        if kind == "bessel":
            return (1.0 + k2) ** (s / 2)
        return k2 ** (s / 2) if k2 > 0 else (1.0 if s == 0 else 0.0)

    keep = lambda k: all(abs(ki) <= cut for ki in k)
    um = [modes(c) for c in u_coeffs]
    tm = modes(theta_coeffs)
    first = advect_scalar(um, tm, n, keep)
    tm_s = {k: sym(k) * v for k, v in tm.items()}
    second = advect_scalar(um, tm_s, n, keep)
    out = {}
    for k in set(first) | set(second):
        out[k] = sym(k) * first.get(k, 0j) - second.get(k, 0j)
    return to_array(out, n, dim)


def product(a_coeffs: np.ndarray, b_coeffs: np.ndarray) -> np.ndarray:
    """Exact product coefficients c_k = sum_{p+q=k} a_p b_q, kept where all |k_i| <= N/3."""
    n = a_coeffs.shape[-1]
    dim = a_coeffs.ndim
    cut = n / 3.0
    am, bm = modes(a_coeffs), modes(b_coeffs)
    out = {}
    for p, ap in am.items():
        for q, bq in bm.items():
            k = tuple(x + y for x, y in zip(p, q))
            if all(abs(ki) <= cut for ki in k):
                out[k] = out.get(k, 0j) + ap * bq
    return to_array(out, n, dim)


def bmo_all_cubes(values: np.ndarray, max_depth: int) -> float:
    """Enumerate every dyadic cube explicitly; ``values`` is ``(ncomp, N, ..., N)``."""
    ncomp = values.shape[0]
    dim = values.ndim - 1
    n = values.shape[1]
    best = 0.0
    for depth in range(max_depth + 1):
        m = n >> depth
        for corner in itertools.product(range(1 << depth), repeat=dim):
            pts = list(itertools.product(*[range(c * m, c * m + m) for c in corner]))
            mean = [sum(values[(c,) + p] for p in pts) / len(pts) for c in range(ncomp)]
            osc = 0.0
            for p in pts:
                osc += math.sqrt(sum((values[(c,) + p] - mean[c]) ** 2 for c in range(ncomp)))
            best = max(best, osc / len(pts))
    return best

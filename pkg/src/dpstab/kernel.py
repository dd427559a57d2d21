"""Conserved functionals, Helmholtz inverses, and the rank-2 kernel projection.

The linearized flow about a solitary wave has a two-dimensional generalized
kernel spanned by the translation mode u0' and the speed mode d/dc u0.  This
module builds the weighted right basis z_j = e^{alpha xi} z~_j and the adjoint
left basis eta_j = e^{-alpha xi} eta~_j,

    eta~_2 = theta1 (1 - d^2)(4 - d^2)^{-1} (u0 - k),
    eta~_1 = -theta1 int_{-inf}^{xi} (1 - d^2)(4 - d^2)^{-1} dc_u0
             + theta2 (1 - d^2)(4 - d^2)^{-1} (u0 - k),

with theta1 = (dQ/dc)^{-1} and theta2 = theta1^2 <dc_u0, cum>.  The pairings
<z_j, eta_l> = delta_jl are not imposed; they emerge from the quadrature and
the residuals are reported.

The nonlocal inverses (msq - d^2)^{-1} are applied by exact two-sided
exponential recursions against the kernel e^{-m|xi|}/(2m): each grid panel
contributes the integral of its degree-5 interpolant against the exponential,
so the sweep is order-6 in the step and respects decay at the ends (no
periodization).  Running integrals use matching degree-5 panel quadrature.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

from .wave import ParameterError, Profile, SolverError, dc_profile

__all__ = [
    "ConservedValues",
    "KernelBasis",
    "cumint6",
    "helmholtz_solve",
    "b_apply",
    "conserved",
    "kernel_basis",
    "project",
    "write_basis_csv",
    "basis_report",
]


def _poly_panel_weights() -> np.ndarray:
    # integral over [s, s+1] of the degree-5 Lagrange basis on nodes 0..5,
    # one row per panel offset s = 0..4 (interior panels use s = 2)
    W = np.empty((5, 6))
    for m in range(6):
        nodes = [j for j in range(6) if j != m]
        den = np.prod([float(m - j) for j in nodes])
        P = np.polyint(np.poly(nodes) / den)
        for s in range(5):
            W[s, m] = np.polyval(P, s + 1.0) - np.polyval(P, s)
    return W


_W6 = _poly_panel_weights()


@lru_cache(maxsize=8)
def _window_index(n: int):
    i = np.arange(n - 1)
    j0 = np.clip(i - 2, 0, n - 6)
    s = i - j0
    idx = j0[:, None] + np.arange(6)[None, :]
    return idx, s


def cumint6(f, h: float) -> np.ndarray:
    """Cumulative integral from the left end, zero there, order-6 panels."""
    f = np.asarray(f)
    if f.ndim != 1 or f.size < 6:
        raise ParameterError("need a 1-d array with at least 6 samples")
    idx, s = _window_index(f.size)
    inc = h * np.einsum("ij,ij->i", _W6[s], f[idx])
    out = np.empty(f.size, dtype=inc.dtype)
    out[0] = 0.0
    np.cumsum(inc, out=out[1:])
    return out


def _exp_moments(a) -> np.ndarray:
    # mu_n = int_0^1 t^n e^{-a(1-t)} dt = e^{-a} sum_p a^p / (p! (n+p+1))
    if abs(a) > 25.0:
        raise ParameterError(f"step too coarse for the exponential kernel: rate*h={a}")
    n = np.arange(6.0)
    mu = np.zeros(6, dtype=complex)
    term = np.ones(6, dtype=complex)
    for p in range(80):
        mu += term / (n + p + 1.0)
        term *= a / (p + 1.0)
    return np.exp(-a) * mu


def _panel_exp_weights(a, h: float) -> np.ndarray:
    # row s: panel [i, i+1] integrated against e^{-rate (x_{i+1}-y)} with
    # a = rate*h, using the degree-5 interpolant on nodes i-s .. i-s+5
    mu = _exp_moments(a)
    W = np.empty((5, 6), dtype=complex)
    for s in range(5):
        tau = np.arange(6.0) - s
        V = np.vander(tau, 6, increasing=True)
        W[s] = h * np.linalg.solve(V.T.astype(complex), mu)
    return W


@lru_cache(maxsize=16)
def _helm_weights(m: float, h: float):
    W = _panel_exp_weights(m * h, h)
    return W.real.copy(), float(np.exp(-m * h))


def _tail_moment(g0: float, g1: float, m: float, h: float) -> float:
    # closes int over the half line beyond the boundary node assuming the
    # local exponential profile fitted from the outermost two samples
    if g0 == 0.0 or not np.isfinite(g0):
        return 0.0
    ratio = g1 / g0
    rho = np.log(ratio) / h if ratio > 0 else 0.0
    if not np.isfinite(rho) or rho < 0.0:
        rho = 0.0
    return g0 / (m + rho)


def helmholtz_solve(g, msq: int, h: float) -> np.ndarray:
    """Solve (msq - d^2) u = g on the grid with decay conditions at the ends."""
    if msq not in (1, 4):
        raise ParameterError(f"msq must be 1 or 4, got {msq}")
    g = np.asarray(g, dtype=float)
    if g.ndim != 1 or g.size < 8:
        raise ParameterError("g must be a 1-d grid function with at least 8 samples")
    m = float(np.sqrt(msq))
    W, q = _helm_weights(m, float(h))
    idx, s = _window_index(g.size)
    rows = W[s]

    def sweep(arr):
        inc = np.einsum("ij,ij->i", rows, arr[idx])
        a0 = _tail_moment(arr[0], arr[1], m, h)
        out = np.empty(arr.size)
        out[0] = a0
        out[1:] = lfilter([1.0], [1.0, -q], inc, zi=np.array([q * a0]))[0]
        return out

    left = sweep(g)
    right = sweep(g[::-1])[::-1]
    return (left + right) / (2.0 * m)


def b_apply(g, h: float) -> np.ndarray:
    """(1 - d^2)(4 - d^2)^{-1} g, via the identity g - 3 (4 - d^2)^{-1} g."""
    return np.asarray(g, dtype=float) - 3.0 * helmholtz_solve(g, 4, h)


@dataclass(frozen=True)
class ConservedValues:
    """The five conserved functionals, normalized to vanish at the background.

    F1 and F2 require a positive momentum density; they are nan and f_valid
    is False when m <= 0 anywhere on the grid.
    """

    H: float
    Q: float
    E_mass: float
    F1: float
    F2: float
    f_valid: bool


def _spectral_multiplier(w: np.ndarray, h: float, mult) -> np.ndarray:
    n = w.size
    sig = 2.0 * np.pi * np.fft.rfftfreq(n, d=h)
    return np.fft.irfft(np.fft.rfft(w) * mult(sig), n=n)


def conserved(params, h: float, u=None, m=None) -> ConservedValues:
    """Conserved functionals of a state given as u or as m = u - u''.

    The missing representation is reconstructed: m from u by the spectral
    derivative of u - k (the state must decay to k at the ends), u from m by
    the decaying Helmholtz inverse.
    """
    if (u is None) == (m is None):
        raise ParameterError("pass exactly one of u or m")
    k = params.k
    if m is None:
        u = np.asarray(u, dtype=float)
        m = k + _spectral_multiplier(u - k, h, lambda s: 1.0 + s * s)
    else:
        m = np.asarray(m, dtype=float)
        u = k + helmholtz_solve(m - k, 1, h)
    w = u - k
    # u^3 - 3k^2(u-k) - k^3 factored to avoid cancellation in the tails
    H = -np.trapezoid(w * w * (u + 2.0 * k), dx=h) / 6.0
    Q = 0.5 * np.trapezoid(w * b_apply(w, h), dx=h)
    E_mass = np.trapezoid(m - k, dx=h)
    if np.any(m <= 0.0):
        return ConservedValues(float(H), float(Q), float(E_mass), np.nan, np.nan, False)
    F1 = np.trapezoid(np.cbrt(m) - np.cbrt(k), dx=h)
    m_x = _spectral_multiplier(m - k, h, lambda s: 1j * s)
    F2 = np.trapezoid(
        (m_x * m_x / (9.0 * m * m) + 1.0) / np.cbrt(m) - 1.0 / np.cbrt(k), dx=h
    )
    return ConservedValues(float(H), float(Q), float(E_mass), float(F1), float(F2), True)


@dataclass(frozen=True)
class KernelBasis:
    """Weighted bi-orthogonal basis of the generalized kernel at lambda = 0."""

    alpha: float
    h: float
    xi: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray
    theta1: float
    theta2: float
    gram_residuals: dict


def kernel_basis(profile: Profile, alpha: float) -> KernelBasis:
    """Build the kernel basis on the profile grid for 0 < alpha < alpha_crit.

    The strict lower bound matters: the unweighted left mode eta~_1 tends to
    a nonzero constant at +infinity, so only the weighted eta_1 is square
    integrable.
    """
    d = profile.consts
    alpha = float(alpha)
    if not 0.0 < alpha < d.alpha_crit:
        raise ParameterError(
            f"weight alpha={alpha} outside the open interval (0, {d.alpha_crit})"
        )
    key = ("kernel", alpha)
    if key in profile._cache:
        return profile._cache[key]
    h = profile.h
    dc = profile.dc_u0 if profile.dc_u0 is not None else dc_profile(profile)
    # the dense tail representation keeps u0 - k accurate far below eps(k),
    # where the stored sum k + w has already quantized the tail away
    w = profile.eval_w(profile.xi)[0]
    bw = b_apply(w, h)
    dQ_dc = float(np.trapezoid(dc * bw, dx=h))
    if dQ_dc <= 0.0:
        raise SolverError(
            f"speed derivative of the momentum functional is {dQ_dc}; "
            "it must be positive for an admissible wave"
        )
    theta1 = 1.0 / dQ_dc
    q = b_apply(dc, h)
    # running integral of q from -infinity; the half-line piece beyond the
    # grid follows from the tail rate of the profile
    cum = cumint6(q, h) + q[0] / d.r_decay
    theta2 = theta1 * theta1 * float(np.trapezoid(dc * cum, dx=h))
    et2 = theta1 * bw
    et1 = -theta1 * cum + theta2 * bw
    growth = np.exp(alpha * profile.xi)
    z1 = growth * profile.u0_p
    z2 = growth * dc
    eta1 = et1 / growth
    eta2 = et2 / growth
    gram = {
        "z1_eta1": float(np.trapezoid(z1 * eta1, dx=h)) - 1.0,
        "z1_eta2": float(np.trapezoid(z1 * eta2, dx=h)),
        "z2_eta1": float(np.trapezoid(z2 * eta1, dx=h)),
        "z2_eta2": float(np.trapezoid(z2 * eta2, dx=h)) - 1.0,
    }
    basis = KernelBasis(
        alpha=alpha, h=h, xi=profile.xi, z1=z1, z2=z2, eta1=eta1, eta2=eta2,
        theta1=theta1, theta2=theta2, gram_residuals=gram,
    )
    profile._cache[key] = basis
    return basis


def project(f, basis: KernelBasis):
    """Rank-2 spectral projection Pi f = sum_j <eta_j, f> z_j and I - Pi."""
    f = np.asarray(f, dtype=float)
    if f.shape != basis.z1.shape:
        raise ParameterError("f is not on the basis grid")
    c1 = np.trapezoid(basis.eta1 * f, dx=basis.h)
    c2 = np.trapezoid(basis.eta2 * f, dx=basis.h)
    pf = c1 * basis.z1 + c2 * basis.z2
    return pf, f - pf


def write_basis_csv(basis: KernelBasis, path) -> None:
    """CSV with header xi,z1,z2,eta1,eta2."""
    cols = np.column_stack([basis.xi, basis.z1, basis.z2, basis.eta1, basis.eta2])
    with open(path, "w") as fh:
        fh.write("xi,z1,z2,eta1,eta2\n")
        np.savetxt(fh, cols, fmt="%.17g", delimiter=",")


def basis_report(basis: KernelBasis) -> dict:
    """JSON-ready scalars of the basis."""
    return {
        "alpha": basis.alpha,
        "theta1": basis.theta1,
        "theta2": basis.theta2,
        "gram_residuals": dict(basis.gram_residuals),
    }


def write_basis_json(basis: KernelBasis, path) -> None:
    with open(path, "w") as fh:
        json.dump(basis_report(basis), fh, indent=2)
        fh.write("\n")

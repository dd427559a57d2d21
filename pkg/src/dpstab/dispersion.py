"""Essential spectrum of the linearization in exponentially weighted spaces.

Linearizing about the flat state u = k in the frame moving at speed c and
substituting v ~ e^{r xi + lambda t} gives the characteristic polynomial

    P(lambda, r) = (lambda + r (k - c)) (1 - r^2) + 3 k r
                 = (c - k) r^3 - lambda r^2 + (4k - c) r + lambda.

In the space weighted by e^{alpha xi} the essential spectrum is the curve
lambda(i sigma - alpha), sigma real, with

    lambda(r) = r (c - k (4 - r^2)/(1 - r^2)).

For 0 < alpha < alpha_crit = sqrt((c-4k)/(c-k)) the curve lies in
Re lambda <= -Delta with gap Delta = alpha (c - k - 3k/(1 - alpha^2));
for alpha > 1 the gap is alpha (c - k); weights in [alpha_crit, 1] give a
marginal or unstable band and alpha = 1 is singular (1 - r^2 vanishes at
sigma = 0).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .wave import ParameterError, WaveParams, derived_constants

__all__ = [
    "SpectralCurve",
    "RootTriple",
    "char_poly",
    "char_coeffs",
    "char_roots",
    "lambda_of_r",
    "re_lambda",
    "im_lambda",
    "ess_spectrum_curve",
    "spectral_gap",
    "classify_roots",
    "group_velocity",
    "default_sigma_grid",
    "sign_convention_report",
]


@dataclass(frozen=True)
class SpectralCurve:
    """Weighted essential-spectrum curve sampled on a frequency grid."""

    sigma: np.ndarray
    lam: np.ndarray
    alpha: float
    params: WaveParams

    def max_real(self) -> float:
        return float(self.lam.real.max())


@dataclass(frozen=True)
class RootTriple:
    """Spatial roots of P(lambda, . - alpha), sorted by real part.

    n_left/n_center/n_right count roots with real part below -tol, within
    tol, and above +tol.  In the resolvent set right of the weighted
    essential spectrum the split is 1/0/2.
    """

    roots: tuple[complex, complex, complex]
    n_left: int
    n_center: int
    n_right: int
    alpha: float
    tol: float


def char_poly(lam, r, params: WaveParams):
    """P(lambda, r) = (lambda + r(k - c))(1 - r^2) + 3 k r."""
    k, c = params.k, params.c
    return (lam + r * (k - c)) * (1.0 - r * r) + 3.0 * k * r


def char_coeffs(lam: complex, params: WaveParams) -> np.ndarray:
    """Coefficients of r -> P(lambda, r), descending powers."""
    k, c = params.k, params.c
    return np.array([c - k, -lam, 4.0 * k - c, lam], dtype=complex)


def char_roots(lam: complex, params: WaveParams) -> np.ndarray:
    """The three spatial roots, deterministically ordered by (Re, Im)."""
    rts = np.roots(char_coeffs(lam, params))
    return rts[np.lexsort((rts.imag, rts.real))]


def lambda_of_r(r, params: WaveParams):
    """Spectral curve parametrization lambda(r) = r(c - k(4 - r^2)/(1 - r^2))."""
    k, c = params.k, params.c
    r2 = r * r
    return r * (c - k * (4.0 - r2) / (1.0 - r2))


def re_lambda(sigma, alpha: float, params: WaveParams):
    """Real part of lambda(i sigma - alpha) in explicit form."""
    k, c = params.k, params.c
    s2, a2 = sigma * sigma, alpha * alpha
    den = (1.0 + s2 - a2) ** 2 + 4.0 * s2 * a2
    return -alpha * (c - k + 3.0 * k * (a2 + s2 - 1.0) / den)


def im_lambda(sigma, alpha: float, params: WaveParams):
    """Imaginary part of lambda(i sigma - alpha) in explicit form."""
    k, c = params.k, params.c
    s2, a2 = sigma * sigma, alpha * alpha
    den = (1.0 + s2 - a2) ** 2 + 4.0 * s2 * a2
    return sigma * (c - k - 3.0 * k * (a2 + s2 + 1.0) / den)


def default_sigma_grid(n: int = 2001, span: float = 50.0, q: float = 0.999) -> np.ndarray:
    """Frequency grid clustered near sigma = 0, reaching +-span.

    Image of a uniform grid under the atanh map; n odd keeps sigma = 0 an
    exact node.
    """
    if n < 3:
        raise ParameterError(f"need at least 3 grid points, got {n}")
    if n % 2 == 0:
        raise ParameterError(f"grid size must be odd so sigma = 0 is a node, got {n}")
    x = np.linspace(0.0, 1.0, (n + 1) // 2)
    pos = span * np.arctanh(q * x) / np.arctanh(q)
    return np.concatenate([-pos[:0:-1], pos])


def ess_spectrum_curve(params: WaveParams, alpha: float,
                       sigma: np.ndarray | None = None) -> SpectralCurve:
    """Sample the weighted essential-spectrum curve lambda(i sigma - alpha)."""
    if abs(alpha - 1.0) < 1e-12:
        raise ParameterError("weight alpha = 1 is singular: 1 - r^2 vanishes at sigma = 0")
    if sigma is None:
        sigma = default_sigma_grid()
    sigma = np.asarray(sigma, dtype=float)
    lam = re_lambda(sigma, alpha, params) + 1j * im_lambda(sigma, alpha, params)
    return SpectralCurve(sigma=sigma, lam=lam, alpha=float(alpha), params=params)


def spectral_gap(params: WaveParams, alpha: float) -> float:
    """Distance from the weighted essential spectrum to the imaginary axis.

    Defined for 0 < alpha < alpha_crit (gap alpha(c - k - 3k/(1 - alpha^2)))
    and for alpha > 1 (gap alpha(c - k)).  Weights in [alpha_crit, 1] are
    rejected: the curve touches or crosses the imaginary axis.
    """
    k, c = params.k, params.c
    ac = derived_constants(params).alpha_crit
    if alpha <= 0.0:
        raise ParameterError(f"need a positive weight, got alpha={alpha}")
    if abs(alpha - 1.0) < 1e-12:
        raise ParameterError("weight alpha = 1 is singular")
    if alpha < ac:
        return alpha * (c - k - 3.0 * k / (1.0 - alpha * alpha))
    if alpha > 1.0:
        return alpha * (c - k)
    raise ParameterError(
        f"weight alpha={alpha} lies in the marginal band [{ac:.6f}, 1]: no spectral gap"
    )


def classify_roots(lam: complex, alpha: float, params: WaveParams,
                   tol: float = 1e-9) -> RootTriple:
    """Shifted spatial roots s_j = r_j + alpha and their real-part split."""
    s = char_roots(lam, params) + alpha
    re = s.real
    return RootTriple(
        roots=tuple(s),
        n_left=int(np.sum(re < -tol)),
        n_center=int(np.sum(np.abs(re) <= tol)),
        n_right=int(np.sum(re > tol)),
        alpha=float(alpha),
        tol=float(tol),
    )


def group_velocity(ell, params: WaveParams):
    """Co-moving group velocity of the linear wavetrain at wavenumber ell.

    d/d ell of Im lambda(i ell) with opposite orientation:
    v_g = -(c - k (ell^4 - ell^2 + 4)/(1 + ell^2)^2).
    Ranges from -(c - 4k) at ell = 0 to -(c - k) as ell -> inf, dipping to
    -(c - 5k/8) at ell^2 = 3; negative for every admissible (k, c).
    """
    k, c = params.k, params.c
    l2 = np.asarray(ell, dtype=float) ** 2
    return -(c - k * (l2 * l2 - l2 + 4.0) / (1.0 + l2) ** 2)


def sign_convention_report(params: WaveParams | None = None) -> dict:
    """Cross-check the +3kr sign of the characteristic polynomial.

    The curve lambda(i sigma - alpha) must be a zero set of P for every
    weight, and the tail rates +-r_decay must be roots at lambda = 0.  The
    -3kr variant fails both.  Returns the residuals.
    """
    if params is None:
        params = WaveParams(0.1, 1.0)
    k, c = params.k, params.c
    r_dec = derived_constants(params).r_decay
    sig = np.linspace(-5.0, 5.0, 41)

    def minus_poly(lam, r):
        return (lam + r * (k - c)) * (1.0 - r * r) - 3.0 * k * r

    res_plus = 0.0
    res_minus = np.inf
    for alpha in (0.0, 0.4, 1.5):
        r = 1j * sig - alpha
        lam = lambda_of_r(r, params)
        res_plus = max(res_plus, float(np.abs(char_poly(lam, r, params)).max()))
        res_minus = min(res_minus, float(np.abs(minus_poly(lam, r)).max()))
    decay_res = max(abs(char_poly(0.0, r_dec, params)),
                    abs(char_poly(0.0, -r_dec, params)))
    return {
        "family": "+3kr",
        "curve_residual": res_plus,
        "decay_root_residual": float(decay_res),
        "rejected_family_residual": res_minus,
        "consistent": bool(res_plus < 1e-10 and decay_res < 1e-12 and res_minus > 1e-3),
    }

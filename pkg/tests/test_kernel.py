import dataclasses
import json

import numpy as np
import pytest

from dpstab import WaveParams, dc_profile, solve_profile
from dpstab import kernel
from dpstab.wave import ParameterError

THETA1_01 = 4.320087729757807
THETA2_01 = 11.337868480767948


def _fourier_inverse(g, msq, h):
    # periodic-extension route, valid for compactly supported g
    sig = 2.0 * np.pi * np.fft.rfftfreq(g.size, d=h)
    return np.fft.irfft(np.fft.rfft(g) / (msq + sig ** 2), n=g.size)


def test_cumint6_polynomial_exact():
    h = 0.1
    x = -3.0 + h * np.arange(121)
    f = ((x - 0.3) ** 5 - 2 * x ** 3 + x) / 10.0
    F = ((x - 0.3) ** 6 / 6 - x ** 4 / 2 + x ** 2 / 2) / 10.0
    out = kernel.cumint6(f, h)
    scale = np.max(np.abs(F - F[0]))
    assert np.max(np.abs(out - (F - F[0]))) <= 1e-13 * scale


def test_cumint6_order():
    errs = []
    for n in (200, 400):
        h = 20.0 / n
        x = -10.0 + h * np.arange(n + 1)
        out = kernel.cumint6(np.sin(x), h)
        errs.append(np.max(np.abs(out - (np.cos(-10.0) - np.cos(x)))))
    assert errs[0] / errs[1] > 40  # order-6 panels: ratio near 64


def test_helmholtz_manufactured(prof01):
    h, x = prof01.h, prof01.xi
    a = 0.4
    u = 1.0 / np.cosh(a * x) ** 2
    uxx = (4 * a * a) * u - (6 * a * a) * u ** 2
    sol = kernel.helmholtz_solve(4 * u - uxx, 4, h)
    assert np.max(np.abs(sol - u)) <= 1e-8
    sol1 = kernel.helmholtz_solve(u - uxx, 1, h)
    assert np.max(np.abs(sol1 - u)) <= 1e-8


def test_helmholtz_fourier_route(prof01):
    h, x = prof01.h, prof01.xi
    g = np.exp(-0.08 * x ** 2) * np.sin(1.3 * x)
    for msq in (1, 4):
        mine = kernel.helmholtz_solve(g, msq, h)
        assert np.max(np.abs(mine - _fourier_inverse(g, msq, h))) <= 1e-10


def test_helmholtz_zero_and_errors(prof01):
    out = kernel.helmholtz_solve(np.zeros(101), 1, 0.1)
    assert np.all(out == 0.0)
    with pytest.raises(ParameterError):
        kernel.helmholtz_solve(np.zeros(101), 3, 0.1)
    with pytest.raises(ParameterError):
        kernel.helmholtz_solve(np.zeros((5, 5)), 1, 0.1)
    with pytest.raises(ParameterError):
        kernel.helmholtz_solve(np.zeros(4), 1, 0.1)


def test_helmholtz_even_symmetry(prof01):
    # mirrored sweeps make the inverse of an even function exactly even
    out = kernel.helmholtz_solve(prof01.u0 - prof01.params.k, 4, prof01.h)
    assert np.array_equal(out, out[::-1])


def test_b_apply_multiplier(prof01):
    h, x = prof01.h, prof01.xi
    g = np.exp(-0.1 * x ** 2) * np.cos(0.7 * x)
    sig = 2.0 * np.pi * np.fft.rfftfreq(g.size, d=h)
    ref = np.fft.irfft(np.fft.rfft(g) * (1.0 + sig ** 2) / (4.0 + sig ** 2), n=g.size)
    assert np.max(np.abs(kernel.b_apply(g, h) - ref)) <= 1e-10


def test_conserved_background_zero(params01):
    u = np.full(4001, params01.k)
    cv = kernel.conserved(params01, 0.02, u=u)
    assert cv.H == 0.0 and cv.Q == 0.0 and cv.E_mass == 0.0
    assert cv.F1 == 0.0 and cv.F2 == 0.0 and cv.f_valid


def test_conserved_routes_agree(prof01, params01):
    a = kernel.conserved(params01, prof01.h, u=prof01.u0)
    b = kernel.conserved(params01, prof01.h, m=prof01.mu)
    for name in ("H", "Q", "E_mass", "F1", "F2"):
        x, y = getattr(a, name), getattr(b, name)
        assert abs(x - y) <= 1e-10 * max(1.0, abs(x))
    assert a.Q > 0 and a.E_mass > 0


def test_conserved_positivity_random(params01):
    rng = np.random.default_rng(7)
    x = -40.0 + 0.02 * np.arange(4001)
    for _ in range(5):
        amp = rng.uniform(0.05, 0.3)
        u = params01.k + amp * np.exp(-0.2 * (x - rng.uniform(-5, 5)) ** 2)
        assert kernel.conserved(params01, 0.02, u=u).Q > 0


def test_conserved_flags_nonpositive_m(params01):
    x = -40.0 + 0.02 * np.arange(4001)
    m = params01.k - 0.2 * np.exp(-(x ** 2))
    cv = kernel.conserved(params01, 0.02, m=m)
    assert not cv.f_valid and np.isnan(cv.F1) and np.isnan(cv.F2)
    assert np.isfinite(cv.H) and np.isfinite(cv.Q) and np.isfinite(cv.E_mass)


def test_conserved_argument_check(params01):
    with pytest.raises(ParameterError):
        kernel.conserved(params01, 0.02)
    with pytest.raises(ParameterError):
        kernel.conserved(params01, 0.02, u=np.zeros(16), m=np.zeros(16))


def test_theta_anchors(prof01):
    b = kernel.kernel_basis(prof01, 0.5 * prof01.consts.alpha_crit)
    assert abs(b.theta1 - THETA1_01) <= 1e-8
    assert abs(b.theta2 - THETA2_01) <= 1e-7


def test_theta1_matches_difference_quotient(prof01, params01):
    # dQ/dc by Richardson-refined centered differences of the functional
    k, c = params01.k, params01.c
    def Q(cv, dcv):
        prof = solve_profile(WaveParams(k, cv + dcv), L=prof01.L, h=prof01.h)
        return kernel.conserved(WaveParams(k, cv + dcv), prof.h, u=prof.u0).Q
    dc = 1e-3
    d1 = (Q(c, dc) - Q(c, -dc)) / (2 * dc)
    d2 = (Q(c, dc / 2) - Q(c, -dc / 2)) / dc
    dQ = (4 * d2 - d1) / 3
    b = kernel.kernel_basis(prof01, 0.5 * prof01.consts.alpha_crit)
    assert abs(1.0 / b.theta1 - dQ) <= 1e-7 * abs(dQ)


def test_dQ_dc_positive_grid():
    for c in (0.5, 1.0, 2.0):
        for k in (c / 20, c / 8, c / 5):
            prof = solve_profile(WaveParams(k, c), L=44.0, h=0.05)
            dc_profile(prof)
            b = kernel.kernel_basis(prof, 0.5 * prof.consts.alpha_crit)
            assert b.theta1 > 0


def test_gram_residuals(prof01):
    for frac in (0.5, 0.9):
        b = kernel.kernel_basis(prof01, frac * prof01.consts.alpha_crit)
        assert max(abs(v) for v in b.gram_residuals.values()) <= 1e-8


def test_alpha_gate(prof01):
    ac = prof01.consts.alpha_crit
    for bad in (0.0, ac, 1.1 * ac, -0.1):
        with pytest.raises(ParameterError):
            kernel.kernel_basis(prof01, bad)


def test_basis_cached(prof01):
    a = kernel.kernel_basis(prof01, 0.5 * prof01.consts.alpha_crit)
    b = kernel.kernel_basis(prof01, 0.5 * prof01.consts.alpha_crit)
    assert a is b


def test_left_mode_tails(prof01):
    alpha = 0.5 * prof01.consts.alpha_crit
    b = kernel.kernel_basis(prof01, alpha)
    flat1 = np.exp(alpha * prof01.xi) * b.eta1
    # unweighted: plateau at +inf, decay at -inf; only the weight restores decay
    assert abs(flat1[-1]) > 0.1
    assert np.std(flat1[-100:]) <= 1e-6 * abs(flat1[-1])
    assert abs(flat1[0]) <= 1e-8
    for arr in (b.z1, b.z2, b.eta1, b.eta2):
        assert abs(arr[0]) <= 1e-6 and abs(arr[-1]) <= 1e-6


def test_project_reproduces_basis(prof01):
    b = kernel.kernel_basis(prof01, 0.5 * prof01.consts.alpha_crit)
    pf, rest = kernel.project(b.z1, b)
    assert np.max(np.abs(pf - b.z1)) <= 1e-8
    assert np.max(np.abs(rest)) <= 1e-8


def test_project_idempotent_and_orthogonal(prof01):
    b = kernel.kernel_basis(prof01, 0.5 * prof01.consts.alpha_crit)
    rng = np.random.default_rng(11)
    f = np.exp(-0.1 * prof01.xi ** 2) * rng.standard_normal(prof01.xi.size)
    pf, rest = kernel.project(f, b)
    p2, _ = kernel.project(pf, b)
    assert np.max(np.abs(p2 - pf)) <= 1e-10
    assert abs(np.trapezoid(b.eta1 * rest, dx=b.h)) <= 1e-8
    assert abs(np.trapezoid(b.eta2 * rest, dx=b.h)) <= 1e-8
    with pytest.raises(ParameterError):
        kernel.project(f[:-1], b)


def test_basis_export_roundtrip(prof01, tmp_path):
    b = kernel.kernel_basis(prof01, 0.5 * prof01.consts.alpha_crit)
    csv = tmp_path / "basis.csv"
    js = tmp_path / "basis.json"
    kernel.write_basis_csv(b, csv)
    kernel.write_basis_json(b, js)
    with open(csv) as fh:
        assert fh.readline().strip() == "xi,z1,z2,eta1,eta2"
    data = np.loadtxt(csv, delimiter=",", skiprows=1)
    assert np.array_equal(data[:, 1], b.z1)
    assert np.array_equal(data[:, 4], b.eta2)
    rep = json.loads(js.read_text())
    assert rep["theta1"] == b.theta1
    assert set(rep["gram_residuals"]) == {"z1_eta1", "z1_eta2", "z2_eta1", "z2_eta2"}

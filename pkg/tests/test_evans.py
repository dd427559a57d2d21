import numpy as np
import pytest

from dpstab import _backend, evans
from dpstab.dispersion import spectral_gap
from dpstab.wave import ParameterError, WaveParams, solve_profile

# regression anchor, first simple zero is well right of lambda = 1
D_ONE_UNWEIGHTED = 0.20436288257374657


def test_translation_zero(prof01):
    s = evans.evans_eval(0.0, prof01, alpha=0.5)
    assert abs(s.value) < 1e-6
    assert abs(s.value) < 1e-10
    assert s.renorm_exponent > 0


def test_nonzero_away_from_origin(prof01):
    s = evans.evans_eval(1.0, prof01, alpha=0.0)
    assert abs(s.value) > 1e-4
    assert abs(s.value - D_ONE_UNWEIGHTED) < 1e-10


def test_conjugate_symmetry(prof01):
    for lam in (0.3 + 0.2j, 1.1 - 0.7j, 0.05 + 1.9j):
        a = evans.evans_eval(lam, prof01, alpha=0.5).value
        b = evans.evans_eval(np.conj(lam), prof01, alpha=0.5).value
        assert abs(a - np.conj(b)) <= 1e-10 * abs(a)


def test_weighted_equivalence(prof01):
    assert evans.weighted_equivalence_check(0.5, prof01, 0.5) < 1e-8
    assert evans.weighted_equivalence_check(2j * (1 + 1e-3), prof01, 0.5) < 1e-6
    assert evans.weighted_equivalence_check(0.5, prof01, 0.0) == 0.0


def test_winding_small_circle(prof01):
    res = evans.winding_count(evans.circle_contour(0.0, 0.05, 64), prof01, alpha=0.5)
    assert res.winding == 2
    assert res.min_abs_D > 0
    assert len(res.values) == 1 and len(res.values[0]) == len(res.loops[0])


def test_winding_keyhole(prof01, params01):
    gap = spectral_gap(params01, 0.5)
    loops = evans.keyhole_contour(-gap / 2, 2.0, 2.0, hole_radius=0.05)
    res = evans.winding_count(loops, prof01, alpha=0.5)
    assert res.winding == 0
    assert len(res.loops) == 2
    assert res.contour.shape[0] == sum(len(l) for l in res.loops)


def test_winding_away_from_zero(prof01):
    res = evans.winding_count(evans.circle_contour(1.0, 0.1, 32), prof01, alpha=0.0)
    assert res.winding == 0


def test_certify_eta(prof01):
    cert = evans.certify_eta(prof01, 0.5)
    assert cert["windings"] == [0] * 7
    assert abs(cert["certified_eta"] - 7 * cert["gap"] / 8) < 1e-12


def test_cauchy_riemann(prof01):
    lam, h = 0.8 + 0.3j, 1e-4
    ev = lambda z: evans.evans_eval(z, prof01, 0.5).value
    dx = (ev(lam + h) - ev(lam - h)) / (2 * h)
    dy = (ev(lam + 1j * h) - ev(lam - 1j * h)) / (2j * h)
    assert abs(dx - dy) / abs(dx) < 1e-5


def test_domain_robustness(params01, prof01):
    prof50 = solve_profile(params01, L=50.0)
    for lam in (0.5, 0.3 + 2.0j, 1.5 - 1.2j):
        a = evans.evans_eval(lam, prof01, 0.5).value
        b = evans.evans_eval(lam, prof50, 0.5).value
        assert abs(a - b) <= 1e-6 * abs(a)


def test_scale_covariance(prof01):
    # (k, c) -> (beta k, beta c) with lambda -> beta lambda leaves D unchanged
    prof2 = solve_profile(WaveParams(0.2, 2.0))
    for lam in (0.5, 0.3 + 0.4j):
        a = evans.evans_eval(lam, prof01, 0.25).value
        b = evans.evans_eval(2 * lam, prof2, 0.25).value
        assert abs(a - b) <= 1e-8 * abs(a)


def test_meet_point_invariance(prof01):
    base = evans.evans_eval(0.7 + 0.1j, prof01, 0.5).value
    for meet in (2.5, -3.0, 10.0):
        d = evans.evans_eval(0.7 + 0.1j, prof01, 0.5, meet=meet).value
        assert abs(d - base) <= 1e-9 * abs(base)
    with pytest.raises(ParameterError):
        evans.evans_eval(0.5, prof01, 0.5, meet=prof01.L)


def test_step_refinement(prof01):
    d8 = evans.evans_eval(0.7 + 0.1j, prof01, 0.5, nsub=8).value
    d14 = evans.evans_eval(0.7 + 0.1j, prof01, 0.5, nsub=14).value
    assert abs(d8 - d14) <= 1e-8 * abs(d8)


def test_rejects_left_of_spectrum(prof01):
    with pytest.raises(ParameterError):
        evans.evans_eval(-0.5, prof01, alpha=0.0)
    with pytest.raises(ParameterError):
        evans.evans_eval(-0.3, prof01, alpha=0.5)
    with pytest.raises(ParameterError):
        evans.evans_eval(0.5, prof01, alpha=1.0)


def test_batch_matches_single(prof01):
    lams = [0.4, 0.9 + 0.2j, 1.6 - 0.8j]
    D, ex = evans.evans_batch(lams, prof01, 0.5)
    for lam, d, e in zip(lams, D, ex):
        s = evans.evans_eval(lam, prof01, 0.5)
        assert d == s.value
        assert e == s.renorm_exponent


@pytest.mark.skipif(not _backend.HAVE_NUMBA, reason="numba unavailable")
def test_backend_agreement(prof01):
    arrays = evans._system_arrays(prof01, 10)
    n = arrays["n"]
    p0, p1, p2, pinv = (a[: 2 * n + 1] for a in arrays["desc"])
    lams = np.array([0.5 + 0.0j, 0.7 + 0.1j])
    shifts = np.empty(2, dtype=complex)
    inits = np.empty((2, 3), dtype=complex)
    for i, lam in enumerate(lams):
        s, *_ = evans._shifted_monic(lam, 0.5, prof01.params)
        shifts[i] = s[0]
        inits[i] = (1.0, s[0], s[0] ** 2)
    a = _backend.shoot_final_numpy(p0, p1, p2, pinv, lams, 0.5, shifts, inits,
                                   arrays["hs"], -1.0, False)
    b = _backend.shoot_final_numba(p0, p1, p2, pinv, lams, 0.5, shifts, inits,
                                   arrays["hs"], -1.0, False)
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))


def test_csv_roundtrip(tmp_path, prof01):
    samples = [evans.evans_eval(lam, prof01, 0.5) for lam in (0.4, 0.9 + 0.2j)]
    path = tmp_path / "evans.csv"
    evans.write_evans_csv(samples, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "re_lambda,im_lambda,re_D,im_D,renorm_exponent"
    row = [float(t) for t in lines[2].split(",")]
    assert row[0] == 0.9 and row[1] == 0.2
    assert abs(complex(row[2], row[3]) - samples[1].value) < 1e-15

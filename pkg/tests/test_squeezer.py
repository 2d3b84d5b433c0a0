import numpy as np
import pytest

from eprgeo.squeezer import (ConditionalReadout, HomodyneAngles, SqueezerSpec, beamsplitter_entangle,
                             conditional_over_spectrum, conditional_variance, epr_matrix,
                             epr_source_spectral_matrix, project, single_mode_squeezed)
from eprgeo.twophoton import SpectralDensityMatrix


def test_epr_matrix_structure():
    r = 0.8
    V = epr_matrix(r)
    assert np.allclose(np.diag(V), np.cosh(2 * r))
    assert np.allclose(V[:2, :2] - np.diag(np.diag(V[:2, :2])), 0)
    assert np.allclose(V, V.T)
    ev = np.linalg.eigvalsh(V)
    assert np.allclose(sorted(ev), sorted([np.exp(-2 * r)] * 2 + [np.exp(2 * r)] * 2))


def test_epr_from_two_squeezed_beams_on_beamsplitter():
    """Two beams squeezed in orthogonal quadratures overlapped 50/50 give the
    EPR covariance."""
    r = 0.6
    vin = np.zeros((4, 4))
    vin[:2, :2] = single_mode_squeezed(r, 0.0)
    vin[2:, 2:] = single_mode_squeezed(r, np.pi / 2)
    out = beamsplitter_entangle(SpectralDensityMatrix(["c1", "c2", "d1", "d2"], vin))
    assert np.allclose(out.matrix, epr_matrix(r, np.pi / 2), atol=1e-12)


def test_single_mode_squeezed():
    r = 0.5
    assert np.allclose(single_mode_squeezed(r, 0), np.diag([np.exp(-2 * r), np.exp(2 * r)]))
    assert np.allclose(single_mode_squeezed(r, np.pi / 2), np.diag([np.exp(2 * r), np.exp(-2 * r)]))


def test_conditional_variance_zero_idler():
    V = np.eye(4)
    V[2:, 2:] = 0
    res = conditional_variance(V, HomodyneAngles(0.3, 0.2))
    assert res == ConditionalReadout(1.0, 0.0)


def test_conditional_minimum_by_brute_force():
    r = 1.1
    V = epr_source_spectral_matrix(SqueezerSpec(r))
    theta = 0.4
    phis = np.linspace(0, 2 * np.pi, 200001)
    v_aa, v_ab, v_bb = project(V.matrix, theta, phis)
    v = v_aa - np.real(v_ab) ** 2 / v_bb
    assert np.isclose(v.min(), 1 / np.cosh(2 * r), rtol=1e-6)
    # and the minimiser is phi = -theta (mod pi)
    best = phis[np.argmin(v)]
    assert np.isclose(np.mod(best + theta, np.pi), 0, atol=1e-4) or \
        np.isclose(np.mod(best + theta, np.pi), np.pi, atol=1e-4)


def test_project_broadcasts_phi():
    V = np.broadcast_to(epr_matrix(0.3), (5, 4, 4))
    v_aa, v_ab, v_bb = project(V[:, None], 0.1, np.linspace(0, 1, 7)[None, :])
    assert v_aa.shape == (5, 7) == v_ab.shape == v_bb.shape


def test_conditional_over_spectrum_modes():
    r = 0.9
    joint = np.broadcast_to(epr_matrix(r), (4, 4, 4))
    ang = HomodyneAngles(np.pi / 2, np.pi / 2)
    opt = conditional_over_spectrum(joint, ang)
    assert np.allclose(opt, 1 / np.cosh(2 * r))
    k = conditional_variance(joint[0], ang).k_opt
    fixed = conditional_over_spectrum(joint, ang, "fixed", k)
    assert np.allclose(fixed, opt)
    assert np.all(conditional_over_spectrum(joint, ang, "fixed", 0.0) >= opt)
    with pytest.raises(ValueError):
        conditional_over_spectrum(joint, ang, "fixed")
    with pytest.raises(ValueError):
        conditional_over_spectrum(joint, ang, "other")


def test_angles_wrap():
    a = HomodyneAngles(-np.pi / 2, 5 * np.pi)
    assert np.isclose(a.theta, 3 * np.pi / 2) and np.isclose(a.phi, np.pi)
    with pytest.raises(ValueError):
        SqueezerSpec(-0.1)

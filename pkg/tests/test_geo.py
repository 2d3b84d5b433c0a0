import dataclasses

import numpy as np
import pytest
from scipy.constants import c
from scipy.optimize import minimize_scalar

from eprgeo.geo import (TWO_PI, GeoConfig, GeoModel, LossBudget, apply_loss_budget, build_geo,
                        default_grid, lo_angle, optimal_single_mode, sensitivity, single_mode_noise)
from eprgeo.network import solve_carrier
from eprgeo.squeezer import SqueezerSpec


@pytest.fixture(scope="module")
def geo():
    return GeoModel(GeoConfig())


def test_dark_fringe(geo):
    assert geo.dark_port_power < 1e-20


def test_asymmetric_loss_breaks_dark_fringe():
    gm = GeoModel(GeoConfig(losses=LossBudget(internal_asymmetric=1e-3)))
    assert gm.dark_port_power > 1e-12


def test_schnupp_leaks_rf_sidebands_monotonically():
    """Schnupp asymmetry is what lets RF sidebands reach the dark port."""
    f_rf = TWO_PI * 9e6
    powers = []
    for ls in (0.0, 0.01, 0.02, 0.05, 0.1):
        model = build_geo(GeoConfig(schnupp_ls=ls)).compile()
        powers.append(solve_carrier(model, 1.0, "laser", offset=f_rf).port_power("BS.4"))
    assert powers[0] < 1e-20
    assert np.all(np.diff(powers) > 0)


def test_src_free_spectral_range():
    cfg = GeoConfig()
    fsr = cfg.omega_src / TWO_PI
    assert np.isclose(fsr, c / (2 * 1201.0), rtol=1e-12)
    # the nominal 125 kHz is a rounded figure for this geometry
    assert abs(fsr / 125e3 - 1) < 2e-3


def test_power_recycling_gain(geo):
    T = GeoConfig().T_PRM
    gain = T / (1 - np.sqrt(1 - T)) ** 2
    # half the recycled power reaches each arm
    assert np.isclose(geo.arm_power, 2.0 * gain / 2, rtol=1e-9)
    assert np.isclose(geo.arm_power, 4442, rtol=1e-3)


def test_fixed_arm_power_rescales_input():
    gm = GeoModel(GeoConfig(T_PRM=0.01, fixed_arm_power=1000.0))
    assert np.isclose(gm.arm_power, 1000.0)
    assert gm.input_power > 2.0


def test_idler_band_periodicity(geo):
    cfg = geo.config
    Om = TWO_PI * np.array([100.0, 2e3, 3e4])
    for N in (1, 80):
        a = geo.readout_matrices(Om, band=0.0)
        b = geo.readout_matrices(Om, band=N * cfg.omega_src)
        assert np.allclose(a, b, atol=1e-9 * np.abs(a).max())


def test_vacuum_in_vacuum_out(geo):
    Om = TWO_PI * np.logspace(2, 5, 7)
    assert np.allclose(geo.vacuum_noise(Om), 1, atol=1e-12)
    joint = geo.joint_covariance(Om, geo.config.nominal_delta(80), np.eye(4))
    assert np.allclose(joint, np.eye(4), atol=1e-12)


def test_signal_response_peaks_at_detuning(geo):
    f = np.linspace(500, 8000, 7501)
    s = np.abs(geo.signal_response(TWO_PI * f))
    assert abs(f[np.argmax(s)] / 2000 - 1) < 0.05


def test_signal_response_linear():
    gm = GeoModel(GeoConfig())
    gm.gw_injection = gm.gw_injection * 0
    assert np.all(gm.signal_response(TWO_PI * np.array([1e3, 1e4])) == 0)


def test_homodyne_angle_tradeoff(geo):
    thetas = np.linspace(0, np.pi, 181)
    low = [abs(geo.signal_response([TWO_PI * 100.0], t)[0]) for t in thetas]
    high = [abs(geo.signal_response([TWO_PI * 5e4], t)[0]) for t in thetas]
    t_low, t_high = thetas[np.argmax(low)], thetas[np.argmax(high)]
    assert abs(t_low - t_high) > np.deg2rad(20)
    # the default angle reads the broadband phase quadrature
    assert abs(t_high - np.pi / 2) < np.deg2rad(5)


def test_tuned_no_squeezing_has_no_dip():
    cfg = GeoConfig(detuning=0.0)
    # below half an FSR; beyond it the next SRC resonance approaches
    f = np.logspace(2, np.log10(0.45 * cfg.omega_src / TWO_PI), 200)
    curve = sensitivity(cfg, "no_squeezing", f)
    assert np.all(np.diff(curve.asd) > 0)
    assert np.allclose(curve.improvement_db, 0)


def test_lo_angle_reference():
    assert lo_angle(np.pi / 2) == 0


def test_zero_squeezing_epr_equals_no_squeezing():
    cfg = GeoConfig(squeezer=SqueezerSpec(0.0, delta=GeoConfig().nominal_delta(80)))
    f = np.logspace(2, 4.5, 50)
    a = sensitivity(cfg, "epr", f)
    b = sensitivity(cfg, "no_squeezing", f)
    assert np.allclose(a.asd, b.asd, rtol=1e-10, atol=0)


def test_epr_needs_operating_point():
    with pytest.raises(ValueError):
        sensitivity(GeoConfig(), "epr", [100.0])
    with pytest.raises(ValueError):
        sensitivity(GeoConfig(), "nonsense", [100.0])


def test_ideal_fd_matches_numerical_minimisation(geo):
    Om = TWO_PI * np.array([150.0, 1500.0, 2000.0, 2300.0, 9000.0])
    msq, rest = geo.squeezer_split(Om)
    u = np.array([np.sin(lo_angle(np.pi / 2)), np.cos(lo_angle(np.pi / 2))])
    r = 10 * np.log(10) / 20
    closed, _ = optimal_single_mode(msq, rest, u, r)
    for i in range(len(Om)):
        res = minimize_scalar(lambda a: single_mode_noise(msq[i:i + 1], rest[i:i + 1], u, r, a)[0],
                              bounds=(-np.pi / 2, np.pi / 2), method="bounded",
                              options={"xatol": 1e-6})
        assert closed[i] <= res.fun * (1 + 1e-9)
        assert np.isclose(closed[i], res.fun, rtol=1e-6)


def test_dc_readout_matches_ideal_at_detuning():
    cfg = GeoConfig()
    f = np.array([cfg.detuning / TWO_PI, 500.0])
    dc = sensitivity(cfg, "dc_readout_fixed_sqz", f)
    fd = sensitivity(cfg, "ideal_fd_sqz", f)
    assert np.isclose(dc.noise[0], fd.noise[0], rtol=1e-9)
    assert dc.noise[1] > fd.noise[1]


def test_loss_budget():
    with pytest.raises(ValueError):
        LossBudget(input_loss=1.0)
    net = build_geo(GeoConfig())
    same = apply_loss_budget(net, LossBudget())
    assert same.components.keys() == net.components.keys()
    lossy = apply_loss_budget(net, LossBudget(0.1, 0.1, 0.01, 0.02))
    assert {"LOSS_IN", "LOSS_OUT"} <= lossy.components.keys()
    assert np.isclose(lossy.components["ETMX"].L, 0.03)
    assert np.isclose(lossy.components["ETMY"].L, 0.01)


def test_default_grid():
    cfg = GeoConfig()
    f = default_grid(cfg)
    assert f[0] == 100.0 and np.isclose(f[-1], 1e5)
    assert len(f) >= 390
    near = f[np.abs(f - 2000) < 5 * cfg.src_half_width / TWO_PI]
    assert len(near) >= 100
    assert len(default_grid(cfg.replace(detuning=0.0))) == 300


def test_omc_network_keeps_vacuum():
    from eprgeo.cavity import OmcSpec
    cfg = GeoConfig(omc=OmcSpec(TWO_PI * 1.4e6, TWO_PI * 435e6))
    gm = GeoModel(cfg, omc_delta=cfg.nominal_delta(80))
    joint = gm.joint_covariance(TWO_PI * np.array([300.0, 2e3]), cfg.nominal_delta(80), np.eye(4))
    assert np.allclose(joint, np.eye(4), atol=1e-12)
    assert "dump" in gm.network.labels

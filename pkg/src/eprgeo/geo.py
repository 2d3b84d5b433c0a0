"""GEO600-like dual-recycled Michelson with EPR squeezing injection.

Layout: laser -> PRM -> BS -> straight arms of length L +/- Ls/2 ending on
the ETMs; BS dark port -> SRM -> Faraday isolator. The isolator's ``in``
port (label ``sqz``) takes the squeezer beam, its ``out`` port feeds the
detection chain: either ideal band separation (``HD_A`` and ``HD_B`` on the
same port) or two OMCs, each behind its own circulator.
"""
import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as C_LIGHT, hbar

from . import cavity
from .network import BeamSplitter, Isolator, Mirror, Network, noise_covariance_at_detectors
from .squeezer import (HomodyneAngles, SqueezerSpec, conditional_over_spectrum,
                       epr_matrix, project, single_mode_squeezed)
from .twophoton import db_to_squeeze_factor, transfer_to_twophoton

TWO_PI = 2 * np.pi
SCENARIOS = ("no_squeezing", "dc_readout_fixed_sqz", "epr", "ideal_fd_sqz")
# theta = pi/2 on HD_A reads the phase quadrature of the input carrier, the one
# carrying the tuned GW signal (and the one a DC-readout offset picks up).
LO_REFERENCE = np.pi / 2


def lo_angle(theta):
    """Absolute quadrature angle at the detector for the signal LO phase theta."""
    return theta - LO_REFERENCE


@dataclass(frozen=True)
class LossBudget:
    """Power loss fractions. ``input_loss`` sits on the squeezer path before
    the SRM, ``output_loss`` between the SRM and the detectors (shared by both
    bands), the internal losses at the end mirrors."""
    input_loss: float = 0.0
    output_loss: float = 0.0
    internal_symmetric: float = 0.0
    internal_asymmetric: float = 0.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if not 0 <= v < 1:
                raise ValueError("%s must be in [0, 1), got %r" % (f.name, v))


@dataclass(frozen=True)
class GeoConfig:
    arm_length: float = 1200.0
    sr_length: float = 1.0
    pr_length: float = 1.15
    T_PRM: float = 900e-6
    T_SRM: float = 0.02
    T_BS: float = 0.5
    T_ETM: float = 0.0
    input_power: float = 2.0
    schnupp_ls: float = 0.0
    detuning: float = TWO_PI * 2e3          # SRC detuning delta_c, rad/s
    squeezer: SqueezerSpec = field(default_factory=lambda: SqueezerSpec(db_to_squeeze_factor(13.0)))
    homodyne: HomodyneAngles = field(default_factory=HomodyneAngles)
    omc: cavity.OmcSpec = None
    losses: LossBudget = field(default_factory=LossBudget)
    wavelength: float = 1064e-9
    fixed_arm_power: float = None            # W on each ETM; rescales input power

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def omega0(self):
        return TWO_PI * C_LIGHT / self.wavelength

    @property
    def src_length(self):
        return self.arm_length + self.sr_length

    @property
    def omega_src(self):
        """SRC free spectral range (rad/s) of the mean arm."""
        return np.pi * C_LIGHT / self.src_length

    @property
    def src_half_width(self):
        return cavity.src_half_width(self.T_SRM, self.src_length)

    def nominal_delta(self, N):
        return cavity.epr_delta(N, self.omega_src, self.detuning)


def apply_loss_budget(net, budget):
    """Return a copy of a GEO network with the loss budget applied."""
    net = net.copy()
    for name, extra in (("ETMX", budget.internal_symmetric + budget.internal_asymmetric),
                        ("ETMY", budget.internal_symmetric)):
        m = net.components[name]
        net.components[name] = Mirror(name, m.T, m.L + extra, m.tuning)
    net = net.attach_loss("sqz", budget.input_loss, name="LOSS_IN")
    net = net.attach_loss("FI.out", budget.output_loss, name="LOSS_OUT")
    return net


def _add_omc(net, name, spec, band_offset):
    l = spec.length
    T = spec.mirror_transmission
    net.add(Isolator(name + "_FI"))
    net.add(Mirror(name + "1", T))
    # resonant for band_offset: 2 (w l / c + tuning) = 0
    net.add(Mirror(name + "2", T, tuning=-band_offset * l / C_LIGHT))
    net.link(name + "_FI.ifo", name + "1.bk")
    net.link(name + "1.fr", name + "2.fr", l)
    return name + "_FI.in", name + "2.bk", name + "_FI.out"


def build_geo(config, omc_delta=None):
    """Assemble the interferometer network for ``config``.

    ``omc_delta`` sets the idler offset the OMCs are tuned to (defaults to the
    squeezer offset). Carrier is resonant in the PRC and dark at the BS
    output; the SRM tuning puts the SRC resonance at ``-detuning``.
    """
    net = Network()
    L, ls = config.arm_length, config.schnupp_ls
    net.add(Mirror("PRM", config.T_PRM))
    net.add(BeamSplitter("BS", config.T_BS))
    net.add(Mirror("ETMX", config.T_ETM))
    net.add(Mirror("ETMY", config.T_ETM))
    net.add(Mirror("SRM", config.T_SRM, tuning=config.detuning * config.src_length / C_LIGHT))
    net.add(Isolator("FI"))
    net.link("PRM.fr", "BS.1", config.pr_length)
    net.link("BS.2", "ETMY.fr", L - ls / 2)
    net.link("BS.3", "ETMX.fr", L + ls / 2)
    net.link("BS.4", "SRM.fr", config.sr_length)
    net.link("SRM.bk", "FI.ifo")
    net.label("laser", "PRM.bk")
    net.label("sqz", "FI.in")
    if config.omc is None:
        net.label("HD_A", "FI.out")
        net.label("HD_B", "FI.out")
    else:
        delta = config.squeezer.delta if omc_delta is None else omc_delta
        first_sig = config.omc.mode == "transmit_signal_reflect_idler"
        a_in, a_tr, a_refl = _add_omc(net, "OMC1", config.omc, 0.0 if first_sig else delta)
        b_in, b_tr, dump = _add_omc(net, "OMC2", config.omc, delta if first_sig else 0.0)
        net.link("FI.out", a_in)
        net.link(a_refl, b_in)
        net.label("HD_A", a_tr if first_sig else b_tr)
        net.label("HD_B", b_tr if first_sig else a_tr)
        net.label("dump", dump)
    return apply_loss_budget(net, config.losses)


def dark_port_power(model, power):
    from .network import solve_carrier
    return solve_carrier(model, power, "laser").port_power("BS.4")


@dataclass
class SensitivityCurve:
    frequencies: np.ndarray       # Hz
    asd: np.ndarray               # strain / sqrt(Hz)
    noise: np.ndarray             # vacuum-normalised readout noise power
    reference_noise: np.ndarray   # same readout without squeezing
    scenario: str
    metadata: dict = field(default_factory=dict)

    @property
    def improvement_db(self):
        return 10 * np.log10(self.reference_noise / self.noise)


class GeoModel:
    """Compiled network plus carrier solution and GW injection vector."""

    def __init__(self, config, omc_delta=None):
        self.config = config
        self.network = build_geo(config, omc_delta)
        self.model = self.network.compile()
        unit = self.model.solve([0.0])
        e_x = unit.incoming("ETMX.fr", {"laser": 1.0})[0]
        power = config.input_power
        if config.fixed_arm_power is not None:
            power = config.fixed_arm_power / abs(e_x) ** 2
        self.input_power = power
        amp = np.sqrt(power)
        self.carrier = unit
        self.etm_fields = {m: amp * unit.incoming(m + ".fr", {"laser": 1.0})[0]
                           for m in ("ETMX", "ETMY")}
        k = config.omega0 / C_LIGHT
        g = np.zeros(len(self.model.nodes), dtype=complex)
        for m, sign in (("ETMX", 1.0), ("ETMY", -1.0)):
            r = np.sqrt(self.network.components[m].R)
            g[self.model.node(m + ".fr")] = sign * 1j * k * config.arm_length / 2 * r * self.etm_fields[m]
        self.gw_injection = g

    def carrier_power(self, port):
        return float(abs(np.sqrt(self.input_power) * self.carrier.field(port, {"laser": 1.0})[0]) ** 2)

    @property
    def dark_port_power(self):
        return self.carrier_power("BS.4")

    @property
    def arm_power(self):
        return float(abs(self.etm_fields["ETMX"]) ** 2)

    def signal_quadratures(self, Omega):
        """(q1, q2) at HD_A per unit strain, as rms quadrature amplitudes."""
        Omega = np.atleast_1d(np.asarray(Omega, dtype=float))
        inj = {"gw": self.gw_injection}
        up = self.model.solve(Omega, inj).transfer("gw", "HD_A")
        lo = self.model.solve(-Omega, inj).transfer("gw", "HD_A")
        q1 = (up + np.conj(lo)) / np.sqrt(2)
        q2 = (up - np.conj(lo)) / (np.sqrt(2) * 1j)
        return q1, q2

    def signal_response(self, Omega, theta=None):
        theta = lo_angle(self.config.homodyne.theta if theta is None else theta)
        q1, q2 = self.signal_quadratures(Omega)
        return q1 * np.sin(theta) + q2 * np.cos(theta)

    def readout_matrices(self, Omega, port="HD_A", band=0.0):
        """Two-photon matrices from every input to ``port`` in ``band``:
        shape (F, K, 2, 2) in the order of ``self.model.inputs``."""
        Omega = np.atleast_1d(np.asarray(Omega, dtype=float))
        i = self.model.node(port)
        up = self.model.solve(band + Omega).X[:, i, :]
        lo = self.model.solve(band - Omega).X[:, i, :]
        return transfer_to_twophoton(up, lo)

    def squeezer_split(self, Omega):
        """Signal-band readout split into the squeezer path matrix (F, 2, 2)
        and the summed vacuum covariance of all other inputs (F, 2, 2)."""
        M = self.readout_matrices(Omega)
        j = self.model.input_column("sqz")
        others = np.delete(M, j, axis=1)
        rest = np.einsum("fkij,fklj->fil", others, others.conj())
        return M[:, j], rest

    def joint_covariance(self, Omega, delta, source=None):
        """(F, 4, 4) joint covariance of HD_A (signal band) and HD_B (idler
        band at ``delta``) with the EPR source on the squeezer input."""
        if source is None:
            sq = self.config.squeezer
            source = epr_matrix(sq.r, sq.theta_s)
        return noise_covariance_at_detectors(
            self.model, [("HD_A", 0.0), ("HD_B", float(delta))], Omega, {"sqz": source})

    def vacuum_noise(self, Omega, theta=None):
        theta = lo_angle(self.config.homodyne.theta if theta is None else theta)
        M = self.readout_matrices(Omega)
        S = np.einsum("fkij,fklj->fil", M, M.conj())
        u = np.array([np.sin(theta), np.cos(theta)])
        return np.einsum("i,fij,j->f", u, S, u).real


def single_mode_noise(msq, rest, u, r, angle):
    """Projected noise with a single squeezed beam of factor r at ``angle``."""
    s = single_mode_squeezed(r, angle)
    total = rest + np.einsum("fij,jk,flk->fil", msq, s, msq.conj())
    return np.einsum("i,fij,j->f", u, total, u).real


def optimal_single_mode(msq, rest, u, r):
    """Per-frequency minimum over the squeeze angle, in closed form.

    The squeezer contribution is cosh(2r) P - sinh(2r) (B cos 2a + C sin 2a)
    with w = M^dagger u; returns (noise, angle).
    """
    w = np.einsum("fji,j->fi", msq.conj(), u)
    base = np.einsum("i,fij,j->f", u, rest, u).real
    p = np.sum(abs(w) ** 2, axis=-1)
    B = abs(w[:, 0]) ** 2 - abs(w[:, 1]) ** 2
    C = 2 * np.real(np.conj(w[:, 0]) * w[:, 1])
    amp = np.hypot(B, C)
    angle = 0.5 * np.arctan2(C, B)
    return base + np.cosh(2 * r) * p - np.sinh(2 * r) * amp, angle


def default_grid(config, n_log=300, n_lin=100, f_min=100.0, f_max=1e5, widths=5):
    """Log grid over [f_min, f_max] Hz densified linearly around the detuning."""
    f = np.logspace(np.log10(f_min), np.log10(f_max), n_log)
    fd = config.detuning / TWO_PI
    if fd > 0:
        w = widths * config.src_half_width / TWO_PI
        lin = np.linspace(max(fd - w, f_min), min(fd + w, f_max), n_lin)
        f = np.union1d(f, lin)
    return f


def sensitivity(config, scenario, frequencies=None, optimization=None, single_mode_db=10.0):
    """Strain sensitivity for one of :data:`SCENARIOS`.

    ``frequencies`` in Hz. For ``epr`` pass an
    :class:`~eprgeo.optimize.OptimizationResult` or a config whose squeezer
    carries ``delta`` > 0 (then ``homodyne.phi`` is used and the gain is
    fitted at the detuning frequency).
    """
    if scenario not in SCENARIOS:
        raise ValueError("unknown scenario %r" % scenario)
    f = default_grid(config) if frequencies is None else np.asarray(frequencies, dtype=float)
    Omega = TWO_PI * f
    theta = config.homodyne.theta
    u = np.array([np.sin(lo_angle(theta)), np.cos(lo_angle(theta))])
    meta = {"scenario": scenario, "detuning_hz": config.detuning / TWO_PI,
            "theta": theta, "losses": dataclasses.asdict(config.losses),
            "schnupp_ls": config.schnupp_ls}

    if scenario == "epr":
        if optimization is not None:
            delta, phi, k = optimization.delta_opt, optimization.phi_b_opt, None
            meta["branch"] = optimization.branch
        elif config.squeezer.delta > 0:
            delta, phi, k = config.squeezer.delta, config.homodyne.phi, None
        else:
            raise ValueError("epr scenario needs an optimization result or squeezer.delta > 0")
        cfg = config.replace(squeezer=dataclasses.replace(config.squeezer, delta=delta))
        gm = GeoModel(cfg)
        angles = HomodyneAngles(lo_angle(theta), phi)
        ref_omega = cfg.detuning if cfg.detuning > 0 else Omega[0]
        jd = gm.joint_covariance([ref_omega], delta)
        v_aa, v_ab, v_bb = project(jd, angles.theta, angles.phi)
        k = float(np.real(v_ab[0]) / v_bb[0]) if v_bb[0] > 0 else 0.0
        joint = gm.joint_covariance(Omega, delta)
        noise = conditional_over_spectrum(joint, angles, "fixed", k)
        ref = gm.vacuum_noise(Omega)
        meta.update(delta_hz=delta / TWO_PI, phi_b=angles.phi, k=k,
                    squeeze_db=20 * cfg.squeezer.r / np.log(10))
    else:
        gm = GeoModel(config)
        ref = gm.vacuum_noise(Omega)
        if scenario == "no_squeezing":
            noise = ref.copy()
        else:
            r = db_to_squeeze_factor(single_mode_db)
            msq, rest = gm.squeezer_split(Omega)
            meta["squeeze_db"] = single_mode_db
            if scenario == "ideal_fd_sqz":
                noise, _ = optimal_single_mode(msq, rest, u, r)
            else:
                ref_omega = config.detuning if config.detuning > 0 else Omega[0]
                m0, r0 = gm.squeezer_split([ref_omega])
                _, angle = optimal_single_mode(m0, r0, u, r)
                noise = single_mode_noise(msq, rest, u, r, angle[0])
                meta["squeeze_angle"] = float(angle[0])
    sig = np.abs(gm.signal_response(Omega, theta))
    asd = np.sqrt(hbar * config.omega0 / 2 * noise) / sig
    meta["input_power"] = gm.input_power
    return SensitivityCurve(f, asd, noise, ref, scenario, meta)

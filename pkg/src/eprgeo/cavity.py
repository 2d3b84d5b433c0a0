"""Closed-form cavity responses, OMC separation and coupled-cavity diagnostics.

Frequencies are angular (rad/s) and measured as offsets from the reference
carrier, with fields varying as exp(-i w t).
"""
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C_LIGHT


@dataclass(frozen=True)
class CavitySpec:
    """Lossless single-ended cavity: resonance ``omega_c``, half-bandwidth
    ``gamma_c`` and free spectral range ``fsr``. ``carrier`` is the frequency
    whose detuning ``carrier - omega_c`` is reported by :attr:`detuning`."""
    gamma_c: float
    omega_c: float = 0.0
    fsr: float = np.inf
    carrier: float = 0.0

    def __post_init__(self):
        if not self.gamma_c > 0 or not self.fsr > 0:
            raise ValueError("gamma_c and fsr must be positive")

    @classmethod
    def detuned(cls, detuning, gamma_c, fsr=np.inf):
        return cls(gamma_c=gamma_c, omega_c=-detuning, fsr=fsr)

    @property
    def detuning(self):
        return self.carrier - self.omega_c

    def offset(self, omega):
        x = np.asarray(omega, dtype=float) - self.omega_c
        if np.isfinite(self.fsr):
            x = np.mod(x + self.fsr / 2, self.fsr) - self.fsr / 2
        return x


def cavity_reflection(spec, omega):
    """r(w) = -(w - w_c - i g) / (w - w_c + i g), repeated every FSR."""
    x = spec.offset(omega)
    g = spec.gamma_c
    return -(x - 1j * g) / (x + 1j * g)


def sideband_phases(detuning, gamma_c, Omega):
    """Reflection phases (phi_plus, phi_minus) of the sidebands at +/- Omega."""
    Omega = np.asarray(Omega, dtype=float)
    return (2 * np.arctan((Omega + detuning) / gamma_c),
            2 * np.arctan((-Omega + detuning) / gamma_c))


def quadrature_rotation_angle(spec, Omega):
    """Frequency-dependent quadrature rotation on reflection from the cavity."""
    Omega = np.asarray(Omega, dtype=float)
    d, g = spec.detuning, spec.gamma_c
    return np.arctan((Omega + d) / g) + np.arctan((-Omega + d) / g)


def twophoton_rotation(M):
    """Rotation angle alpha (mod pi) of lossless two-photon matrices
    ``exp(i beta) R(alpha)``, shape (..., 2, 2)."""
    M = np.asarray(M, dtype=complex)
    p = np.sqrt(np.linalg.det(M))
    a = np.arctan2(np.real(M[..., 1, 0] / p), np.real(M[..., 0, 0] / p))
    return np.mod(a + np.pi / 2, np.pi) - np.pi / 2


def epr_delta(N, omega_src, delta_c):
    """Signal-idler separation placing the idler red-detuned by ``delta_c``
    from the N-th resonance when the signal is blue-detuned by ``delta_c``."""
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    return N * omega_src - 2 * delta_c


def src_half_width(T_srm, length):
    """High-finesse half-bandwidth T c / (4 L) of a cavity with one lossy mirror."""
    return T_srm * C_LIGHT / (4 * length)


def two_mirror_half_width(T1, length, R2=1.0):
    """Half-width of the Lorentzian that reproduces the reflection phase of an
    over-coupled two-mirror cavity: (c / l) (1 - r) / (1 + r), r = r1 r2."""
    r = np.sqrt((1 - T1) * R2)
    return C_LIGHT / length * (1 - r) / (1 + r)


@dataclass(frozen=True)
class OmcSpec:
    """Symmetric, impedance-matched two-mirror OMC.

    ``linewidth`` is the half width at half maximum of the transmission peak
    (the cavity pole), ``fsr`` the free spectral range, both rad/s. ``mode``
    selects which band the first OMC transmits.
    """
    linewidth: float
    fsr: float
    mode: str = "transmit_signal_reflect_idler"

    def __post_init__(self):
        if self.mode not in ("transmit_signal_reflect_idler", "transmit_idler_reflect_signal"):
            raise ValueError("unknown OMC mode %r" % self.mode)
        if not 0 < self.linewidth < self.fsr / 2:
            raise ValueError("OMC linewidth must lie in (0, fsr/2)")

    @property
    def length(self):
        return np.pi * C_LIGHT / self.fsr

    @property
    def mirror_reflectivity(self):
        s = np.sin(np.pi * self.linewidth / self.fsr)
        y = -s + np.sqrt(s * s + 1)
        return y * y

    @property
    def mirror_transmission(self):
        return 1.0 - self.mirror_reflectivity

    @property
    def finesse(self):
        R = self.mirror_reflectivity
        return np.pi * np.sqrt(R) / (1 - R)


def omc_response(spec, x):
    """(transmitted, reflected) amplitudes at offset ``x`` from an OMC resonance."""
    R = spec.mirror_reflectivity
    r = np.sqrt(R)
    psi = np.pi * np.asarray(x, dtype=float) / spec.fsr
    loop = np.exp(2j * psi)
    t = (1 - R) * np.exp(1j * psi) / (1 - R * loop)
    rho = -r + (1 - R) * r * loop / (1 - R * loop)
    return t, rho


def omc_separation_transfer(spec, band, Omega, delta):
    """Transfers of the first OMC for ``band`` ('signal' or 'idler') at
    sideband frequency ``Omega`` (scalar or array, may be negative for the
    lower sideband) when the bands are ``delta`` apart."""
    if delta > spec.fsr / 2 * (1 + 1e-12):
        raise ValueError("delta beyond fsr/2 is ambiguous")
    resonant = "signal" if spec.mode == "transmit_signal_reflect_idler" else "idler"
    if band not in ("signal", "idler"):
        raise ValueError("band must be 'signal' or 'idler'")
    x = np.asarray(Omega, dtype=float)
    if band != resonant:
        x = x + (delta if band == "idler" else -delta)
    return omc_response(spec, x)


@dataclass
class CoupledCavityMap:
    offsets: np.ndarray        # injected field offsets from the carrier, rad/s
    schnupp: np.ndarray        # m
    prc_power: np.ndarray      # W, shape (len(schnupp), len(offsets))
    src_power: np.ndarray
    src_phase: np.ndarray      # rad


def coupled_cavity_response(config, offsets, schnupp_lengths, injected_power=1.0):
    """PRC and SRC circulating power and SRC phase for a probe field injected
    at the dark port, swept over ``offsets`` for each Schnupp asymmetry."""
    from . import geo
    offsets = np.asarray(offsets, dtype=float)
    lengths = np.asarray(schnupp_lengths, dtype=float)
    prc = np.zeros((len(lengths), len(offsets)))
    src = np.zeros_like(prc)
    phase = np.zeros_like(prc)
    amp = np.sqrt(injected_power)
    for i, ls in enumerate(lengths):
        model = geo.build_geo(config.replace(schnupp_ls=ls, omc=None)).compile()
        sol = model.solve(offsets)
        prc_field = sol.field("PRM.fr", {"sqz": amp})
        src_field = sol.field("SRM.fr", {"sqz": amp})
        prc[i] = abs(prc_field) ** 2
        src[i] = abs(src_field) ** 2
        phase[i] = np.angle(src_field)
    return CoupledCavityMap(offsets, lengths, prc, src, phase)


def resonance_peaks(x, y, rel_height=0.05):
    """Indices of local maxima of ``y`` taller than ``rel_height`` of the max."""
    from scipy.signal import find_peaks
    idx, _ = find_peaks(y, height=rel_height * np.max(y))
    return idx

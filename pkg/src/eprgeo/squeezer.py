"""EPR source covariance, beamsplitter entanglement and conditional readout."""
from dataclasses import dataclass

import numpy as np

from .twophoton import SpectralDensityMatrix

EPR_CHANNELS = ("a1", "a2", "b1", "b2")
BS_CHANNELS_IN = ("c1", "c2", "d1", "d2")

# 50/50 beamsplitter on (c1, c2, d1, d2) -> (a1, a2, b1, b2)
BEAMSPLITTER_QUAD = np.array([
    [1, 0, 1, 0],
    [0, 1, 0, 1],
    [1, 0, -1, 0],
    [0, 1, 0, -1],
]) / np.sqrt(2.0)


@dataclass(frozen=True)
class SqueezerSpec:
    """EPR squeezer: squeeze factor ``r``, squeeze angle ``theta_s`` (0 is
    phase squeezing) and signal-idler separation ``delta`` in rad/s."""
    r: float
    theta_s: float = np.pi / 2
    delta: float = 0.0

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("squeeze factor must be >= 0")
        object.__setattr__(self, "theta_s", float(np.mod(self.theta_s, 2 * np.pi)))


@dataclass(frozen=True)
class HomodyneAngles:
    """LO phases: ``theta`` for the signal detector, ``phi`` for the idler."""
    theta: float = np.pi / 2
    phi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", float(np.mod(self.theta, 2 * np.pi)))
        object.__setattr__(self, "phi", float(np.mod(self.phi, 2 * np.pi)))


@dataclass(frozen=True)
class ConditionalReadout:
    v_cond: float
    k_opt: float


def epr_cross_block(r, theta_s):
    c2, s2 = np.cos(2 * theta_s), np.sin(2 * theta_s)
    return np.sinh(2 * r) * np.array([[c2, s2], [s2, -c2]])


def epr_matrix(r, theta_s=np.pi / 2):
    """4x4 covariance of the EPR source over (a1, a2, b1, b2), as a plain array."""
    out = np.cosh(2 * r) * np.eye(4)
    cross = epr_cross_block(r, theta_s)
    out[:2, 2:] = cross
    out[2:, :2] = cross.T
    return out


def epr_source_spectral_matrix(spec):
    return SpectralDensityMatrix(EPR_CHANNELS, epr_matrix(spec.r, spec.theta_s))


def single_mode_squeezed(r, angle):
    """2x2 covariance of a single squeezed beam; ``angle`` = 0 squeezes q1."""
    ch, sh = np.cosh(2 * r), np.sinh(2 * r)
    c2, s2 = np.cos(2 * angle), np.sin(2 * angle)
    return np.array([[ch - sh * c2, -sh * s2], [-sh * s2, ch + sh * c2]])


def beamsplitter_entangle(v_in):
    """Overlap two beams on a 50/50 beamsplitter.

    ``v_in`` is a 4x4 :class:`SpectralDensityMatrix` (or array) over
    (c1, c2, d1, d2); the result is over (a1, a2, b1, b2).
    """
    m = v_in.matrix if isinstance(v_in, SpectralDensityMatrix) else np.asarray(v_in)
    if m.shape != (4, 4):
        raise ValueError("beamsplitter_entangle needs a 4x4 matrix, got %s" % (m.shape,))
    out = BEAMSPLITTER_QUAD @ m @ BEAMSPLITTER_QUAD.T
    return SpectralDensityMatrix(EPR_CHANNELS, out, check=False)


def readout_vectors(theta, phi):
    """Projection vectors for a_theta = a1 sin(theta) + a2 cos(theta) and b_phi."""
    return (np.array([np.sin(theta), np.cos(theta)]),
            np.array([np.sin(phi), np.cos(phi)]))


def project(joint, theta, phi):
    """Return (V_aa, V_ab, V_bb) for joint covariances of shape (..., 4, 4).

    ``phi`` may be an array; it broadcasts against the leading axes of
    ``joint``. V_ab is complex in general (cross spectral density).
    """
    joint = np.asarray(joint)
    u = np.array([np.sin(theta), np.cos(theta)])
    phi = np.asarray(phi, dtype=float)
    w = np.stack([np.sin(phi), np.cos(phi)], axis=-1)
    v_aa = np.einsum("i,...ij,j->...", u, joint[..., :2, :2], u).real
    # (..., 2) row vector u^T S_ab, then contract with w
    uab = np.einsum("i,...ij->...j", u, joint[..., :2, 2:])
    v_ab = np.sum(uab * w, axis=-1)
    sbb = joint[..., 2:, 2:]
    v_bb = np.einsum("...i,...ij,...j->...", w, sbb, w).real
    return tuple(np.broadcast_arrays(v_aa, v_ab, v_bb))


def conditional_from_projection(v_aa, v_ab, v_bb):
    """Wiener-filtered variance with a real recombination gain."""
    v_aa, v_ab, v_bb = np.broadcast_arrays(v_aa, np.real(v_ab), v_bb)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(v_bb > 0, v_ab / np.where(v_bb > 0, v_bb, 1.0), 0.0)
    return v_aa - k * v_ab, k


def conditional_variance(v, angles):
    """Conditional variance and optimal gain for measured quadratures
    a_theta and b_phi of a 4x4 covariance over (a1, a2, b1, b2)."""
    m = v.matrix if isinstance(v, SpectralDensityMatrix) else np.asarray(v)
    v_aa, v_ab, v_bb = project(m, angles.theta, angles.phi)
    v_cond, k = conditional_from_projection(v_aa, v_ab, v_bb)
    return ConditionalReadout(float(v_cond), float(k))


def conditional_over_spectrum(joint, angles, gain_mode="optimal_per_frequency", k=None):
    """Recombined noise power for each frequency of ``joint`` (F, 4, 4).

    ``gain_mode`` is ``"optimal_per_frequency"`` or ``"fixed"``; the fixed mode
    applies the real gain ``k`` at every frequency.
    """
    v_aa, v_ab, v_bb = project(joint, angles.theta, angles.phi)
    if gain_mode == "optimal_per_frequency":
        return conditional_from_projection(v_aa, v_ab, v_bb)[0]
    if gain_mode == "fixed":
        if k is None:
            raise ValueError("fixed gain mode needs k")
        return v_aa - 2 * k * np.real(v_ab) + k ** 2 * v_bb
    raise ValueError("unknown gain mode %r" % (gain_mode,))

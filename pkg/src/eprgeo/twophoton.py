"""Sideband/quadrature conversions, two-photon matrices and spectral-density matrices.

Conventions used throughout the package:

* quadratures of a sideband pair (a+, a-) at carrier +/- Omega are
  ``q1 = (a+ + conj(a-)) / sqrt(2)`` and ``q2 = (a+ - conj(a-)) / (sqrt(2) i)``;
* spectral densities are single sided and vacuum normalised, so an
  unsqueezed vacuum has the identity matrix;
* angular frequencies are in rad/s.
"""
from typing import NamedTuple, Sequence

import numpy as np

SQRT2 = np.sqrt(2.0)

# columns map (upper, conj(lower)) -> (q1, q2)
_TO_QUAD = np.array([[1.0, 1.0], [-1.0j, 1.0j]]) / SQRT2


class SidebandPair(NamedTuple):
    upper: complex
    lower: complex
    carrier_offset: float = 0.0


class QuadraturePair(NamedTuple):
    q1: complex
    q2: complex


def sidebands_to_quadratures(pair):
    """Return the amplitude/phase quadratures of a sideband pair.

    Works elementwise on array-valued ``upper``/``lower``.
    """
    up = np.asarray(pair.upper, dtype=complex)
    lo_c = np.conj(np.asarray(pair.lower, dtype=complex))
    return QuadraturePair((up + lo_c) / SQRT2, (up - lo_c) / (SQRT2 * 1j))


def quadratures_to_sidebands(quad, carrier_offset=0.0):
    q1 = np.asarray(quad.q1, dtype=complex)
    q2 = np.asarray(quad.q2, dtype=complex)
    upper = (q1 + 1j * q2) / SQRT2
    lower = np.conj((q1 - 1j * q2) / SQRT2)
    return SidebandPair(upper, lower, carrier_offset)


def transfer_to_twophoton(t_upper, t_lower):
    """Two-photon matrix of an element with sideband transfers ``t_upper`` at
    carrier+Omega and ``t_lower`` at carrier-Omega.

    Broadcasts over leading dimensions; the result has shape ``(..., 2, 2)``.
    """
    tp = np.asarray(t_upper, dtype=complex)
    tm = np.conj(np.asarray(t_lower, dtype=complex))
    tp, tm = np.broadcast_arrays(tp, tm)
    s = 0.5 * (tp + tm)
    d = 0.5j * (tp - tm)
    out = np.empty(tp.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = s
    out[..., 0, 1] = d
    out[..., 1, 0] = -d
    out[..., 1, 1] = s
    return out


def rotation(angle):
    """Real quadrature rotation matrix ``[[cos, -sin], [sin, cos]]``."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def db_to_squeeze_factor(db):
    """Squeeze factor r for a squeezing level in dB, 10 log10(e^{2r}) = db."""
    db = np.asarray(db, dtype=float)
    if np.any(db < 0):
        raise ValueError("squeezing level in dB must be non-negative, got %r" % (db,))
    r = db * np.log(10.0) / 20.0
    return float(r) if r.ndim == 0 else r


def squeeze_factor_to_db(r):
    r = np.asarray(r, dtype=float)
    db = 20.0 * r / np.log(10.0)
    return float(db) if db.ndim == 0 else db


def power_to_db(ratio):
    return 10.0 * np.log10(ratio)


def conditional_squeezing_db(db_in):
    """Best conditional squeezing (dB) of an ideal EPR pair with ``db_in`` per beam."""
    r = db_to_squeeze_factor(db_in)
    return power_to_db(np.cosh(2 * r))


class SpectralDensityMatrix:
    """Hermitian, vacuum-normalised spectral-density matrix over labelled
    quadrature channels."""

    def __init__(self, channels: Sequence[str], matrix, check=True, atol=1e-12):
        self.channels = tuple(channels)
        self.matrix = np.array(matrix, dtype=complex)
        n = len(self.channels)
        if self.matrix.shape != (n, n):
            raise ValueError(
                "matrix shape %s does not match %d channels" % (self.matrix.shape, n))
        if check:
            scale = max(1.0, np.abs(self.matrix).max())
            if not np.allclose(self.matrix, self.matrix.conj().T, atol=atol * scale, rtol=0):
                raise ValueError("spectral-density matrix is not Hermitian")
            if np.linalg.eigvalsh(self.matrix).min() < -1e-9 * scale:
                raise ValueError("spectral-density matrix is not positive semidefinite")

    @classmethod
    def vacuum(cls, channels):
        return cls(channels, np.eye(len(channels)))

    def __repr__(self):
        return "SpectralDensityMatrix(channels=%r)" % (self.channels,)

    def index(self, channel):
        return self.channels.index(channel)

    def eigvals(self):
        return np.linalg.eigvalsh(self.matrix)

    def transform(self, transfer, channels=None):
        """Return ``M S M^dagger`` for a (complex) transfer matrix ``M``."""
        m = np.asarray(transfer, dtype=complex)
        out = m @ self.matrix @ m.conj().T
        return SpectralDensityMatrix(channels or self.channels, out, check=False)

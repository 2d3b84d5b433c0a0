"""Search for the idler offset, idler LO phase and recombination gain."""
import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.signal import argrelmin

from .geo import TWO_PI, GeoModel, lo_angle, sensitivity
from .network import noise_covariance_at_detectors
from .squeezer import conditional_from_projection, epr_matrix, project

GOLDEN = (np.sqrt(5) - 1) / 2


@dataclass
class Landscape:
    deltas: np.ndarray     # rad/s
    phis: np.ndarray       # rad
    noise: np.ndarray      # (len(deltas), len(phis)) vacuum-normalised

    def profile(self):
        """Noise minimised over the LO phase for each offset."""
        return self.noise.min(axis=1)

    def local_minima(self):
        p = self.profile()
        idx = argrelmin(np.concatenate([[np.inf], p, [np.inf]]), mode="clip")[0] - 1
        return idx[(idx >= 0) & (idx < len(p))]


@dataclass
class OptimizationResult:
    delta_opt: float
    phi_b_opt: float
    k_opt: float
    branch: str
    noise_at_detuning: float
    n_fsr: int
    config: object = None
    landscape: Landscape = None

    @property
    def improvement_db(self):
        return -10 * np.log10(self.noise_at_detuning)


def golden_section(func, a, b, tol):
    """Minimise a unimodal ``func`` on [a, b] to an interval of width ``tol``."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = func(c), func(d)
    while abs(b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = func(d)
    x = 0.5 * (a + b)
    return x, func(x)


class _Objective:
    """Readout noise at the detuning frequency (or averaged over a band)."""

    def __init__(self, config, N, objective="noise_at_detuning", band=(200.0, 2e4), n_band=40):
        self.config = config
        self.N = N
        self.gm = GeoModel(config, omc_delta=config.nominal_delta(N))
        self.model = self.gm.model
        self.theta = lo_angle(config.homodyne.theta)
        dc = config.detuning
        if objective == "noise_at_detuning":
            self.omegas = np.array([dc])
            self.ref = 0
        elif objective == "band_integrated":
            f = np.logspace(np.log10(band[0]), np.log10(band[1]), n_band)
            self.omegas = np.union1d(TWO_PI * f, [dc])
            self.ref = int(np.searchsorted(self.omegas, dc))
        else:
            raise ValueError("unknown objective %r" % objective)
        self.objective = objective
        sq = config.squeezer
        self.source = epr_matrix(sq.r, sq.theta_s)
        self.cols = list(range(len(self.model.inputs)))
        self.j_sqz = self.model.input_column("sqz")
        self.ma = self._matrices("HD_A", np.zeros(1))[0]       # (W, K, 2, 2)

    def _matrices(self, port, bands):
        """Two-photon matrices for each band offset: (len(bands), W, K, 2, 2)."""
        from .twophoton import transfer_to_twophoton
        W = len(self.omegas)
        off = np.concatenate([b + np.concatenate([self.omegas, -self.omegas]) for b in bands])
        X = self.model.solve(off).X[:, self.model.node(port), :]
        X = X.reshape(len(bands), 2, W, -1)
        return transfer_to_twophoton(X[:, 0], X[:, 1])

    def joint(self, deltas):
        """Joint covariance (len(deltas), W, 4, 4)."""
        mb = self._matrices("HD_B", np.asarray(deltas, dtype=float))
        nd, W, K = mb.shape[:3]
        ma = np.broadcast_to(self.ma, (nd,) + self.ma.shape)
        # vacuum inputs: block-diagonal sum; squeezer input carries the EPR matrix
        out = np.zeros((nd, W, 4, 4), dtype=complex)
        mask = np.ones(K, dtype=bool)
        mask[self.j_sqz] = False
        out[..., :2, :2] = np.einsum("dwkij,dwklj->dwil", ma[:, :, mask], ma[:, :, mask].conj())
        out[..., 2:, 2:] = np.einsum("dwkij,dwklj->dwil", mb[:, :, mask], mb[:, :, mask].conj())
        big = np.zeros((nd, W, 4, 4), dtype=complex)
        big[..., :2, :2] = ma[:, :, self.j_sqz]
        big[..., 2:, 2:] = mb[:, :, self.j_sqz]
        out += big @ self.source @ np.conj(np.swapaxes(big, -1, -2))
        return out

    def noise(self, joint, phis):
        """Objective for joint (D, W, 4, 4) and phases (P,) -> (D, P)."""
        phis = np.asarray(phis, dtype=float)
        v_aa, v_ab, v_bb = project(joint[:, :, None], self.theta, phis[None, None, :])
        if self.objective == "noise_at_detuning":
            return conditional_from_projection(v_aa, v_ab, v_bb)[0][:, 0, :]
        k = np.real(v_ab[:, self.ref]) / v_bb[:, self.ref]
        n = v_aa - 2 * k[:, None] * np.real(v_ab) + k[:, None] ** 2 * v_bb
        return np.mean(10 * np.log10(n), axis=1)

    def at(self, delta, phi):
        return float(self.noise(self.joint([delta]), [phi])[0, 0])

    def readout_at_detuning(self, delta, phi):
        j = self.joint([delta])[0, self.ref if self.objective != "noise_at_detuning" else 0]
        v_aa, v_ab, v_bb = project(j, self.theta, phi)
        v, k = conditional_from_projection(v_aa, v_ab, v_bb)
        return float(v), float(k)


def _refine(obj, delta, phi, d_step, p_step, rounds=6, rtol=1e-9):
    value = obj.at(delta, phi)
    for _ in range(rounds):
        delta, _ = golden_section(lambda d: obj.at(d, phi), delta - d_step, delta + d_step,
                                  d_step * 1e-5)
        jd = obj.joint([delta])
        phi, new = golden_section(lambda p: float(obj.noise(jd, [p])[0, 0]),
                                  phi - p_step, phi + p_step, p_step * 1e-5)
        converged = abs(new - value) <= rtol * abs(value)
        value = new
        if converged:
            break
    return delta, float(np.mod(phi, 2 * np.pi)), value


def scan_landscape(config, N, n_delta=161, n_phi=360, objective="noise_at_detuning",
                   span=4.0, **kw):
    """Noise over Delta in [N w_SRC - span dc, N w_SRC + span dc] and phi in [0, 2 pi)."""
    obj = _Objective(config, N, objective, **kw)
    centre = N * config.omega_src
    deltas = np.linspace(centre - span * config.detuning, centre + span * config.detuning, n_delta)
    phis = np.linspace(0, 2 * np.pi, n_phi, endpoint=False)
    noise = np.concatenate([obj.noise(obj.joint(chunk), phis)
                            for chunk in np.array_split(deltas, max(1, n_delta // 64))])
    return obj, Landscape(deltas, phis, noise)


def optimize_epr_branches(config, N, objective="noise_at_detuning", n_delta=161, n_phi=360,
                          keep_landscape=False, require_improvement=True, **kw):
    """Optimise both branches; returns ``{"lower": result, "upper": result}``.

    Local minima of the phase-minimised profile below the idler's SRC
    resonance (N w_SRC - dc) form the lower branch, the rest the upper one.
    With ``require_improvement`` minima that do not beat the unsqueezed
    readout are dropped.
    """
    if not config.detuning > 0:
        raise ValueError("EPR optimisation needs a positive SRC detuning")
    if int(N) != N or N < 1:
        raise ValueError("N must be a positive integer")
    obj, land = scan_landscape(config, N, n_delta, n_phi, objective, **kw)
    profile = land.profile()
    split = N * config.omega_src - config.detuning
    d_step = land.deltas[1] - land.deltas[0]
    p_step = land.phis[1] - land.phis[0]
    unsqueezed = float(np.mean(obj.gm.vacuum_noise(obj.omegas)))
    if objective == "band_integrated":
        unsqueezed = 10 * np.log10(unsqueezed)
    minima = land.local_minima()
    results = {}
    for branch, sel in (("lower", land.deltas[minima] < split), ("upper", land.deltas[minima] >= split)):
        cand = minima[sel]
        if not len(cand):
            continue
        i = cand[np.argmin(profile[cand])]
        if require_improvement and profile[i] >= unsqueezed:
            continue
        phi0 = land.phis[np.argmin(land.noise[i])]
        delta, phi, _ = _refine(obj, land.deltas[i], phi0, d_step, p_step)
        v, k = obj.readout_at_detuning(delta, phi)
        cfg = config.replace(squeezer=dataclasses.replace(config.squeezer, delta=delta),
                             homodyne=dataclasses.replace(config.homodyne, phi=phi))
        results[branch] = OptimizationResult(delta, phi, k, branch, v, int(N), cfg,
                                             land if keep_landscape else None)
    if not results:
        raise RuntimeError("no EPR operating point below the unsqueezed noise; "
                           "check the OMC mode and squeezer settings")
    return results


def optimize_epr(config, N, objective="noise_at_detuning", branch="lower", **kw):
    """Optimal (Delta, phi_B, K) for the requested branch."""
    results = optimize_epr_branches(config, N, objective, **kw)
    if branch not in results:
        raise RuntimeError("no %s-branch optimum found" % branch)
    return results[branch]


def choose_branch(result_lower, result_upper, band=(200.0, 2e4), n=60, tol_db=0.01):
    """Pick the branch with the larger mean improvement (dB) over ``band`` in Hz.

    A single-point band (lo == hi) compares at that frequency only. Ties
    within ``tol_db`` go to the lower branch.
    """
    lo, hi = band
    f = np.array([lo]) if lo == hi else np.logspace(np.log10(lo), np.log10(hi), n)
    scores = {}
    for res in (result_lower, result_upper):
        curve = sensitivity(res.config, "epr", f, optimization=res)
        scores[res.branch] = float(np.mean(curve.improvement_db))
    if scores["upper"] > scores["lower"] + tol_db:
        return "upper"
    return "lower"

"""Frequency-domain port-graph solver for plane-wave optical networks.

Unknowns are the outgoing fields at every component port. A link of length
``l`` between two ports delivers the outgoing field of one as the incoming
field of the other with phase ``exp(+i w l / c)``, ``w`` being the offset
from the reference carrier (fields vary as ``exp(-i w t)``; macroscopic
lengths are whole wavelengths of the carrier and microscopic positions live
in the mirror tunings). Ports that
are not linked are open: they take an input field and emit an output field.

Mirror convention: reflection ``+r exp(2i tuning)`` on the front, ``-r
exp(-2i tuning)`` on the back, real transmission ``t``.
"""
import copy
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C_LIGHT

from .twophoton import transfer_to_twophoton


def _amplitudes(T, L):
    if not (0 <= T <= 1 and 0 <= L <= 1) or T + L > 1 + 1e-15:
        raise ValueError("need 0 <= T, L and T + L <= 1 (got T=%g, L=%g)" % (T, L))
    return np.sqrt(max(1.0 - T - L, 0.0)), np.sqrt(T)


class Component:
    ports = ()

    def __init__(self, name):
        if "." in name:
            raise ValueError("component names may not contain '.'")
        self.name = name

    def scattering(self):
        raise NotImplementedError

    def __repr__(self):
        return "%s(%r)" % (type(self).__name__, self.name)


class Mirror(Component):
    ports = ("fr", "bk")

    def __init__(self, name, T, L=0.0, tuning=0.0):
        super().__init__(name)
        self.T, self.L, self.tuning = float(T), float(L), float(tuning)
        _amplitudes(self.T, self.L)

    @property
    def R(self):
        return 1.0 - self.T - self.L

    def scattering(self):
        r, t = _amplitudes(self.T, self.L)
        ph = np.exp(2j * self.tuning)
        return np.array([[r * ph, t], [t, -r / ph]])


class BeamSplitter(Component):
    """Ports 1, 2 on the front (reflect into each other), 3, 4 on the back;
    1 transmits to 3 and 2 to 4."""
    ports = ("1", "2", "3", "4")

    def __init__(self, name, T=0.5, L=0.0, tuning=0.0):
        super().__init__(name)
        self.T, self.L, self.tuning = float(T), float(L), float(tuning)
        _amplitudes(self.T, self.L)

    def scattering(self):
        r, t = _amplitudes(self.T, self.L)
        f = r * np.exp(2j * self.tuning)
        b = -r * np.exp(-2j * self.tuning)
        return np.array([
            [0, f, t, 0],
            [f, 0, 0, t],
            [t, 0, 0, b],
            [0, t, b, 0],
        ], dtype=complex)


class Loss(Component):
    """Two-port attenuator passing a power fraction ``1 - epsilon`` each way."""
    ports = ("a", "b")

    def __init__(self, name, epsilon):
        super().__init__(name)
        if not 0 <= epsilon < 1:
            raise ValueError("loss fraction must satisfy 0 <= epsilon < 1, got %r" % epsilon)
        self.epsilon = float(epsilon)

    def scattering(self):
        a = np.sqrt(1.0 - self.epsilon)
        return np.array([[0, a], [a, 0]], dtype=complex)


class Isolator(Component):
    """Ideal three-port circulator: in -> ifo -> out -> in."""
    ports = ("in", "ifo", "out")

    def scattering(self):
        # rows are outgoing ports, columns incoming
        return np.array([
            [0, 0, 1],
            [1, 0, 0],
            [0, 1, 0],
        ], dtype=complex)


@dataclass
class Link:
    a: str
    b: str
    length: float = 0.0


class Network:
    """Mutable builder; call :meth:`compile` to get a frozen solver."""

    def __init__(self):
        self.components = {}
        self.links = {}
        self.labels = {}

    def add(self, component):
        if component.name in self.components:
            raise ValueError("duplicate component %r" % component.name)
        self.components[component.name] = component
        return component

    def copy(self):
        return copy.deepcopy(self)

    def resolve(self, port):
        port = self.labels.get(port, port)
        comp, _, p = port.partition(".")
        if comp not in self.components or p not in self.components[comp].ports:
            raise KeyError("unknown port %r" % port)
        return port

    def link(self, a, b, length=0.0, name=None):
        a, b = self.resolve(a), self.resolve(b)
        if length < 0:
            raise ValueError("negative length")
        for other in self.links.values():
            if {a, b} & {other.a, other.b}:
                raise ValueError("port already linked: %s / %s" % (a, b))
        name = name or "%s--%s" % (a, b)
        self.links[name] = Link(a, b, float(length))
        return name

    def label(self, alias, port):
        self.labels[alias] = self.resolve(port)

    def link_at(self, port):
        port = self.resolve(port)
        for name, lk in self.links.items():
            if port in (lk.a, lk.b):
                return name
        return None

    def attach_loss(self, port, epsilon, name=None):
        """Return a copy with a loss element inserted at ``port``.

        If the port is linked the loss sits at that end of the link; if it is
        open the loss becomes the new open end and any label follows it.
        """
        if not 0 <= epsilon < 1:
            raise ValueError("loss fraction must satisfy 0 <= epsilon < 1, got %r" % epsilon)
        net = self.copy()
        if epsilon == 0:
            return net
        port = net.resolve(port)
        name = name or "loss_" + port.replace(".", "_")
        net.add(Loss(name, epsilon))
        lname = net.link_at(port)
        if lname is None:
            net.link(port, name + ".a")
            for alias, target in list(net.labels.items()):
                if target == port:
                    net.labels[alias] = name + ".b"
        else:
            lk = net.links.pop(lname)
            other = lk.b if lk.a == port else lk.a
            net.link(other, name + ".b", lk.length, name=lname)
            net.link(name + ".a", port)
        return net

    def compile(self):
        return CompiledNetwork(self)


def attach_loss(net, port, epsilon):
    return net.attach_loss(port, epsilon)


class CompiledNetwork:
    """Frozen network: dense per-frequency solves for every input at once."""

    def __init__(self, net):
        self.labels = dict(net.labels)
        nodes = []
        blocks = []
        for comp in net.components.values():
            nodes.extend("%s.%s" % (comp.name, p) for p in comp.ports)
            blocks.append(comp)
        self.nodes = nodes
        self.index = {p: i for i, p in enumerate(nodes)}
        n = len(nodes)
        S = np.zeros((n, n), dtype=complex)
        loss_cols, loss_names = [], []
        i0 = 0
        for comp in blocks:
            k = len(comp.ports)
            s = comp.scattering()
            S[i0:i0 + k, i0:i0 + k] = s
            # vacuum entering through losses: covariance I - S S^dagger
            w, v = np.linalg.eigh(np.eye(k) - s @ s.conj().T)
            j = 0
            for val, vec in zip(w, v.T):
                if val > 1e-14:
                    col = np.zeros(n, dtype=complex)
                    col[i0:i0 + k] = np.sqrt(val) * vec
                    loss_cols.append(col)
                    loss_names.append("%s.loss%d" % (comp.name, j))
                    j += 1
            i0 += k
        self.S = S

        src, dst, lengths = [], [], []
        linked = set()
        for lk in net.links.values():
            a, b = self.index[lk.a], self.index[lk.b]
            src += [a, b]
            dst += [b, a]
            lengths += [lk.length, lk.length]
            linked.update((a, b))
        self._src = np.array(src, dtype=int)
        self._dst = np.array(dst, dtype=int)
        self._len = np.array(lengths, dtype=float)
        self.open_ports = [p for i, p in enumerate(nodes) if i not in linked]
        open_idx = [self.index[p] for p in self.open_ports]

        cols = [S[:, i] for i in open_idx] + loss_cols
        self.inputs = list(self.open_ports) + loss_names
        self.input_index = {p: i for i, p in enumerate(self.inputs)}
        self.B = np.array(cols).T if cols else np.zeros((n, 0), dtype=complex)
        self.loss_inputs = loss_names

    def resolve(self, port):
        return self.labels.get(port, port)

    def node(self, port):
        return self.index[self.resolve(port)]

    def input_column(self, port):
        return self.input_index[self.resolve(port)]

    def system_matrix(self, offsets):
        """``I - A(w)`` for each offset, shape (F, n, n)."""
        offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
        n = len(self.nodes)
        ph = np.exp(1j * np.outer(offsets, self._len) / C_LIGHT)
        A = np.zeros((len(offsets), n, n), dtype=complex)
        if len(self._src):
            A[:, :, self._src] = self.S[:, self._dst][None, :, :] * ph[:, None, :]
        return np.eye(n)[None] - A

    def solve(self, offsets, injections=None):
        """Solve at each frequency offset (rad/s from the reference carrier).

        ``injections`` maps names to length-n vectors added directly to the
        outgoing fields (e.g. signal sidebands generated at a mirror).
        """
        offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
        names = list(self.inputs)
        B = self.B
        if injections:
            names += list(injections)
            B = np.concatenate([B, np.array(list(injections.values())).T], axis=1)
        M = self.system_matrix(offsets)
        cond = np.linalg.cond(M)
        if not np.all(np.isfinite(cond)) or np.any(cond > 1e14):
            raise np.linalg.LinAlgError("singular network system (cond=%g)" % np.max(cond))
        X = np.linalg.solve(M, np.broadcast_to(B, (len(offsets),) + B.shape))
        return Solution(self, offsets, names, X)

    def scattering_matrix(self, offsets):
        """Open-input to open-output amplitude matrix, shape (F, n_open, n_open)."""
        sol = self.solve(offsets)
        rows = [self.index[p] for p in self.open_ports]
        return sol.X[:, rows, :len(self.open_ports)]


class Solution:
    """Transfers from every input to every outgoing field at a set of offsets."""

    def __init__(self, model, offsets, inputs, X):
        self.model = model
        self.offsets = offsets
        self.inputs = inputs
        self.input_index = {p: i for i, p in enumerate(inputs)}
        self.X = X

    def transfer(self, inp, out):
        j = self.input_index[self.model.resolve(inp)]
        return self.X[:, self.model.node(out), j]

    def field(self, out, amplitudes):
        """Outgoing field at ``out`` for input amplitudes ``{input: amplitude}``."""
        i = self.model.node(out)
        total = np.zeros(len(self.offsets), dtype=complex)
        for inp, amp in amplitudes.items():
            total = total + amp * self.X[:, i, self.input_index[self.model.resolve(inp)]]
        return total

    def incoming(self, port, amplitudes):
        """Field arriving at a linked ``port`` (propagated from its partner)."""
        model = self.model
        i = model.node(port)
        k = np.nonzero(model._dst == i)[0]
        if not len(k):
            raise KeyError("port %r is open" % port)
        k = k[0]
        partner = model.nodes[model._src[k]]
        ph = np.exp(1j * self.offsets * model._len[k] / C_LIGHT)
        return ph * self.field(partner, amplitudes)


@dataclass
class TransferSet:
    frequency: np.ndarray
    transfers: dict

    def __getitem__(self, key):
        return self.transfers[key]


def transfer_set(solution, outputs, inputs=None):
    inputs = inputs if inputs is not None else [i for i in solution.inputs]
    return TransferSet(solution.offsets, {
        (i, o): solution.transfer(i, o) for i in inputs for o in outputs})


@dataclass
class CarrierSolution:
    power: float
    laser_port: str
    solution: Solution

    def field(self, port):
        return self.solution.field(port, {self.laser_port: np.sqrt(self.power)})[0]

    def incoming(self, port):
        return self.solution.incoming(port, {self.laser_port: np.sqrt(self.power)})[0]

    def port_power(self, port):
        return float(abs(self.field(port)) ** 2)


def solve_carrier(model, laser_power, laser_port, offset=0.0):
    """Steady-state classical carrier with ``laser_power`` watts entering at
    the open ``laser_port``."""
    sol = model.solve([offset])
    return CarrierSolution(float(laser_power), laser_port, sol)


@dataclass
class SidebandTransfers:
    carrier_offset: float
    omega: np.ndarray
    upper: Solution
    lower: Solution

    def twophoton(self, inp, out):
        return transfer_to_twophoton(self.upper.transfer(inp, out),
                                     self.lower.transfer(inp, out))


def solve_sidebands(model, carrier_offset, omega, injections=None):
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(omega < 0):
        raise ValueError("sideband frequencies must be positive")
    up = model.solve(carrier_offset + omega, injections)
    lo = model.solve(carrier_offset - omega, injections)
    return SidebandTransfers(carrier_offset, omega, up, lo)


def noise_covariance_at_detectors(model, detectors, omega, source_covariances=None,
                                  exclude=()):
    """Joint quadrature spectral density at a set of homodyne detectors.

    ``detectors`` is a sequence of ``(port, band_offset)``; each contributes
    two channels (q1, q2) in order. Inputs are vacuum unless listed in
    ``source_covariances``, which maps an input port to a (2B, 2B) matrix
    over the distinct band offsets of ``detectors`` in order of first
    appearance. Returns an array of shape (F, 2D, 2D).
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    source_covariances = source_covariances or {}
    bands = []
    for _, off in detectors:
        if off not in bands:
            bands.append(off)
    D, Bn = len(detectors), len(bands)
    inputs = [p for p in model.inputs if p not in {model.resolve(e) for e in exclude}]
    K = len(inputs)
    F = len(omega)
    M = np.zeros((F, K, 2 * D, 2 * Bn), dtype=complex)
    cols = [model.input_index[p] for p in inputs]
    for b, off in enumerate(bands):
        sb = solve_sidebands(model, off, omega)
        for d, (port, doff) in enumerate(detectors):
            if doff != off:
                continue
            i = model.node(port)
            tp = sb.upper.X[:, i, :][:, cols]
            tm = sb.lower.X[:, i, :][:, cols]
            M[:, :, 2 * d:2 * d + 2, 2 * b:2 * b + 2] = transfer_to_twophoton(tp, tm)
    Sk = np.broadcast_to(np.eye(2 * Bn, dtype=complex), (K, 2 * Bn, 2 * Bn)).copy()
    for port, cov in source_covariances.items():
        key = model.resolve(port)
        if key not in model.input_index:
            raise KeyError("no input %r in network" % port)
        m = getattr(cov, "matrix", cov)
        Sk[inputs.index(key)] = np.asarray(m, dtype=complex)
    return np.einsum("fkij,kjl,fkml->fim", M, Sk, M.conj(), optimize=True)

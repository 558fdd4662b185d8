"""Parameterized circuits, statevector and density-matrix simulation.

Rotations follow ``r(theta) = exp(i theta G)`` with ``G`` in {X, Z}.  Every
objective built from such a circuit is pi-periodic in each parameter, and the
exact parameter-shift rule uses shifts of +-pi/4 with unit prefactor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

GATE_KINDS = ("RX", "RZ", "CNOT")
SHIFT = math.pi / 4


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    param_index: int | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.kind == "CNOT":
            if len(self.qubits) != 2 or self.qubits[0] == self.qubits[1]:
                raise ValueError("CNOT needs two distinct qubits")
            if self.param_index is not None:
                raise ValueError("CNOT carries no parameter")
        else:
            if len(self.qubits) != 1:
                raise ValueError(f"{self.kind} acts on one qubit")
            if self.param_index is None or self.param_index < 0:
                raise ValueError(f"{self.kind} needs a parameter slot")


@dataclass(frozen=True)
class ParamCircuit:
    n_qubits: int
    depth: int
    gates: tuple[Gate, ...]
    num_params: int

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.qubits) >= self.n_qubits or min(g.qubits) < 0:
                raise ValueError(f"gate {g} addresses a qubit outside 0..{self.n_qubits - 1}")
            if g.param_index is not None and g.param_index >= self.num_params:
                raise ValueError(f"gate {g} references parameter beyond {self.num_params}")

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "depth": self.depth,
            "num_params": self.num_params,
            "gates": [
                {"kind": g.kind, "qubits": list(g.qubits), "param_index": g.param_index}
                for g in self.gates
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ParamCircuit":
        gates = [Gate(g["kind"], tuple(g["qubits"]), g.get("param_index")) for g in doc["gates"]]
        return cls(int(doc["n_qubits"]), int(doc["depth"]), tuple(gates), int(doc["num_params"]))


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing channel applied after every gate."""

    depolarizing_prob_1q: float = 0.0
    depolarizing_prob_2q: float = 0.0

    def __post_init__(self):
        for p in (self.depolarizing_prob_1q, self.depolarizing_prob_2q):
            if not 0 <= p <= 1:
                raise ValueError(f"depolarizing probability {p} outside [0, 1]")


def build_ansatz(n_qubits: int, depth: int) -> ParamCircuit:
    """Layers of [RX on all, RZ on all, CNOT chain i -> i+1]."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    gates = []
    for layer in range(depth):
        base = 2 * n_qubits * layer
        gates += [Gate("RX", (q,), base + q) for q in range(n_qubits)]
        gates += [Gate("RZ", (q,), base + n_qubits + q) for q in range(n_qubits)]
        gates += [Gate("CNOT", (q, q + 1)) for q in range(n_qubits - 1)]
    return ParamCircuit(n_qubits, depth, tuple(gates), 2 * n_qubits * depth)


@lru_cache(maxsize=None)
def _tables(n: int):
    """Bit-flip permutations and Z signs for every slot of an n-qubit register."""
    idx = np.arange(2**n)
    flips, signs = [], []
    for q in range(n):
        bit = 1 << (n - 1 - q)
        flips.append(idx ^ bit)
        signs.append(np.where(idx & bit, -1.0, 1.0))
    return flips, signs


@lru_cache(maxsize=None)
def _cnot_perm(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(2**n)
    cbit, tbit = 1 << (n - 1 - control), 1 << (n - 1 - target)
    return np.where(idx & cbit, idx ^ tbit, idx)


def _check_theta(circuit: ParamCircuit, theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[-1] != circuit.num_params:
        raise ValueError(f"expected {circuit.num_params} parameters, got {theta.shape[-1]}")
    return theta


def _split(psi: np.ndarray, q: int) -> np.ndarray:
    """View of stacked vectors with slot q exposed as axis 2."""
    return psi.reshape(psi.shape[0], 2**q, 2, -1)


def _rx(psi: np.ndarray, q: int, c: np.ndarray, s: np.ndarray) -> np.ndarray:
    v = _split(psi, q)
    a0, a1 = v[:, :, 0], v[:, :, 1]
    out = np.empty_like(v)
    out[:, :, 0] = c * a0 + s * a1
    out[:, :, 1] = s * a0 + c * a1
    return out.reshape(psi.shape)


def _rz(psi: np.ndarray, q: int, phase: np.ndarray) -> np.ndarray:
    v = _split(psi, q)
    out = np.empty_like(v)
    out[:, :, 0] = v[:, :, 0] * phase
    out[:, :, 1] = v[:, :, 1] * phase.conj()
    return out.reshape(psi.shape)


def _pauli(psi: np.ndarray, q: int, kind: str) -> np.ndarray:
    v = _split(psi, q)
    if kind == "RX":
        return v[:, :, ::-1].reshape(psi.shape)
    out = v.copy()
    out[:, :, 1] *= -1
    return out.reshape(psi.shape)


def _apply_gate(psi: np.ndarray, gate: Gate, n: int, thetas: np.ndarray,
                sign: float = 1.0) -> np.ndarray:
    if gate.kind == "CNOT":
        return psi[:, _cnot_perm(n, *gate.qubits)]
    t = sign * thetas[:, gate.param_index, None, None]
    if gate.kind == "RX":
        return _rx(psi, gate.qubits[0], np.cos(t), 1j * np.sin(t))
    return _rz(psi, gate.qubits[0], np.exp(1j * t))


def simulate_batch(circuit: ParamCircuit, thetas: np.ndarray) -> np.ndarray:
    """Output statevectors, shape (batch, 2^n), for a stack of parameter vectors."""
    thetas = np.atleast_2d(_check_theta(circuit, thetas))
    n = circuit.n_qubits
    psi = np.zeros((thetas.shape[0], 2**n), dtype=complex)
    psi[:, 0] = 1.0
    for g in circuit.gates:
        psi = _apply_gate(psi, g, n, thetas)
    return psi


def adjoint_value_and_grad(circuit: ParamCircuit, thetas: np.ndarray,
                           cost: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]):
    """Values and parameter gradients of ``cost`` on circuit outputs, by reverse mode.

    ``cost(states)`` returns values (batch,) and complex gradients
    ``df/dRe psi + i df/dIm psi`` of shape (batch, 2^n).  The result equals
    the parameter-shift gradient for expectation-value costs, at the price
    of one forward and one backward sweep.
    """
    thetas = np.atleast_2d(_check_theta(circuit, thetas))
    n = circuit.n_qubits
    psi = simulate_batch(circuit, thetas)
    values, g = cost(psi)
    lam = g / 2
    grad = np.zeros(thetas.shape)
    for gate in reversed(circuit.gates):
        if gate.param_index is not None:
            gen = _pauli(psi, gate.qubits[0], gate.kind)
            grad[:, gate.param_index] -= 2 * np.einsum("bi,bi->b", lam.conj(), gen).imag
        psi = _apply_gate(psi, gate, n, thetas, sign=-1.0)
        lam = _apply_gate(lam, gate, n, thetas, sign=-1.0)
    return values, grad


def apply(circuit: ParamCircuit, theta) -> np.ndarray:
    """Statevector prepared from |0...0> by the circuit at ``theta``."""
    return simulate_batch(circuit, theta)[0]


def _twirl(rho: np.ndarray, q: int, n: int) -> np.ndarray:
    """Fully depolarize slot q: (rho + X rho X + Y rho Y + Z rho Z) / 4."""
    flips, signs = _tables(n)
    f, z = flips[q], signs[q]
    zz = np.outer(z, z)
    zrz = rho * zz
    xrx = rho[:, f][:, :, f]
    yry = zrz[:, f][:, :, f]
    return (rho + xrx + yry + zrz) / 4


def _unitary_density(rho: np.ndarray, g: Gate, n: int, thetas: np.ndarray,
                     sign: float = 1.0) -> np.ndarray:
    """U rho U^dag for one gate on stacked density matrices (U^dag . U for sign=-1)."""
    if g.kind == "CNOT":
        perm = _cnot_perm(n, *g.qubits)
        return rho[:, perm][:, :, perm]
    flips, signs = _tables(n)
    q = g.qubits[0]
    t = sign * thetas[:, g.param_index, None, None]
    if g.kind == "RX":
        f = flips[q]
        c, s = np.cos(t), np.sin(t)
        xr = rho[:, f, :]
        rx = rho[:, :, f]
        return c * c * rho + s * s * xr[:, :, f] + 1j * c * s * (xr - rx)
    z = signs[q]
    return rho * np.exp(1j * t * (z[:, None] - z[None, :]))


def _depolarize(rho: np.ndarray, g: Gate, n: int, noise: NoiseModel) -> np.ndarray:
    """Depolarizing channel after gate g; it is its own adjoint."""
    if g.kind == "CNOT":
        p = noise.depolarizing_prob_2q
        if p > 0:
            c, t = g.qubits
            rho = (1 - p) * rho + p * _twirl(_twirl(rho, c, n), t, n)
        return rho
    p = noise.depolarizing_prob_1q
    if p > 0:
        rho = (1 - p) * rho + p * _twirl(rho, g.qubits[0], n)
    return rho


def simulate_noisy_batch(circuit: ParamCircuit, thetas: np.ndarray,
                         noise: NoiseModel) -> np.ndarray:
    """Output density matrices, shape (batch, 2^n, 2^n)."""
    thetas = np.atleast_2d(_check_theta(circuit, thetas))
    n = circuit.n_qubits
    d = 2**n
    rho = np.zeros((thetas.shape[0], d, d), dtype=complex)
    rho[:, 0, 0] = 1.0
    for g in circuit.gates:
        rho = _depolarize(_unitary_density(rho, g, n, thetas), g, n, noise)
    return rho


def adjoint_noisy_value_and_grad(circuit: ParamCircuit, thetas: np.ndarray,
                                 noise: NoiseModel, observable: np.ndarray):
    """Values Tr[O rho(theta)] and exact gradients for the noisy circuit.

    The observable is carried backwards in the Heisenberg picture; for a
    rotation e^{i theta G} the derivative of U rho U^dag is i[G, U rho U^dag].
    """
    thetas = np.atleast_2d(_check_theta(circuit, thetas))
    n = circuit.n_qubits
    flips, signs = _tables(n)
    d = 2**n
    rho = np.zeros((thetas.shape[0], d, d), dtype=complex)
    rho[:, 0, 0] = 1.0
    rotated = []
    for g in circuit.gates:
        rho = _unitary_density(rho, g, n, thetas)
        rotated.append(rho)
        rho = _depolarize(rho, g, n, noise)
    obs = np.broadcast_to(np.asarray(observable, dtype=complex), rho.shape).copy()
    values = np.einsum("bij,bji->b", obs, rho).real
    grad = np.zeros(thetas.shape)
    for g, r in zip(reversed(circuit.gates), reversed(rotated)):
        obs = _depolarize(obs, g, n, noise)
        if g.param_index is not None:
            q = g.qubits[0]
            if g.kind == "RX":
                comm = r[:, flips[q], :] - r[:, :, flips[q]]
            else:
                z = signs[q]
                comm = z[:, None] * r - r * z[None, :]
            grad[:, g.param_index] += np.real(1j * np.einsum("bji,bij->b", obs, comm))
        obs = _unitary_density(obs, g, n, thetas, sign=-1.0)
    return values, grad


def apply_noisy(circuit: ParamCircuit, theta, noise: NoiseModel) -> np.ndarray:
    """Density matrix prepared under depolarizing noise after each gate."""
    return simulate_noisy_batch(circuit, theta, noise)[0]


def shifted_parameters(theta: np.ndarray, shift: float = SHIFT) -> np.ndarray:
    """Stack [theta + shift e_k for all k] followed by [theta - shift e_k]."""
    theta = np.asarray(theta, dtype=float)
    eye = np.eye(theta.shape[-1]) * shift
    return np.concatenate([theta + eye, theta - eye])


def parameter_shift_gradient(circuit: ParamCircuit, theta, objective: Callable,
                             noise: NoiseModel | None = None) -> np.ndarray:
    """Exact gradient of ``objective(state)`` for expectation-value objectives.

    ``objective`` receives a statevector, or a density matrix when ``noise``
    is given.  The rule is f(theta + pi/4 e_k) - f(theta - pi/4 e_k).
    """
    theta = _check_theta(circuit, theta)
    p = circuit.num_params
    if p == 0:
        return np.zeros(0)
    shifted = shifted_parameters(theta)
    if noise is None:
        states = simulate_batch(circuit, shifted)
    else:
        states = simulate_noisy_batch(circuit, shifted, noise)
    vals = np.array([float(objective(s)) for s in states])
    return vals[:p] - vals[p:]


def expectation_batch(states: np.ndarray, observable: np.ndarray) -> np.ndarray:
    """Re <psi|O|psi> for stacked statevectors, or Re Tr[O rho] for stacked densities."""
    if states.ndim == 2:
        return np.einsum("bi,bi->b", states.conj(), states @ observable.T).real
    return np.einsum("ij,bji->b", observable, states).real


def random_parameters(circuit: ParamCircuit, rng: np.random.Generator,
                      count: int | None = None) -> np.ndarray:
    """Uniform draws in [0, pi), the natural period of every parameter."""
    shape = (circuit.num_params,) if count is None else (count, circuit.num_params)
    return rng.uniform(0.0, math.pi, size=shape)


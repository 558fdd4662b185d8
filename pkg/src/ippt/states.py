"""Named states, synthetic ensembles and the JSON state format."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .qmath import (
    Bipartition,
    haar_random_pure,
    ket,
    num_qubits,
    projector,
)

TRACE_TOL = 1e-9
HERMITIAN_TOL = 1e-10
PSD_TOL = -1e-9
NORM_TOL = 1e-10


class StateError(ValueError):
    """A state failed one of its physical invariants.

    ``invariant`` names the failed check (``"trace"``, ``"hermitian"``,
    ``"positive"``, ``"norm"``, ``"shape"``, ``"finite"``).
    """

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant
        self.message = message


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        validate_density(m)

    @property
    def n_qubits(self) -> int:
        return num_qubits(self.matrix.shape[0])

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).ravel()
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)
        validate_pure(v)

    @property
    def n_qubits(self) -> int:
        return num_qubits(self.amplitudes.shape[0])

    def density(self) -> DensityMatrix:
        return DensityMatrix(projector(self.amplitudes))

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)


def validate_density(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StateError("shape", f"density matrix must be square, got {m.shape}")
    try:
        num_qubits(m.shape[0])
    except ValueError as exc:
        raise StateError("shape", str(exc)) from None
    if not np.all(np.isfinite(m)):
        raise StateError("finite", "matrix contains NaN or Inf")
    if not np.allclose(m, m.conj().T, rtol=0, atol=HERMITIAN_TOL):
        raise StateError("hermitian", "matrix differs from its conjugate transpose")
    tr = np.trace(m).real
    if abs(tr - 1) > TRACE_TOL:
        raise StateError("trace", f"trace is {tr:.12g}, expected 1")
    lam = np.linalg.eigvalsh((m + m.conj().T) / 2)[0]
    if lam < PSD_TOL:
        raise StateError("positive", f"smallest eigenvalue {lam:.3e} is negative")


def validate_pure(v: np.ndarray) -> None:
    try:
        num_qubits(v.shape[0])
    except ValueError as exc:
        raise StateError("shape", str(exc)) from None
    if not np.all(np.isfinite(v)):
        raise StateError("finite", "amplitudes contain NaN or Inf")
    norm = np.linalg.norm(v)
    if abs(norm - 1) > NORM_TOL:
        raise StateError("norm", f"norm is {norm:.12g}, expected 1")


def ghz(n: int, flip_first: bool = False, sign: int = 1) -> PureState:
    """(|0x> + sign |1x̄>)/sqrt2 style GHZ vector, optionally with slot 0 flipped.

    ``ghz(3)`` is (|000> + |111>)/sqrt2 and ``ghz(3, True)`` is
    (|100> + |011>)/sqrt2.
    """
    if n < 2:
        raise ValueError("GHZ needs at least 2 qubits")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    zeros, ones = "0" * n, "1" * n
    if flip_first:
        zeros, ones = "1" + zeros[1:], "0" + ones[1:]
    return PureState((ket(zeros) + sign * ket(ones)) / math.sqrt(2))


@dataclass(frozen=True)
class TargetStateParams:
    """Weights of the phase-flipped GHZ mixture.

    ``f1_*`` weigh (|000> ± |111>), ``f2_*`` weigh (|100> ± |011>); each
    pair appears with prefactor 1/2, so the noiseless state has
    ``f1_plus + f1_minus = f2_plus + f2_minus = 1``.  ``f_prime`` weighs the
    residual flip noise, also with prefactor 1/2.
    """

    f1_plus: float = 0.9
    f1_minus: float = 0.1
    f2_plus: float = 0.9
    f2_minus: float = 0.1
    f_prime: float = 0.0

    def __post_init__(self):
        weights = (self.f1_plus, self.f1_minus, self.f2_plus, self.f2_minus, self.f_prime)
        if any(w < 0 or not math.isfinite(w) for w in weights):
            raise ValueError(f"weights must be finite and nonnegative, got {weights}")
        if self.f_prime == 0:
            for label, total in (("f1", self.f1_plus + self.f1_minus),
                                 ("f2", self.f2_plus + self.f2_minus)):
                if abs(total - 1) > 1e-9:
                    raise ValueError(f"{label}_plus + {label}_minus = {total}, expected 1 without residual noise")
        elif sum(weights) == 0:
            raise ValueError("all weights are zero")

    @classmethod
    def from_proportions(cls, p1_plus: float, p1_minus: float,
                         p2_plus: float, p2_minus: float) -> "TargetStateParams":
        """Weights from measured component proportions (each equal to F/2).

        The residual weight takes up whatever the four components leave.
        """
        rest = 1.0 - (p1_plus + p1_minus + p2_plus + p2_minus)
        if rest < -1e-12:
            raise ValueError("proportions sum to more than 1")
        return cls(2 * p1_plus, 2 * p1_minus, 2 * p2_plus, 2 * p2_minus, 2 * max(rest, 0.0))


EXPERIMENT_PROPORTIONS = (0.418, 0.060, 0.448, 0.035)
EXPERIMENT_VISIBILITIES = (0.819, 0.836, 0.849)


def residual_flip_noise() -> np.ndarray:
    """Uniform mixture of the GHZ-basis projectors outside the four main components.

    Those are (|001> ± |110>) and (|010> ± |101>); their uniform mixture is
    the maximally mixed state on span{001, 110, 010, 101}.
    """
    comps = [ket(a) + s * ket(b) for a, b in (("001", "110"), ("010", "101")) for s in (1, -1)]
    return sum(projector(v / math.sqrt(2)) for v in comps) / len(comps)


def paper_target_state(params: TargetStateParams = TargetStateParams()) -> DensityMatrix:
    p1p = projector(ghz(3).amplitudes)
    p1m = projector(ghz(3, sign=-1).amplitudes)
    p2p = projector(ghz(3, flip_first=True).amplitudes)
    p2m = projector(ghz(3, flip_first=True, sign=-1).amplitudes)
    rho = 0.5 * (params.f1_plus * p1p + params.f1_minus * p1m)
    rho = rho + 0.5 * (params.f2_plus * p2p + params.f2_minus * p2m)
    if params.f_prime > 0:
        rho = rho + 0.5 * params.f_prime * residual_flip_noise()
        rho = rho / np.trace(rho).real
    return DensityMatrix(rho)


def reference_state(delta_theta: float) -> PureState:
    """(|010> + e^{i dtheta} |101>)/sqrt2."""
    return PureState((ket("010") + np.exp(1j * delta_theta) * ket("101")) / math.sqrt(2))


def werner(p: float) -> DensityMatrix:
    """p |Psi-><Psi-| + (1-p) I/4."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    psi_minus = (ket("01") - ket("10")) / math.sqrt(2)
    return DensityMatrix(p * projector(psi_minus) + (1 - p) * np.eye(4) / 4)


def random_separable(bipartition: Bipartition, num_terms: int,
                     rng: np.random.Generator) -> DensityMatrix:
    """Convex mixture of random product states with Dirichlet-uniform weights.

    The A and B factors are placed on the bipartition's slots, which need not
    be contiguous.
    """
    if num_terms < 1:
        raise ValueError("num_terms must be at least 1")
    n = bipartition.n_qubits
    weights = rng.dirichlet(np.ones(num_terms))
    order = list(bipartition.a_qubits) + list(bipartition.b_qubits)
    inverse = np.argsort(order)
    rho = np.zeros((2**n, 2**n), dtype=complex)
    for w in weights:
        a = haar_random_pure(2**bipartition.n_a, rng)
        b = haar_random_pure(2**bipartition.n_b, rng)
        v = np.kron(a, b).reshape((2,) * n).transpose(inverse).ravel()
        rho += w * projector(v)
    return DensityMatrix((rho + rho.conj().T) / 2)


def save_state(state, path) -> None:
    """Write a PureState or DensityMatrix as StateSpec JSON."""
    if isinstance(state, PureState):
        kind, flat = "pure", state.amplitudes
    elif isinstance(state, DensityMatrix):
        kind, flat = "density", state.matrix.ravel()
    else:
        raise TypeError(f"cannot save {type(state).__name__}")
    doc = {
        "n_qubits": state.n_qubits,
        "kind": kind,
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }
    Path(path).write_text(json.dumps(doc, allow_nan=False))


def _reject_constant(name):
    raise ValueError(f"non-finite number {name} in state file")


def state_from_dict(doc: dict):
    try:
        n = int(doc["n_qubits"])
        kind = doc["kind"]
        data = np.asarray(doc["data"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise StateError("shape", f"malformed state document: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 2:
        raise StateError("shape", "data must be a list of [re, im] pairs")
    if not np.all(np.isfinite(data)):
        raise StateError("finite", "data contains NaN or Inf")
    flat = data[:, 0] + 1j * data[:, 1]
    d = 2**n
    if kind == "pure":
        if flat.size != d:
            raise StateError("shape", f"expected {d} amplitudes, got {flat.size}")
        return PureState(flat)
    if kind == "density":
        if flat.size != d * d:
            raise StateError("shape", f"expected {d * d} entries, got {flat.size}")
        return DensityMatrix(flat.reshape(d, d))
    raise StateError("shape", f"unknown kind {kind!r}")


def load_state(path):
    """Read StateSpec JSON; raises ``StateError`` naming the failed invariant."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise StateError("json", f"malformed JSON: {exc}") from None
    except ValueError as exc:
        raise StateError("finite", str(exc)) from None
    if not isinstance(doc, dict):
        raise StateError("shape", "top-level JSON value must be an object")
    return state_from_dict(doc)

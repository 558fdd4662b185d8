"""Dense linear algebra on qubit registers.

Operators are plain ``numpy`` complex arrays in row-major order.  Qubit slot 0
is the leftmost symbol of a ket string, i.e. the most significant bit of a
basis index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_TOL = -1e-12
MAX_QUBITS = 12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class Bipartition:
    """Split of ``n_qubits`` slots into subsystems A and B."""

    n_qubits: int
    a_qubits: tuple[int, ...]
    b_qubits: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(q) for q in self.a_qubits)
        b = tuple(int(q) for q in self.b_qubits)
        object.__setattr__(self, "a_qubits", a)
        object.__setattr__(self, "b_qubits", b)
        if not a or not b:
            raise ValueError("both subsystems need at least one qubit")
        if set(a) & set(b):
            raise ValueError(f"subsystems overlap: {sorted(set(a) & set(b))}")
        if sorted(a + b) != list(range(self.n_qubits)):
            raise ValueError(
                f"slots {sorted(a + b)} do not cover 0..{self.n_qubits - 1}"
            )

    @property
    def n_a(self) -> int:
        return len(self.a_qubits)

    @property
    def n_b(self) -> int:
        return len(self.b_qubits)

    @classmethod
    def first(cls, n_a: int, n_qubits: int) -> "Bipartition":
        """A = the leading ``n_a`` slots, B = the rest."""
        return cls(n_qubits, tuple(range(n_a)), tuple(range(n_a, n_qubits)))

    @classmethod
    def from_string(cls, text: str) -> "Bipartition":
        """Parse ``"0/12"`` or ``"0,1/2,3"`` into a bipartition."""
        try:
            left, right = text.split("/")
        except ValueError:
            raise ValueError(f"split must look like 'A/B', got {text!r}") from None

        def slots(part: str) -> tuple[int, ...]:
            part = part.strip()
            if "," in part:
                return tuple(int(s) for s in part.split(",") if s.strip())
            return tuple(int(c) for c in part)

        a, b = slots(left), slots(right)
        return cls(len(a) + len(b), a, b)

    def to_string(self) -> str:
        sep = "," if self.n_qubits > 10 else ""
        return (sep.join(map(str, self.a_qubits)) + "/"
                + sep.join(map(str, self.b_qubits)))


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if n < 0 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def ket(bits: str) -> np.ndarray:
    """Computational basis vector for a bit string such as ``"010"``."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def as_density(state) -> np.ndarray:
    """Density matrix for a state given as a vector or a matrix."""
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        return projector(arr)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a vector or square matrix, got shape {arr.shape}")
    return arr


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product, ``a`` indices outermost."""
    return np.kron(np.asarray(a), np.asarray(b))


def partial_trace(m, n_qubits: int, keep: Iterable[int], env_dim: int = 1) -> np.ndarray:
    """Trace out every slot not listed in ``keep``.

    The register is ``n_qubits`` qubits followed, when ``env_dim > 1``, by one
    ``env_dim``-dimensional slot with index ``n_qubits``.
    """
    m = np.asarray(m)
    dims = [2] * n_qubits + ([env_dim] if env_dim > 1 else [])
    total = int(np.prod(dims))
    if m.shape != (total, total):
        raise ValueError(f"matrix shape {m.shape} does not match dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"keep={keep} out of range for {len(dims)} slots")
    nslots = len(dims)
    t = m.reshape(dims + dims)
    # einsum labels: kept slots get distinct row/col labels, traced ones share
    row = list(range(nslots))
    col = [nslots + i if i in keep else i for i in range(nslots)]
    out = [i for i in keep] + [nslots + i for i in keep]
    reduced = np.einsum(t, row + col, out)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return reduced.reshape(d, d)


def partial_transpose(m, bipartition: Bipartition, transpose_on: str = "A") -> np.ndarray:
    """Transpose the tensor indices of subsystem ``"A"`` or ``"B"``."""
    m = np.asarray(m)
    n = bipartition.n_qubits
    if m.shape != (2**n, 2**n):
        raise ValueError(f"matrix shape {m.shape} does not match {n} qubits")
    if transpose_on not in ("A", "B"):
        raise ValueError(f"transpose_on must be 'A' or 'B', got {transpose_on!r}")
    slots = bipartition.a_qubits if transpose_on == "A" else bipartition.b_qubits
    axes = list(range(2 * n))
    for q in slots:
        axes[q], axes[n + q] = axes[n + q], axes[q]
    return m.reshape((2,) * (2 * n)).transpose(axes).reshape(2**n, 2**n)


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, rtol=0, atol=tol)


def hermitian_spectrum(m, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix."""
    m = np.asarray(m)
    if not is_hermitian(m, tol):
        raise ValueError("matrix is not Hermitian within tolerance")
    return np.linalg.eigvalsh((m + m.conj().T) / 2)


def haar_random_pure(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Unit vector drawn from the unitarily invariant measure on C^dim."""
    if dim < 1:
        raise ValueError("dim must be positive")
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def random_induced_mixed(n_qubits: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Reduced state of a Haar pure state on (2^n x k), environment traced out."""
    if k < 1:
        raise ValueError("k must be at least 1")
    d = 2**n_qubits
    psi = haar_random_pure(d * k, rng).reshape(d, k)
    rho = psi @ psi.conj().T
    return (rho + rho.conj().T) / 2


def reorder_slots(psi, n_qubits: int, order: Sequence[int]) -> np.ndarray:
    """Amplitude tensor with slots permuted into ``order``."""
    return np.asarray(psi).reshape((2,) * n_qubits).transpose(order)


def schmidt_alpha(psi, bipartition: Bipartition) -> float:
    """Largest squared Schmidt coefficient of ``psi`` across A|B."""
    psi = np.asarray(psi, dtype=complex)
    order = list(bipartition.a_qubits) + list(bipartition.b_qubits)
    mat = reorder_slots(psi, bipartition.n_qubits, order).reshape(
        2**bipartition.n_a, 2**bipartition.n_b
    )
    s = np.linalg.svd(mat, compute_uv=False)
    return float(s[0] ** 2)


def schmidt_alpha_batch(states: np.ndarray, bipartition: Bipartition) -> np.ndarray:
    """``schmidt_alpha`` for a stack of state vectors of shape (batch, 2^n)."""
    n = bipartition.n_qubits
    order = [0] + [1 + q for q in bipartition.a_qubits] + [1 + q for q in bipartition.b_qubits]
    mats = states.reshape((-1,) + (2,) * n).transpose(order).reshape(
        -1, 2**bipartition.n_a, 2**bipartition.n_b
    )
    s = np.linalg.svd(mats, compute_uv=False)
    return s[:, 0] ** 2


def purity(rho) -> float:
    rho = np.asarray(rho)
    return float(np.real(np.sum(rho * rho.T)))


def rng_stream(seed: int, *task: int) -> np.random.Generator:
    """Independent generator for (master seed, task index...)."""
    return np.random.default_rng([int(seed), *[int(t) for t in task]])

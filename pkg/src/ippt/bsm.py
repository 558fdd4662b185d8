"""Bell-state measurements between a target and a reference register.

Pair i couples qubit i of the target with qubit i of the reference.  Outcome
codes per pair are 0 = Phi+, 1 = Phi-, 2 = Psi+, 3 = Psi-.  A joint outcome
is stored as its base-4 index with pair 0 as the most significant digit.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.linalg import hadamard

from .qmath import Bipartition, as_density, num_qubits

MAX_PAIRS = 6
BELL_LABELS = ("Phi+", "Phi-", "Psi+", "Psi-")


@dataclass(frozen=True)
class BellOutcome:
    codes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "codes", tuple(int(c) for c in self.codes))
        if any(c not in (0, 1, 2, 3) for c in self.codes):
            raise ValueError(f"Bell codes must lie in 0..3, got {self.codes}")

    @property
    def index(self) -> int:
        idx = 0
        for c in self.codes:
            idx = 4 * idx + c
        return idx


@dataclass(frozen=True)
class VisibilityModel:
    visibilities: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "visibilities", tuple(float(v) for v in self.visibilities))
        if any(not 0 <= v <= 1 for v in self.visibilities):
            raise ValueError(f"visibilities must lie in [0, 1], got {self.visibilities}")


@dataclass(eq=False)
class ShotRecord:
    """Per-shot Bell codes, shape (shots, n_pairs)."""

    codes: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int8)
        if codes.ndim != 2:
            raise ValueError("codes must be a 2-D array (shots, pairs)")
        if codes.size and (codes.min() < 0 or codes.max() > 3):
            raise ValueError("Bell codes must lie in 0..3")
        self.codes = codes

    @property
    def shots(self) -> int:
        return self.codes.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.codes.shape[1]

    def outcomes(self) -> list[BellOutcome]:
        return [BellOutcome(tuple(row)) for row in self.codes]

    def to_csv(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(self.codes.tolist())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, seed: int | None = None) -> "ShotRecord":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
        try:
            codes = np.array([[int(c) for c in r] for r in rows], dtype=np.int64)
        except ValueError as exc:
            raise ValueError(f"malformed shot CSV: {exc}") from None
        if codes.ndim != 2 or codes.shape[0] == 0:
            raise ValueError("shot CSV needs at least one row of equal-length codes")
        return cls(codes, seed)

    def to_json(self) -> str:
        return json.dumps({"shots": self.shots, "n_pairs": self.n_pairs, "seed": self.seed,
                           "codes": self.codes.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "ShotRecord":
        doc = json.loads(text)
        rec = cls(np.asarray(doc["codes"]), doc.get("seed"))
        if "shots" in doc and doc["shots"] != rec.shots:
            raise ValueError(f"shots field {doc['shots']} disagrees with {rec.shots} rows")
        return rec

    def save(self, path) -> None:
        path = Path(path)
        path.write_text(self.to_json() if path.suffix == ".json" else self.to_csv())

    @classmethod
    def load(cls, path) -> "ShotRecord":
        path = Path(path)
        text = path.read_text()
        return cls.from_json(text) if path.suffix == ".json" else cls.from_csv(text)


@lru_cache(maxsize=None)
def outcome_codes(n_pairs: int) -> np.ndarray:
    """All joint outcomes as codes, shape (4^n, n), in index order."""
    idx = np.arange(4**n_pairs)
    shifts = 2 * np.arange(n_pairs - 1, -1, -1)
    return ((idx[:, None] >> shifts) & 3).astype(np.int8)


@lru_cache(maxsize=None)
def _xz_to_index(n: int) -> np.ndarray:
    """Joint outcome index for every (x, z) bit-mask pair, shape (2^n, 2^n)."""
    bits = 1 << np.arange(n - 1, -1, -1)
    x = (np.arange(2**n)[:, None] & bits) > 0
    codes_x = 2 * x.astype(int)
    codes_z = x.astype(int)
    out = np.zeros((2**n, 2**n), dtype=np.int64)
    for i in range(n):
        out = 4 * out + codes_x[:, None, i] + codes_z[None, :, i]
    return out


def bell_distribution(rho, sigma) -> np.ndarray:
    """Joint Bell-outcome probabilities over all 4^n outcomes.

    Uses p(r) = 2^-n Tr[rho W_r sigma^T W_r^dag] with W_r = X^x Z^z per pair
    (code 0 = I, 1 = Z, 2 = X, 3 = XZ), evaluated for every (x, z) at once:
    the x-dependence is an XOR convolution and the z-dependence a
    Walsh-Hadamard transform.
    """
    rho, sigma = as_density(rho), as_density(sigma)
    if rho.shape != sigma.shape:
        raise ValueError("rho and sigma must have the same qubit count")
    n = num_qubits(rho.shape[0])
    if n > MAX_PAIRS:
        raise ValueError(f"at most {MAX_PAIRS} pairs are supported, got {n}")
    d = 2**n
    a = np.arange(d)
    c = a[:, None]
    # diagonal bands: band[c, a] = M[a, a ^ c]
    rband = rho[a[None, :], a[None, :] ^ c]
    sband = sigma[a[None, :], a[None, :] ^ c]
    h = hadamard(d).astype(float)
    conv = ((rband @ h) * (sband @ h)) @ h / d
    table_xz = (conv.T @ h) / d
    probs = np.empty(4**n)
    probs[_xz_to_index(n).ravel()] = table_xz.real.ravel()
    return probs


def estimator_weight(codes, bipartition: Bipartition) -> np.ndarray | float:
    """Single-shot estimator: prod_A 2 [r=Phi+] * prod_B (1 - 2 [r=Psi-]).

    Accepts one outcome (codes of length n) or a stack of shape (shots, n).
    """
    arr = np.asarray(codes.codes if isinstance(codes, BellOutcome) else codes)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if arr.shape[1] != bipartition.n_qubits:
        raise ValueError(f"outcome has {arr.shape[1]} pairs, bipartition has {bipartition.n_qubits}")
    a = list(bipartition.a_qubits)
    b = list(bipartition.b_qubits)
    w = np.where(np.all(arr[:, a] == 0, axis=1), 2.0**bipartition.n_a, 0.0)
    w = w * np.prod(np.where(arr[:, b] == 3, -1.0, 1.0), axis=1)
    return float(w[0]) if single else w


def exact_estimate(dist: np.ndarray, bipartition: Bipartition) -> float:
    """Expectation of the single-shot estimator under a full outcome table."""
    codes = outcome_codes(bipartition.n_qubits)
    return float(np.dot(dist, estimator_weight(codes, bipartition)))


def sample_shots(dist: np.ndarray, shots: int, rng: np.random.Generator,
                 seed: int | None = None) -> ShotRecord:
    """I.i.d. joint outcomes drawn from ``dist``."""
    dist = np.asarray(dist, dtype=float)
    if np.any(dist < -1e-12) or abs(dist.sum() - 1) > 1e-9:
        raise ValueError("dist is not a probability table")
    n = int(round(math.log(dist.size, 4)))
    if 4**n != dist.size:
        raise ValueError(f"table size {dist.size} is not a power of 4")
    p = np.clip(dist, 0, None)
    idx = rng.choice(dist.size, size=shots, p=p / p.sum())
    return ShotRecord(outcome_codes(n)[idx], seed)


def estimate_from_record(record: ShotRecord, bipartition: Bipartition) -> tuple[float, float]:
    """Sample mean and standard error of the estimator over recorded shots."""
    w = estimator_weight(record.codes, bipartition)
    mean = float(np.mean(w))
    stderr = float(np.std(w, ddof=1) / math.sqrt(w.size)) if w.size > 1 else math.inf
    return mean, stderr


def estimate_ippt(rho, sigma, bipartition: Bipartition, shots: int, rng: np.random.Generator,
                  visibility: VisibilityModel | None = None) -> tuple[float, float]:
    """Shot-sampled Tr[rho sigma^{T_A}] as (mean, standard error)."""
    dist = bell_distribution(rho, sigma)
    if visibility is not None:
        dist = apply_visibility(dist, visibility)
    return estimate_from_record(sample_shots(dist, shots, rng), bipartition)


# per-pair effect of partial distinguishability: Phi+/Phi- and Psi+/Psi- lose
# their relative coherence, i.e. the Bell projectors are dephased in the
# computational basis
_DEPHASE = np.array([[0.5, 0.5, 0, 0], [0.5, 0.5, 0, 0], [0, 0, 0.5, 0.5], [0, 0, 0.5, 0.5]])


def visibility_povm(v: float) -> list[np.ndarray]:
    """Pair POVM V * Bell projector + (1 - V) * its computational-basis dephasing."""
    vecs = np.array([[1, 0, 0, 1], [1, 0, 0, -1], [0, 1, 1, 0], [0, 1, -1, 0]]) / math.sqrt(2)
    effects = []
    for vec in vecs:
        proj = np.outer(vec, vec).astype(complex)
        effects.append(v * proj + (1 - v) * np.diag(np.diag(proj)))
    return effects


def apply_visibility(dist: np.ndarray | None, model: VisibilityModel,
                     rho=None, sigma=None) -> np.ndarray:
    """Outcome table under imperfect two-photon interference.

    Dephasing a Bell projector gives the average of it and its partner with
    the same parity, so the noisy table is the ideal one pushed through a
    per-pair stochastic matrix ``V I + (1 - V) K``.  Pass ``dist=None`` to
    build the ideal table from ``rho`` and ``sigma`` first.
    """
    if dist is None:
        if rho is None or sigma is None:
            raise ValueError("need either dist or both rho and sigma")
        dist = bell_distribution(rho, sigma)
    dist = np.asarray(dist, dtype=float)
    n = len(model.visibilities)
    if dist.size != 4**n:
        raise ValueError(f"{n} visibilities do not match a table of size {dist.size}")
    t = dist.reshape((4,) * n)
    for i, v in enumerate(model.visibilities):
        mix = v * np.eye(4) + (1 - v) * _DEPHASE
        t = np.moveaxis(np.tensordot(mix, t, axes=([1], [i])), 0, i)
    out = t.reshape(-1)
    return out / out.sum()

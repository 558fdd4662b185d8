"""Entanglement criteria and the variational searches that produce verdicts.

All criteria share one sign convention: a value below ``-tolerance``
certifies entanglement across the given bipartition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .circuits import NoiseModel, ParamCircuit, expectation_batch, simulate_batch
from .optimize import (
    CircuitObjective,
    OptimizerConfig,
    SearchResult,
    minimize_over_vectors,
    run_search,
)
from .qmath import (
    MAX_QUBITS,
    Bipartition,
    as_density,
    partial_trace,
    partial_transpose,
    purity,
    rng_stream,
    schmidt_alpha,
    schmidt_alpha_batch,
)

METHODS = ("exact_ppt", "ippt", "purity", "fidelity_ew")
DEFAULT_TOLERANCE = 1e-9


@dataclass
class DetectionReport:
    method: str
    value: float
    detected: bool
    tolerance: float = DEFAULT_TOLERANCE
    theta_star: list[float] | None = None
    iterations: int = 0
    seed: int | None = None
    config: dict | None = None
    traces: list[list[float]] | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_value(cls, method: str, value: float, tolerance: float = DEFAULT_TOLERANCE,
                   **kwargs) -> "DetectionReport":
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
        return cls(method, float(value), bool(value < -tolerance), tolerance, **kwargs)

    def to_dict(self) -> dict:
        doc = {
            "method": self.method,
            "value": self.value,
            "detected": self.detected,
            "tolerance": self.tolerance,
            "theta_star": self.theta_star,
            "iterations": self.iterations,
            "seed": self.seed,
            "config": self.config,
            "traces": self.traces,
        }
        doc.update(self.extra)
        return doc

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _check_qubits(rho: np.ndarray, bipartition: Bipartition) -> None:
    d = 2**bipartition.n_qubits
    if rho.shape[0] != d:
        raise ValueError(f"state dimension {rho.shape[0]} does not match {bipartition.n_qubits} qubits")


# ---------------------------------------------------------------------------
# criteria


def exact_ppt(rho, bipartition: Bipartition) -> float:
    """Smallest eigenvalue of the partial transpose on A."""
    rho = as_density(rho)
    _check_qubits(rho, bipartition)
    pt = partial_transpose(rho, bipartition)
    return float(np.linalg.eigvalsh((pt + pt.conj().T) / 2)[0])


def ippt_value(rho, sigma, bipartition: Bipartition) -> float:
    """Tr[rho sigma^{T_A}]; for a pure sigma this is <psi| rho^{T_A} |psi>."""
    rho = as_density(rho)
    _check_qubits(rho, bipartition)
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.shape[0] != rho.shape[0]:
        raise ValueError("rho and sigma have different qubit counts")
    if sigma.ndim == 1:
        return float(np.real(np.vdot(sigma, partial_transpose(rho, bipartition) @ sigma)))
    return float(np.real(np.sum(rho * partial_transpose(sigma, bipartition).T)))


def _pair_operator(local_ops, n: int) -> np.ndarray:
    """Operator on (first copy, second copy) built from per-slot 4x4 blocks.

    ``local_ops[i]`` acts on (copy-1 slot i, copy-2 slot i).  The result uses
    the register order copy-1 slots 0..n-1, then copy-2 slots 0..n-1.
    """
    op = np.ones((1, 1), dtype=complex)
    for block in local_ops:
        op = np.kron(op, block)
    # paired order (r0, s0, r1, s1, ...) -> (r0, r1, ..., s0, s1, ...)
    order = [2 * i for i in range(n)] + [2 * i + 1 for i in range(n)]
    t = op.reshape((2,) * (4 * n))
    t = t.transpose(order + [2 * n + o for o in order])
    return t.reshape(4**n, 4**n)


PHI_PLUS_UNNORM = np.outer([1, 0, 0, 1], [1, 0, 0, 1]).astype(complex)
PSI_MINUS_UNNORM = np.outer([0, 1, -1, 0], [0, 1, -1, 0]).astype(complex)
SWAP = np.eye(4, dtype=complex) - PSI_MINUS_UNNORM


def ippt_observable(bipartition: Bipartition) -> np.ndarray:
    """Phi+ on every A pair and SWAP on every B pair, over the doubled register."""
    a = set(bipartition.a_qubits)
    blocks = [PHI_PLUS_UNNORM if q in a else SWAP for q in range(bipartition.n_qubits)]
    return _pair_operator(blocks, bipartition.n_qubits)


def ippt_value_via_observable(rho, sigma, bipartition: Bipartition) -> float:
    """Tr[(rho x sigma)(Phi+_A x S_B)] with the observable built explicitly."""
    if 2 * bipartition.n_qubits > MAX_QUBITS:
        raise ValueError(f"doubled register exceeds {MAX_QUBITS} qubits")
    rho, sigma = as_density(rho), as_density(sigma)
    _check_qubits(rho, bipartition)
    _check_qubits(sigma, bipartition)
    joint = np.kron(rho, sigma)
    return float(np.real(np.sum(joint * ippt_observable(bipartition).T)))


def purity_criterion(rho, bipartition: Bipartition) -> float:
    """Tr(rho_A^2) - Tr(rho^2)."""
    rho = as_density(rho)
    _check_qubits(rho, bipartition)
    rho_a = partial_trace(rho, bipartition.n_qubits, bipartition.a_qubits)
    return purity(rho_a) - purity(rho)


def purity_via_swap(rho, bipartition: Bipartition) -> float:
    """Tr[(rho x rho)(S_A x (I - S_B))], the two-copy form of the purity test."""
    rho = as_density(rho)
    a = set(bipartition.a_qubits)
    n = bipartition.n_qubits
    s_a = _pair_operator([SWAP if q in a else np.eye(4) for q in range(n)], n)
    s_ab = _pair_operator([SWAP] * n, n)
    return float(np.real(np.sum(np.kron(rho, rho) * (s_a - s_ab).T)))


def fidelity_ew_value(rho, psi, bipartition: Bipartition) -> float:
    """<W> for W = alpha I - |psi><psi| with alpha the top squared Schmidt coefficient."""
    rho = as_density(rho)
    psi = np.asarray(psi, dtype=complex)
    _check_qubits(rho, bipartition)
    return schmidt_alpha(psi, bipartition) - float(np.real(np.vdot(psi, rho @ psi)))


def fidelity_ew_via_swap(rho, psi, bipartition: Bipartition) -> float:
    """Tr[(rho x psi)(alpha I - S_AB)]."""
    rho = as_density(rho)
    n = bipartition.n_qubits
    alpha = schmidt_alpha(psi, bipartition)
    obs = alpha * np.eye(4**n) - _pair_operator([SWAP] * n, n)
    return float(np.real(np.sum(np.kron(rho, as_density(psi)) * obs.T)))


# ---------------------------------------------------------------------------
# general positive maps


def choi_from_map(channel, dim: int) -> np.ndarray:
    """Choi matrix sum_ij N(|i><j|) x |i><j| (output factor first)."""
    choi = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1
            choi += np.kron(np.asarray(channel(e), dtype=complex), e)
    return choi


def apply_choi(choi: np.ndarray, x: np.ndarray) -> np.ndarray:
    """N(X) recovered from its Choi matrix: N(X)_lk = sum_ij Lambda_(l i),(k j) X_ij."""
    d = x.shape[0]
    lam = choi.reshape(d, d, d, d)
    return np.einsum("likj,ij->lk", lam, x)


def _a_first(bipartition: Bipartition) -> list[int]:
    return list(bipartition.a_qubits) + list(bipartition.b_qubits)


def choi_witness_value(rho, psi, choi: np.ndarray, bipartition: Bipartition) -> float:
    """Tr[(N_A x I_B)(rho) psi] with N applied through its Choi matrix."""
    rho, proj = as_density(rho), as_density(psi)
    _check_qubits(rho, bipartition)
    n, da, db = bipartition.n_qubits, 2**bipartition.n_a, 2**bipartition.n_b
    if choi.shape != (da * da, da * da):
        raise ValueError(f"Choi matrix must be {da * da}x{da * da} for subsystem A, got {choi.shape}")
    order = _a_first(bipartition)
    inv = list(np.argsort(order))
    t = rho.reshape((2,) * (2 * n)).transpose(order + [n + o for o in order])
    t = t.reshape(da, db, da, db)
    lam = choi.reshape(da, da, da, da)
    out = np.einsum("lakc,abcd->lbkd", lam, t).reshape((2,) * (2 * n))
    out = out.transpose(inv + [n + i for i in inv]).reshape(2**n, 2**n)
    return float(np.real(np.sum(out * proj.T)))


def choi_witness_operator(choi: np.ndarray, dim: int) -> np.ndarray:
    """Witness W on (rho_A copy, psi_A copy) with Tr[N(rho) psi] = Tr[(rho x psi) W].

    W is the Choi matrix reordered input-first and transposed on the input
    factor: W_(j l),(i k) = Lambda_(l i),(k j).
    """
    lam = choi.reshape(dim, dim, dim, dim)
    return lam.transpose(3, 0, 1, 2).reshape(dim * dim, dim * dim)


def choi_witness_value_via_swap(rho, psi, choi: np.ndarray, bipartition: Bipartition) -> float:
    """Tr[(rho x psi)(W_A x S_B)] evaluated on the doubled register."""
    if 2 * bipartition.n_qubits > MAX_QUBITS:
        raise ValueError(f"doubled register exceeds {MAX_QUBITS} qubits")
    rho, proj = as_density(rho), as_density(psi)
    n, na, nb = bipartition.n_qubits, bipartition.n_a, bipartition.n_b
    da = 2**na
    if choi.shape != (da * da, da * da):
        raise ValueError(f"Choi matrix must be {da * da}x{da * da} for subsystem A, got {choi.shape}")
    w = choi_witness_operator(choi, da)
    op = w
    for _ in range(nb):
        op = np.kron(op, SWAP)
    # op register order: rho_A..., psi_A..., then (rho_b, psi_b) pairs
    a, b = list(bipartition.a_qubits), list(bipartition.b_qubits)
    labels = [("r", q) for q in a] + [("s", q) for q in a]
    for q in b:
        labels += [("r", q), ("s", q)]
    target = [("r", q) for q in range(n)] + [("s", q) for q in range(n)]
    perm = [labels.index(t) for t in target]
    t = op.reshape((2,) * (4 * n)).transpose(perm + [2 * n + p for p in perm])
    obs = t.reshape(4**n, 4**n)
    return float(np.real(np.sum(np.kron(rho, proj) * obs.T)))


# ---------------------------------------------------------------------------
# variational searches


def _report(method: str, result: SearchResult, config: OptimizerConfig, **extra) -> DetectionReport:
    return DetectionReport.from_value(
        method, result.value, config.tolerance,
        theta_star=[float(t) for t in np.asarray(result.theta).real.ravel()]
        if np.isrealobj(result.theta) else None,
        iterations=result.iterations,
        seed=config.seed,
        config=config.to_dict(),
        traces=result.traces,
        extra=extra,
    )


def _rayleigh(observable: np.ndarray):
    def fun_and_grad(psi):
        mpsi = observable @ psi
        return float(np.real(np.vdot(psi, mpsi))), 2 * mpsi
    return fun_and_grad


def minimize_ippt(rho, ansatz: ParamCircuit | None, config: OptimizerConfig = OptimizerConfig(),
                  bipartition: Bipartition | None = None, noise: NoiseModel | None = None,
                  rng: np.random.Generator | None = None) -> DetectionReport:
    """Search for a reference making Tr[rho sigma(theta)^{T_A}] negative.

    With ``ansatz=None`` the reference is a free unit vector (free-reference
    mode), whose optimum is the smallest eigenvalue of rho^{T_A}.  With a
    ``noise`` model the reference is the noisy circuit output.
    """
    rho = as_density(rho)
    if bipartition is None:
        raise ValueError("a bipartition is required")
    _check_qubits(rho, bipartition)
    observable = partial_transpose(rho, bipartition)
    observable = (observable + observable.conj().T) / 2
    rng = rng_stream(config.seed, 0) if rng is None else rng
    if ansatz is None:
        result = minimize_over_vectors(_rayleigh(observable), rho.shape[0], config.restarts, rng)
        report = _report("ippt", result, config, reference=[[z.real, z.imag] for z in result.theta],
                         mode="free_reference")
        return report
    if ansatz.n_qubits != bipartition.n_qubits:
        raise ValueError("ansatz qubit count does not match the state")
    objective = CircuitObjective(ansatz, lambda s: expectation_batch(s, observable),
                                 cost=_expectation_cost(observable), expectation=True,
                                 noise=noise, gradient=config.gradient, observable=observable)
    result = run_search(objective, config, rng)
    return _report("ippt", result, config, depth=ansatz.depth,
                   noise=None if noise is None else [noise.depolarizing_prob_1q,
                                                     noise.depolarizing_prob_2q])


def _expectation_cost(observable: np.ndarray):
    def cost(states):
        mpsi = states @ observable.T
        return np.einsum("bi,bi->b", states.conj(), mpsi).real, 2 * mpsi
    return cost


def _fidelity_cost(rho: np.ndarray, bipartition: Bipartition):
    """Batched alpha(psi) - <psi|rho|psi> with its complex state gradient."""
    order = _a_first(bipartition)
    inv = [0] + [1 + i for i in np.argsort(order)]
    n, da, db = bipartition.n_qubits, 2**bipartition.n_a, 2**bipartition.n_b

    def cost(states):
        b = states.shape[0]
        mats = states.reshape((b,) + (2,) * n).transpose([0] + [1 + o for o in order])
        u, s, vh = np.linalg.svd(mats.reshape(b, da, db))
        g_alpha = 2 * s[:, 0, None, None] * u[:, :, 0, None] * vh[:, 0, None, :]
        g_alpha = g_alpha.reshape((b,) + (2,) * n).transpose(inv).reshape(b, -1)
        rpsi = states @ rho.T
        vals = s[:, 0] ** 2 - np.einsum("bi,bi->b", states.conj(), rpsi).real
        return vals, g_alpha - 2 * rpsi
    return cost


def _fidelity_fun_and_grad(rho: np.ndarray, bipartition: Bipartition):
    order = _a_first(bipartition)
    inv = np.argsort(order)
    n, da, db = bipartition.n_qubits, 2**bipartition.n_a, 2**bipartition.n_b

    def fun_and_grad(psi):
        mat = psi.reshape((2,) * n).transpose(order).reshape(da, db)
        u, s, vh = np.linalg.svd(mat)
        g_alpha = 2 * s[0] * np.outer(u[:, 0], vh[0])
        g_alpha = g_alpha.reshape((2,) * n).transpose(inv).ravel()
        rpsi = rho @ psi
        val = s[0] ** 2 - float(np.real(np.vdot(psi, rpsi)))
        return val, g_alpha - 2 * rpsi
    return fun_and_grad


def minimize_fidelity_ew(rho, ansatz: ParamCircuit | None,
                         config: OptimizerConfig = OptimizerConfig(),
                         bipartition: Bipartition | None = None, two_stage: bool = False,
                         rng: np.random.Generator | None = None) -> DetectionReport:
    """Search for a reference psi making alpha(psi) - <psi|rho|psi> negative.

    The joint objective is the default.  ``two_stage=True`` first maximizes
    the fidelity alone and then scores the winner.  ``ansatz=None`` searches
    over free unit vectors.
    """
    rho = as_density(rho)
    if bipartition is None:
        raise ValueError("a bipartition is required")
    _check_qubits(rho, bipartition)
    rng = rng_stream(config.seed, 1) if rng is None else rng
    if ansatz is None:
        if two_stage:
            fid = minimize_over_vectors(_rayleigh(-rho), rho.shape[0], config.restarts, rng)
            value = fidelity_ew_value(rho, fid.theta, bipartition)
            result = SearchResult(value, fid.theta, fid.restart, fid.iterations, fid.traces)
        else:
            result = minimize_over_vectors(_fidelity_fun_and_grad(rho, bipartition),
                                           rho.shape[0], config.restarts, rng)
        return _report("fidelity_ew", result, config,
                       reference=[[z.real, z.imag] for z in result.theta],
                       mode="free_reference", two_stage=two_stage)
    if ansatz.n_qubits != bipartition.n_qubits:
        raise ValueError("ansatz qubit count does not match the state")
    if two_stage:
        objective = CircuitObjective(ansatz, lambda s: -expectation_batch(s, rho),
                                     cost=_expectation_cost(-rho), gradient=config.gradient)
        fid = run_search(objective, config, rng)
        psi = simulate_batch(ansatz, fid.theta)[0]
        value = fidelity_ew_value(rho, psi, bipartition)
        result = SearchResult(value, fid.theta, fid.restart, fid.iterations, fid.traces)
    else:
        def values(states):
            return schmidt_alpha_batch(states, bipartition) - expectation_batch(states, rho)
        objective = CircuitObjective(ansatz, values, cost=_fidelity_cost(rho, bipartition),
                                     expectation=False, fd_step=config.finite_difference_step,
                                     gradient=config.gradient)
        result = run_search(objective, config, rng)
    return _report("fidelity_ew", result, config, depth=ansatz.depth, two_stage=two_stage)


def detect(rho, bipartition: Bipartition, method: str, ansatz: ParamCircuit | None = None,
           config: OptimizerConfig = OptimizerConfig(), **kwargs) -> DetectionReport:
    """Run one criterion and wrap the verdict."""
    if method == "exact_ppt":
        return DetectionReport.from_value(method, exact_ppt(rho, bipartition), config.tolerance)
    if method == "purity":
        return DetectionReport.from_value(method, purity_criterion(rho, bipartition), config.tolerance)
    if method == "ippt":
        return minimize_ippt(rho, ansatz, config, bipartition, **kwargs)
    if method == "fidelity_ew":
        return minimize_fidelity_ew(rho, ansatz, config, bipartition, **kwargs)
    raise ValueError(f"unknown method {method!r}")

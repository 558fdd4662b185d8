"""Gradient-based and SPSA minimizers run over a batch of restarts at once."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .circuits import (
    SHIFT,
    NoiseModel,
    adjoint_noisy_value_and_grad,
    adjoint_value_and_grad,
    ParamCircuit,
    random_parameters,
    simulate_batch,
    simulate_noisy_batch,
)
from .qmath import rng_stream

METHODS = ("parameter_shift_gd", "adam", "spsa")
GRADIENTS = ("adjoint", "parameter_shift")
INITS = ("zeros", "uniform_random")
SCHEDULES = ("cosine", "constant")


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings shared by every variational search.

    ``init="zeros"`` starts restart 0 at theta = 0 and the others uniformly
    in [0, pi); ``"uniform_random"`` draws every restart.
    """

    method: str = "adam"
    max_iterations: int = 200
    learning_rate: float = 0.1
    schedule: str = "cosine"
    restarts: int = 8
    init: str = "zeros"
    convergence_tol: float = 1e-9
    seed: int = 0
    tolerance: float = 1e-9
    spsa_perturbation: float = 0.1
    finite_difference_step: float = 1e-5
    gradient: str = "adjoint"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}, got {self.init!r}")
        if self.gradient not in GRADIENTS:
            raise ValueError(f"gradient must be one of {GRADIENTS}, got {self.gradient!r}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **changes) -> "OptimizerConfig":
        return OptimizerConfig(**{**asdict(self), **changes})


@dataclass
class SearchResult:
    value: float
    theta: np.ndarray
    restart: int
    iterations: int
    traces: list[list[float]]


def learning_rate(config: OptimizerConfig, step: int) -> float:
    if config.schedule == "constant":
        return config.learning_rate
    return config.learning_rate * 0.5 * (1 + math.cos(math.pi * step / config.max_iterations))


def initial_parameters(circuit: ParamCircuit, config: OptimizerConfig,
                       rng: np.random.Generator) -> np.ndarray:
    theta = random_parameters(circuit, rng, config.restarts)
    if config.init == "zeros":
        theta[0] = 0.0
    return theta


class CircuitObjective:
    """Batched value/gradient oracle for ``f(theta) = g(state(theta))``.

    ``values`` maps a stack of prepared states to real numbers.  ``cost``,
    when given, also returns the complex state gradient and enables the
    reverse-mode sweep for noiseless circuits.  ``observable`` does the same
    for noisy circuits when ``values`` is its expectation.  Otherwise gradients come from
    shifted evaluations: the exact +-pi/4 rule when ``expectation`` is true
    (``g`` linear in the prepared density matrix), else a central finite
    difference with step ``fd_step``.
    """

    def __init__(self, circuit: ParamCircuit, values: Callable[[np.ndarray], np.ndarray],
                 cost: Callable | None = None, expectation: bool = True,
                 noise: NoiseModel | None = None, fd_step: float = 1e-5,
                 gradient: str = "adjoint", observable: np.ndarray | None = None):
        self.circuit = circuit
        self.values = values
        self.cost = cost
        self.expectation = expectation
        self.noise = noise
        self.fd_step = fd_step
        self.gradient = gradient
        self.observable = observable

    def states(self, thetas: np.ndarray) -> np.ndarray:
        if self.noise is None:
            return simulate_batch(self.circuit, thetas)
        return simulate_noisy_batch(self.circuit, thetas, self.noise)

    def __call__(self, thetas: np.ndarray) -> np.ndarray:
        return self.values(self.states(thetas))

    def value_and_grad(self, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        r, p = thetas.shape
        if p == 0:
            return self(thetas), np.zeros((r, 0))
        if self.cost is not None and self.noise is None and self.gradient == "adjoint":
            return adjoint_value_and_grad(self.circuit, thetas, self.cost)
        if self.observable is not None and self.noise is not None and self.gradient == "adjoint":
            return adjoint_noisy_value_and_grad(self.circuit, thetas, self.noise, self.observable)
        step = SHIFT if self.expectation else self.fd_step
        eye = np.eye(p) * step
        batch = np.concatenate([
            thetas,
            (thetas[:, None, :] + eye).reshape(-1, p),
            (thetas[:, None, :] - eye).reshape(-1, p),
        ])
        vals = self(batch)
        f0 = vals[:r]
        plus = vals[r:r + r * p].reshape(r, p)
        minus = vals[r + r * p:].reshape(r, p)
        grad = plus - minus
        if not self.expectation:
            grad = grad / (2 * step)
        return f0, grad


def run_search(objective: CircuitObjective, config: OptimizerConfig,
               rng: np.random.Generator | None = None) -> SearchResult:
    """Minimize over all restarts in lockstep and keep the best point seen."""
    if rng is None:
        rng = rng_stream(config.seed, 0)
    theta = initial_parameters(objective.circuit, config, rng)
    r = theta.shape[0]
    best_val = np.full(r, np.inf)
    best_theta = theta.copy()
    traces: list[list[float]] = [[] for _ in range(r)]
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    beta1, beta2, eps = 0.9, 0.999, 1e-12
    iterations = 0
    for step in range(config.max_iterations):
        iterations = step + 1
        if config.method == "spsa":
            vals = objective(theta)
            delta = rng.choice([-1.0, 1.0], size=theta.shape)
            c = config.spsa_perturbation / (step + 1) ** 0.101
            fp = objective(theta + c * delta)
            fm = objective(theta - c * delta)
            grad = ((fp - fm) / (2 * c))[:, None] * delta
        else:
            vals, grad = objective.value_and_grad(theta)
        improved = vals < best_val
        best_val = np.where(improved, vals, best_val)
        best_theta[improved] = theta[improved]
        for i in range(r):
            traces[i].append(float(best_val[i]))
        if theta.shape[1] == 0 or np.max(np.abs(grad)) < config.convergence_tol:
            break
        lr = learning_rate(config, step)
        if config.method == "adam":
            m = beta1 * m + (1 - beta1) * grad
            v = beta2 * v + (1 - beta2) * grad**2
            mhat = m / (1 - beta1 ** (step + 1))
            vhat = v / (1 - beta2 ** (step + 1))
            theta = theta - lr * mhat / (np.sqrt(vhat) + eps)
        elif config.method == "spsa":
            theta = theta - lr / (step + 1) ** 0.602 * grad
        else:
            theta = theta - lr * grad
    if config.max_iterations > 0:
        # the last update has not been scored yet
        vals = objective(theta)
        improved = vals < best_val
        best_val = np.where(improved, vals, best_val)
        best_theta[improved] = theta[improved]
        for i in range(r):
            traces[i].append(float(best_val[i]))
    # smallest value wins, ties go to the lowest restart index
    winner = int(np.argmin(best_val))
    return SearchResult(float(best_val[winner]), best_theta[winner].copy(), winner,
                        iterations, traces)


def _real_to_complex(x: np.ndarray) -> np.ndarray:
    half = x.size // 2
    return x[:half] + 1j * x[half:]


def _complex_grad_to_real(g: np.ndarray) -> np.ndarray:
    return np.concatenate([g.real, g.imag])


def minimize_over_vectors(fun_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
                          dim: int, restarts: int, rng: np.random.Generator,
                          gtol: float = 1e-12, maxiter: int = 2000) -> SearchResult:
    """Minimize ``g(psi)`` over unit vectors psi in C^dim.

    ``fun_and_grad(psi)`` returns ``g`` and its complex gradient
    ``dg/dRe psi + i dg/dIm psi`` at a normalized ``psi``.  The search runs
    over unnormalized ``x`` with ``psi = x / |x|``.
    """
    def objective(x):
        z = _real_to_complex(x)
        norm = np.linalg.norm(z)
        psi = z / norm
        f, g = fun_and_grad(psi)
        g = (g - np.real(np.vdot(g, psi)) * psi) / norm
        return f, _complex_grad_to_real(g)

    best = None
    traces = []
    for i in range(restarts):
        x0 = rng.standard_normal(2 * dim)
        res = minimize(objective, x0, jac=True, method="L-BFGS-B",
                       options={"gtol": gtol, "ftol": 1e-15, "maxiter": maxiter})
        z = _real_to_complex(res.x)
        psi = z / np.linalg.norm(z)
        val = float(fun_and_grad(psi)[0])
        traces.append([val])
        if best is None or val < best.value:
            best = SearchResult(val, psi, i, int(res.nit), traces)
    best.traces = traces
    return best

"""Experiment pipelines: detection-rate ensembles, phase sweeps, witness floors."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import binomtest

from .bsm import VisibilityModel, apply_visibility, bell_distribution, estimate_from_record, sample_shots, exact_estimate
from .circuits import build_ansatz
from .detection import (
    METHODS,
    exact_ppt,
    fidelity_ew_value,
    ippt_value,
    minimize_fidelity_ew,
    minimize_ippt,
    purity_criterion,
)
from .optimize import OptimizerConfig
from .qmath import Bipartition, random_induced_mixed, rng_stream
from .states import TargetStateParams, paper_target_state, reference_state

WORKERS_ENV = "IPPT_WORKERS"
ENSEMBLE_COLUMNS = ("k", "method", "depth", "detected", "samples",
                    "detection_rate", "wilson_low", "wilson_high")
SWEEP_COLUMNS = ("theta", "ideal_value", "noisy_value", "shot_mean", "shot_stderr")


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def fmt(x) -> str:
    """12 significant digits; empty for missing values."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.12g}"


def write_csv(rows: list[dict], columns, comments: list[str] = ()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(successes, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


# ---------------------------------------------------------------------------
# detection-rate ensembles


@dataclass(frozen=True)
class EnsembleStudyConfig:
    n_qubits: int = 6
    bipartition: Bipartition | None = None
    k_values: tuple[int, ...] = (2, 8, 32)
    samples_per_k: int = 100
    depths: tuple[int, ...] = (1, 2, 3)
    fidelity_depth: int = 3
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 1
    two_stage_fidelity: bool = False
    methods: tuple[str, ...] = METHODS

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise ValueError(f"methods must be a nonempty subset of {METHODS}")
        if self.samples_per_k < 1:
            raise ValueError("samples_per_k must be at least 1")
        if not self.k_values:
            raise ValueError("k_values must not be empty")
        if any(k < 1 for k in self.k_values):
            raise ValueError("every k must be at least 1")
        object.__setattr__(self, "k_values", tuple(int(k) for k in self.k_values))
        object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))
        if self.bipartition is None:
            object.__setattr__(self, "bipartition",
                               Bipartition.first(self.n_qubits // 2, self.n_qubits))
        elif self.bipartition.n_qubits != self.n_qubits:
            raise ValueError("bipartition does not match n_qubits")

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["bipartition"] = self.bipartition.to_string()
        return doc


def _ensemble_task(config: EnsembleStudyConfig, k_index: int, sample: int) -> dict:
    """Every verdict for one sampled state; streams depend only on (seed, k, sample)."""
    k = config.k_values[k_index]
    bip = config.bipartition
    rho = random_induced_mixed(config.n_qubits, k, rng_stream(config.seed, k, sample))
    tol = config.optimizer.tolerance
    out = {}
    if "exact_ppt" in config.methods:
        out[("exact_ppt", None)] = exact_ppt(rho, bip) < -tol
    if "ippt" in config.methods:
        for depth in config.depths:
            rep = minimize_ippt(rho, build_ansatz(config.n_qubits, depth), config.optimizer, bip,
                                rng=rng_stream(config.seed, k, sample, 1, depth))
            out[("ippt", depth)] = rep.detected
    if "purity" in config.methods:
        out[("purity", None)] = purity_criterion(rho, bip) < -tol
    if "fidelity_ew" in config.methods:
        rep = minimize_fidelity_ew(rho, build_ansatz(config.n_qubits, config.fidelity_depth),
                                   config.optimizer, bip, two_stage=config.two_stage_fidelity,
                                   rng=rng_stream(config.seed, k, sample, 2, config.fidelity_depth))
        out[("fidelity_ew", config.fidelity_depth)] = rep.detected
    return out


def _run_tasks(config: EnsembleStudyConfig, workers: int) -> list[tuple[int, dict]]:
    tasks = [(ki, s) for ki in range(len(config.k_values)) for s in range(config.samples_per_k)]
    if workers <= 1:
        return [(ki, _ensemble_task(config, ki, s)) for ki, s in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = pool.map(_ensemble_task, [config] * len(tasks),
                           [t[0] for t in tasks], [t[1] for t in tasks], chunksize=4)
        return [(ki, res) for (ki, _), res in zip(tasks, results)]


def ensemble_study(config: EnsembleStudyConfig, workers: int | None = None) -> list[dict]:
    """Detection rates per (k, method, depth) over induced random mixed states."""
    workers = default_workers() if workers is None else workers
    counts: dict[tuple, int] = {}
    for ki, verdicts in _run_tasks(config, workers):
        for (method, depth), hit in verdicts.items():
            key = (config.k_values[ki], method, depth)
            counts[key] = counts.get(key, 0) + int(hit)
    order = {"exact_ppt": 0, "ippt": 1, "purity": 2, "fidelity_ew": 3}
    rows = []
    for (k, method, depth), hits in sorted(counts.items(),
                                           key=lambda kv: (config.k_values.index(kv[0][0]),
                                                           order[kv[0][1]], kv[0][2] or 0)):
        lo, hi = wilson_interval(hits, config.samples_per_k)
        rows.append({"k": k, "method": method, "depth": depth, "detected": hits,
                     "samples": config.samples_per_k,
                     "detection_rate": hits / config.samples_per_k,
                     "wilson_low": lo, "wilson_high": hi})
    return rows


def ensemble_csv(rows: list[dict], config: EnsembleStudyConfig | None = None) -> str:
    comments = []
    if config is not None:
        comments.append(f"n_qubits={config.n_qubits} split={config.bipartition.to_string()} "
                        f"samples_per_k={config.samples_per_k} seed={config.seed}")
    return write_csv(rows, ENSEMBLE_COLUMNS, comments)


def rate(rows: list[dict], k: int, method: str, depth: int | None = None) -> float:
    for row in rows:
        if row["k"] == k and row["method"] == method and row["depth"] == depth:
            return row["detection_rate"]
    raise KeyError((k, method, depth))


# ---------------------------------------------------------------------------
# phase sweep of the three-qubit experiment


@dataclass(frozen=True)
class SweepConfig:
    theta_grid: tuple[float, ...] = tuple(np.linspace(0.0, math.pi, 64))
    target: TargetStateParams = field(default_factory=TargetStateParams)
    visibility: VisibilityModel | None = None
    shots: int | None = None
    seed: int = 0
    split: Bipartition | None = None

    def __post_init__(self):
        if len(self.theta_grid) == 0:
            raise ValueError("theta_grid must not be empty")
        object.__setattr__(self, "theta_grid", tuple(float(t) for t in self.theta_grid))
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be positive")


def single_qubit_splits(n: int) -> list[Bipartition]:
    return [Bipartition(n, (q,), tuple(i for i in range(n) if i != q)) for q in range(n)]


def select_sweep_split(target: TargetStateParams, probe: int = 9) -> Bipartition:
    """First single-qubit split (lowest slot) whose ideal sweep varies with the phase."""
    rho = paper_target_state(target)
    grid = np.linspace(0.0, math.pi, probe)
    for bip in single_qubit_splits(3):
        vals = [ippt_value(rho, reference_state(t), bip) for t in grid]
        if max(vals) - min(vals) > 1e-12:
            return bip
    raise ValueError("no single-qubit split gives a phase-dependent value")


@dataclass
class SweepResult:
    rows: list[dict]
    split: Bipartition

    def to_csv(self) -> str:
        return write_csv(self.rows, SWEEP_COLUMNS, [f"split={self.split.to_string()}"])


def theta_sweep(config: SweepConfig) -> SweepResult:
    """Ideal, visibility-degraded and shot-sampled Tr[rho sigma(dtheta)^{T_A}]."""
    rho = paper_target_state(config.target)
    bip = config.split if config.split is not None else select_sweep_split(config.target)
    rows = []
    for i, theta in enumerate(config.theta_grid):
        sigma = reference_state(theta)
        row = {"theta": theta, "ideal_value": ippt_value(rho, sigma, bip)}
        dist = bell_distribution(rho, sigma)
        if config.visibility is not None:
            dist = apply_visibility(dist, config.visibility)
            row["noisy_value"] = exact_estimate(dist, bip)
        if config.shots is not None:
            record = sample_shots(dist, config.shots, rng_stream(config.seed, i))
            row["shot_mean"], row["shot_stderr"] = estimate_from_record(record, bip)
        rows.append(row)
    return SweepResult(rows, bip)


# ---------------------------------------------------------------------------
# fidelity-witness floor


@dataclass
class EwMinResult:
    value: float
    state: np.ndarray
    restarts: int


def ew_min_search(target, bipartition: Bipartition, restarts: int = 64,
                  seed: int = 0) -> EwMinResult:
    """Smallest alpha(psi) - <psi|rho|psi> over all pure states psi, multi-start.

    ``target`` is a TargetStateParams or any density matrix.
    """
    rho = paper_target_state(target).matrix if isinstance(target, TargetStateParams) else np.asarray(target)
    config = OptimizerConfig(restarts=restarts, seed=seed)
    rep = minimize_fidelity_ew(rho, None, config, bipartition, rng=rng_stream(seed, 0))
    psi = np.array([complex(re, im) for re, im in rep.extra["reference"]])
    return EwMinResult(fidelity_ew_value(rho, psi, bipartition), psi, restarts)

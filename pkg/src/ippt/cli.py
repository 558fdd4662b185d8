"""Batch command line: detect, sweep-theta, ensemble, ew-min, estimate.

Every flag can also come from ``--config FILE.json``, an object whose keys
are flag names (dashes or underscores).  Flags given on the command line win.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .bsm import ShotRecord, VisibilityModel, apply_visibility, bell_distribution, estimate_from_record, exact_estimate, sample_shots
from .circuits import NoiseModel, build_ansatz
from .detection import METHODS, detect
from .harness import (
    ENSEMBLE_COLUMNS,
    SWEEP_COLUMNS,
    EnsembleStudyConfig,
    SweepConfig,
    ensemble_csv,
    ensemble_study,
    ew_min_search,
    theta_sweep,
)
from .optimize import OptimizerConfig
from .qmath import Bipartition, rng_stream
from .states import (
    EXPERIMENT_PROPORTIONS,
    EXPERIMENT_VISIBILITIES,
    DensityMatrix,
    PureState,
    StateError,
    TargetStateParams,
    load_state,
)

EXIT_OK = 0
EXIT_INPUT = 2


class InputError(Exception):
    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


def _ints(value) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    if isinstance(value, int):
        return (value,)
    try:
        return tuple(int(v) for v in str(value).split(",") if v.strip())
    except ValueError:
        raise InputError("flags", f"expected comma-separated integers, got {value!r}") from None


def _floats(value) -> tuple[float, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    try:
        return tuple(float(v) for v in str(value).split(",") if v.strip())
    except ValueError:
        raise InputError("flags", f"expected comma-separated numbers, got {value!r}") from None


def _methods(value) -> tuple[str, ...]:
    items = value if isinstance(value, (list, tuple)) else str(value).split(",")
    return tuple(m.strip().replace("-", "_") for m in items if m.strip())


def _split(text, n_qubits: int | None = None) -> Bipartition:
    try:
        bip = Bipartition.from_string(str(text))
    except ValueError as exc:
        raise InputError("split", str(exc)) from None
    if n_qubits is not None and bip.n_qubits != n_qubits:
        raise InputError("split", f"split covers {bip.n_qubits} qubits, state has {n_qubits}")
    return bip


def _load(path) -> DensityMatrix | PureState:
    try:
        return load_state(path)
    except FileNotFoundError:
        raise InputError("file", f"no such file: {path}") from None
    except StateError as exc:
        raise InputError(exc.invariant, exc.message) from None


def _optimizer(args) -> OptimizerConfig:
    try:
        return OptimizerConfig(method=args.optimizer, max_iterations=int(args.iterations),
                               learning_rate=float(args.lr), restarts=int(args.restarts),
                               seed=int(args.seed), tolerance=float(args.tolerance))
    except ValueError as exc:
        raise InputError("optimizer", str(exc)) from None


def _target(args) -> TargetStateParams:
    try:
        if args.proportions is not None:
            props = _floats(args.proportions)
            if len(props) != 4:
                raise InputError("target", "--proportions takes four numbers")
            return TargetStateParams.from_proportions(*props)
        if args.experimental:
            return TargetStateParams.from_proportions(*EXPERIMENT_PROPORTIONS)
        fids = _floats(args.fidelities)
        if len(fids) != 4:
            raise InputError("target", "--fidelities takes four numbers")
        return TargetStateParams(*fids)
    except ValueError as exc:
        raise InputError("target", str(exc)) from None


def _visibility(value) -> VisibilityModel | None:
    if value is None:
        return None
    if value == "experimental":
        return VisibilityModel(EXPERIMENT_VISIBILITIES)
    try:
        return VisibilityModel(_floats(value))
    except ValueError as exc:
        raise InputError("visibility", str(exc)) from None


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_detect(args) -> int:
    state = _load(args.state)
    rho = state.density() if isinstance(state, PureState) else state
    bip = _split(args.split, rho.n_qubits)
    config = _optimizer(args)
    methods = METHODS if args.method == "all" else (args.method.replace("-", "_"),)
    noise = None
    if float(args.noise) > 0:
        noise = NoiseModel(float(args.noise), float(args.noise))
    reports = []
    for method in methods:
        kwargs = {}
        ansatz = None
        if method in ("ippt", "fidelity_ew"):
            ansatz = None if args.free else build_ansatz(rho.n_qubits, int(args.depth))
        if method == "ippt" and noise is not None and ansatz is not None:
            kwargs["noise"] = noise
        if method == "fidelity_ew":
            kwargs["two_stage"] = bool(args.two_stage)
        rep = detect(rho.matrix, bip, method, ansatz, config, **kwargs)
        doc = rep.to_dict()
        doc["split"] = bip.to_string()
        reports.append(doc)
    payload = reports[0] if len(reports) == 1 else {"state": str(args.state), "reports": reports}
    _emit(json.dumps(payload, indent=2), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    points = int(args.points)
    if points < 1:
        raise InputError("grid", "--points must be at least 1")
    split = None if args.split is None else _split(args.split, 3)
    shots = None if args.shots is None else int(args.shots)
    if shots is not None and shots < 1:
        raise InputError("shots", "--shots must be positive")
    config = SweepConfig(theta_grid=tuple(np.linspace(0.0, float(args.theta_max), points)),
                         target=_target(args), visibility=_visibility(args.visibility),
                         shots=shots, seed=int(args.seed), split=split)
    _emit(theta_sweep(config).to_csv(), args.out)
    return EXIT_OK


def cmd_ensemble(args) -> int:
    n = int(args.n)
    bip = None if args.split is None else _split(args.split, n)
    try:
        config = EnsembleStudyConfig(n_qubits=n, bipartition=bip, k_values=_ints(args.k),
                                     samples_per_k=int(args.samples), depths=_ints(args.depths),
                                     fidelity_depth=int(args.fidelity_depth),
                                     optimizer=_optimizer(args), seed=int(args.seed),
                                     two_stage_fidelity=bool(args.two_stage),
                                     methods=_methods(args.methods))
    except ValueError as exc:
        raise InputError("config", str(exc)) from None
    workers = None if args.workers is None else int(args.workers)
    rows = ensemble_study(config, workers=workers)
    _emit(ensemble_csv(rows, config), args.out)
    return EXIT_OK


def cmd_ew_min(args) -> int:
    if args.state is not None:
        state = _load(args.state)
        target = (state.density() if isinstance(state, PureState) else state).matrix
    else:
        target = _target(args)
    n = 3 if isinstance(target, TargetStateParams) else int(round(math.log2(target.shape[0])))
    bip = _split(args.split, n)
    res = ew_min_search(target, bip, restarts=int(args.restarts), seed=int(args.seed))
    doc = {"value": res.value, "split": bip.to_string(), "restarts": res.restarts,
           "state": [[float(z.real), float(z.imag)] for z in res.state]}
    _emit(json.dumps(doc, indent=2), args.out)
    return EXIT_OK


def cmd_estimate(args) -> int:
    if args.shots_file is not None:
        path = Path(args.shots_file)
        try:
            record = ShotRecord.load(path)
        except FileNotFoundError:
            raise InputError("file", f"no such file: {path}") from None
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise InputError("shots", f"malformed shot record: {exc}") from None
        bip = _split(args.split, record.n_pairs)
        exact = None
    else:
        if args.state is None or args.reference is None:
            raise InputError("flags", "give --shots-file, or both --state and --reference")
        rho, sigma = _load(args.state), _load(args.reference)
        if rho.n_qubits != sigma.n_qubits:
            raise InputError("shape", "state and reference have different qubit counts")
        bip = _split(args.split, rho.n_qubits)
        shots = int(args.shots)
        if shots < 1:
            raise InputError("shots", "--shots must be positive")
        dist = bell_distribution(np.asarray(rho), np.asarray(sigma))
        model = _visibility(args.visibility)
        if model is not None:
            try:
                dist = apply_visibility(dist, model)
            except ValueError as exc:
                raise InputError("visibility", str(exc)) from None
        exact = exact_estimate(dist, bip)
        record = sample_shots(dist, shots, rng_stream(int(args.seed), 0), seed=int(args.seed))
        if args.save_shots:
            record.save(args.save_shots)
    mean, stderr = estimate_from_record(record, bip)
    doc = {"mean": mean, "stderr": stderr if math.isfinite(stderr) else None,
           "shots": record.shots, "split": bip.to_string(),
           "detected": bool(math.isfinite(stderr) and mean + 3 * stderr < 0),
           "exact": exact}
    _emit(json.dumps(doc, indent=2), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_optimizer_flags(p) -> None:
    g = p.add_argument_group("optimizer")
    g.add_argument("--optimizer", default="adam", choices=["adam", "parameter_shift_gd", "spsa"])
    g.add_argument("--iterations", type=int, default=200)
    g.add_argument("--lr", type=float, default=0.1)
    g.add_argument("--restarts", type=int, default=8)
    g.add_argument("--tolerance", type=float, default=1e-9)


def _add_target_flags(p) -> None:
    g = p.add_argument_group("target state")
    g.add_argument("--fidelities", default="0.9,0.1,0.9,0.1",
                   help="F1+,F1-,F2+,F2- (default %(default)s)")
    g.add_argument("--proportions", default=None,
                   help="four measured proportions; weights are twice these, the rest is residual noise")
    g.add_argument("--experimental", action="store_true",
                   help="use the measured proportions 0.418,0.060,0.448,0.035")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ippt", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="JSON file mirroring these flags")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("detect", parents=[common], help="run criteria on a state file",
                       description="State file (JSON) -> DetectionReport JSON.")
    p.add_argument("--state", required=True)
    p.add_argument("--method", default="all",
                   choices=["all", "exact-ppt", "ippt", "purity", "fidelity-ew",
                            "exact_ppt", "fidelity_ew"])
    p.add_argument("--split", required=True, help="A/B slots, e.g. 0/12 or 0,1/2,3")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--free", action="store_true", help="free unit-vector reference instead of a circuit")
    p.add_argument("--noise", type=float, default=0.0, help="depolarizing rate on reference gates")
    p.add_argument("--two-stage", action="store_true", help="fidelity witness: maximize fidelity first")
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("sweep-theta", parents=[common], help="phase sweep of the 3-qubit experiment",
                       description=f"CSV columns: {','.join(SWEEP_COLUMNS)}. "
                                   "A leading '# split=...' line records the transposed slot.")
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--theta-max", type=float, default=math.pi)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--visibility", default=None,
                   help="comma-separated per-pair visibilities, or 'experimental'")
    p.add_argument("--split", default=None, help="default: first single-qubit split with a phase-dependent value")
    _add_target_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ensemble", parents=[common], help="detection rates over random mixed states",
                       description=f"CSV columns: {','.join(ENSEMBLE_COLUMNS)}. "
                                   "Worker count defaults to $IPPT_WORKERS (else 1).")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--k", default="2,8,32")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--depths", default="1,2,3")
    p.add_argument("--fidelity-depth", type=int, default=3)
    p.add_argument("--split", default=None, help="default: first n//2 qubits against the rest")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--two-stage", action="store_true")
    p.add_argument("--methods", default="exact-ppt,ippt,purity,fidelity-ew")
    _add_optimizer_flags(p)
    p.set_defaults(func=cmd_ensemble, seed=1)

    p = sub.add_parser("ew-min", parents=[common], help="minimum fidelity-witness value over pure references")
    p.add_argument("--state", default=None, help="state file (default: the ideal 3-qubit target)")
    p.add_argument("--split", default="0/12")
    p.add_argument("--restarts", type=int, default=64)
    _add_target_flags(p)
    p.set_defaults(func=cmd_ew_min)

    p = sub.add_parser("estimate", parents=[common], help="shot-sampled Tr[rho sigma^T_A]",
                       description="From two state files (sampled) or a shot record (CSV rows of "
                                   "Bell codes 0-3, or JSON).  Detected means mean + 3 stderr < 0.")
    p.add_argument("--state", default=None)
    p.add_argument("--reference", default=None)
    p.add_argument("--shots-file", default=None)
    p.add_argument("--split", required=True)
    p.add_argument("--shots", type=int, default=100000)
    p.add_argument("--visibility", default=None)
    p.add_argument("--save-shots", default=None, help="write the sampled record (.csv or .json)")
    p.set_defaults(func=cmd_estimate)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    if not known.config or known.command not in sub.choices:
        return parser.parse_args(argv)
    try:
        doc = json.loads(Path(known.config).read_text())
    except FileNotFoundError:
        raise InputError("file", f"no such file: {known.config}") from None
    except json.JSONDecodeError as exc:
        raise InputError("json", f"malformed config: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError("json", "config must be a JSON object")
    subparser = sub.choices[known.command]
    dests = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, value in doc.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest not in dests or dest in ("help", "config"):
            raise InputError("config", f"unknown key {key!r}")
        defaults[dest] = value
        # required flags may come from the file
        dests[dest].required = False
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_INPUT
    except (InputError, StateError) as exc:
        print(f"error: invalid input, {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

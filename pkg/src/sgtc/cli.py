"""Command-line interface: ``sgtc <subcommand> ...``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error,
4 numerical non-convergence.
"""

import argparse
import dataclasses
import json
import logging
import pathlib
import sys

import numpy as np

from . import __version__
from .atomic import DEFAULT_ATOM_CAP, atomic_norm
from .bounds import BOUND_KINDS, evaluate_bound
from .experiment import ExperimentConfig, run_experiment
from .graphs import ConvergenceError, base_graph, second_eigenvalue, switch_chain
from .io import (
    FormatError,
    format_graph,
    format_mask,
    read_graph,
    read_mask,
    read_tensor,
    tensor_from_json,
    write_tensor,
)
from .masks import estimate_lambda2, grid_mask, lift_graph, shuffle_mask
from .solvers import ALGORITHMS, SolverConfig
from .verify import run_verification

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_IO, EXIT_NONCONVERGED = 0, 1, 2, 3, 4

logger = logging.getLogger("sgtc")


class UsageError(Exception):
    pass


def _load_config(path):
    """Read a JSON object; missing file is an I/O error, bad JSON a usage error."""
    if path is None:
        return {}
    text = pathlib.Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"malformed config {path}: top level must be an object")
    return data


def _jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return _jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_manifest(path, subcommand, config, inputs, outputs, seed):
    manifest = {
        "subcommand": subcommand,
        "version": __version__,
        "seed": seed,
        "config": _jsonable(config),
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
    }
    # settings whose meaning is this package's own definition
    own = sorted(k for k in ("init_mode", "rebalance") if isinstance(config, dict) and k in config)
    if own:
        manifest["package_defined_settings"] = own
    pathlib.Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _emit(text, out, args, config, inputs=()):
    """Write ``text`` to ``out`` (plus a manifest) or to stdout."""
    if out is None:
        sys.stdout.write(text)
        return
    out = pathlib.Path(out)
    out.write_text(text)
    write_manifest(out.with_name(out.name + ".manifest.json"), args.command, config, inputs, [out],
                   getattr(args, "seed", None))


def cmd_gen_graph(args):
    g = switch_chain(base_graph(args.n, args.d), args.swaps, seed=args.seed)
    _emit(format_graph(g), args.out, args, {"n": args.n, "d": args.d, "swaps": args.swaps})
    return EXIT_OK


def cmd_graph_lambda(args):
    print(repr(second_eigenvalue(read_graph(args.graph), tol=args.tol)))
    return EXIT_OK


def cmd_lift(args):
    mask = lift_graph(read_graph(args.graph), args.t)
    _emit(format_mask(mask), args.out, args, {"t": args.t}, [args.graph])
    return EXIT_OK


def cmd_grid_mask(args):
    mask = grid_mask(args.dims, args.fraction)
    _emit(format_mask(mask), args.out, args, {"dims": args.dims, "fraction": args.fraction})
    return EXIT_OK


def cmd_shuffle_mask(args):
    mask = shuffle_mask(read_mask(args.mask), args.fraction, seed=args.seed)
    _emit(format_mask(mask), args.out, args, {"fraction": args.fraction}, [args.mask])
    return EXIT_OK


def cmd_estimate_gap(args):
    mask = read_mask(args.mask)
    print(repr(estimate_lambda2(mask, restarts=args.restarts, sweeps=args.sweeps, seed=args.seed)))
    return EXIT_OK


def cmd_atomic_norm(args):
    dec = atomic_norm(read_tensor(args.tensor), cap=args.cap)
    if args.json:
        print(json.dumps({
            "value": dec.value,
            "atoms": [[list(s) for s in a.signs] for a in dec.atoms],
            "coefficients": dec.coefficients.tolist(),
        }, sort_keys=True))
        return EXIT_OK
    print(f"value {dec.value!r}")
    for a, atom in zip(dec.coefficients, dec.atoms):
        signs = " | ".join(" ".join("+" if v > 0 else "-" for v in s) for s in atom.signs)
        print(f"{a!r}\t{signs}")
    return EXIT_OK


_SOLVER_FLAGS = {"rank": "fit_rank", "max_sweeps": "max_sweeps", "seed": "seed"}


def cmd_complete(args):
    raw = _load_config(args.config)
    embedded = raw.pop("tensor", None)
    known = {f.name for f in dataclasses.fields(SolverConfig)}
    unknown = set(raw) - known
    if unknown:
        raise UsageError(f"unknown solver config keys: {sorted(unknown)}")
    for flag, key in _SOLVER_FLAGS.items():
        if getattr(args, flag) is not None:
            raw[key] = getattr(args, flag)
    cfg = SolverConfig(**raw)
    if args.tensor is not None:
        X = read_tensor(args.tensor)
    elif embedded is not None:
        X = tensor_from_json(embedded)
    else:
        raise UsageError("complete needs --tensor or a 'tensor' entry in the config")
    mask = read_mask(args.mask)
    truth = read_tensor(args.truth) if args.truth else X
    if truth.shape != X.shape:
        raise UsageError("truth tensor dims differ from the data tensor")
    est = cfg.estimator(args.algo).fit(X, mask)
    diff = est.estimate_ - truth
    rel = float(np.linalg.norm(diff) / max(np.linalg.norm(truth), 1e-300))
    print(f"rel_error {rel!r}")
    print(f"mse {float(np.mean(diff * diff))!r}")
    print(f"sweeps {est.n_sweeps_}")
    print(f"converged {str(bool(est.converged_)).lower()}")
    if args.out:
        write_tensor(args.out, est.estimate_)
        inputs = [p for p in (args.tensor, args.mask, args.truth, args.config) if p]
        write_manifest(pathlib.Path(args.out).with_name(pathlib.Path(args.out).name + ".manifest.json"),
                       "complete", {"algo": args.algo, **dataclasses.asdict(cfg)}, inputs, [args.out], cfg.seed)
    if args.require_convergence and not est.converged_:
        print(f"error: {args.algo} did not converge in {est.n_sweeps_} sweeps", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


_BOUND_INPUTS = ("n", "t", "r", "d", "lam", "lambda2_h", "n_observed", "atomic_norm", "linf", "alpha", "beta", "eps")


def cmd_bound(args):
    inputs = {k: getattr(args, k) for k in _BOUND_INPUTS if getattr(args, k) is not None}
    report = evaluate_bound(args.kind, C=args.C, **inputs)
    if args.json:
        print(report.to_json())
    else:
        flag = "  (qualitative only)" if report.qualitative_only else ""
        print(f"{report.bound_kind} = {report.value!r}{flag}")
    return EXIT_OK


def cmd_experiment(args):
    raw = _load_config(args.config)
    raw["seed"] = args.seed
    for key in ("threads", "trials"):
        if getattr(args, key) is not None:
            raw[key] = getattr(args, key)
    if args.no_timing:
        raw["timing"] = False
    try:
        cfg = ExperimentConfig.from_dict(raw)
    except TypeError as exc:
        raise UsageError(f"malformed experiment config: {exc}") from exc
    out = pathlib.Path(args.out)
    records, regression = run_experiment(cfg, out)
    names = ["records.csv", "regression.json", "scatter.svg"]
    write_manifest(out / "manifest.json", "experiment", cfg.to_dict(),
                   [args.config] if args.config else [], [out / n for n in names], cfg.seed)
    full = regression.get("full", {})
    failed = regression["n_failed"]
    if "slope" in full:
        print(f"slope {full['slope']!r}  intercept {full['intercept']!r}  r2 {full['r2']!r}  failed {failed}")
    else:
        print(f"regression unavailable: {full.get('error')}  failed {failed}")
    return EXIT_OK


def cmd_verify(args):
    report = run_verification(args.seed, quick=args.quick)
    for line in report.lines():
        print(line)
    return EXIT_OK if report.passed else EXIT_VERIFY


def build_parser():
    p = argparse.ArgumentParser(prog="sgtc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    s = sub.add_parser("gen-graph", help="regular base graph after switch moves")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--swaps", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_gen_graph)

    s = sub.add_parser("graph-lambda", help="second eigenvalue of a graph file")
    s.add_argument("graph")
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_graph_lambda)

    s = sub.add_parser("lift", help="lift a graph file to an order-t mask")
    s.add_argument("graph")
    s.add_argument("--t", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_lift)

    s = sub.add_parser("grid-mask", help="evenly spaced mask")
    s.add_argument("--dims", type=int, nargs="+", required=True)
    s.add_argument("--fraction", type=float, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_grid_mask)

    s = sub.add_parser("shuffle-mask", help="move a fraction of mask entries to random positions")
    s.add_argument("mask")
    s.add_argument("--fraction", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_shuffle_mask)

    s = sub.add_parser("estimate-gap", help="rank-1 estimate of the mask's second eigenvalue")
    s.add_argument("mask")
    s.add_argument("--restarts", type=int, default=8)
    s.add_argument("--sweeps", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_estimate_gap)

    s = sub.add_parser("atomic-norm", help="exact atomic norm of a small tensor file")
    s.add_argument("tensor")
    s.add_argument("--cap", type=int, default=DEFAULT_ATOM_CAP)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_atomic_norm)

    s = sub.add_parser("complete", help="fit a completion estimator")
    s.add_argument("--algo", choices=sorted(ALGORITHMS), required=True)
    s.add_argument("--mask", required=True)
    s.add_argument("--tensor", help="data tensor (counts for poisson)")
    s.add_argument("--truth", help="ground truth for error reporting (default: the data tensor)")
    s.add_argument("--config", help="JSON solver config")
    s.add_argument("--rank", type=int)
    s.add_argument("--max-sweeps", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", help="write the estimate tensor here")
    s.add_argument("--require-convergence", action="store_true",
                   help="exit 4 if the sweep cap is hit before the tolerance")
    s.set_defaults(func=cmd_complete)

    s = sub.add_parser("bound", help="evaluate an error bound")
    s.add_argument("--kind", choices=BOUND_KINDS, required=True)
    for name in ("n", "t", "r", "d"):
        s.add_argument(f"--{name}", type=int)
    s.add_argument("--lam", type=float, help="graph second eigenvalue")
    s.add_argument("--lambda2-h", type=float, help="hypergraph second eigenvalue")
    s.add_argument("--n-observed", type=int, help="number of revealed entries")
    s.add_argument("--atomic-norm", type=float)
    s.add_argument("--linf", type=float)
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--eps", type=float)
    s.add_argument("--C", type=float, default=1.0)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("experiment", help="gap-versus-error sweep")
    s.add_argument("--config", help="JSON experiment config")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--threads", type=int)
    s.add_argument("--trials", type=int)
    s.add_argument("--no-timing", action="store_true", help="leave wall_ms blank for byte-stable CSV")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("verify", help="run the property suites")
    s.add_argument("--quick", action="store_true")
    s.add_argument("--seed", type=int, required=True)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: cannot read {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    except FormatError as exc:
        print(f"error: malformed input file: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConvergenceError as exc:
        print(f"error: {exc} (last estimate {exc.estimate})", file=sys.stderr)
        return EXIT_NONCONVERGED
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (UsageError, ValueError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

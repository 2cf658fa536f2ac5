"""qmeter command line.

    qmeter couplings SCENARIO...            measurement constants
    qmeter kernel SCENARIO --at x,X,x',X'   one propagator value
    qmeter evolve SCENARIO... --out F       analytic final state (x, X, re, im)
    qmeter marginals SCENARIO... --out F    marginals plus a JSON summary
    qmeter oracle SCENARIO... --dt DT       split-operator final state
    qmeter compare A B                      L2 / fidelity between two state files
    qmeter transitions SCENARIO...          closed-form transition densities
    qmeter suite [DIR]                      acceptance table, exit 1 on any failure

With several scenarios, ``--out`` names a directory and one file per scenario
is written there; ``--threads`` runs that many scenarios at once.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import oracle as oracle_mod
from .couplings import derive_constants
from .errors import QMeterError
from .evolution import evolve, marginal_X, marginal_x, pointer_mean, pointer_variance
from .export import RunRecord, dumps_json, fmt, marginal_csv, read_state, state_csv, state_json
from .model import Grid1D, Grid2D, WaveFunction2D
from .propagator import system_propagator
from .scenario_io import load_scenario, scenario_hash
from .transitions import transition_probabilities

EXIT_FAIL = 1
EXIT_ERROR = 2


def _global_flags() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--out", help="output file (or directory with several scenarios); default stdout")
    g.add_argument("--format", choices=("csv", "json"), default=None, help="output format")
    g.add_argument("--threads", type=int, default=1, help="scenarios processed concurrently")
    return g


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qmeter", description="Oscillator position meter: analytic and grid engines")
    ap.add_argument("--version", action="version", version=f"qmeter {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    glob = [_global_flags()]

    p = sub.add_parser("couplings", parents=glob, help="coupling integrals and derived constants")
    p.add_argument("scenarios", nargs="+")

    p = sub.add_parser("kernel", parents=glob, help="evaluate the factorized propagator at one point")
    p.add_argument("scenario")
    p.add_argument("--at", required=True, help="x,X,x',X'")

    p = sub.add_parser("evolve", parents=glob, help="analytic final state")
    p.add_argument("scenarios", nargs="+")
    p.add_argument("--lenient", action="store_true", help="skip grid-containment and norm checks")

    p = sub.add_parser("marginals", parents=glob, help="x and X marginals of the analytic final state")
    p.add_argument("scenarios", nargs="+")
    p.add_argument("--engine", choices=("analytic", "oracle"), default="analytic")
    p.add_argument("--lenient", action="store_true")

    p = sub.add_parser("oracle", parents=glob, help="split-operator final state")
    p.add_argument("scenarios", nargs="+")
    p.add_argument("--dt", type=float, default=None, help="time step (default: scenario oracle.dt)")
    p.add_argument("--lenient", action="store_true")

    p = sub.add_parser("compare", parents=glob, help="compare two state files on the same grid")
    p.add_argument("a")
    p.add_argument("b")

    p = sub.add_parser("transitions", parents=glob, help="closed-form transition densities")
    p.add_argument("scenarios", nargs="+")

    p = sub.add_parser("suite", parents=glob, help="run the acceptance criteria")
    p.add_argument("path", nargs="?", default=None, help="directory of reference scenarios")
    p.add_argument("--only", default=None, help="comma-separated criterion numbers")
    p.add_argument("--inject", default=None, help=argparse.SUPPRESS)  # mutation testing
    return ap


# output plumbing ---------------------------------------------------------------

def _targets(args, names, ext):
    """One output path per scenario name (None means stdout)."""
    if args.out is None:
        return [None] * len(names)
    if len(names) == 1:
        return [Path(args.out)]
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return [d / f"{n}{ext}" for n in names]


def _emit(text: str, target):
    if target is None:
        sys.stdout.write(text)
    else:
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        Path(target).write_text(text)


def _map(args, fn, items):
    if args.threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _strict(args):
    return False if getattr(args, "lenient", False) else None


def _state_text(fs, kind):
    if kind == "json":
        return state_json(fs.x, fs.X, fs.psi.psi)
    return state_csv(fs.x, fs.X, fs.psi.psi)


def _write_record(rec: RunRecord, target):
    text = rec.to_json()
    if target is None:
        sys.stderr.write(text)
    else:
        Path(f"{target}.run.json").write_text(text)


# subcommands -------------------------------------------------------------------

def cmd_couplings(args):
    scs = [load_scenario(p) for p in args.scenarios]
    outs = _map(args, lambda s: derive_constants(s.params, s.f, s.f_D).to_dict(), scs)
    for sc, d, target in zip(scs, outs, _targets(args, [s.name for s in scs], ".json")):
        if args.format == "csv":
            _emit("name,value\n" + "".join(f"{k},{dumps_json(v).strip()}\n" for k, v in d.items()), target)
        else:
            _emit(dumps_json({"scenario": sc.name, **d}), target)
    return 0


def cmd_kernel(args):
    sc = load_scenario(args.scenario)
    try:
        x, X, xp, Xp = (float(v) for v in args.at.split(","))
    except ValueError:
        raise SystemExit("--at expects four comma-separated numbers x,X,x',X'") from None
    c = derive_constants(sc.params, sc.f, sc.f_D)
    k = complex(system_propagator(x, X, xp, Xp, sc.params, c))
    if args.format == "csv":
        _emit(f"re,im\n{fmt(k.real)},{fmt(k.imag)}\n", Path(args.out) if args.out else None)
    else:
        _emit(dumps_json({"re": k.real, "im": k.imag, "abs": abs(k)}), Path(args.out) if args.out else None)
    return 0


def _run_states(args, engine):
    scs = [load_scenario(p) for p in args.scenarios]
    ext = ".json" if args.format == "json" else ".csv"
    targets = _targets(args, [s.name for s in scs], ext)

    def one(item):
        sc, target = item
        t0 = time.perf_counter()
        if engine == "oracle":
            fs = oracle_mod.run(sc, dt=getattr(args, "dt", None), strict=_strict(args))
        else:
            fs = evolve(sc, strict=_strict(args))
        wall = time.perf_counter() - t0
        rec = RunRecord(scenario_hash(sc), engine, __version__, wall_time=wall,
                        norm={"final": fs.norm, "edge_probability": fs.psi.edge_probability(),
                              **{k: v for k, v in fs.diagnostics.items() if k in ("norm_drift", "dt", "steps")}})
        return fs, rec, target

    for fs, rec, target in _map(args, one, list(zip(scs, targets))):
        text = _state_text(fs, args.format)
        _emit(text, target)
        rec.add_output(target if target else "<stdout>", text.encode())
        _write_record(rec, target)
    return 0


def cmd_evolve(args):
    return _run_states(args, "analytic")


def cmd_oracle(args):
    return _run_states(args, "oracle")


def cmd_marginals(args):
    scs = [load_scenario(p) for p in args.scenarios]
    targets = _targets(args, [s.name for s in scs], ".csv")

    def one(sc):
        if args.engine == "oracle":
            return oracle_mod.run(sc, strict=_strict(args))
        return evolve(sc, strict=_strict(args))

    for sc, fs, target in zip(scs, _map(args, one, scs), targets):
        summary = {"scenario": sc.name, "engine": args.engine, "norm": fs.norm,
                   "pointer_mean": pointer_mean(fs), "pointer_variance": pointer_variance(fs)}
        if sc.is_symmetric:
            c = derive_constants(sc.params, sc.f, sc.f_D)
            summary.update(d=c.d, g_eff=c.g_eff)
        mx, mX = marginal_x(fs), marginal_X(fs)
        if args.format == "json":
            summary.update(marginal_x={"coordinate": fs.x, "probability": mx},
                           marginal_X={"coordinate": fs.X, "probability": mX})
            _emit(dumps_json(summary), target)
            continue
        if target is None:
            sys.stdout.write(marginal_csv(fs.x, mx))
            sys.stdout.write(marginal_csv(fs.X, mX))
        else:
            t = Path(target)
            _emit(marginal_csv(fs.x, mx), t.with_name(f"{t.stem}_x{t.suffix or '.csv'}"))
            _emit(marginal_csv(fs.X, mX), t.with_name(f"{t.stem}_X{t.suffix or '.csv'}"))
        sys.stdout.write(dumps_json(summary))
    return 0


def _grid_from_points(pts) -> Grid1D:
    h = pts[1] - pts[0]
    return Grid1D(float(pts[0]), float(pts[0] + len(pts) * h), len(pts))


def cmd_compare(args):
    xa, Xa, a = read_state(args.a)
    xb, Xb, b = read_state(args.b)
    if a.shape != b.shape or not (np.allclose(xa, xb) and np.allclose(Xa, Xb)):
        raise QMeterError("state files are on different grids")
    grid = Grid2D(_grid_from_points(xa), _grid_from_points(Xa))
    res = oracle_mod.compare(WaveFunction2D(grid, a), WaveFunction2D(grid, b))
    _emit(dumps_json(res), Path(args.out) if args.out else None)
    return 0


def cmd_transitions(args):
    scs = [load_scenario(p) for p in args.scenarios]

    def one(sc):
        c = derive_constants(sc.params, sc.f, sc.f_D)
        return transition_probabilities(sc.params, c, sc.f, sc.f_D).to_dict()

    for sc, d, target in zip(scs, _map(args, one, scs), _targets(args, [s.name for s in scs], ".json")):
        if args.format == "csv":
            _emit("name,value\n" + "".join(f"{k},{dumps_json(v).strip()}\n" for k, v in d.items()), target)
        else:
            _emit(dumps_json({"scenario": sc.name, **d}), target)
    return 0


def cmd_suite(args):
    from .suite import SuiteContext, evaluate, format_table
    only = {int(v) for v in args.only.split(",")} if args.only else None
    try:
        ctx = SuiteContext(args.path, inject=args.inject)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    results = evaluate(ctx, only=only)
    print(format_table(results))
    if args.out:
        _emit(dumps_json([{"number": r.number, "title": r.title, "passed": r.passed,
                           "detail": r.detail, "error": r.error} for r in results]), Path(args.out))
    return 0 if all(r.passed for r in results) else EXIT_FAIL


COMMANDS = {
    "couplings": cmd_couplings, "kernel": cmd_kernel, "evolve": cmd_evolve, "marginals": cmd_marginals,
    "oracle": cmd_oracle, "compare": cmd_compare, "transitions": cmd_transitions, "suite": cmd_suite,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_ERROR
    try:
        return COMMANDS[args.command](args)
    except (QMeterError, OSError, ValueError) as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

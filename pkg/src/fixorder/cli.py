"""Command-line front end.

Every subcommand prints one JSON document (or writes it to ``--output``).
Exit codes: 0 success, 1 domain or numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, certificate, hurwitz, nsopt, placement
from .errors import ConvergenceError, DomainError
from .plant import BENCHMARK, Controller, Plant, closed_loop_poly
from .poly import Poly, abscissa, roots

SCHEMA = "fixorder/1"
CONFIG_ENV = "FIXORDER_CONFIG"

log = logging.getLogger("fixorder")


class UsageError(Exception):
    pass


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _load_json_arg(text: str, what: str):
    path = Path(text)
    if path.suffix == ".json" or (not text.lstrip().startswith(("{", "[")) and path.exists()):
        if not path.exists():
            raise UsageError(f"{what} file not found: {text}")
        return json.loads(path.read_text())
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"cannot parse {what}: {exc}") from exc


def _config(args) -> dict:
    path = args.config or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    if not Path(path).exists():
        raise UsageError(f"config file not found: {path}")
    return json.loads(Path(path).read_text())


def _plant(args) -> Plant:
    source = getattr(args, "plant", None)
    if source is None:
        source = _config(args).get("plant", "benchmark")
    if source == "benchmark":
        return BENCHMARK
    data = _load_json_arg(source, "plant") if isinstance(source, str) else source
    if "plant" in data and "num" not in data:
        data = data["plant"]
    return Plant.from_json(data)


def _controller(args, required=True) -> Controller | None:
    source = getattr(args, "controller", None)
    if source is None:
        source = _config(args).get("controller")
    if source is None:
        if required:
            raise UsageError("a controller is required (--controller or config file)")
        return None
    data = _load_json_arg(source, "controller") if isinstance(source, str) else source
    if "controller" in data and "x" not in data:
        data = data["controller"]
    return Controller.from_json(data)


def _poly_or_closed_loop(args) -> Poly:
    if getattr(args, "poly", None):
        return Poly.from_json(_load_json_arg(args.poly, "polynomial"))
    return closed_loop_poly(_plant(args), _controller(args))


def _write(path: str | None, text: str):
    if path:
        Path(path).write_text(text)


def cmd_stability(args):
    return hurwitz.is_hurwitz_stable(_poly_or_closed_loop(args)).to_json()


def cmd_abscissa(args):
    p = _poly_or_closed_loop(args)
    rs = roots(p.monic())
    return {
        "abscissa": abscissa(p),
        "roots": [[z.real, z.imag] for z in rs.roots],
        "residual": rs.residual,
        "clusters": [{"center": [c.real, c.imag], "multiplicity": k} for c, k in rs.clusters()],
    }


def cmd_place(args):
    plant = _plant(args)
    n = plant.den.degree + args.order
    if args.target:
        target = Poly.from_json(_load_json_arg(args.target, "target"))
    elif args.z is not None:
        target = Poly.from_roots([args.z] * n)
    else:
        raise UsageError("place needs --target or --z")
    return placement.place_poles(plant, args.order, target).to_json()


def cmd_cluster(args):
    sols = placement.cluster_all_poles(
        _plant(args), args.order, bracket=tuple(args.bracket), points=args.points
    )
    stable = [s for s in sols if s.kind == "stable"]
    best = max(stable, key=lambda s: s.z) if stable else None
    return {
        "solutions": [s.to_json() for s in sols],
        "z": None if best is None else best.z,
        "controller": None if best is None else best.controller.to_json(),
    }


def cmd_optimize(args):
    plant = _plant(args)
    start = _controller(args, required=False)
    if start is None:
        start = Controller.from_params(args.order, np.zeros(2 * args.order + 1))
    opts = nsopt.OptOptions(
        max_iters=args.max_iters,
        sample_count=args.samples,
        termination_tol=args.tol,
        seed=args.seed,
        bfgs_iters=args.bfgs_iters,
    )
    res = nsopt.minimize_abscissa(plant, start.order, start, opts)
    _write(args.trace, res.trace_csv())
    return {
        "status": res.status,
        "objective": res.objective,
        "controller": res.controller.to_json(),
        "iterations": len(res.trace) - 1,
    }


def cmd_certify(args):
    rep = certificate.certify_local_min(
        _plant(args), _controller(args), tau_samples=args.tau_samples, seed=args.seed
    )
    return rep.to_json()


def cmd_step(args):
    sr = analysis.step_response(_plant(args), _controller(args), args.horizon, args.dt)
    _write(args.csv, sr.to_csv())
    return {
        "final_value": sr.final_value,
        "settling_time": sr.settling_time,
        "settled": sr.settled,
        "samples": int(sr.times.size),
    }


def cmd_pseudozero(args):
    p = _poly_or_closed_loop(args)
    grid = analysis.pseudozero_grid(
        p, tuple(args.region), tuple(args.resolution), args.epsilon,
        perturb_leading=not args.no_perturb_leading,
    )
    _write(args.csv, grid.to_csv())
    _write(args.pgm, grid.to_pgm())
    return {
        "region": list(grid.region),
        "resolution": list(grid.resolution),
        "epsilon": grid.epsilon,
        "members": int(grid.membership().sum()),
        "min_distance": float(grid.distances.min()),
    }


def cmd_fragility(args):
    return analysis.fragility_experiment(_plant(args), _controller(args), args.digits).to_json()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fixorder", description="Fixed-order controller synthesis by abscissa minimization."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, plant=True, controller=False, poly=False):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        sp.add_argument("--config", help=f"JSON config with plant/controller (default ${CONFIG_ENV})")
        sp.add_argument("--output", "-o", help="write JSON here instead of stdout")
        if plant:
            sp.add_argument("--plant", help='"benchmark", a JSON file or inline JSON')
        if controller:
            sp.add_argument("--controller", help="controller JSON file or inline JSON")
        if poly:
            sp.add_argument("--poly", help="ascending coefficients as JSON, e.g. '[1, 1]' for 1 + s")
        return sp

    add("stability", cmd_stability, "Hurwitz minors and verdict", controller=True, poly=True)
    add("abscissa", cmd_abscissa, "roots and abscissa", controller=True, poly=True)

    sp = add("place", cmd_place, "Sylvester pole placement")
    sp.add_argument("--order", type=int, required=True)
    sp.add_argument("--z", type=float, help="cluster all poles at this real value")
    sp.add_argument("--target", help="target monic polynomial (ascending JSON)")

    sp = add("cluster", cmd_cluster, "find controllers clustering all poles at one point")
    sp.add_argument("--order", type=int, required=True)
    sp.add_argument("--bracket", type=float, nargs=2, default=list(placement.DEFAULT_BRACKET))
    sp.add_argument("--points", type=int, default=placement.SCAN_POINTS)

    sp = add("optimize", cmd_optimize, "gradient-sampling abscissa minimization", controller=True)
    sp.add_argument("--order", type=int, default=2, help="used when no start controller is given")
    sp.add_argument("--max-iters", type=int, default=500)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--bfgs-iters", type=int, default=100)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trace", help="write the iteration trace as CSV")

    sp = add("certify", cmd_certify, "local-optimality certificate", controller=True)
    sp.add_argument("--tau-samples", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("step", cmd_step, "closed-loop step response", controller=True)
    sp.add_argument("--horizon", type=float, default=30.0)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--csv", help="write time,value samples as CSV")

    sp = add("pseudozero", cmd_pseudozero, "real pseudozero set on a grid", controller=True, poly=True)
    sp.add_argument("--region", type=float, nargs=4, required=True,
                    metavar=("RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"))
    sp.add_argument("--resolution", type=int, nargs=2, default=[200, 200], metavar=("NX", "NY"))
    sp.add_argument("--epsilon", type=float, default=1e-4)
    sp.add_argument("--no-perturb-leading", action="store_true")
    sp.add_argument("--csv", help="write the distance field as CSV")
    sp.add_argument("--pgm", help="write the membership raster as PGM")

    sp = add("fragility", cmd_fragility, "round controller coefficients, compare poles",
             controller=True)
    sp.add_argument("--digits", type=int, default=5)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        body = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fixorder: error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ConvergenceError, KeyError, TypeError, ValueError) as exc:
        print(f"fixorder: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    doc = _clean({"schema": SCHEMA, "command": args.command, **body})
    text = json.dumps(doc, indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

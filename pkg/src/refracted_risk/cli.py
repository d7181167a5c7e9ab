"""Command-line interface: ``refracted-risk {eval,verify,simulate,roots}``.

Exit codes: 0 success, 2 input error (bad spec, unknown operation, bad grid),
3 domain error raised by an operation, 4 verification failure.

Grids are given as ``--grid name=v1,v2,...`` or ``--grid name=start:stop:num``
(inclusive linspace); the evaluated tuples are the Cartesian product in the
order the grids appear.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import mc_oracle as mc
from .config import ModelSpec, SpecError, load_spec, record, reference_spec
from .errors import (
    DegenerateRootsError,
    ModelError,
    NetProfitError,
    OrderingError,
    PoleError,
    QuadratureError,
)
from .levy_model import laplace_exponent, refract, right_inverse_phi
from .occupation import (
    OccupationQuery,
    bankruptcy_lt_ruin_finite,
    occ_lt_exit_down,
    occ_lt_exit_up,
    occ_lt_reach_up,
    occupation_atom,
    occupation_density,
    prob_bankruptcy,
    prob_parisian,
    survival_lt,
    total_occupation_lt,
)
from .refracted import (
    QuadTol,
    exit_down_U,
    exit_down_X,
    exit_up_U,
    exit_up_X,
    little_w,
    little_z,
    ruin_prob_U,
    ruin_prob_X,
)
from .scale_fn import W, Z, scale_roots
from .verify import SUITES, run_verify, summarize

EXIT_OK, EXIT_INPUT, EXIT_DOMAIN, EXIT_VERIFY = 0, 2, 3, 4
DOMAIN_ERRORS = (ModelError, OrderingError, NetProfitError, DegenerateRootsError, PoleError, QuadratureError, ValueError)


class InputError(Exception):
    pass


def _needs_refraction(exc: Exception) -> bool:
    """A spec without a refraction block used for a refracted quantity: an input error."""
    return isinstance(exc, ModelError) and exc.field == "refraction"


@dataclass(frozen=True)
class Operation:
    fn: Callable  # (spec, tol, **params) -> float
    required: tuple[str, ...]
    defaults: dict


def _op(required, **defaults):
    def wrap(fn):
        return Operation(fn, tuple(required), defaults)
    return wrap


OPERATIONS: dict[str, Operation] = {
    "psi": _op(["lam"])(lambda s, t, lam: float(laplace_exponent(s.process, lam))),
    "phi": _op(["q"])(lambda s, t, q: right_inverse_phi(s.process, q)),
    "scale-W": _op(["x"], q=0.0)(lambda s, t, x, q: float(W(s.process, q, x))),
    "scale-Z": _op(["x"], q=0.0)(lambda s, t, x, q: float(Z(s.process, q, x))),
    "scale-W-refracted-drift": _op(["x"], q=0.0)(lambda s, t, x, q: float(W(refract(s.rm), q, x))),
    "little-w": _op(["x"], q=0.0, a=0.0)(lambda s, t, x, q, a: little_w(s.rm, q, x, a)),
    "little-z": _op(["x"], q=0.0, a=0.0)(lambda s, t, x, q, a: little_z(s.rm, q, x, a)),
    "exit-up-X": _op(["x", "c"], q=0.0, a=0.0)(lambda s, t, x, c, q, a: exit_up_X(s.process, q, x, a, c)),
    "exit-down-X": _op(["x", "c"], q=0.0, a=0.0)(lambda s, t, x, c, q, a: exit_down_X(s.process, q, x, a, c)),
    "exit-up-U": _op(["x", "c"], q=0.0, a=0.0)(lambda s, t, x, c, q, a: exit_up_U(s.rm, q, x, a, c, t)),
    "exit-down-U": _op(["x", "c"], q=0.0, a=0.0)(lambda s, t, x, c, q, a: exit_down_U(s.rm, q, x, a, c, t)),
    "ruin-X": _op(["x"])(lambda s, t, x: ruin_prob_X(s.process, x)),
    "ruin-U": _op(["x"])(lambda s, t, x: ruin_prob_U(s.rm, x)),
    "occupation-exit-up": _op(["x", "c"], a=0.0, p=0.0, q=0.0)(
        lambda s, t, x, c, a, p, q: occ_lt_exit_up(OccupationQuery(s.rm, x, a, c, p, q), t)),
    "occupation-exit-down": _op(["x", "c"], a=0.0, p=0.0, q=0.0)(
        lambda s, t, x, c, a, p, q: occ_lt_exit_down(OccupationQuery(s.rm, x, a, c, p, q), t)),
    "survival": _op(["x", "q"])(lambda s, t, x, q: survival_lt(s.rm, x, q, t)),
    "bankruptcy": _op(["x", "q"])(lambda s, t, x, q: prob_bankruptcy(s.rm, x, q, t)),
    "bankruptcy-ruin-finite": _op(["x", "q"])(lambda s, t, x, q: bankruptcy_lt_ruin_finite(s.rm, x, q, t)),
    "reach-up": _op(["x", "c", "q"])(lambda s, t, x, c, q: occ_lt_reach_up(s.rm, x, c, q)),
    "total-occupation": _op(["x", "q"])(lambda s, t, x, q: total_occupation_lt(s.rm, x, q)),
    "parisian": _op(["x", "q"])(lambda s, t, x, q: prob_parisian(s.rm, x, q)),
    "occupation-atom": _op(["x"])(lambda s, t, x: occupation_atom(s.rm, x)),
    "occupation-density": _op(["x", "r"])(lambda s, t, x, r: occupation_density(s.rm, x, r)),
}


@dataclass(frozen=True)
class Target:
    """A simulation target: estimator plus the matching analytic value."""

    estimate: Callable  # (spec, cfg, **params) -> SimEstimate
    analytic: Callable  # (spec, **params) -> float
    required: tuple[str, ...]
    defaults: dict
    trace_levels: Callable  # params -> (a, c)


_INF = math.inf
TARGETS: dict[str, Target] = {
    "ruin-X": Target(lambda s, cfg, x: mc.estimate_ruin(s.process, x, cfg),
                     lambda s, x: ruin_prob_X(s.process, x), ("x",), {}, lambda p: (0.0, _INF)),
    "ruin-U": Target(lambda s, cfg, x: mc.estimate_ruin(s.rm, x, cfg),
                     lambda s, x: ruin_prob_U(s.rm, x), ("x",), {}, lambda p: (0.0, _INF)),
    "exit-up-U": Target(lambda s, cfg, x, c, q, a: mc.estimate_exit(s.rm, q, x, a, c, cfg)["up_U"],
                        lambda s, x, c, q, a: exit_up_U(s.rm, q, x, a, c), ("x", "c"), {"q": 0.0, "a": 0.0},
                        lambda p: (p["a"], p["c"])),
    "exit-down-U": Target(lambda s, cfg, x, c, q, a: mc.estimate_exit(s.rm, q, x, a, c, cfg)["down_U"],
                          lambda s, x, c, q, a: exit_down_U(s.rm, q, x, a, c), ("x", "c"), {"q": 0.0, "a": 0.0},
                          lambda p: (p["a"], p["c"])),
    "occupation-exit-up": Target(
        lambda s, cfg, x, c, a, p, q: mc.estimate_occupation_joint(s.rm, p, q, x, a, c, cfg)["up"],
        lambda s, x, c, a, p, q: occ_lt_exit_up(OccupationQuery(s.rm, x, a, c, p, q)),
        ("x", "c"), {"a": 0.0, "p": 0.0, "q": 0.0}, lambda p: (p["a"], p["c"])),
    "occupation-exit-down": Target(
        lambda s, cfg, x, c, a, p, q: mc.estimate_occupation_joint(s.rm, p, q, x, a, c, cfg)["down"],
        lambda s, x, c, a, p, q: occ_lt_exit_down(OccupationQuery(s.rm, x, a, c, p, q)),
        ("x", "c"), {"a": 0.0, "p": 0.0, "q": 0.0}, lambda p: (p["a"], p["c"])),
    "bankruptcy": Target(lambda s, cfg, x, q: mc.estimate_bankruptcy(s.rm, x, q, cfg),
                         lambda s, x, q: prob_bankruptcy(s.rm, x, q), ("x", "q"), {}, lambda p: (0.0, _INF)),
    "survival": Target(lambda s, cfg, x, q: mc.estimate_survival_split(s.rm, x, q, cfg)["survival"],
                       lambda s, x, q: survival_lt(s.rm, x, q), ("x", "q"), {}, lambda p: (0.0, _INF)),
    "parisian": Target(lambda s, cfg, x, q: mc.estimate_parisian(s.rm, x, q, cfg),
                       lambda s, x, q: prob_parisian(s.rm, x, q), ("x", "q"), {}, lambda p: (-_INF, _INF)),
    "total-occupation": Target(lambda s, cfg, x, q: mc.estimate_total_occupation(s.rm, x, q, cfg),
                               lambda s, x, q: total_occupation_lt(s.rm, x, q), ("x", "q"), {},
                               lambda p: (-_INF, _INF)),
    "reach-up": Target(lambda s, cfg, x, c, q: mc.estimate_reach_up(s.rm, x, c, q, cfg),
                       lambda s, x, c, q: occ_lt_reach_up(s.rm, x, c, q), ("x", "c", "q"), {},
                       lambda p: (-_INF, p["c"])),
}


# --- grid parsing ----------------------------------------------------------

def parse_grid(items: list[str]) -> list[tuple[str, list[float]]]:
    out = []
    seen = set()
    for item in items or []:
        name, sep, spec = item.partition("=")
        name = name.strip()
        if not sep or not name or not spec:
            raise InputError(f"grid entry {item!r} must look like name=v1,v2 or name=start:stop:num")
        if name in seen:
            raise InputError(f"parameter {name!r} given twice")
        seen.add(name)
        try:
            if ":" in spec:
                start, stop, num = spec.split(":")
                values = [float(v) for v in np.linspace(float(start), float(stop), int(num))]
            else:
                values = [float(v) for v in spec.split(",")]
        except ValueError:
            raise InputError(f"cannot parse grid {item!r}") from None
        if not values or not all(math.isfinite(v) for v in values):
            raise InputError(f"grid {name!r} must be non-empty and finite")
        out.append((name, values))
    return out


def expand(grid, required, defaults) -> list[dict]:
    names = [n for n, _ in grid]
    allowed = set(required) | set(defaults)
    unknown = [n for n in names if n not in allowed]
    if unknown:
        raise InputError(f"unknown parameter(s) {unknown}; expected {sorted(allowed)}")
    missing = [n for n in required if n not in names]
    if missing:
        raise InputError(f"missing required parameter(s) {missing}")
    rows = []
    for combo in itertools.product(*(v for _, v in grid)):
        params = dict(zip(names, combo))
        params.update((k, v) for k, v in defaults.items() if k not in params)
        rows.append(params)
    return rows


# --- output ----------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def render(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=2, allow_nan=True) + "\n"
    buf = io.StringIO()
    fields: list[str] = []
    for r in rows:
        fields += [k for k in r if k not in fields]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- commands --------------------------------------------------------------

class DomainFailure(Exception):
    def __init__(self, params: dict, exc: Exception):
        tup = ", ".join(f"{k}={v!r}" for k, v in params.items())
        super().__init__(f"domain error at ({tup}): {type(exc).__name__}: {exc}")


def _tol(args, spec: ModelSpec) -> QuadTol:
    if args.tol is None:
        return spec.quad
    return replace(spec.quad, epsabs=args.tol, epsrel=args.tol)


def cmd_eval(args, spec: ModelSpec) -> int:
    if args.operation not in OPERATIONS:
        raise InputError(f"unknown operation {args.operation!r}; choose from: {', '.join(OPERATIONS)}")
    op = OPERATIONS[args.operation]
    rows = expand(parse_grid(args.grid), op.required, op.defaults)
    tol = _tol(args, spec)

    def one(params):
        t0 = time.perf_counter()
        try:
            value = float(op.fn(spec, tol, **params))
        except DOMAIN_ERRORS as exc:
            if _needs_refraction(exc):
                raise
            raise DomainFailure(params, exc) from exc
        extra = {"wall_time_s": time.perf_counter() - t0} if args.timing else {}
        return record(args.operation, params, value, spec, **extra)

    with ThreadPoolExecutor(max(1, args.threads)) as pool:
        results = list(pool.map(one, rows))
    emit(render(results, args.format), args.out)
    return EXIT_OK


def cmd_simulate(args, spec: ModelSpec) -> int:
    if args.target not in TARGETS:
        raise InputError(f"unknown target {args.target!r}; choose from: {', '.join(TARGETS)}")
    tgt = TARGETS[args.target]
    rows = expand(parse_grid(args.grid), tgt.required, tgt.defaults)
    try:
        cfg = replace(
            spec.sim,
            **{k: v for k, v in (("seed", args.seed), ("n_paths", args.paths), ("horizon", args.horizon),
                                 ("dt", args.dt)) if v is not None},
            workers=max(1, args.threads),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = []
    for params in rows:
        t0 = time.perf_counter()
        try:
            est = tgt.estimate(spec, cfg, **params)
            analytic = float(tgt.analytic(spec, **params))
        except DOMAIN_ERRORS as exc:
            if _needs_refraction(exc):
                raise
            raise DomainFailure(params, exc) from exc
        z = (est.mean - analytic) / est.std_error if est.std_error > 0 else (0.0 if est.mean == analytic else math.inf)
        extra = dict(est.as_dict())
        extra.update(analytic=analytic, z_score=z, seed=cfg.seed, horizon=cfg.horizon, dt=cfg.dt,
                     antithetic=cfg.antithetic)
        extra["estimate"] = extra.pop("mean")
        if args.timing:
            extra["wall_time_s"] = time.perf_counter() - t0
        row = record(args.target, params, est.mean, spec, **extra)
        row.pop("estimate")
        out.append(row)
    if args.trace:
        params = rows[0]
        a, c = tgt.trace_levels(params)
        trace_cfg = replace(cfg, n_paths=max(args.trace, 1))
        model = spec.process if args.target.endswith("-X") else spec.rm
        batch = mc.simulate_refracted_paths(model, params["x"], trace_cfg, a, c, trace_paths=args.trace)
        mc.write_trace_csv(batch.events, args.trace_out)
    emit(render(out, args.format), args.out)
    return EXIT_OK


def cmd_verify(args, spec: ModelSpec) -> int:
    report = run_verify(spec, args.suite, seed=args.seed, n_paths=args.paths, workers=max(1, args.threads))
    if not args.timing:
        report.pop("wall_time_s")
    emit(json.dumps(report, indent=2, allow_nan=True) + "\n", args.out)
    print(summarize(report), file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def cmd_roots(args, spec: ModelSpec) -> int:
    model = refract(spec.rm) if args.refracted_drift else spec.process
    rows = []
    for q in args.q:
        try:
            rs = scale_roots(model, q)
        except DOMAIN_ERRORS as exc:
            if _needs_refraction(exc):
                raise
            raise DomainFailure({"q": q}, exc) from exc
        for i, (r, w) in enumerate(zip(rs.roots, rs.weights)):
            rows.append(record("roots", {"q": q, "index": i}, r, spec, weight=w))
    emit(render(rows, args.format), args.out)
    return EXIT_OK


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="model spec file (YAML or JSON); default: built-in reference model")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--tol", type=float, help="quadrature tolerance (absolute and relative)")
    common.add_argument("--threads", "--workers", dest="threads", type=int, default=1)
    common.add_argument("--timing", action="store_true", help="include wall times (makes output non-reproducible)")

    p = argparse.ArgumentParser(prog="refracted-risk", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", parents=[common], help="evaluate an analytic operation on a grid")
    e.add_argument("operation", help=f"one of: {', '.join(OPERATIONS)}")
    e.add_argument("--grid", "-g", action="append", default=[], metavar="NAME=SPEC")

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo estimate with analytic cross-reference")
    s.add_argument("target", help=f"one of: {', '.join(TARGETS)}")
    s.add_argument("--grid", "-g", action="append", default=[], metavar="NAME=SPEC")
    s.add_argument("--seed", type=int)
    s.add_argument("--paths", type=int)
    s.add_argument("--horizon", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--trace", type=int, default=0, help="record events of the first N paths")
    s.add_argument("--trace-out", default="trace.csv")

    v = sub.add_parser("verify", parents=[common], help="run the identity suite")
    v.add_argument("--suite", choices=SUITES, default="quick")
    v.add_argument("--seed", type=int)
    v.add_argument("--paths", type=int)

    r = sub.add_parser("roots", parents=[common], help="dump roots and weights of the scale-function expansion")
    r.add_argument("--q", type=float, action="append", required=True)
    r.add_argument("--refracted-drift", action="store_true", help="use the process with drift reduced by alpha")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on usage errors
    try:
        spec = load_spec(args.model) if args.model else reference_spec()
        handler = {"eval": cmd_eval, "simulate": cmd_simulate, "verify": cmd_verify, "roots": cmd_roots}
        return handler[args.command](args, spec)
    except (SpecError, InputError) as exc:
        if isinstance(exc, InputError):
            parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ModelError as exc:
        # e.g. an operation needing the refraction block on a spec without one
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

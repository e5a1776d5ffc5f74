"""Command-line front end: ``scexp {exponent,sweep,oracle,rd,scheme}``.

Exit codes: 0 success, 2 malformed input, 3 infeasible distortion,
4 enumeration budget exceeded, 5 instance file not found.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from .errors import BudgetExceededError, InfeasibleError, NotRationalError, SchemaError
from .exponent import (
    SolverOptions,
    exponent,
    exponent_no_compression,
    exponent_noiseless,
    positivity_threshold,
    sweep_rate,
)
from .io import ProblemInstance, load_instance, parse_delta
from .oracle import DEFAULT_BUDGET, exponent_trajectory, trajectory_csv
from .rd import conditional_rd, remote_rd, standard_rd
from .types_method import build_scheme, charged_scheme, evaluate_scheme

EXIT_OK, EXIT_SCHEMA, EXIT_INFEASIBLE, EXIT_BUDGET, EXIT_NOT_FOUND = 0, 2, 3, 4, 5


def _g(v) -> str:
    return format(float(v), ".12g")


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _dumps(doc) -> str:
    return json.dumps(_clean(doc), indent=2, default=_json_default) + "\n"


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    return v


def _workers(args) -> int:
    if args.workers is not None:
        return args.workers
    env = os.environ.get("SCEXP_WORKERS")
    if env:
        try:
            return max(int(env), 1)
        except ValueError:
            raise SchemaError(f"SCEXP_WORKERS={env!r} is not an integer")
    return 1


def _options(args) -> SolverOptions:
    try:
        return SolverOptions(method=args.method, grid_k=args.grid_k, rho_steps=args.rho_steps,
                             workers=_workers(args), budget=args.budget)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def _delta(args, inst: ProblemInstance):
    if args.delta is not None:
        return parse_delta(args.delta)
    if inst.deltas:
        return inst.deltas[0]
    raise SchemaError("no --delta given and the instance has no default")


def _rate(args, inst: ProblemInstance) -> float:
    if args.rate is not None:
        return args.rate
    if inst.rates:
        return inst.rates[0]
    raise SchemaError("no --rate given and the instance has no default")


def _check_delta(inst: ProblemInstance, delta, fatal: bool = True):
    if float(delta) < float(inst.delta_min) - 1e-12:
        msg = f"delta = {delta} is below delta_min = {inst.delta_min}"
        if fatal:
            raise InfeasibleError(msg)
        # finite-n probabilities stay defined; only the exponent is infinite
        sys.stderr.write(f"scexp: warning: {msg}\n")


def _result_doc(res) -> dict:
    return {
        "value": res.value,
        "gap": res.gap,
        "rho_star": res.rho_star,
        "witness_q_xy": None if res.witness_q_xy is None else res.witness_q_xy.mass.tolist(),
        "witness_kernel": None if res.witness_kernel is None else res.witness_kernel.rows.tolist(),
        "diagnostics": res.diagnostics,
    }


def _table(rows) -> str:
    width = max(len(k) for k, _ in rows)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in rows)


# ---------------------------------------------------------------------------
# commands

def cmd_exponent(args, inst: ProblemInstance) -> int:
    delta, rate = _delta(args, inst), _rate(args, inst)
    _check_delta(inst, delta)
    opts = _options(args)
    res = exponent(inst.p_xy, rate, float(delta), inst.d, opts)
    doc = {"instance": inst.name, "rate": rate, "delta": str(delta), "general": _result_doc(res)}
    rows = [("E(R, delta)", _g(res.value)), ("certified gap", _g(res.gap)), ("rho*", _g(res.rho_star)),
            ("method", res.diagnostics.get("method", ""))]
    if args.reduction == "noiseless":
        if not inst.is_diagonal:
            raise SchemaError("--reduction noiseless needs a diagonal P_XY")
        red = exponent_noiseless(np.diag(inst.p_xy.mass), rate, float(delta), inst.d, opts)
        doc["noiseless"] = _result_doc(red)
        doc["difference"] = res.value - red.value
        rows += [("noiseless value", _g(red.value)), ("difference", _g(res.value - red.value))]
    elif args.reduction == "no-compression":
        red = exponent_no_compression(inst.p_xy, float(delta), inst.d, opts)
        doc["no_compression"] = _result_doc(red)
        doc["difference"] = res.value - red.value
        rows += [("no-compression value", _g(red.value)), ("difference", _g(res.value - red.value))]
    if args.format == "json":
        _emit(_dumps(doc), args.out)
    else:
        sys.stdout.write(_table(rows))
        sys.stdout.write("witness Q_XY\n" + np.array2string(res.witness_q_xy.mass, precision=6) + "\n")
        if args.out:
            _emit(_dumps(doc), args.out)
    return EXIT_OK


GNUPLOT = """set datafile separator ','
set key autotitle columnhead
set xlabel 'R (bits)'
set ylabel 'E(R, delta) (bits)'
plot '{path}' using 1:2 with linespoints title 'E'
"""


def cmd_sweep(args, inst: ProblemInstance) -> int:
    delta = _delta(args, inst)
    _check_delta(inst, delta)
    if args.steps < 2 or args.r_max < args.r_min:
        raise SchemaError("need steps >= 2 and r_min <= r_max")
    grid = np.linspace(args.r_min, args.r_max, args.steps)
    out = sweep_rate(inst.p_xy, float(delta), inst.d, grid, _options(args))
    rows = [[_g(r), _g(res.value), _g(res.rho_star), _g(res.gap)] for r, res in out]
    text = _csv(rows, ["R", "E", "rho_star", "gap"])
    _emit(text, args.out)
    if args.json:
        doc = {"delta": str(delta), "threshold": positivity_threshold(inst.p_xy, float(delta), inst.d),
               "points": [{"rate": r, **_result_doc(res)} for r, res in out]}
        _emit(_dumps(doc), args.json)
    if args.gnuplot:
        _emit(GNUPLOT.format(path=args.out or "sweep.csv"), args.gnuplot)
    return EXIT_OK


def _n_list(spec: str) -> list[int]:
    out = []
    for part in spec.split(","):
        part = part.strip()
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    if not out or min(out) < 1:
        raise SchemaError(f"bad --n value {spec!r}")
    return out


def cmd_oracle(args, inst: ProblemInstance) -> int:
    delta, rate = _delta(args, inst), _rate(args, inst)
    _check_delta(inst, delta, fatal=False)
    if not isinstance(delta, Fraction):
        raise SchemaError("the oracle needs a rational --delta such as 1/5")
    reports = exponent_trajectory(inst.p_xy, inst.d, delta, rate, _n_list(args.n), budget=args.budget,
                                  mode=args.mode)
    broken = [r.n for r in reports if r.error is None and not r.sandwich_holds]
    if args.format == "json":
        _emit(_dumps({"rate": rate, "delta": str(delta), "reports": [r.to_dict() for r in reports]}), args.out)
    else:
        _emit(trajectory_csv(reports), args.out)
        if args.witness:
            _emit(_dumps({"rate": rate, "delta": str(delta), "reports": [r.to_dict() for r in reports]}),
                  args.witness)
    for r in reports:
        if r.error:
            sys.stderr.write(f"n = {r.n}: {r.error}\n")
    if broken:
        sys.stderr.write(f"sandwich violated at n = {broken}\n")
        return 1
    if any(r.error for r in reports):
        return EXIT_BUDGET
    return EXIT_OK


def _delta_grid(args, inst) -> list:
    if args.delta_grid:
        try:
            lo, hi, steps = args.delta_grid.split(":")
            lo, hi = parse_delta(lo), parse_delta(hi)
            steps = int(steps)
        except ValueError as exc:
            raise SchemaError(f"bad --delta-grid {args.delta_grid!r}") from exc
        if steps < 2:
            raise SchemaError("--delta-grid needs at least two steps")
        return [lo + (hi - lo) * Fraction(i, steps - 1) if isinstance(lo, Fraction) and isinstance(hi, Fraction)
                else float(lo) + (float(hi) - float(lo)) * i / (steps - 1) for i in range(steps)]
    if args.delta is not None:
        return [parse_delta(v) for v in args.delta.split(",")]
    if inst.deltas:
        return list(inst.deltas)
    raise SchemaError("no --delta or --delta-grid given and the instance has no default")


def cmd_rd(args, inst: ProblemInstance) -> int:
    rows = []
    for delta in _delta_grid(args, inst):
        dv = float(delta)
        try:
            if args.which == "standard":
                res = standard_rd(inst.p_xy.mass.sum(axis=1), inst.d, dv)
                extra = ""
            elif args.which == "remote":
                res = remote_rd(inst.p_xy, inst.d, dv)
                extra = _g(res.diagnostics.get("agreement", float("nan")))
            else:
                res = conditional_rd(inst.p_xy, inst.d, dv)
                extra = ""
            rows.append([_g(dv), _g(res.rate), "1", extra])
        except InfeasibleError:
            rows.append([_g(dv), "inf", "0", ""])
    _emit(_csv(rows, ["delta", "rate", "feasible", "cross_check"]), args.out)
    return EXIT_OK


def cmd_scheme(args, inst: ProblemInstance) -> int:
    delta, rate = _delta(args, inst), _rate(args, inst)
    _check_delta(inst, delta, fatal=False)
    if not isinstance(delta, Fraction):
        raise SchemaError("scheme evaluation needs a rational --delta such as 1/5")
    n = _n_list(args.n)
    if len(n) != 1:
        raise SchemaError("scheme takes a single --n")
    s = build_scheme(inst.p_xy, inst.d, rate, delta, n[0])
    prob = evaluate_scheme(s, inst.p_xy, inst.d, delta)
    c = charged_scheme(s, inst.p_xy, inst.d, delta)
    cprob = evaluate_scheme(c, inst.p_xy, inst.d, delta)
    doc = {"n": n[0], "rate": rate, "delta": str(delta), "M": s.M,
           "success_probability": str(prob), "success_probability_float": float(prob),
           "charged_success_probability": str(cprob), "charged_success_probability_float": float(cprob),
           "scheme": s.to_dict(), "charged_scheme": c.to_dict()}
    _emit(_dumps(doc), args.out)
    if args.out:
        sys.stdout.write(_table([("M", str(s.M)), ("messages (per-type)", str(s.messages_used)),
                                 ("success probability", f"{prob} ~ {_g(prob)}"),
                                 ("charged (M messages)", f"{cprob} ~ {_g(cprob)}")]))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scexp", description="Strong converse exponent for remote lossy source coding")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, rate=True):
        p.add_argument("--instance", required=True, metavar="PATH")
        if rate:
            p.add_argument("--rate", type=float)
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--format", choices=("json", "csv"), default="csv")
        p.add_argument("--grid-k", type=int, default=24)
        p.add_argument("--rho-steps", type=int, default=65)
        p.add_argument("--method", choices=("convex", "grid"), default="convex")
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
        p.add_argument("--workers", type=int)

    p = sub.add_parser("exponent", help="E(R, delta) with witness and certified gap")
    common(p)
    p.add_argument("--delta")
    p.add_argument("--reduction", choices=("noiseless", "no-compression"))
    p.set_defaults(func=cmd_exponent)

    p = sub.add_parser("sweep", help="E over a rate grid, as CSV")
    common(p, rate=False)
    p.add_argument("--delta")
    p.add_argument("--r-min", type=float, required=True)
    p.add_argument("--r-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=11)
    p.add_argument("--json", metavar="PATH")
    p.add_argument("--gnuplot", metavar="PATH")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="exact p_c, scheme probability and B(n) at small n")
    common(p)
    p.add_argument("--delta")
    p.add_argument("--n", default="1-4", help="e.g. 2,3,4 or 2-8")
    p.add_argument("--mode", choices=("exhaustive", "hill-climb", "auto"), default="exhaustive")
    p.add_argument("--witness", metavar="PATH")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("rd", help="rate-distortion curve")
    common(p, rate=False)
    p.add_argument("--which", choices=("standard", "remote", "conditional"), default="remote")
    p.add_argument("--delta", help="one value or a comma list")
    p.add_argument("--delta-grid", metavar="LO:HI:STEPS")
    p.set_defaults(func=cmd_rd)

    p = sub.add_parser("scheme", help="build, evaluate and serialize the per-type covering scheme")
    common(p)
    p.add_argument("--delta")
    p.add_argument("--n", required=True)
    p.set_defaults(func=cmd_scheme)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        inst = load_instance(args.instance)
        return args.func(args, inst)
    except FileNotFoundError as exc:
        sys.stderr.write(f"scexp: file not found: {exc.filename or exc}\n")
        return EXIT_NOT_FOUND
    except (SchemaError, NotRationalError) as exc:
        sys.stderr.write(f"scexp: invalid input: {exc}\n")
        return EXIT_SCHEMA
    except InfeasibleError as exc:
        sys.stderr.write(f"scexp: infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except BudgetExceededError as exc:
        sys.stderr.write(f"scexp: budget exceeded: {exc}\n")
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())

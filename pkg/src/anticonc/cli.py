"""Command-line front end.

Exit status: 0 success, 1 a verification check failed, 2 bad input,
3 quadrature did not converge (the report still carries the best estimate).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .bounds import (
    corollary_logweight_rhs,
    corollary_threshold_rhs,
    optimize_threshold,
    theorem1_rhs,
)
from .charfn import QuadratureSpec, charfn_H, charfn_weighted_sum, esseen_functional
from .concentration import (
    concentration_exact,
    concentration_mc,
    rademacher_sum_concentration,
    sampler_from_measure,
)
from .errors import AnticoncError, InvalidInputError, UnconvergedError
from .idiv import CompoundPoissonModel, spectral_of_coefficients
from .measures import (
    FiniteDiscreteMeasure,
    SubMeasureSpec,
    load_coefficients,
    load_measure,
    loads_strict,
    symmetrize,
    tail_mass,
    weighted_sum_law,
)
from .structure import search_generators, theorem_scaling_report
from .verify import run_suite

CSV_DIGITS = 12


# -- input resolution -----------------------------------------------------------


def resolve_law(spec):
    """``rademacher``, ``gaussian:k`` or a path to a JSON measure on R."""
    if spec is None:
        raise InvalidInputError("--x is required")
    if spec == "rademacher":
        return FiniteDiscreteMeasure.rademacher()
    if spec.startswith("gaussian"):
        _, _, k = spec.partition(":")
        try:
            k = int(k) if k else 256
        except ValueError:
            raise InvalidInputError(f"--x {spec}: atom count must be an integer") from None
        if k < 1:
            raise InvalidInputError("--x gaussian:k needs k >= 1")
        return FiniteDiscreteMeasure.gaussian(k)
    law = _load(load_measure, spec)
    if law.dim != 1:
        raise InvalidInputError(f"--x {spec}: the summand law must be one-dimensional")
    return law


def _load(reader, path, *args):
    try:
        return reader(path, *args)
    except OSError as exc:
        raise InvalidInputError(f"{path}: {exc.strerror or exc}") from None
    except InvalidInputError as exc:
        raise InvalidInputError(f"{path}: {exc}") from None


def _coeffs(args):
    if not args.coeffs:
        raise InvalidInputError("--coeffs is required")
    return _load(load_coefficients, args.coeffs)


def _g(args):
    if args.g:
        G = _load(load_measure, args.g)
        if not G.is_symmetric(1e-9):
            raise InvalidInputError(f"{args.g}: G must be symmetric")
        return G
    return symmetrize(resolve_law(args.x))


def _weights(path, G):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = loads_strict(fh.read())
    except OSError as exc:
        raise InvalidInputError(f"{path}: {exc.strerror or exc}") from None
    w = obj.get("weights") if isinstance(obj, dict) else obj
    if not isinstance(w, list):
        raise InvalidInputError(f"{path}: expected a list of weights or {{\"weights\": [...]}}")
    return SubMeasureSpec(G, w)


def _need(args, *names):
    for n in names:
        if getattr(args, n) is None:
            raise InvalidInputError(f"--{n.replace('_', '-')} is required for this command")


def _grid(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidInputError(f"cannot parse grid {text!r}") from None
    if not vals or not all(math.isfinite(v) and v > 0 for v in vals):
        raise InvalidInputError(f"grid {text!r} must hold positive finite numbers")
    return vals


def _quad(args):
    return QuadratureSpec().with_overrides(nodes=args.quad_nodes, tol=args.quad_tol, max_refine=args.quad_max_refine)


# -- commands -------------------------------------------------------------------


def cmd_concentration(args):
    _need(args, "tau")
    method = args.method or "exact"
    if args.measure:
        F = _load(load_measure, args.measure)
        if method == "mc":
            res = concentration_mc(sampler_from_measure(F), args.tau, args.samples, args.seed)
        else:
            res = concentration_exact(F, args.tau)
        return {"result": res.to_json()}, [res.to_json()]
    a = _coeffs(args)
    if method == "dp":
        if args.x != "rademacher":
            raise InvalidInputError("--method dp is available for --x rademacher")
        res = rademacher_sum_concentration(a, args.tau)
    elif method == "mc":
        law = resolve_law(args.x)
        pick = sampler_from_measure(law)

        def sampler(n, seed):
            draws = np.asarray(pick(n * a.n, seed)).reshape(n, a.n)
            return draws @ a.entries

        res = concentration_mc(sampler, args.tau, args.samples, args.seed)
    else:
        res = concentration_exact(weighted_sum_law(resolve_law(args.x), a), args.tau)
    return {"result": res.to_json()}, [res.to_json()]


def cmd_esseen(args):
    _need(args, "tau")
    a = _coeffs(args)
    if args.lam is not None:
        cf, target = charfn_H(a, args.lam), "H_1^lambda"
    else:
        cf, target = charfn_weighted_sum(resolve_law(args.x), a), "F_a"
    value = esseen_functional(cf, args.tau, _quad(args))
    row = {"target": target, "tau": args.tau, "value": value, "nonnegative": cf.nonnegative}
    return {"result": row}, [row]


def cmd_bound(args):
    _need(args, "eps", "tau")
    a = _coeffs(args)
    G = _g(args)
    quad = _quad(args)
    if args.rule == "theorem1":
        V = _weights(args.v_weights, G) if args.v_weights else SubMeasureSpec(G, (G.points[:, 0] != 0).astype(float))
        rep = theorem1_rhs(a, V, args.eps, args.tau, quad)
    elif args.rule == "cor-threshold":
        _need(args, "delta")
        rep = corollary_threshold_rhs(a, G, args.delta, args.eps, args.tau, quad)
        rep.inputs["p_delta"] = tail_mass(G, args.delta)
    elif args.rule == "cor-logweight":
        rep = corollary_logweight_rhs(a, G, args.eps, args.tau, quad)
    else:
        grid = _grid(args.delta_grid) if args.delta_grid else None
        best, rep, table = optimize_threshold(a, G, args.eps, args.tau, grid, quad)
        out = rep.to_json()
        out["best_delta"] = best
        return {"result": out, "table": table}, [
            {k: r[k] for k in ("delta", "p_delta", "lambda", "exponent", "q_proxy", "rhs")} for r in table
        ]
    row = rep.csv_row()
    row["delta"] = rep.delta
    if args.rule != "cor-threshold":
        row["p_delta"] = None
    out = rep.to_json()
    out["Delta" if args.rule == "cor-threshold" else "exponent"] = out["exponent_integral"]
    return {"result": out}, [row]


def _model(args):
    if args.measure:
        _need(args, "alpha")
        return CompoundPoissonModel(args.alpha, _load(load_measure, args.measure))
    if args.coeffs:
        _need(args, "lam")
        return spectral_of_coefficients(_coeffs(args), args.lam)
    raise InvalidInputError("give either --measure with --alpha, or --coeffs with --lambda")


def cmd_structure(args):
    _need(args, "tau")
    model = _model(args)
    rmax = 4 if args.rmax is None else args.rmax
    if args.action == "search":
        rep = search_generators(model.jump_law, model.alpha, args.tau, rmax, args.method or "greedy", seed=args.seed)
    else:
        rep = theorem_scaling_report(model, args.tau, rmax, args.samples, args.seed, args.method or "greedy")
    return {"result": rep.to_json()}, [rep.csv_row()]


def cmd_verify(args):
    results = run_suite(args.seed)
    passed = sum(r.passed for r in results)
    body = {"result": {"passed": passed, "total": len(results), "checks": [r.to_json() for r in results]}}
    rows = [{"check": r.name, "passed": r.passed, "cases": r.cases, "detail": r.detail} for r in results]
    return body, rows


def cmd_scan(args):
    _need(args, "grid")
    a = _coeffs(args)
    G = _g(args)
    quad = _quad(args)
    law = None if args.g else resolve_law(args.x)
    exact_law = weighted_sum_law(law, a) if law is not None and a.dim <= 2 else None
    rows = []
    for v in _grid(args.grid):
        eps = v if args.param == "eps" else args.eps
        tau = v if args.param == "tau" else args.tau
        if eps is None or tau is None:
            raise InvalidInputError("scan needs the non-scanned one of --eps/--tau")
        row = {"param": args.param, "value": v, "eps": eps, "tau": tau}
        row["q_exact"] = concentration_exact(exact_law, tau).value if exact_law is not None else None
        p = tail_mass(G, tau / eps)
        row["p_tau_over_eps"] = p
        row["rhs_threshold"] = corollary_threshold_rhs(a, G, tau / eps, eps, tau, quad).rhs if p > 0 else None
        try:
            row["rhs_logweight"] = corollary_logweight_rhs(a, G, eps, tau, quad).rhs
        except AnticoncError:
            row["rhs_logweight"] = None
        try:
            row["rhs_best_threshold"] = optimize_threshold(a, G, eps, tau, quad=quad)[1].rhs
        except AnticoncError:
            row["rhs_best_threshold"] = None
        rows.append(row)
    return {"result": {"rows": rows}}, rows


# -- output ---------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, f".{CSV_DIGITS}g")
    return str(v)


def render_csv(rows):
    buf = io.StringIO()
    cols = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (np.floating, float)):
        o = float(o)
        return o if math.isfinite(o) else ("nan" if math.isnan(o) else ("inf" if o > 0 else "-inf"))
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.bool_):
        return bool(o)
    return o


def render_json(body):
    return json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n"


def _config(args):
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- parser ---------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--coeffs", help="JSON coefficient file {dim, a}")
    common.add_argument("--x", default="rademacher", help="law of X: rademacher, gaussian:k or a JSON measure file")
    common.add_argument("--g", help="JSON file with the symmetrised law G (overrides --x)")
    common.add_argument("--v-weights", dest="v_weights", help="JSON list of weights f on the atoms of G")
    common.add_argument("--measure", help="JSON measure file (direct law or jump law)")
    common.add_argument("--tau", type=float)
    common.add_argument("--eps", type=float)
    common.add_argument("--delta", type=float)
    common.add_argument("--delta-grid", dest="delta_grid", help="comma separated thresholds")
    common.add_argument("--lambda", dest="lam", type=float)
    common.add_argument("--alpha", type=float)
    common.add_argument("--rmax", type=int)
    common.add_argument("--method")
    common.add_argument("--samples", type=int, default=100_000)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out")
    common.add_argument("--quad-nodes", dest="quad_nodes", type=int)
    common.add_argument("--quad-tol", dest="quad_tol", type=float)
    common.add_argument("--quad-max-refine", dest="quad_max_refine", type=int)

    p = argparse.ArgumentParser(prog="anticonc", description="Concentration functions and Littlewood-Offord bounds.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("concentration", parents=[common], help="Q(F_a, tau) by exact, dp or Monte Carlo methods")
    c.set_defaults(func=cmd_concentration)
    e = sub.add_parser("esseen", parents=[common], help="tau^d * integral of |cf| over |t| <= 1/tau")
    e.set_defaults(func=cmd_esseen)
    b = sub.add_parser("bound", parents=[common], help="bounds through infinitely divisible laws")
    b.add_argument("rule", choices=("theorem1", "cor-threshold", "cor-logweight", "optimize"))
    b.set_defaults(func=cmd_bound)
    s = sub.add_parser("structure", parents=[common], help="generator search for K_1(u)")
    s.add_argument("action", choices=("search", "scaling"))
    s.set_defaults(func=cmd_structure)
    v = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    v.set_defaults(func=cmd_verify)
    sc = sub.add_parser("scan", parents=[common], help="sweep eps or tau, one CSV row per point")
    sc.add_argument("--param", choices=("eps", "tau"), default="eps")
    sc.add_argument("--grid", help="comma separated values of the scanned parameter")
    sc.set_defaults(func=cmd_scan)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.method is not None and args.command == "concentration" and args.method not in ("exact", "mc", "dp"):
        parser.error("--method must be exact, mc or dp")
    status = 0
    try:
        body, rows = args.func(args)
    except UnconvergedError as exc:
        body = {"error": str(exc), "best_estimate": exc.best_estimate}
        rows = [{"error": str(exc), "best_estimate": exc.best_estimate}]
        status = 3
    except (AnticoncError, ValueError) as exc:
        print(f"anticonc: error: {exc}", file=sys.stderr)
        return 2
    if args.command == "verify" and body["result"]["passed"] != body["result"]["total"]:
        status = 1
    body = {"command": args.command, "config": _config(args), **body}
    text = render_csv(rows) if args.format == "csv" else render_json(body)
    _emit(args, text)
    if args.command == "verify":
        r = body["result"]
        print(f"{r['passed']}/{r['total']} checks passed", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())

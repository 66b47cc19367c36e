"""Command-line front end.

Exit codes: 0 success, 2 domain error or ambiguous boundary point,
3 branch absent, 4 I/O error, 1 any other failure.
"""

from __future__ import annotations

import argparse
import csv
import enum
import io
import json
import math
import os
import sys

from psos_gibbs import __version__
from psos_gibbs.errors import BranchAbsent, DomainError, PsosError, ToleranceAmbiguity
from psos_gibbs.extremality import msw_report, verify_gamma_lemma
from psos_gibbs.laws import check_point, classify, find_branch, region_curves
from psos_gibbs.params import AMBIGUITY_BAND, ModelParams, residual_tol
from psos_gibbs.spectral import build_kernel, kesten_stigum
from psos_gibbs.thresholds import Curve, paper_threshold_suite, trace_curve

SCHEMA = "psos-gibbs/1"

EXIT_OK, EXIT_FAIL, EXIT_DOMAIN, EXIT_BRANCH, EXIT_IO = 0, 1, 2, 3, 4

SCAN_COLUMNS = (
    "theta", "p", "branch", "exists", "x", "y", "lambda1", "lambda2",
    "eta", "kappa", "gamma_bound", "U", "verdict",
)


class OutputError(Exception):
    pass


# ---------------------------------------------------------------------------
# serialization


def _clean(obj):
    """Replace non-finite floats by None and enums by their values, recursively."""
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _clean(obj.tolist())
    return obj


def to_json(payload: dict) -> str:
    body = {"schema": SCHEMA}
    body.update(payload)
    return json.dumps(_clean(body), indent=2, allow_nan=False) + "\n"


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "%.17g" % v if math.isfinite(v) else ""
    return str(v)


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def emit(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {out}: {exc}") from exc


# ---------------------------------------------------------------------------
# payloads


def _point_dict(pt):
    return {
        "branch": pt.branch, "x": pt.x, "y": pt.y,
        "log_x": pt.log_x, "log_y": pt.log_y, "residual": pt.residual,
    }


def solve_payload(params: ModelParams, band: float, tol: float) -> dict:
    sol = classify(params, band=band)
    for pt in sol.points:
        check_point(pt, tol)
    return {
        "theta": params.theta, "p": params.p,
        "region": sol.region, "nominal_region": sol.nominal_region,
        "count": sol.count,
        "points": [_point_dict(pt) for pt in sol.points],
    }


def classify_payload(params: ModelParams, band: float) -> dict:
    sol = classify(params, band=band)
    xi = sol.xi
    curves = region_curves(params.theta, params.p)
    return {
        "theta": params.theta, "p": params.p,
        "region": sol.region, "nominal_region": sol.nominal_region,
        "count": sol.count,
        "branches": [pt.branch for pt in sol.points],
        "delta": sol.cubic.delta, "delta_sign": sol.delta_sign,
        "bigD": None if xi is None else xi.bigD,
        "d_sign": sol.d_sign,
        "xi1": None if xi is None else xi.xi1,
        "xi2": None if xi is None else xi.xi2,
        "c1": sol.c1, "c2": sol.c2,
        "violations": list(sol.violations),
        "curves": {"m": curves.m_val, "M": curves.M_val, "l": curves.l_val, "q": curves.q_val},
    }


def kernel_payload(params: ModelParams, branch: int) -> dict:
    pt = find_branch(params, branch)
    K = build_kernel(pt, params)
    ks = kesten_stigum(K, params.k)
    return {
        "theta": params.theta, "p": params.p, "branch": branch,
        "x": pt.x, "y": pt.y,
        "P": K.P, "log_Z": list(K.log_Z),
        "lambda1": K.lambda1, "lambda2": K.lambda2, "lambda_max": K.lambda_max,
        "complex_pair": K.complex_pair,
        "eta": ks.eta, "ks_nonextremal": ks.ks_nonextremal,
    }


def extremality_payload(params: ModelParams, branch: int, extend_bound: bool) -> dict:
    pt = find_branch(params, branch)
    rep = msw_report(pt, params, extend_bound=extend_bound)
    return {
        "theta": params.theta, "p": params.p, "branch": branch,
        "x": pt.x, "y": pt.y,
        "kappa": rep.kappa, "gamma_bound": rep.gamma_bound, "U": rep.U,
        "eta": rep.eta, "lambda_max": rep.lambda_max,
        "verdict": rep.verdict,
        "domain_restricted": rep.domain_restricted, "msw_enabled": rep.msw_enabled,
    }


def scan_rows(p: float, lo: float, hi: float, n: int, all_branches: bool = False,
              band: float = AMBIGUITY_BAND, extend_bound: bool = False) -> list:
    """One row per (theta, branch) on the midpoint grid of the open interval ``(lo, hi)``."""
    rows = []
    for i in range(n):
        theta = lo + (i + 0.5) * (hi - lo) / n
        params = ModelParams(theta, p)
        sol = classify(params, ambiguity="snap", band=band)
        present = {pt.branch: pt for pt in sol.points}
        for br in (range(1, 8) if all_branches else sorted(present)):
            row = {"theta": theta, "p": p, "branch": br, "exists": br in present, "verdict": ""}
            if br in present:
                pt = present[br]
                K = build_kernel(pt, params)
                rep = msw_report(pt, params, K, extend_bound=extend_bound)
                row.update(
                    x=pt.x, y=pt.y, lambda1=K.lambda1, lambda2=K.lambda2,
                    eta=rep.eta, kappa=rep.kappa, gamma_bound=rep.gamma_bound,
                    U=rep.U, verdict=rep.verdict.value,
                )
            rows.append(row)
    return rows


def thresholds_payload(p: float, tol: float) -> dict:
    entries = []
    for e in paper_threshold_suite(p, tol):
        entries.append({
            "name": e.name, "quantity": e.quantity, "branch": e.branch,
            "bracket": e.bracket, "coordinate": e.coordinate,
            "theta": e.value, "reference": e.reference, "rel_error": e.rel_error,
            "error": e.error, "note": e.note,
        })
    return {"p": p, "thresholds": entries}


def gamma_payload(params: ModelParams, branch: int, grid: int) -> dict:
    pt = find_branch(params, branch)
    rep = verify_gamma_lemma(params, pt, grid)
    return {
        "theta": params.theta, "p": params.p, "branch": branch, "grid_n": grid,
        "max_abs": rep.max_abs, "bound": rep.bound, "holds": rep.holds,
        "maxima": rep.maxima,
        "boundary": [
            {"name": c.name, "t": c.t, "u": c.u, "value": c.value,
             "expected": c.expected, "error": c.error}
            for c in rep.boundary
        ],
    }


# ---------------------------------------------------------------------------
# commands


def _params(args) -> ModelParams:
    return ModelParams(args.theta, args.p)


def _flat(payload: dict, skip=("points", "curves", "P", "maxima", "boundary", "thresholds")):
    return {k: v for k, v in _clean(payload).items() if k not in skip}


def cmd_solve(args) -> str:
    payload = solve_payload(_params(args), args.band, args.tol)
    if args.format == "csv":
        flat = _clean(payload)
        rows = [dict(theta=flat["theta"], p=flat["p"], region=flat["region"],
                     count=flat["count"], **pt) for pt in flat["points"]]
        cols = ("theta", "p", "region", "count", "branch", "x", "y", "log_x", "log_y", "residual")
        return to_csv(cols, rows)
    return to_json(payload)


def cmd_classify(args) -> str:
    payload = classify_payload(_params(args), args.band)
    if args.format == "csv":
        flat = _flat(payload)
        flat["branches"] = " ".join(str(b) for b in payload["branches"])
        flat["violations"] = "; ".join(payload["violations"])
        return to_csv(tuple(flat), [flat])
    return to_json(payload)


def cmd_kernel(args) -> str:
    payload = kernel_payload(_params(args), args.branch)
    if args.format == "csv":
        flat = _flat(payload, skip=("P", "log_Z"))
        for i, row in enumerate(payload["P"].tolist()):
            for j, v in enumerate(row):
                flat[f"P{i}{j}"] = v
        return to_csv(tuple(flat), [flat])
    return to_json(payload)


def cmd_extremality(args) -> str:
    payload = extremality_payload(_params(args), args.branch, args.extend_bound)
    if args.format == "csv":
        flat = _flat(payload)
        return to_csv(tuple(flat), [flat])
    return to_json(payload)


def cmd_scan(args) -> str:
    lo, hi = args.range
    if not 0 <= lo < hi:
        raise DomainError(f"--range needs 0 <= LO < HI, got {lo} {hi}")
    if args.n < 1:
        raise DomainError(f"--n must be >= 1, got {args.n}")
    rows = scan_rows(args.p, lo, hi, args.n, args.all_branches, args.band, args.extend_bound)
    if args.format == "json":
        return to_json({"p": args.p, "range": [lo, hi], "n": args.n, "rows": rows})
    return to_csv(SCAN_COLUMNS, rows)


def cmd_thresholds(args) -> str:
    payload = thresholds_payload(args.p, args.tol_theta)
    if args.format == "csv":
        cols = ("name", "quantity", "branch", "coordinate", "theta", "reference", "rel_error", "error", "note")
        return to_csv(cols, _clean(payload)["thresholds"])
    return to_json(payload)


def cmd_curve(args) -> str:
    lo, hi = args.range
    pts = trace_curve(Curve(args.name), (lo, hi), args.n)
    if args.format == "json":
        return to_json({"curve": args.name, "points": [{"theta": t, "p": v} for t, v in pts]})
    return to_csv(("theta", "p"), [{"theta": t, "p": v} for t, v in pts])


def cmd_verify_gamma(args) -> str:
    payload = gamma_payload(_params(args), args.branch, args.grid)
    if args.format == "csv":
        flat = _flat(payload)
        for name, v in payload["maxima"].items():
            flat[f"max_{name}"] = v
        return to_csv(tuple(flat), [flat])
    return to_json(payload)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="psos-gibbs",
        description="Translation-invariant Gibbs measures of the 3-state p-SOS model "
        "on the binary Cayley tree.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, fmt="json", point=True, branch=False):
        if point:
            sp.add_argument("--theta", type=float, required=True)
            sp.add_argument("--p", type=float, required=True)
        if branch:
            sp.add_argument("--branch", type=int, default=1, choices=range(1, 8))
        sp.add_argument("--format", choices=("json", "csv"), default=fmt)
        sp.add_argument("--out", default=None, help="output file (default: stdout)")
        sp.add_argument("--tol", type=float, default=None,
                        help="residual tolerance (default: $PSOS_TOL or 1e-10)")
        sp.add_argument("--band", type=float, default=AMBIGUITY_BAND,
                        help="relative ambiguity band around Delta = 0 and D = 0")

    sp = sub.add_parser("solve", help="all boundary laws at (theta, p)")
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("classify", help="region, discriminants and conditions at (theta, p)")
    common(sp)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("kernel", help="transition matrix and eigenvalues of one branch")
    common(sp, branch=True)
    sp.set_defaults(func=cmd_kernel)

    sp = sub.add_parser("extremality", help="KS / MSW report for one branch")
    common(sp, branch=True)
    sp.add_argument("--extend-bound", action="store_true",
                    help="use |gamma bound| for theta >= 1 as well")
    sp.set_defaults(func=cmd_extremality)

    sp = sub.add_parser("scan", help="one CSV row per (theta, branch) over a theta grid")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--range", type=float, nargs=2, metavar=("LO", "HI"), required=True)
    sp.add_argument("--n", type=int, default=200)
    sp.add_argument("--all-branches", action="store_true",
                    help="emit rows for absent branches too (exists=false)")
    sp.add_argument("--extend-bound", action="store_true")
    common(sp, fmt="csv", point=False)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("thresholds", help="named critical couplings at p")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--tol-theta", type=float, default=1e-10,
                    help="bisection width in the search coordinate")
    common(sp, point=False)
    sp.set_defaults(func=cmd_thresholds)

    sp = sub.add_parser("curve", help="sample a region curve")
    sp.add_argument("--name", choices=[c.value for c in Curve], required=True)
    sp.add_argument("--range", type=float, nargs=2, metavar=("LO", "HI"), required=True)
    sp.add_argument("--n", type=int, default=100)
    common(sp, fmt="csv", point=False)
    sp.set_defaults(func=cmd_curve)

    sp = sub.add_parser("verify-gamma", help="brute-force check of the gamma bound")
    common(sp, branch=True)
    sp.add_argument("--grid", type=int, default=200)
    sp.set_defaults(func=cmd_verify_gamma)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.tol is not None:
        if not args.tol > 0:
            print("error: --tol must be positive", file=sys.stderr)
            return EXIT_DOMAIN
        os.environ["PSOS_TOL"] = repr(args.tol)
    try:
        args.tol = residual_tol()
        text = args.func(args)
        emit(text, args.out)
    except (DomainError, ToleranceAmbiguity) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except BranchAbsent as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BRANCH
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PsosError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point ``pscvx``.

Exit codes: 0 conditions verified, 2 counterexample, 3 inconclusive,
1 usage or validation error.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import fixtures as fx
from .barrier import compute_lambda, shrink_for_bound
from .discs import witness_non_domain
from .errors import PscvxError
from .psh import verify_psh
from .report import (
    EXIT_CODES,
    CheckOptions,
    _probe_corpus,
    _psh_record,
    _witness_record,
    classify_chart,
    run_check,
)
from .specio import dump_spec, dumps, load_spec

EXIT_USAGE = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _point(text):
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive_int(text):
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser():
    p = _Parser(prog="pscvx", description="Sampled checks of pseudoconvexity conditions for "
                                          "piecewise-smooth domains.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, spec=True):
        if spec:
            sp.add_argument("spec", help="domain spec JSON file")
        sp.add_argument("--samples", type=_positive_int, default=10_000, help="samples per chart")
        sp.add_argument("--tol", type=float, default=1e-6, help="margin tolerance")
        sp.add_argument("--eig-tol", type=float, default=1e-8, help="eigenvalue tolerance")
        sp.add_argument("--report", metavar="OUT", help="write the JSON report here instead of stdout")

    sp = sub.add_parser("check", help="full pipeline and verdict")
    common(sp)
    sp.add_argument("--alpha", type=float, help="power-map exponent at complex edges")
    sp = sub.add_parser("classify", help="boundary class histogram per chart")
    common(sp)
    sp = sub.add_parser("barrier", help="collar shrink factor and lambda per chart")
    common(sp)
    sp = sub.add_parser("verify-psh", help="plurisubharmonicity checks of the barrier")
    common(sp)
    sp = sub.add_parser("witness", help="disc witness at an edge point")
    common(sp)
    sp.add_argument("--point", type=_point, required=True, help="ambient point x1,...,x2N")
    sp = sub.add_parser("fixtures", help="bundled fixture specs")
    sp.add_argument("--emit", metavar="DIR", required=True, help="directory to write spec files to")
    return p


def _emit(report, path):
    text = dumps(report)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _options(args):
    return CheckOptions(samples=args.samples, tol=args.tol, eig_tol=args.eig_tol,
                        alpha=getattr(args, "alpha", None))


def cmd_check(args, spec):
    try:
        report = run_check(spec, _options(args))
    except PscvxError as exc:
        report = {"spec": spec.name, "verdict": "inconclusive", "exit_code": EXIT_CODES["inconclusive"],
                  "error": {"error": type(exc).__name__, "code": exc.code, "message": str(exc)}}
    _emit(report, args.report)
    return report["exit_code"]


def cmd_classify(args, spec):
    opts = _options(args)
    charts = [{"chart": ci, **classify_chart(spec, ci, opts)} for ci in range(len(spec.charts))]
    total = {}
    for c in charts:
        for k, v in c["histogram"].items():
            total[k] = total.get(k, 0) + v
    _emit({"spec": spec.name, "histogram": total, "charts": charts}, args.report)
    return 0


def cmd_barrier(args, spec):
    out = []
    for ci in range(len(spec.charts)):
        try:
            col = shrink_for_bound(spec, ci, samples=args.samples)
            out.append({"chart": ci, "shrink_factor": col.factor, "halvings": col.halvings,
                        "lambda": compute_lambda(col), "sup_levi_norm": col.sup_levi_norm,
                        "sup_product": col.sup_product})
        except PscvxError as exc:
            out.append({"chart": ci, "error": type(exc).__name__, "message": str(exc)})
    _emit({"spec": spec.name, "charts": out}, args.report)
    return 0 if all("error" not in c for c in out) else EXIT_CODES["inconclusive"]


def cmd_verify_psh(args, spec):
    out = []
    ok = True
    for ci in range(len(spec.charts)):
        try:
            col = shrink_for_bound(spec, ci, samples=args.samples)
            v = verify_psh(spec, ci, col, compute_lambda(col), tol=args.tol, eig_tol=args.eig_tol)
            out.append({"chart": ci, **_psh_record(v)})
            ok &= v.verified
        except PscvxError as exc:
            out.append({"chart": ci, "error": type(exc).__name__, "message": str(exc)})
            ok = False
    _emit({"spec": spec.name, "charts": out}, args.report)
    return 0 if ok else EXIT_CODES["inconclusive"]


def cmd_witness(args, spec):
    if args.point.shape != (spec.n,):
        raise SystemExit(f"pscvx: error: --point needs {spec.n} coordinates")
    w = witness_non_domain(spec, args.point, probes=_probe_corpus(spec))
    rec = _witness_record(spec, w)
    _emit({"spec": spec.name, "witness": rec}, args.report)
    if not args.report and w.probes:
        sys.stderr.write(_probe_table(w.probes))
    return EXIT_CODES["counterexample"] if w.found else EXIT_CODES["inconclusive"]


def _probe_table(rows):
    lines = [f"{'probe':<24} {'disc':>4} {'inside':>6} {'extension':>28} {'error':>9}"]
    for r in rows:
        v = r["value"]
        lines.append(f"{r['probe']:<24} {r['disc']:>4} {str(r['inside']):>6} "
                     f"{v.real:>13.6g}{v.imag:+13.6g}j {r['error']:>9.1e}")
    return "\n".join(lines) + "\n"


def cmd_fixtures(args):
    os.makedirs(args.emit, exist_ok=True)
    for name, spec in fx.fixtures().items():
        path = os.path.join(args.emit, f"{name}.json")
        dump_spec(spec, path)
        print(path)
    return 0


COMMANDS = {"check": cmd_check, "classify": cmd_classify, "barrier": cmd_barrier,
            "verify-psh": cmd_verify_psh, "witness": cmd_witness}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fixtures":
            return cmd_fixtures(args)
        spec = load_spec(args.spec)
        return COMMANDS[args.command](args, spec)
    except PscvxError as exc:
        sys.stderr.write(f"pscvx: {type(exc).__name__}: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

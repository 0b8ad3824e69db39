"""Command line front end: ``quadcomp {classify,embed,check,verify,sample}``.

Exit codes: 0 success, 2 input error, 3 negative verdict, 4 internal
inconsistency.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import models
from .errors import InternalInconsistency, InvalidArgument, VerdictError
from .forms import PSD_TOL, FiniteSemimetric, LambdaArray, negtype_value
from .suites import SUITES, run_suite
from .wald import EMBED_TOL, classify4, embed_cat, embed_cbb, verify_embedding

EXIT_OK, EXIT_INPUT, EXIT_VERDICT, EXIT_INTERNAL = 0, 2, 3, 4


class InputError(InvalidArgument):
    pass


# -- input -------------------------------------------------------------------

def _number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InputError(f"{where}: expected a number, got {x!r}")
    if not math.isfinite(x):
        raise InputError(f"{where}: value must be finite")
    return float(x)


def parse_json_matrix(text: str) -> FiniteSemimetric:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc}") from None
    if isinstance(obj, list):
        obj = {"n": len(obj), "d": obj}
    if not isinstance(obj, dict):
        raise InputError("top level must be an object with fields \"n\" and \"d\"")
    if "d" not in obj:
        raise InputError("missing field \"d\"")
    rows = obj["d"]
    if not isinstance(rows, list) or not rows:
        raise InputError("field \"d\" must be a nonempty list of rows")
    n = obj.get("n", len(rows))
    if isinstance(n, bool) or not isinstance(n, int) or n < 2:
        raise InputError(f"field \"n\" must be an integer >= 2, got {n!r}")
    if len(rows) != n:
        raise InputError(f"field \"d\" has {len(rows)} rows but \"n\" is {n}")
    d = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise InputError(f"field \"d[{i}]\" must be a list of {n} numbers")
        d.append([_number(x, f"d[{i}][{j}]") for j, x in enumerate(row)])
    return FiniteSemimetric(d)


def parse_csv_matrix(text: str) -> FiniteSemimetric:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    d = []
    for i, ln in enumerate(lines):
        row = []
        for j, cell in enumerate(ln.split(",")):
            try:
                row.append(float(cell))
            except ValueError:
                raise InputError(f"line {i + 1}, column {j + 1}: not a number: {cell.strip()!r}") from None
        if len(row) != len(lines):
            raise InputError(f"line {i + 1} has {len(row)} entries, expected {len(lines)}")
        d.append(row)
    if len(d) < 2:
        raise InputError("CSV input needs at least 2 lines")
    return FiniteSemimetric(d)


def read_matrix(args) -> FiniteSemimetric:
    if args.matrix is not None:
        text = args.matrix
    elif args.input is not None:
        try:
            with open(args.input, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {args.input}: {exc.strerror}") from None
    else:
        raise InputError("give --input PATH or --matrix TEXT")
    return parse_csv_matrix(text) if args.format == "csv" else parse_json_matrix(text)


def parse_lambda(text: str) -> LambdaArray:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise InputError(f"--lambda must be comma-separated numbers, got {text!r}") from None
    return LambdaArray(vals)


# -- output ------------------------------------------------------------------

def _rounded(lam):
    return None if lam is None else [round(float(x), 6) + 0.0 for x in lam.values]


def _emit(args, payload: dict):
    text = json.dumps(payload, indent=2, allow_nan=False) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def classification_record(m, tol_psd=PSD_TOL) -> dict:
    c = classify4(m, tol_psd)
    tri = c.metric

    def test(v):
        return {"holds": v.holds, "min_value": v.min_value, "witness": _rounded(v.witness),
                "pattern": None if v.pattern is None else str(v.pattern)}

    return {
        "verdicts": c.verdicts(),
        "triangle": {"violation": tri.violation,
                     "worst": None if tri.worst is None else list(tri.worst)},
        "euclidean": {"min_eigenvalue": c.euclidean.min_eigenvalue,
                      "witness": _rounded(c.euclidean.witness)},
        "cbb": test(c.cbb_test),
        "cat": test(c.cat_test),
    }


def embedding_record(m, emb) -> dict:
    f = emb.factor
    if f is None:
        factor = {"kind": "none"}
    elif f.kind == "circle":
        factor = {"kind": "circle", "r": f.r, "angles": list(f.angles)}
    else:
        factor = {"kind": "tripod", "legs": list(f.legs),
                  "placement": [[leg, t] for leg, t in f.placement]}
    euclid = np.asarray(emb.euclid, dtype=float) + 0.0
    return {"factor": factor, "euclid": euclid.tolist(), "residual": verify_embedding(m, emb)}


# -- commands ----------------------------------------------------------------

def cmd_classify(args):
    m = read_matrix(args)
    record = classification_record(m, args.tol_psd)
    if args.text:
        v = record["verdicts"]
        lines = [f"{k}: {'yes' if v[k] else 'no'}" for k in ("metric", "euclidean", "cbb", "cat")]
        for k in ("cbb", "cat"):
            if record[k]["witness"] is not None:
                lines.append(f"{k} witness: {record[k]['witness']}")
        sys.stdout.write("\n".join(lines) + "\n")
    else:
        _emit(args, record)
    return EXIT_OK


def cmd_embed(args):
    m = read_matrix(args)
    fn = embed_cbb if args.target == "cbb" else embed_cat
    emb = fn(m, tol_psd=args.tol_psd, tol_embed=args.tol_embed)
    _emit(args, embedding_record(m, emb))
    return EXIT_OK


def cmd_check(args):
    m = read_matrix(args)
    if args.lam is None:
        raise InputError("check needs --lambda")
    lam = parse_lambda(args.lam)
    value = negtype_value(m, lam)
    a = np.abs(lam.values)
    scale = float(a @ m.squared() @ a)
    holds = value <= args.tol_psd * scale
    _emit(args, {"value": value, "type": list(lam.negtype), "holds": bool(holds)})
    return EXIT_OK


def cmd_verify(args):
    report = run_suite(args.suite, args.seed, args.trials, args.start)
    _emit(args, report.to_dict())
    status = "passed" if report.passed else f"FAILED ({report.failures} failures)"
    print(f"suite {report.suite}: {status} in {report.duration:.2f} s", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_VERDICT


def cmd_sample(args):
    d = models.sample_distances(args.space, args.trials, args.seed)
    _emit(args, {"space": args.space, "seed": args.seed,
                 "metrics": [{"n": 4, "d": x.tolist()} for x in d]})
    return EXIT_OK


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _seed(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quadcomp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def matrix_opts(sp):
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--input", help="matrix file ({\"n\": 4, \"d\": [[...]]} or CSV)")
        src.add_argument("--matrix", help="inline matrix text in the chosen format")
        sp.add_argument("--format", choices=("json", "csv"), default="json")

    def common(sp):
        sp.add_argument("--tol-psd", type=_positive_float, default=PSD_TOL)
        sp.add_argument("--output", help="write JSON here instead of stdout")

    sp = sub.add_parser("classify", help="metric / Euclidean / CBB / CAT verdicts")
    matrix_opts(sp)
    common(sp)
    sp.add_argument("--text", action="store_true", help="human-readable summary")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("embed", help="embed into circle x R^3 (cbb) or tripod x R^3 (cat)")
    matrix_opts(sp)
    common(sp)
    sp.add_argument("--target", choices=("cbb", "cat"), required=True)
    sp.add_argument("--tol-embed", type=_positive_float, default=EMBED_TOL)
    sp.set_defaults(func=cmd_embed)

    sp = sub.add_parser("check", help="evaluate one inequality of negative type")
    matrix_opts(sp)
    common(sp)
    sp.add_argument("--lambda", dest="lam", help="comma-separated zero-sum coefficients")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("verify", help="run a seeded property suite")
    sp.add_argument("--suite", choices=tuple(SUITES), required=True)
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--trials", type=_positive_int, default=1000)
    sp.add_argument("--start", type=int, default=0, help="index of the first trial")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sample", help="sample 4-point metrics from a model space")
    sp.add_argument("--space", required=True, help='e.g. "circle(r=0.1..10)*euclidean(3)"')
    sp.add_argument("--seed", type=_seed, default=0)
    sp.add_argument("--trials", type=_positive_int, default=10)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_sample)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except VerdictError as exc:
        if exc.witness is not None:
            print(f"error: target {args.target} ruled out; witness lambda {_rounded(exc.witness)}",
                  file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    except InternalInconsistency as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except InvalidArgument as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

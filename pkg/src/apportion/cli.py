"""Command-line front end with JSON input/output and stable exit codes.

Matrices arrive as JSON documents holding either raw entries (complex scalars
as [re, im] pairs) or a Jordan block list; all results leave as JSON on
stdout with every float printed to 17 significant digits, so identical
invocations produce byte-identical output.  Diagnostics go to stderr.

Exit codes: 0 success, 2 malformed input document, 3 invalid or unsupported
input, 4 not apportionable, 5 verdict unknown, 6 requested constant not
achievable, 7 singular transform.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .classifier import (
    admissible_region,
    classify,
    region_to_csv,
    region_to_svg,
    request_certificate,
)
from .constructors import verify_certificate
from .core import Tolerance, as_matrix, hadamard_lower_bound, is_uniform, similarity_image, trace_lower_bound
from .errors import (
    ApportionError,
    ConstantNotAchievableError,
    InvalidInputError,
    SearchBudgetError,
    SingularMatrixError,
    UnsupportedOrderError,
)
from .jordan import JordanSpec, build_jordan
from .reports import Verdict
from .search import SearchConfig, find_apportioning, sigma_estimate

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVALID = 3
EXIT_NOT_APPORTIONABLE = 4
EXIT_UNKNOWN = 5
EXIT_CONSTANT = 6
EXIT_SINGULAR = 7


def _format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return f"{x:.17g}"


def _emit_json(obj) -> str:
    """Serialize with deterministic key order and 17-significant-digit floats."""
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_emit_json(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}:{_emit_json(v)}" for k, v in obj.items())
        return "{" + ",".join(items) + "}"
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _print_json(obj):
    sys.stdout.write(_emit_json(obj) + "\n")


def _read_document(path: str) -> dict:
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise _ParseFailure(f"cannot read {path!r}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _ParseFailure(f"malformed JSON in {path!r}: {exc}") from exc
    if not isinstance(doc, dict):
        raise _ParseFailure("matrix document must be a JSON object")
    return doc


class _ParseFailure(Exception):
    pass


def _parse_matrix_document(doc: dict):
    """A document holds exactly one of 'entries' (with optional 'order') or 'jordan'.

    Returns (ndarray or None, JordanSpec or None).
    """
    has_entries = "entries" in doc
    has_jordan = "jordan" in doc
    if has_entries == has_jordan:
        raise _ParseFailure("document must contain exactly one of 'entries' or 'jordan'")
    if has_jordan:
        try:
            return None, JordanSpec.from_json(doc["jordan"])
        except (InvalidInputError, TypeError) as exc:
            raise _ParseFailure(f"bad jordan block list: {exc}") from exc
    entries = doc["entries"]
    try:
        rows = [[complex(float(re), float(im)) for re, im in row] for row in entries]
    except (TypeError, ValueError) as exc:
        raise _ParseFailure(f"entries must be an array of [re, im] pairs: {exc}") from exc
    try:
        M = as_matrix(rows, square=True, name="entries")
    except InvalidInputError as exc:
        raise _ParseFailure(str(exc)) from exc
    if "order" in doc and int(doc["order"]) != M.shape[0]:
        raise _ParseFailure("declared order does not match the entry array shape")
    return M, None


def _doc_input(doc: dict):
    M, spec = _parse_matrix_document(doc)
    return spec if spec is not None else M


def _doc_matrix(doc: dict) -> np.ndarray:
    M, spec = _parse_matrix_document(doc)
    return build_jordan(spec) if spec is not None else M


def _bounds_json(A) -> dict:
    return {
        "trace_lower_bound": trace_lower_bound(A),
        "hadamard_lower_bound": hadamard_lower_bound(A),
    }


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_classify(args) -> int:
    doc = _read_document(args.matrix)
    report = classify(_doc_input(doc))
    out = report.to_json()
    out["bounds"] = _bounds_json(_doc_matrix(doc))
    _print_json(out)
    return EXIT_OK


def _cmd_apportion(args) -> int:
    doc = _read_document(args.matrix)
    inp = _doc_input(doc)
    report = classify(inp)
    if report.verdict is Verdict.NOT_APPORTIONABLE:
        print("not apportionable", file=sys.stderr)
        return EXIT_NOT_APPORTIONABLE
    if report.verdict is Verdict.UNKNOWN:
        print("apportionability unknown for this class", file=sys.stderr)
        return EXIT_UNKNOWN
    cert = request_certificate(inp, kappa=args.kappa, report=report)
    verify_certificate(cert, _doc_matrix(doc))
    out = cert.to_json()
    out["constants"] = report.constants.to_json()
    _print_json(out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    A = _doc_matrix(_read_document(args.matrix))
    M = _doc_matrix(_read_document(args.transform))
    tol = Tolerance(rel=args.rel, abs=args.abs)
    B = similarity_image(M, A)
    rep = is_uniform(B, tol)
    _print_json({
        "is_uniform": rep.is_uniform,
        "kappa": rep.kappa,
        "defect": rep.defect,
    })
    return EXIT_OK


def _cmd_bounds(args) -> int:
    A = _doc_matrix(_read_document(args.matrix))
    out = _bounds_json(A)
    out["order"] = A.shape[0]
    _print_json(out)
    return EXIT_OK


def _cmd_region(args) -> int:
    lambda1 = complex(args.lambda1_re, args.lambda1_im)
    box = ((args.re_min, args.re_max), (args.im_min, args.im_max))
    samples = admissible_region(lambda1, box, args.resolution)
    text = region_to_csv(samples) if args.format == "csv" else region_to_svg(samples)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK


def _search_config(args) -> SearchConfig:
    return SearchConfig(
        restarts=args.restarts,
        seed=args.seed,
        defect_target=args.defect_target,
        max_iters=args.max_iters,
    )


def _cmd_search(args) -> int:
    A = _doc_matrix(_read_document(args.matrix))
    outcome = find_apportioning(A, _search_config(args))
    _print_json(outcome.to_json(with_transcript=args.verbose))
    return EXIT_OK


def _cmd_sigma(args) -> int:
    doc = _read_document(args.matrix)
    inp = _doc_input(doc)
    report = sigma_estimate(inp, args.m_max, _search_config(args))
    _print_json(report.to_json(with_transcript=args.verbose))
    return EXIT_OK


def _demo_nilpotent():
    from .constructors import apportion_nilpotent

    spec = JordanSpec(((0j, 3), (0j, 2)))
    cert = apportion_nilpotent(spec, 1.0 / math.sqrt(3.0))
    rep = is_uniform(cert.B)
    return {"case": "nilpotent-5x5", "kappa": rep.kappa, "defect": rep.defect,
            "uniform": rep.is_uniform}


def _demo_i_oplus_o():
    from .constructors import apportion_I_oplus_O

    cert = apportion_I_oplus_O(2, 1.0)
    rep = is_uniform(cert.B)
    return {"case": "identity-plus-zeros-4x4", "kappa": rep.kappa,
            "defect": rep.defect, "uniform": rep.is_uniform}


def _demo_templates():
    from .constructors import TemplateKind, apportion_3x3_template

    out = []
    for kind, name in ((TemplateKind.LAMBDA_J2_PLUS_ZERO, "3x3-size2-plus-zero"),
                       (TemplateKind.LAMBDA_PLUS_N2, "3x3-plus-nilpotent")):
        cert = apportion_3x3_template(kind, 1.0)
        rep = is_uniform(cert.B)
        out.append({"case": name, "kappa": rep.kappa, "defect": rep.defect,
                    "uniform": rep.is_uniform})
    return out


def _cmd_demo(_args) -> int:
    cases = [_demo_nilpotent(), _demo_i_oplus_o(), *_demo_templates()]
    _print_json({"demo": cases})
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing and dispatch
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apportion",
        description="Classify, construct, and verify equal-modulus similarity images.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="verdict and constant set for a matrix")
    p.add_argument("matrix", help="matrix document path, or - for stdin")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("apportion", help="build a transforming certificate")
    p.add_argument("matrix")
    p.add_argument("--kappa", type=float, default=None,
                   help="target modulus (default: a canonical member of the set)")
    p.set_defaults(func=_cmd_apportion)

    p = sub.add_parser("verify", help="check M A M^-1 for uniformity")
    p.add_argument("matrix")
    p.add_argument("transform")
    p.add_argument("--rel", type=float, default=1e-9)
    p.add_argument("--abs", type=float, default=1e-12)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("bounds", help="trace and determinant lower bounds")
    p.add_argument("matrix")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("region", help="admissible second-eigenvalue region (order 2)")
    p.add_argument("--lambda1-re", type=float, required=True)
    p.add_argument("--lambda1-im", type=float, default=0.0)
    p.add_argument("--re-min", type=float, default=-3.0)
    p.add_argument("--re-max", type=float, default=3.0)
    p.add_argument("--im-min", type=float, default=-3.0)
    p.add_argument("--im-max", type=float, default=3.0)
    p.add_argument("--resolution", type=int, default=201)
    p.add_argument("--format", choices=("csv", "svg"), default="csv")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=_cmd_region)

    for name, helptext in (("search", "numerical search for a transform"),
                           ("sigma", "least zero padding estimate")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("matrix")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--restarts", type=int, default=32)
        p.add_argument("--max-iters", type=int, default=2000)
        p.add_argument("--defect-target", type=float, default=1e-8)
        p.add_argument("--verbose", action="store_true",
                       help="include per-restart transcript")
        if name == "sigma":
            p.add_argument("--m-max", type=int, default=4)
            p.set_defaults(func=_cmd_sigma)
        else:
            p.set_defaults(func=_cmd_search)

    p = sub.add_parser("demo", help="replay the worked construction examples")
    p.set_defaults(func=_cmd_demo)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _ParseFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ConstantNotAchievableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTANT
    except SingularMatrixError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (InvalidInputError, UnsupportedOrderError, SearchBudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ApportionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

    pcurvature pcurv -p 3 "D^2 - x"
    pcurvature exists -p 10007 --json "(x^2+1)*D^2 + x*D + 3"
    pcurvature bench --bench-sizes 251,1009,4001 "D^2 + x*D + x^2"

Exit codes: 0 success, 2 parse or usage error, 3 precondition violated,
4 oracle mismatch.
"""

import argparse
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import modring as R
from .diffop import PreconditionError, RatMat, regularize
from .linalg import pm_trim, poly_mat_mul, poly_mat_rank
from .parse import ParseError, format_operator, format_poly, parse_operator
from .pcurv import katz_recurrence, katz_vector, nilpotence_test, p_curvature, trace_pcurvature
from .polsol import SolutionSpace, basis_G, dense_dimension, dimension_G, rational_solution_space

COMMANDS = ("pcurv", "pcurv-naive", "polsols", "exists", "ratdim", "trace", "nilpotent", "bench")
ORACLE_MAX_P = 31
BENCH_DEFAULT = ("pcurv", "pcurv-naive", "exists")

EXIT_OK, EXIT_PARSE, EXIT_PRECONDITION, EXIT_MISMATCH = 0, 2, 3, 4


def is_prime(n):
    """Deterministic Miller-Rabin; the bases 2, 3, 5, 7 suffice below 3.2e9."""
    if n < 2:
        return False
    for q in (2, 3, 5, 7):
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _valid_p(p):
    return 3 <= p < 1 << 31 and is_prime(p)


@dataclass
class Job:
    command: str
    p: int
    operator: str
    json: bool = False
    check_oracle: bool = False
    bench_sizes: list = field(default_factory=list)
    bench_commands: tuple = BENCH_DEFAULT
    out: str = None


# ---------------------------------------------------------------------------
# results <-> json


def _polys(P):
    return [[[int(c) for c in R.trim(P[i, j])] for j in range(P.shape[1])] for i in range(P.shape[0])]


def _poly(f):
    return [int(c) for c in R.trim(np.asarray(f, dtype=np.int64))]


def ratmat_to_json(A):
    return {"numerator": _polys(A.num), "denominator": _poly(A.den), "exponent": int(A.exp), "p": int(A.p)}


def ratmat_from_json(obj):
    p = obj["p"]
    rows = obj["numerator"]
    n = max([len(e) for row in rows for e in row] + [0])
    num = np.zeros((len(rows), len(rows[0]), n), dtype=np.int64)
    for i, row in enumerate(rows):
        for j, e in enumerate(row):
            num[i, j, :len(e)] = e
    return RatMat(pm_trim(num), R.poly(obj["denominator"], p), obj["exponent"], p)


def result_to_json(kind, value):
    if kind == "ratmat":
        return {"kind": kind, **ratmat_to_json(value)}
    if kind == "space":
        return {"kind": kind, "dimension": value.dimension, "degree_bound": value.degree_bound,
                "basis": [_poly(u) for u in value.basis], "p": value.p}
    if kind == "bool":
        return {"kind": kind, "value": bool(value)}
    if kind == "int":
        return {"kind": kind, "value": int(value)}
    raise ValueError(f"unknown result kind {kind!r}")


def result_from_json(obj):
    kind = obj["kind"]
    if kind == "ratmat":
        return ratmat_from_json(obj)
    if kind == "space":
        basis = [R.poly(u, obj["p"]) for u in obj["basis"]]
        return SolutionSpace(obj["dimension"], basis, obj["degree_bound"], obj["p"])
    return obj["value"]


# ---------------------------------------------------------------------------
# human output


def format_matrix(P):
    rows = ["[" + ", ".join(format_poly(P[i, j]) for j in range(P.shape[1])) + "]" for i in range(P.shape[0])]
    return "[" + ", ".join(rows) + "]"


def format_ratmat(A):
    num, den = A.normal_form()
    body = format_matrix(num) if num.shape[0] > 1 or num.shape[1] > 1 else format_poly(num[0, 0])
    if R.degree(den) <= 0:
        return body
    return f"{body} / ({format_poly(den)})"


def _format_space(S, label):
    lines = [f"{label} {S.dimension}"]
    lines += [format_poly(u) for u in S.basis]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# commands


def _shift(L):
    try:
        return regularize(L)[1]
    except PreconditionError:
        return None


def _compute(cmd, L):
    """(kind, value, human text) for one command."""
    if cmd == "pcurv":
        A = p_curvature(L).Ap
        return "ratmat", A, format_ratmat(A)
    if cmd == "pcurv-naive":
        A = katz_vector(L)
        return "ratmat", A, format_ratmat(A)
    if cmd == "polsols":
        S = basis_G(L)
        return "space", S, _format_space(S, "dimension")
    if cmd == "exists":
        k = dimension_G(L)
        return "int", k, f"dimension {k}"
    if cmd == "ratdim":
        S = rational_solution_space(L)
        return "space", S, _format_space(S, "dimension")
    if cmd == "trace":
        t = trace_pcurvature(L)
        return "ratmat", t, format_ratmat(t)
    if cmd == "nilpotent":
        v = nilpotence_test(L)
        return "bool", v, "true" if v else "false"
    raise ValueError(f"unknown command {cmd!r}")


def _oracle(cmd, L, value):
    """True when the result agrees with the naive oracle."""
    if cmd in ("pcurv", "pcurv-naive"):
        return katz_recurrence(L) == value
    if cmd == "polsols":
        return dense_dimension(L) == value.dimension
    if cmd == "exists":
        return dense_dimension(L) == value
    Ap = katz_recurrence(L)
    if cmd == "ratdim":
        return L.order - poly_mat_rank(Ap.num, L.p) == value.dimension
    if cmd == "trace":
        t = RatMat(Ap.trace_num()[None, None, :], Ap.den, Ap.exp, L.p)
        return t == value
    if cmd == "nilpotent":
        return (poly_mat_mul(Ap.num, Ap.num, L.p).shape[-1] == 0) == value
    raise ValueError(f"no oracle for {cmd!r}")


def _bench(job):
    lines = ["command,p,d,r,ms"]
    for p in job.bench_sizes:
        L = parse_operator(job.operator, p)
        d, r = L.bidegree
        for cmd in job.bench_commands:
            t = time.perf_counter()
            _compute(cmd, L)
            ms = (time.perf_counter() - t) * 1000
            lines.append(f"{cmd},{p},{d},{r},{ms:.3f}")
    return "\n".join(lines)


def run(job):
    """Execute a job; returns (exit code, output text)."""
    try:
        if job.command == "bench":
            for p in job.bench_sizes:
                if not _valid_p(p):
                    return EXIT_PARSE, f"error: {p} is not an odd prime below 2^31"
            return EXIT_OK, _bench(job)
        if not _valid_p(job.p):
            return EXIT_PARSE, f"error: {job.p} is not an odd prime below 2^31"
        L = parse_operator(job.operator, job.p)
        kind, value, text = _compute(job.command, L)
    except ParseError as e:
        return EXIT_PARSE, f"parse error: {e}"
    except (PreconditionError, ValueError) as e:
        return EXIT_PRECONDITION, f"precondition violated: {e}"
    code = EXIT_OK
    oracle = None
    if job.check_oracle:
        if job.p <= ORACLE_MAX_P:
            oracle = "match" if _oracle(job.command, L, value) else "mismatch"
            if oracle == "mismatch":
                code = EXIT_MISMATCH
        else:
            oracle = f"skipped (p > {ORACLE_MAX_P})"
    if job.json:
        d, r = L.bidegree
        doc = {"command": job.command, "p": job.p, "operator": format_operator(L), "bidegree": [d, r],
               "shift": _shift(L), "result": result_to_json(kind, value)}
        if oracle is not None:
            doc["oracle"] = oracle
        return code, json.dumps(doc)
    if oracle is not None:
        text += f"\noracle: {oracle.upper() if oracle in ('match', 'mismatch') else oracle}"
    return code, text


def _sizes(s):
    try:
        return [int(t) for t in s.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {s!r}")


def build_parser():
    ap = argparse.ArgumentParser(prog="pcurvature", description="p-curvature and polynomial solutions of "
                                 "differential operators over F_p[x]")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("operator", help='operator in x and D, e.g. "(x^2+1)*D^2 - 3*x"')
    ap.add_argument("-p", type=int, help="prime modulus below 2^31")
    ap.add_argument("--json", action="store_true", help="machine-readable output")
    ap.add_argument("--check-oracle", action="store_true", help=f"compare with a naive oracle when p <= {ORACLE_MAX_P}")
    ap.add_argument("--bench-sizes", type=_sizes, default=[], help="comma-separated primes for bench")
    ap.add_argument("--bench-commands", default=",".join(BENCH_DEFAULT), help="commands timed by bench")
    ap.add_argument("--out", help="write the output to this file")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "bench":
        if not args.bench_sizes:
            args.bench_sizes = [args.p] if args.p else []
        if not args.bench_sizes:
            ap.error("bench needs --bench-sizes or -p")
        cmds = tuple(c for c in args.bench_commands.split(",") if c)
        bad = [c for c in cmds if c not in COMMANDS or c == "bench"]
        if bad:
            ap.error(f"unknown bench command {bad[0]!r}")
    else:
        if args.p is None:
            ap.error("-p is required")
        cmds = BENCH_DEFAULT
    job = Job(args.command, args.p, args.operator, args.json, args.check_oracle, args.bench_sizes, cmds, args.out)
    code, text = run(job)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        stream = sys.stdout if code in (EXIT_OK, EXIT_MISMATCH) else sys.stderr
        print(text, file=stream)
    return code


if __name__ == "__main__":
    sys.exit(main())

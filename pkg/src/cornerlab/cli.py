"""Command-line entry point: ``cornerlab <subcommand> [flags]``.

Exit codes: 0 ok, 1 invalid input, 2 bad prime, 3 invariant violation,
4 numerical-health failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import MERSENNE61, TOL
from .counting import (corner_census, corner_report, degree_lowering_trace, identity_checks,
                       two_term_operator, validate_inequality_chain)
from .gowers import box_norm, parse_dirs, u2_dirs, u2_inverse, u2_line
from .grid import generate
from .jacobian import IDENTITIES, WITNESS_IDS, independence_summary, nonvanishing_witness, verify_identity
from .kernel import bombieri_check, collision_count, joint_table, kernel_mass, kernel_table
from .ratfun import (BadPrime, DegreeLossWarning, ParseError, ZeroDenominatorError,
                     is_linearly_independent_with_one, is_prime, parse_ratfun, reduce_mod_p, reduce_pair_mod_p)
from .varieties import (EIGHT_SIGNS, W_SIGNS, X_SIGNS, TooLarge, dimension_scan, prime_range,
                        roth_count, roth_count_charsum, signed_sum_histogram, zprime_count)

SCHEMA_VERSION = 1

EXIT_OK, EXIT_INPUT, EXIT_BADPRIME, EXIT_INVARIANT, EXIT_HEALTH = 0, 1, 2, 3, 4

RANDOM_GENERATORS = ("unimodular", "random_unimodular", "bounded", "random_bounded", "set", "indicator_random_set")

HISTOGRAM_SIGNS = {"X": X_SIGNS, "W": W_SIGNS, "N8": EIGHT_SIGNS}


class UsageError(Exception):
    pass


class InvariantViolation(Exception):
    pass


class HealthFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def parse_primes(text) -> list[int]:
    """``"5:61"`` (all primes in the range) or ``"11,31,61"``."""
    if isinstance(text, (list, tuple)):
        ps = [int(v) for v in text]
    elif ":" in str(text):
        lo, hi = str(text).split(":", 1)
        ps = prime_range(int(lo), int(hi))
    else:
        ps = [int(v) for v in str(text).split(",") if v.strip()]
    for q in ps:
        if not is_prime(q):
            raise UsageError(f"{q} is not prime")
    if not ps:
        raise UsageError(f"no primes in {text!r}")
    return sorted(set(ps))


def parse_seeds(text) -> list[int]:
    """``"0:20"`` (half-open range) or ``"1,2,3"``."""
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    if ":" in str(text):
        lo, hi = str(text).split(":", 1)
        return list(range(int(lo), int(hi)))
    return [int(v) for v in str(text).split(",") if v.strip()]


def _load_config(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config must be a JSON object")
    return {k.replace("-", "_"): v for k, v in data.items()}


def _apply_config(args):
    """Fill flags left unset on the command line from the --config file."""
    if not getattr(args, "config", None):
        return
    for key, val in _load_config(args.config).items():
        if key in ("command", "config"):
            continue
        if getattr(args, key, None) is None:
            setattr(args, key, val)


def _need(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required")


def _pair_q(args):
    try:
        P, Q = parse_ratfun(args.P or "t"), parse_ratfun(args.Q or "t^2")
    except ParseError as exc:
        raise UsageError(f"cannot parse: {exc}") from exc
    except ZeroDenominatorError as exc:
        raise UsageError(str(exc)) from exc
    if not getattr(args, "allow_dependent", False) and not is_linearly_independent_with_one(P, Q):
        raise UsageError("1, P, Q are linearly dependent over Q (use --allow-dependent for negative controls)")
    return P, Q


def _pair_p(args, P, Q, p):
    if args.allow_dependent:
        try:
            return reduce_pair_mod_p(P, Q, p)
        except BadPrime as exc:
            if exc.reason != "lost_independence":
                raise
            return reduce_mod_p(P, p), reduce_mod_p(Q, p)
    return reduce_pair_mod_p(P, Q, p)


def _single_prime(args) -> int:
    _need(args, "p")
    p = int(args.p)
    if not is_prime(p):
        raise UsageError(f"{p} is not prime")
    return p


def _grids(args, p, seed, count=3):
    """Generators for f0, f1, f2; a random descriptor needs an explicit seed."""
    base = args.gen or "const"
    specs = [getattr(args, f"gen{i}", None) or base for i in range(count)]
    if seed is None and any(s.partition(":")[0] in RANDOM_GENERATORS for s in specs):
        raise UsageError("--seed is required for random generators")
    s0 = 0 if seed is None else seed
    try:
        # distinct streams for the three functions
        return [generate(spec, p, s0 * 3 + i) for i, spec in enumerate(specs)]
    except (ValueError, OSError) as exc:
        raise UsageError(str(exc)) from exc


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


class Output:
    def __init__(self, path):
        self.path = path
        self.buf = io.StringIO()

    def json(self, obj):
        self.buf.write(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")

    def csv(self, kind: str, header, rows, footer=()):
        self.buf.write(f"# cornerlab {kind} schema v{SCHEMA_VERSION}\n")
        w = csv.writer(self.buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
        for line in footer:
            self.buf.write(f"# {line}\n")

    def close(self):
        text = self.buf.getvalue()
        if self.path:
            Path(self.path).write_text(text)
        else:
            sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o).__name__}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_count_corners(args, out):
    P, Q = _pair_q(args)
    p = _single_prime(args)
    Pp, Qp = _pair_p(args, P, Q, p)
    f0, f1, f2 = _grids(args, p, args.seed)
    rep = corner_report(f0, f1, f2, Pp, Qp, seed=args.seed, gen=args.gen or "const")
    out.json(rep.to_json())
    if f0.bounded and f1.bounded and f2.bounded and abs(rep.lam) > 1 + TOL.bounded:
        raise InvariantViolation(f"|lambda| = {abs(rep.lam)} exceeds 1")


def cmd_error_scan(args, out):
    P, Q = _pair_q(args)
    _need(args, "primes", "seeds")
    primes, seeds = parse_primes(args.primes), parse_seeds(args.seeds)
    rows, footer = [], []
    for p in primes:
        try:
            Pp, Qp = _pair_p(args, P, Q, p)
        except BadPrime as exc:
            footer.append(f"skipped p={p}: {exc.reason}")
            continue
        best = 0.0
        for s in seeds:
            if args.operator == "two-term":
                f0, f1 = _grids(args, p, s, count=2)
                rep = two_term_operator(f0, f1, Pp if args.axis == "first" else Qp, args.axis)
            else:
                rep = corner_report(*_grids(args, p, s), Pp, Qp)
            scaled = rep.error * np.sqrt(p)
            best = max(best, scaled)
            rows.append((p, s, abs(rep.lam), abs(rep.main), rep.error, float(scaled)))
        footer.append(f"max error*sqrt(p) at p={p}: {float(best)!r}")
    out.csv("error-scan", ["p", "seed", "|lambda|", "|main|", "error", "error*p^(1/2)"], rows, footer)


def cmd_corner_census(args, out):
    P, Q = _pair_q(args)
    p = _single_prime(args)
    Pp, Qp = _pair_p(args, P, Q, p)
    args.gen = args.gen or "set:0.5"
    (A,) = _grids(args, p, args.seed, count=1)
    count, delta, ratio = corner_census(A, Pp, Qp)
    out.json({"p": p, "count": count, "delta": delta, "ratio": ratio, "seed": args.seed, "gen": args.gen})


def cmd_gowers_norm(args, out):
    p = _single_prime(args)
    (f,) = _grids(args, p, args.seed, count=1)
    try:
        dirs = parse_dirs(args.dirs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    res = {"p": p, "dirs": list(dirs), "box_norm": box_norm(f, dirs), "seed": args.seed, "gen": args.gen}
    for coord in ("first", "second"):
        if dirs == u2_dirs(coord):
            res["line_identity"] = u2_line(f, coord)
            if abs(res["line_identity"] - res["box_norm"]) > TOL.identity:
                out.json(res)
                raise InvariantViolation("box norm and line-Fourier U2 disagree")
    out.json(res)


def cmd_inverse_u2(args, out):
    p = _single_prime(args)
    (f,) = _grids(args, p, args.seed, count=1)
    chi, corr = u2_inverse(f, args.coordinate)
    u4 = box_norm(f, u2_dirs(args.coordinate)) ** 4
    out.json({"p": p, "coordinate": args.coordinate, "correlation": corr, "u2_fourth": u4,
              "slack": corr - u4, "eigenfunction": chi.to_json()})
    if f.bounded and corr < u4 - TOL.slack:
        raise InvariantViolation(f"correlation {corr} below U2^4 = {u4}")


def cmd_kernel_table(args, out):
    P, Q = _pair_q(args)
    p = _single_prime(args)
    Pp, Qp = _pair_p(args, P, Q, p)
    K = kernel_table(Pp, Qp)
    if args.dump:
        Path(args.dump).write_bytes(K.dumps())
    sup, nrm = bombieri_check(K)
    out.json({"p": p, "pole_count": K.pole_count, "K00": K.values[0, 0].real,
              "mass": kernel_mass(K), "collisions": collision_count(Pp, Qp),
              "sup": sup, "sup_sqrt_p": nrm, "dump": args.dump})


def cmd_bombieri_scan(args, out):
    P, Q = _pair_q(args)
    _need(args, "primes")
    rows, footer = [], []
    for p in parse_primes(args.primes):
        try:
            Pp, Qp = _pair_p(args, P, Q, p)
        except BadPrime as exc:
            footer.append(f"skipped p={p}: {exc.reason}")
            continue
        sup, nrm = bombieri_check(kernel_table(Pp, Qp))
        rows.append((p, sup, nrm))
    if rows:
        footer.append(f"max sup*sqrt(p): {float(max(r[2] for r in rows))!r}")
    out.csv("bombieri-scan", ["p", "sup", "sup*p^(1/2)"], rows, footer)


def _roth_methods(method: str, p: int) -> list[str]:
    if method != "all":
        return [method]
    ms = ["brute"] if p <= 3 else []
    if p <= 13:
        ms.append("structured")
    ms.append("charsum")
    return ms


def cmd_roth_count(args, out):
    P, Q = _pair_q(args)
    p = _single_prime(args)
    Pp, Qp = _pair_p(args, P, Q, p)
    reports = []
    for m in _roth_methods(args.method, p):
        try:
            reports.append(roth_count(Pp, Qp, m))
        except TooLarge as exc:
            raise UsageError(str(exc)) from exc
    res = [r.to_json() for r in reports]
    if not args.timing:
        for r in res:
            r["seconds"] = None
    out.json({"p": p, "P": str(P), "Q": str(Q), "reports": res})
    if len({r.count for r in reports}) > 1:
        raise InvariantViolation("methods disagree: " + ", ".join(f"{r.method}={r.count}" for r in reports))
    if any(not r.reliable for r in reports):
        raise HealthFailure("charsum residual above tolerance")


VARIETY_HEADER = ["p", "variety", "count", "exponent", "ratio", "method", "residual", "seconds"]


def cmd_variety_scan(args, out):
    P, Q = _pair_q(args)
    _need(args, "primes")
    rows = dimension_scan(P, Q, parse_primes(args.primes), zprime_max=args.zprime_max,
                          allow_dependent=args.allow_dependent)
    body, footer = [], []
    for r in rows:
        if r.variety == "skip":
            footer.append(f"skipped p={r.p}: {r.note}")
            continue
        body.append((r.p, r.variety, r.count, r.exponent, r.ratio, r.method, r.residual,
                     r.seconds if args.timing else None))
    # diagonal lower bound, checked on every counted prime
    counts = {(r.p, r.variety): r.count for r in rows}
    bad = [p for (p, v) in counts if v == "Y" and counts[(p, "Y")] < counts.get((p, "N8"), 0)]
    out.csv("variety-scan", VARIETY_HEADER, body, footer)
    if bad:
        raise InvariantViolation(f"|Y| < N8(0,0) at p in {bad}")
    if any(r.variety == "Y" and r.residual is not None and r.residual >= TOL.charsum_residual and r.method == "charsum"
           for r in rows):
        raise HealthFailure("charsum residual above tolerance")


def cmd_zprime_count(args, out):
    P, Q = _pair_q(args)
    p = _single_prime(args)
    Pp, Qp = _pair_p(args, P, Q, p)
    try:
        rep = zprime_count(Pp, Qp)
    except TooLarge as exc:
        raise UsageError(str(exc)) from exc
    d = rep.to_json()
    if not args.timing:
        d["seconds"] = None
    out.json(d)


def cmd_histogram(args, out):
    P, Q = _pair_q(args)
    p = _single_prime(args)
    Pp, Qp = _pair_p(args, P, Q, p)
    if args.signs:
        try:
            signs = tuple(int(s) for s in args.signs.split(","))
        except ValueError as exc:
            raise UsageError(f"bad --signs: {exc}") from exc
    else:
        signs = HISTOGRAM_SIGNS[args.variety]
    try:
        N = signed_sum_histogram(Pp, Qp, signs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    a, b = np.unravel_index(int(np.argmax(N)), N.shape)
    res = {"p": p, "signs": list(signs), "origin": int(N[0, 0]), "max": int(N.max()),
           "argmax": [int(a), int(b)], "total": int(N.sum())}
    if args.full:
        res["table"] = N.tolist()
    out.json(res)
    defined = len(joint_table(Pp, Qp)[0])
    if res["total"] != defined ** len(signs):
        raise InvariantViolation("histogram total mass mismatch")


def cmd_jacobian_verify(args, out):
    P, Q = _pair_q(args)
    _need(args, "seed")
    ids = IDENTITIES if args.identity == "all" else (args.identity,)
    reps = [verify_identity(i, P, Q, trials=args.trials, seed=args.seed, prime=args.prime) for i in ids]
    out.json({"P": str(P), "Q": str(Q), "reports": [r.to_json() for r in reps]})
    if not all(r.passed for r in reps):
        raise InvariantViolation("identity check failed: " + ", ".join(r.identity for r in reps if not r.passed))


def cmd_nonvanishing(args, out):
    P, Q = _pair_q(args)
    _need(args, "seed")
    ids = WITNESS_IDS if args.expr == "all" else (args.expr,)
    reps = [nonvanishing_witness(i, P, Q, budget=args.budget, seed=args.seed, prime=args.prime) for i in ids]
    ind = independence_summary(P, Q)
    out.json({"P": str(P), "Q": str(Q), "independence": ind, "reports": [r.to_json() for r in reps]})
    if ind["independent"] and any(r.exhausted for r in reps):
        raise InvariantViolation("no witness found for an independent pair")


def _roth_ratios(Pp, Qp):
    r = roth_count_charsum(Pp, Qp)
    rd = roth_count_charsum(Qp, Pp)
    if not (r.reliable and rd.reliable):
        raise HealthFailure("charsum residual above tolerance")
    return r.ratio, rd.ratio


def cmd_chain_validate(args, out):
    P, Q = _pair_q(args)
    _need(args, "primes", "seeds")
    results, worst = [], np.inf
    for p in parse_primes(args.primes):
        Pp, Qp = _pair_p(args, P, Q, p)
        ratio, ratio_dual = _roth_ratios(Pp, Qp)
        for s in parse_seeds(args.seeds):
            fs = _grids(args, p, s)
            checks = validate_inequality_chain(*fs, Pp, Qp, ratio, ratio_dual) + identity_checks(*fs, Pp, Qp)
            worst = min([worst] + [c.slack for c in checks if c.mode == "strict"])
            results.append({"p": p, "seed": s, "roth_ratio": ratio, "roth_ratio_dual": ratio_dual,
                            "checks": [c.to_json() for c in checks], "ok": all(c.ok() for c in checks)})
    out.json({"P": str(P), "Q": str(Q), "min_strict_slack": worst, "runs": results})
    if not all(r["ok"] for r in results):
        raise InvariantViolation("inequality or identity check failed")


def cmd_degree_lowering_trace(args, out):
    P, Q = _pair_q(args)
    p = _single_prime(args)
    Pp, Qp = _pair_p(args, P, Q, p)
    fs = _grids(args, p, args.seed)
    ratio, ratio_dual = _roth_ratios(Pp, Qp)
    tr = degree_lowering_trace(*fs, Pp, Qp, ratio, ratio_dual, demean=not args.raw)
    d = tr.to_json()
    d["strict_ok"] = tr.strict_ok()
    d["min_strict_slack"] = tr.min_strict_slack()
    out.json(d)
    if not tr.strict_ok():
        raise InvariantViolation("a strict step failed")


def cmd_selftest(args, out):
    from .selftest import run_all

    results = run_all(args.only.split(",") if args.only else None)
    for r in results:
        out.buf.write(f"{'PASS' if r.ok else 'FAIL'} {r.name} {r.detail}".rstrip() + "\n")
    failed = [r for r in results if not r.ok]
    out.buf.write(f"{len(results) - len(failed)}/{len(results)} checks passed\n")
    if any(r.kind == "invariant" for r in failed):
        raise InvariantViolation(f"{len(failed)} selftest checks failed")
    if failed:
        raise HealthFailure(f"{len(failed)} numerical-health checks failed")


# ---------------------------------------------------------------------------
# parser


def _add_pair(sp):
    sp.add_argument("--P", help="first rational function in t (default t)")
    sp.add_argument("--Q", help="second rational function in t (default t^2)")
    sp.add_argument("--allow-dependent", action="store_true", help="accept pairs with 1, P, Q dependent")


def _add_gen(sp, triple=True):
    sp.add_argument("--gen", help="generator descriptor: const[:c], char:a,b, unimodular, bounded, set:d, file:path")
    if triple:
        for i in range(3):
            sp.add_argument(f"--gen{i}", help=f"override the generator for f{i}")
    sp.add_argument("--seed", type=int, help="seed (required for random generators)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cornerlab", description="Finite-field corner counting laboratory.")
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file supplying defaults for unset flags")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--timing", action="store_true", help="fill the seconds columns")

    def add(name, fn, help_text, pair=True):
        sp = sub.add_parser(name, help=help_text, parents=[common])
        sp.set_defaults(func=fn)
        if pair:
            _add_pair(sp)
        return sp

    sp = add("count-corners", cmd_count_corners, "counting operator, main term and error")
    sp.add_argument("--p", type=int)
    _add_gen(sp)

    sp = add("error-scan", cmd_error_scan, "error across primes and seeds (CSV)")
    sp.add_argument("--primes")
    sp.add_argument("--seeds")
    sp.add_argument("--operator", choices=["corner", "two-term"], default="corner")
    sp.add_argument("--axis", choices=["first", "second"], default="first",
                    help="two-term: shift f1 by P along x1 (first) or by Q along x2 (second)")
    _add_gen(sp)

    sp = add("corner-census", cmd_corner_census, "exact corner count in a random set")
    sp.add_argument("--p", type=int)
    _add_gen(sp, triple=False)

    sp = add("gowers-norm", cmd_gowers_norm, "box norm over a list of subgroups", pair=False)
    sp.add_argument("--p", type=int)
    sp.add_argument("--dirs", default="0xF,0xF", help="comma-separated subgroups among 0xF, Fx0, FxF")
    _add_gen(sp, triple=False)

    sp = add("inverse-u2", cmd_inverse_u2, "extract a correlating eigenfunction", pair=False)
    sp.add_argument("--p", type=int)
    sp.add_argument("--coordinate", choices=["first", "second"], default="second")
    _add_gen(sp, triple=False)

    sp = add("kernel-table", cmd_kernel_table, "exponential-sum kernel summary and optional binary dump")
    sp.add_argument("--p", type=int)
    sp.add_argument("--dump", help="write the binary table to this path")

    sp = add("bombieri-scan", cmd_bombieri_scan, "sup |K| * sqrt(p) across primes (CSV)")
    sp.add_argument("--primes")

    sp = add("roth-count", cmd_roth_count, "point count of the Roth variety")
    sp.add_argument("--p", type=int)
    sp.add_argument("--method", choices=["brute", "structured", "charsum", "all"], default="charsum")

    sp = add("variety-scan", cmd_variety_scan, "dimension ratios across primes (CSV)")
    sp.add_argument("--primes")
    sp.add_argument("--zprime-max", type=int, default=31)

    sp = add("zprime-count", cmd_zprime_count, "meet-in-the-middle count of Z'")
    sp.add_argument("--p", type=int)

    sp = add("histogram", cmd_histogram, "signed-sum histogram of (P, Q) values")
    sp.add_argument("--p", type=int)
    sp.add_argument("--variety", choices=sorted(HISTOGRAM_SIGNS), default="X")
    sp.add_argument("--signs", help="explicit comma-separated +1/-1 list")
    sp.add_argument("--full", action="store_true", help="include the whole table")

    sp = add("jacobian-verify", cmd_jacobian_verify, "randomized determinant identity checks")
    sp.add_argument("--identity", choices=list(IDENTITIES) + ["all"], default="prop_jac")
    sp.add_argument("--trials", type=int, default=200)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--prime", type=int, default=MERSENNE61)

    sp = add("nonvanishing", cmd_nonvanishing, "search for points where an expression is nonzero")
    sp.add_argument("--expr", choices=list(WITNESS_IDS) + ["all"], default="all")
    sp.add_argument("--budget", type=int, default=64)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--prime", type=int, default=MERSENNE61)

    sp = add("chain-validate", cmd_chain_validate, "inequality chain and identity slacks")
    sp.add_argument("--primes")
    sp.add_argument("--seeds")
    _add_gen(sp)

    sp = add("degree-lowering-trace", cmd_degree_lowering_trace, "executable degree-lowering pipeline")
    sp.add_argument("--p", type=int)
    sp.add_argument("--raw", action="store_true", help="skip the de-meaning step")
    _add_gen(sp)

    sp = add("selftest", cmd_selftest, "cross-method and invariant suite", pair=False)
    sp.add_argument("--only", help="comma-separated suite names")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    out = Output(None)
    code = EXIT_OK
    try:
        _apply_config(args)
        out.path = args.out
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegreeLossWarning)
            args.func(args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BadPrime as exc:
        print(f"bad prime {exc.p}: {exc.reason}", file=sys.stderr)
        return EXIT_BADPRIME
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        code = EXIT_INVARIANT
    except HealthFailure as exc:
        print(f"numerical health: {exc}", file=sys.stderr)
        code = EXIT_HEALTH
    out.close()
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Fast cross-method and invariant suite behind ``cornerlab selftest``.

Each check returns a Result; ``kind`` separates invariant violations from
numerical-health failures so the CLI can pick the exit code.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass

import numpy as np

from .config import MERSENNE61, TOL
from .counting import (corner_census, corner_operator, corner_operator_direct, degree_lowering_trace,
                       identity_checks, two_term_operator, validate_inequality_chain)
from .gowers import HORIZONTAL, VERTICAL, FULL, box_norm, u2_dirs, u2_inverse, u2_line
from .grid import dft2, fourier_aggregate, generate, idft2, norm
from .jacobian import IDENTITIES, nonvanishing_witness, verify_identity
from .kernel import bombieri_check, collision_count, kernel_mass, kernel_table
from .ratfun import DegreeLossWarning, evaluate, parse_ratfun, reduce_mod_p, reduce_pair_mod_p
from .varieties import (EIGHT_SIGNS, X_SIGNS, roth_count_brute, roth_count_charsum, roth_count_structured,
                        signed_sum_histogram, zprime_count, zprime_count_direct)


@dataclass
class Result:
    name: str
    ok: bool
    detail: str = ""
    kind: str = "invariant"  # invariant | health


GENERATORS = ("const", "char:1,2", "unimodular", "bounded", "set:0.5")


def _pair(P="t", Q="t^2", p=7):
    return reduce_pair_mod_p(parse_ratfun(P), parse_ratfun(Q), p)


def check_ratfun() -> list[Result]:
    out = []
    for text in ["t^2/(t^7-5*t^3)", "t^17+1/(t^13+19)", "(t^2+1)/(3*t-6)"]:
        f = parse_ratfun(text)
        out.append(Result(f"roundtrip {text}", parse_ratfun(str(f)) == f))
    rng = random.Random(0)
    f, g = parse_ratfun("t^2/(t-1)"), parse_ratfun("1/(t^3+2)")
    lhs = reduce_mod_p((f * g).derivative(), MERSENNE61)
    rhs = reduce_mod_p(f.derivative() * g + f * g.derivative(), MERSENNE61)
    bad = 0
    for _ in range(50):
        y = rng.randrange(MERSENNE61)
        if evaluate(lhs, y) != evaluate(rhs, y):
            bad += 1
    out.append(Result("product rule", bad == 0, f"{bad} mismatches"))
    return out


def check_grid(primes=(5, 7, 11, 13)) -> list[Result]:
    worst = {"parseval": 0.0, "inversion": 0.0, "aggregate": np.inf, "nesting": np.inf}
    for p in primes:
        for gen in GENERATORS:
            for seed in range(2):
                f = generate(gen, p, seed)
                fh = dft2(f)
                worst["parseval"] = max(worst["parseval"], abs(norm(f, "L", 2) - norm(fh, "l", 2)))
                worst["inversion"] = max(worst["inversion"], float(np.abs(idft2(fh).values - f.values).max()))
                n4 = norm(f, "L", 4) ** 2
                for kind in ("F1", "F2"):
                    worst["aggregate"] = min(worst["aggregate"], n4 - fourier_aggregate(f, kind).l2())
                worst["nesting"] = min(worst["nesting"], norm(f, "L", 4) - norm(f, "L", 2))
    return [
        Result("parseval", worst["parseval"] <= TOL.identity, f"{worst['parseval']:.3g}"),
        Result("inversion", worst["inversion"] <= TOL.identity, f"{worst['inversion']:.3g}"),
        Result("aggregate vs L4", worst["aggregate"] >= -TOL.slack, f"min slack {worst['aggregate']:.3g}"),
        Result("L2 <= L4", worst["nesting"] >= -TOL.slack, f"min slack {worst['nesting']:.3g}"),
    ]


def check_gowers(primes=(5, 7, 11, 13)) -> list[Result]:
    line_gap, mono, inv = 0.0, np.inf, np.inf
    for p in primes:
        for gen in GENERATORS:
            f = generate(gen, p, 1)
            for coord in ("first", "second"):
                u = box_norm(f, u2_dirs(coord))
                line_gap = max(line_gap, abs(u - u2_line(f, coord)))
                _, corr = u2_inverse(f, coord)
                inv = min(inv, corr - u**4)
            for H in (VERTICAL, HORIZONTAL):
                # shrinking a subgroup never lowers the norm
                hh, hf, ff = box_norm(f, (H, H)), box_norm(f, (H, FULL)), box_norm(f, (FULL, FULL))
                mono = min(mono, hh - hf, hf - ff)
    return [
        Result("U2 box vs line identity", line_gap <= TOL.identity, f"{line_gap:.3g}"),
        Result("box-norm monotonicity", mono >= -TOL.slack, f"min slack {mono:.3g}"),
        Result("U2 inverse correlation", inv >= -TOL.slack, f"min slack {inv:.3g}"),
    ]


def check_kernel(primes=(5, 7, 11)) -> list[Result]:
    out = []
    for P, Q in [("t", "t^2"), ("1/t", "t^2"), ("t", "t^3")]:
        for p in primes:
            Pp, Qp = _pair(P, Q, p)
            K = kernel_table(Pp, Qp)
            neg = (-np.arange(p)) % p
            sym = float(np.abs(K.values.conj() - K.values[np.ix_(neg, neg)]).max())
            mass = abs(kernel_mass(K) - collision_count(Pp, Qp))
            ok = sym <= 1e-12 and mass <= 1e-8 and K.values[0, 0] == (p - K.pole_count) / p
            out.append(Result(f"kernel {P},{Q} p={p}", ok, f"sym {sym:.3g} mass {mass:.3g}"))
    for p in (11, 31):
        _, nrm = bombieri_check(kernel_table(*_pair("t", "t^2", p)))
        out.append(Result(f"gauss sum p={p}", abs(nrm - 1) <= 1e-9, f"{nrm!r}"))
    return out


def check_counting(primes=(5, 7)) -> list[Result]:
    out = []
    for p in primes:
        for P, Q in [("t", "t^2"), ("1/t", "t^2")]:
            Pp, Qp = _pair(P, Q, p)
            fs = [generate("bounded", p, s) for s in range(3)]
            fast = corner_operator(*fs, Pp, Qp)
            slow = corner_operator_direct(*fs, Pp, Qp)
            out.append(Result(f"operator paths {P},{Q} p={p}", abs(fast - slow) <= TOL.identity))
            bad = [c.name for c in identity_checks(*fs, Pp, Qp) if not c.ok()]
            out.append(Result(f"duality/split {P},{Q} p={p}", not bad, ",".join(bad)))
        lin = reduce_mod_p(parse_ratfun("t"), p)
        rep = two_term_operator(generate("bounded", p, 4), generate("bounded", p, 5), lin)
        out.append(Result(f"two-term exact p={p}", rep.error <= TOL.identity, f"{rep.error:.3g}"))
        Pp, Qp = _pair("t", "t^2", p)
        count, _, _ = corner_census(np.ones((p, p), bool), Pp, Qp)
        out.append(Result(f"census full p={p}", count == p**3))
        ratio = roth_count_charsum(Pp, Qp).ratio
        worst = np.inf
        for s in range(3):
            fs = [generate("bounded", p, 3 * s + i) for i in range(3)]
            worst = min(worst, min(c.slack for c in validate_inequality_chain(*fs, Pp, Qp, ratio)))
        out.append(Result(f"inequality chain p={p}", worst >= -TOL.slack, f"min slack {worst:.3g}"))
        tr = degree_lowering_trace(*(generate("unimodular", p, s) for s in range(3)), Pp, Qp, ratio)
        out.append(Result(f"degree lowering p={p}", tr.strict_ok(), f"min slack {tr.min_strict_slack():.3g}"))
    return out


def check_varieties() -> list[Result]:
    out = []
    P2, Q2 = _pair("t", "t^2", 2)
    b, s, c = roth_count_brute(P2, Q2), roth_count_structured(P2, Q2), roth_count_charsum(P2, Q2)
    out.append(Result("roth p=2 brute=structured=charsum", b == s == c.count, f"{b} {s} {c.count}"))
    for p in (5, 7):
        Pp, Qp = _pair("t", "t^2", p)
        s, c = roth_count_structured(Pp, Qp), roth_count_charsum(Pp, Qp, exact_fallback=False)
        out.append(Result(f"roth p={p} structured=charsum", s == c.count, f"{s} {c.count}"))
        out.append(Result(f"charsum residual p={p}", c.residual < TOL.charsum_residual,
                          f"{c.residual:.3g}", kind="health"))
        n8 = int(signed_sum_histogram(Pp, Qp, EIGHT_SIGNS)[0, 0])
        out.append(Result(f"diagonal bound p={p}", c.count >= n8, f"{c.count} >= {n8}"))
        H = signed_sum_histogram(Pp, Qp, X_SIGNS)
        out.append(Result(f"histogram mass p={p}", int(H.sum()) == p**5))
    Pp, Qp = _pair("t", "t^2", 3)
    out.append(Result("zprime join = direct p=3",
                      zprime_count(Pp, Qp).count == zprime_count_direct(Pp, Qp)))
    return out


def check_jacobian() -> list[Result]:
    out = []
    pairs = [("t", "t^2"), ("t", "t^3"), ("t^3", "t^3-t^2+t"), ("t^2/(t^7-5*t^3)", "t^17+1/(t^13+19)")]
    for P, Q in pairs:
        Pq, Qq = parse_ratfun(P), parse_ratfun(Q)
        for ident in IDENTITIES:
            rep = verify_identity(ident, Pq, Qq, trials=30, seed=1)
            out.append(Result(f"{ident} {P},{Q}", rep.passed, f"{rep.failures} failures"))
        for ident in ("D", "J_X", "J_W"):
            rep = nonvanishing_witness(ident, Pq, Qq, seed=1)
            out.append(Result(f"witness {ident} {P},{Q}", rep.witness is not None))
    rep = nonvanishing_witness("pair_wronskian", parse_ratfun("t"), parse_ratfun("3*t+5"), seed=1)
    out.append(Result("wronskian exhausted for dependent pair", rep.exhausted))
    return out


SUITES = {
    "ratfun": check_ratfun,
    "grid": check_grid,
    "gowers": check_gowers,
    "kernel": check_kernel,
    "counting": check_counting,
    "varieties": check_varieties,
    "jacobian": check_jacobian,
}


def run_all(only=None) -> list[Result]:
    results = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegreeLossWarning)
        for name, fn in SUITES.items():
            if only and name not in only:
                continue
            for r in fn():
                r.name = f"{name}: {r.name}"
                results.append(r)
    return results

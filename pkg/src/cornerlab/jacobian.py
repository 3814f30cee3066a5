"""Randomized identity testing for the Jacobian determinant and related
non-vanishing facts, over a fixed 61-bit prime field."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .config import MERSENNE61
from .ratfun import RatFunQ, evaluate, is_linearly_independent_with_one, reduce_mod_p

IDENTITIES = ("prop_jac", "jzprime_factorization", "s_log_derivative", "antisymmetry")
WITNESS_IDS = ("D", "J_X", "J_W", "pair_wronskian")


class Degenerate(Exception):
    """A sampled point hits a pole or a vanishing denominator; resample."""


class PairField:
    """P, Q and the derivatives needed downstream, reduced mod a large prime."""

    def __init__(self, P: RatFunQ, Q: RatFunQ, prime: int = MERSENNE61):
        self.prime = prime
        dP, dQ = P.derivative(), Q.derivative()
        R = dP / dQ if not dQ.is_constant or dQ.num else None
        self.P = reduce_mod_p(P, prime)
        self.Q = reduce_mod_p(Q, prime)
        self.dP = reduce_mod_p(dP, prime)
        self.dQ = reduce_mod_p(dQ, prime)
        self.ddP = reduce_mod_p(dP.derivative(), prime)
        self.ddQ = reduce_mod_p(dQ.derivative(), prime)
        # R = P'/Q' and its derivative, by the quotient rule on R itself
        self.R = reduce_mod_p(R, prime) if R is not None else None
        self.dR = reduce_mod_p(R.derivative(), prime) if self.R is not None else None

    def _ev(self, f, y):
        if f is None:
            raise Degenerate("function undefined")
        v = evaluate(f, y)
        if v is None:
            raise Degenerate(f"pole at {y}")
        return v

    def dp(self, y):
        return self._ev(self.dP, y)

    def dq(self, y):
        return self._ev(self.dQ, y)

    def r(self, y):
        return self._ev(self.R, y)

    def dr(self, y):
        return self._ev(self.dR, y)

    def s(self, y):
        """P''/P' - Q''/Q' (the log-derivative form)."""
        q = self.prime
        a, b = self.dp(y), self.dq(y)
        if a == 0 or b == 0:
            raise Degenerate("zero first derivative")
        return (self._ev(self.ddP, y) * pow(a, -1, q) - self._ev(self.ddQ, y) * pow(b, -1, q)) % q


def det_mod(M, q: int) -> int:
    """Determinant by Gaussian elimination over F_q."""
    A = [[x % q for x in row] for row in M]
    n = len(A)
    det = 1
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c]), None)
        if piv is None:
            return 0
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            det = -det
        det = det * A[c][c] % q
        inv = pow(A[c][c], -1, q)
        for r in range(c + 1, n):
            if A[r][c]:
                f = A[r][c] * inv % q
                A[r] = [(x - f * y) % q for x, y in zip(A[r], A[c])]
    return det % q


def jacobian_matrix_10(F: PairField, y) -> list[list[int]]:
    """Partial derivatives of the ten defining equations in y1..y10 (rows in equation order)."""
    if len(y) < 10:
        raise ValueError("need ten coordinates")
    dp = {i: F.dp(y[i - 1]) for i in range(1, 11)}
    dq = {i: F.dq(y[i - 1]) for i in range(1, 11)}
    M = [[0] * 10 for _ in range(10)]

    def put(r, c, v):
        M[r - 1][c - 1] = v

    put(1, 1, dp[1]); put(1, 3, -dp[3]); put(1, 9, -dp[9])
    put(2, 2, dp[2]); put(2, 4, -dp[4]); put(2, 10, -dp[10])
    put(3, 5, dp[5]); put(3, 7, -dp[7])
    put(4, 6, dp[6]); put(4, 8, -dp[8])
    put(5, 1, dq[1]); put(5, 2, -dq[2]); put(5, 9, -dq[9]); put(5, 10, dq[10])
    put(6, 3, dq[3]); put(6, 7, -dq[7])
    put(7, 4, dq[4]); put(7, 8, -dq[8])
    put(8, 5, dq[5]); put(8, 6, -dq[6])
    put(9, 9, dp[9]); put(9, 10, -dp[10])
    put(10, 9, dq[9]); put(10, 10, -dq[10])
    return M


def jacobian_det_10(F: PairField, y) -> int:
    return det_mod(jacobian_matrix_10(F, y), F.prime)


def pair_form(F: PairField, u, v) -> int:
    """-P'(u) Q'(v) + Q'(u) P'(v)."""
    return (-F.dp(u) * F.dq(v) + F.dq(u) * F.dp(v)) % F.prime


def jacobian_closed_form(F: PairField, y) -> int:
    q = F.prime
    a = [None] + [F.dp(v) for v in y[:10]]
    b = [None] + [F.dq(v) for v in y[:10]]
    first = (a[1] * b[2] * b[3] * a[4] * b[5] * a[6] * a[7] * b[8]
             - b[1] * a[2] * a[3] * b[4] * a[5] * b[6] * b[7] * a[8])
    return first * pair_form(F, y[8], y[9]) % q


def jzprime(F: PairField, y1, y4, y6, y7) -> int:
    """3x3 Jacobian of the Z' system in the columns y1, y4, y6."""
    r = {k: F.r(v) for k, v in (("1", y1), ("4", y4), ("6", y6), ("7", y7))}
    dr = {k: F.dr(v) for k, v in (("1", y1), ("4", y4), ("6", y6))}
    row3 = [dr["1"] * r["4"] * r["6"] * r["7"],
            r["1"] * dr["4"] * r["6"] * r["7"],
            r["1"] * r["4"] * dr["6"] * r["7"]]
    M = [[F.dp(y1), F.dp(y4), F.dp(y6)], [F.dq(y1), F.dq(y4), F.dq(y6)], row3]
    return det_mod(M, F.prime)


def d_function(F: PairField, y1, y4, y6) -> int:
    M = [[F.dp(y1), F.dp(y4), F.dp(y6)],
         [F.dq(y1), F.dq(y4), F.dq(y6)],
         [F.s(y1), F.s(y4), F.s(y6)]]
    return det_mod(M, F.prime)


@dataclass
class IdentityReport:
    identity: str
    prime: int
    trials: int
    failures: int = 0
    resamples: int = 0
    witness: list | None = None
    mismatches: list = field(default_factory=list)
    exhausted: bool = False

    @property
    def passed(self) -> bool:
        return self.failures == 0 and not self.exhausted

    def to_json(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _sampler(seed: int, prime: int):
    rng = np.random.default_rng(seed)

    def draw(k):
        return [int(v) for v in rng.integers(0, prime, size=k, dtype=np.int64)]

    return draw


def _sides(ident: str, F: PairField, y) -> tuple[int, int]:
    q = F.prime
    if ident == "prop_jac":
        return jacobian_det_10(F, y), jacobian_closed_form(F, y)
    if ident == "jzprime_factorization":
        y1, y4, y6, y7 = y[:4]
        rhs = F.r(y1) * F.r(y4) % q * F.r(y6) % q * F.r(y7) % q * d_function(F, y1, y4, y6) % q
        return jzprime(F, y1, y4, y6, y7), rhs
    if ident == "s_log_derivative":
        r = F.r(y[0])
        if r == 0:
            raise Degenerate("R vanishes")
        return F.dr(y[0]) * pow(r, -1, q) % q, F.s(y[0])
    if ident == "antisymmetry":
        swapped = list(y)
        swapped[8], swapped[9] = y[9], y[8]
        halves = list(y)
        for i, j in ((0, 1), (3, 2), (5, 4), (6, 7)):
            halves[i], halves[j] = y[j], y[i]
        base = jacobian_closed_form(F, y)
        a = (jacobian_closed_form(F, swapped) + base) % q
        b = (jacobian_closed_form(F, halves) + base) % q
        return (a, b), (0, 0)
    raise ValueError(f"unknown identity {ident!r}")


_ARITY = {"prop_jac": 10, "jzprime_factorization": 4, "s_log_derivative": 1, "antisymmetry": 10}


def verify_identity(ident: str, P: RatFunQ, Q: RatFunQ, trials: int = 200, seed: int = 0,
                    prime: int = MERSENNE61, max_resamples: int | None = None) -> IdentityReport:
    """Compare both sides of an identity at ``trials`` random non-degenerate points."""
    if ident not in _ARITY:
        raise ValueError(f"unknown identity {ident!r}; choose from {IDENTITIES}")
    F = PairField(P, Q, prime)
    draw = _sampler(seed, prime)
    rep = IdentityReport(ident, prime, trials)
    budget = 20 * trials + 100 if max_resamples is None else max_resamples
    done = 0
    while done < trials:
        y = draw(_ARITY[ident])
        try:
            lhs, rhs = _sides(ident, F, y)
        except Degenerate:
            rep.resamples += 1
            if rep.resamples > budget:
                rep.exhausted = True
                break
            continue
        done += 1
        if lhs != rhs:
            rep.failures += 1
            if len(rep.mismatches) < 5:
                rep.mismatches.append(y)
    return rep


def _witness_value(ident: str, F: PairField, y) -> int:
    if ident == "D":
        return d_function(F, *y[:3])
    return pair_form(F, y[0], y[1])


def nonvanishing_witness(ident: str, P: RatFunQ, Q: RatFunQ, budget: int = 64, seed: int = 0,
                         prime: int = MERSENNE61) -> IdentityReport:
    """Search for a point where the expression is nonzero.

    J_X and J_W are the same two-variable form as pair_wronskian, evaluated at
    (y7, y8) and (y15, y16) respectively.
    """
    if ident not in WITNESS_IDS:
        raise ValueError(f"unknown expression {ident!r}; choose from {WITNESS_IDS}")
    F = PairField(P, Q, prime)
    draw = _sampler(seed, prime)
    rep = IdentityReport(ident, prime, 0)
    arity = 3 if ident == "D" else 2
    for _ in range(budget):
        y = draw(arity)
        rep.trials += 1
        try:
            v = _witness_value(ident, F, y)
        except Degenerate:
            rep.resamples += 1
            continue
        if v != 0:
            rep.witness = y
            return rep
    rep.exhausted = True
    return rep


def independence_summary(P: RatFunQ, Q: RatFunQ) -> dict:
    ind = is_linearly_independent_with_one(P, Q)
    return {"independent": bool(ind), "relation": None if ind.relation is None else [str(c) for c in ind.relation]}

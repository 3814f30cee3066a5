"""Point counts for the 16-variable Roth system and its auxiliary varieties.

Every variable ranges over the points where both P and Q are defined.

Roth system, with P_i = P(y_i), Q_i = Q(y_i):

    P1 - P3 - P9 + P11 = 0          Q1 - Q2 - Q9 + Q10 = 0
    P2 - P4 - P10 + P12 = 0         Q3 - Q7 - Q11 + Q15 = 0
    P5 - P7 - P13 + P15 = 0         Q4 - Q8 - Q12 + Q16 = 0
    P6 - P8 - P14 + P16 = 0         Q5 - Q6 - Q13 + Q14 = 0
    P9 - P10 - P11 + P12 - P13 + P14 + P15 - P16 = 0  (and the same with Q)
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import TOL
from .kernel import KernelTable, delta_kernel, joint_table, kernel_table
from .ratfun import (
    BadPrime,
    DegreeLossWarning,
    RatFunFp,
    RatFunQ,
    derivative,
    is_prime,
    reduce_pair_mod_p,
)

# sign patterns for the summed two-equation systems
EIGHT_SIGNS = (1, -1, -1, 1, -1, 1, 1, -1)
X_SIGNS = (-1, -1, -1, 1, -1)
W_SIGNS = (-1, 1, -1, 1, 1, -1)

EXPONENTS = {"Y": 6, "Zprime": 5, "X": 3, "W": 4, "N8": 6}


class TooLarge(ValueError):
    pass


@dataclass
class VarietyCountReport:
    variety: str
    p: int
    count: int
    exponent: int
    method: str
    residual: float | None = None
    seconds: float | None = None
    reliable: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.count / self.p**self.exponent

    def to_json(self) -> dict:
        d = asdict(self)
        d["ratio"] = self.ratio
        return d


# ---------------------------------------------------------------------------
# brute force


def roth_count_brute(P: RatFunFp, Q: RatFunFp) -> int:
    """Evaluate all ten equations on every 16-tuple (p <= 3).

    The tuple is split into (y1..y8) and (y9..y16) blocks so each equation is
    a difference of a left-block and a right-block quantity, checked on the
    full product grid.
    """
    p = P.p
    if p > 3:
        raise TooLarge(f"brute force limited to p <= 3, got {p}")
    _, pv, qv = joint_table(P, Q)
    n = len(pv)
    idx = np.indices((n,) * 8).reshape(8, -1)
    Pl, Ql = pv[idx], qv[idx]  # rows: variable 1..8 of the block
    # left-block quantities of eqs 1-8, in order
    left = np.stack([
        Pl[0] - Pl[2], Pl[1] - Pl[3], Pl[4] - Pl[6], Pl[5] - Pl[7],
        Ql[0] - Ql[1], Ql[2] - Ql[6], Ql[3] - Ql[7], Ql[4] - Ql[5],
    ]) % p
    # right block is y9..y16, same local indexing
    Pr, Qr = Pl, Ql
    right = np.stack([
        Pr[0] - Pr[2], Pr[1] - Pr[3], Pr[4] - Pr[6], Pr[5] - Pr[7],
        Qr[0] - Qr[1], Qr[2] - Qr[6], Qr[3] - Qr[7], Qr[4] - Qr[5],
    ]) % p
    s = np.array(EIGHT_SIGNS)[:, None]
    ok_right = ((s * Pr).sum(axis=0) % p == 0) & ((s * Qr).sum(axis=0) % p == 0)
    right = right[:, ok_right]
    if right.shape[1] == 0:
        return 0
    total = 0
    chunk = max(1, 2_000_000 // right.shape[1])
    for start in range(0, left.shape[1], chunk):
        L = left[:, start:start + chunk]
        hit = np.ones((L.shape[1], right.shape[1]), bool)
        for e in range(8):
            hit &= L[e][:, None] == right[e][None, :]
        total += int(hit.sum())
    return total


# ---------------------------------------------------------------------------
# structured count via transfer matrices


def _value_tables(P: RatFunFp, Q: RatFunFp):
    p = P.p
    pv, pd = P.table()
    qv, qd = Q.table()
    ok = pd & qd
    return p, pv.astype(np.int64), qv.astype(np.int64), ok


def _edge_matrices(vals: np.ndarray, ok: np.ndarray, p: int) -> np.ndarray:
    """M[c, u, v] = [f(u) - f(v) = c], zero at undefined u or v."""
    diff = (vals[:, None] - vals[None, :]) % p
    okm = ok[:, None] & ok[None, :]
    M = np.zeros((p, p, p), np.int64)
    for c in range(p):
        M[c] = (diff == c) & okm
    return M


def _chain(mats: list[np.ndarray]) -> np.ndarray:
    """Products mats[0][k0] @ mats[1][k1] @ ... for every key combination.

    The result is indexed by the mixed-radix key (k0 most significant).
    """
    out = mats[0]
    for M in mats[1:]:
        out = np.einsum("aij,bjk->abik", out, M).reshape(-1, *M.shape[1:])
    return out


def roth_count_structured(P: RatFunFp, Q: RatFunFp, max_p: int = 13) -> int:
    """Count by enumerating the right block and evaluating the left block as a cycle.

    y1..y8 form the 8-cycle y1 -P- y3 -Q- y7 -P- y5 -Q- y6 -P- y8 -Q- y4 -P- y2 -Q- y1
    whose edge offsets c1..c8 are fixed by the right block:

        c1 = P9 - P11   (P1 - P3)     c5 = P14 - P16  (P6 - P8)
        c2 = Q11 - Q15  (Q3 - Q7)     c6 = Q16 - Q12  (Q8 - Q4)
        c3 = P15 - P13  (P7 - P5)     c7 = P12 - P10  (P4 - P2)
        c4 = Q13 - Q14  (Q5 - Q6)     c8 = Q10 - Q9   (Q2 - Q1)

    The number of left solutions is trace(M1 ... M8) with M_k[u, v] = [f(u) - f(v) = c_k].
    The trace is split as <M1..M4, (M5..M8)^T> so the two half products are
    tabulated once per half-key.
    """
    p, pv, qv, ok = _value_tables(P, Q)
    if p > max_p:
        raise TooLarge(f"structured count limited to p <= {max_p}, got {p}")
    MP = _edge_matrices(pv, ok, p)
    MQ = _edge_matrices(qv, ok, p)
    front = _chain([MP, MQ, MP, MQ])  # key (c1, c2, c3, c4)
    back = _chain([MP, MQ, MP, MQ])  # key (c5, c6, c7, c8)
    front = front.reshape(p**4, p * p)
    back_t = np.transpose(back, (0, 2, 1)).reshape(p**4, p * p)

    # multiplicity of each (P, Q) value pair for solving the last right variable
    ys = np.nonzero(ok)[0]
    mult = np.zeros((p, p), np.int64)
    np.add.at(mult, (pv[ys], qv[ys]), 1)
    Pv, Qv = pv[ys], qv[ys]
    n = len(ys)

    total = 0
    # vectorize over (y11, .., y15) for each (y9, y10)
    grid = np.indices((n,) * 5).reshape(5, -1)
    P11, P12, P13, P14, P15 = (Pv[g] for g in grid)
    Q11, Q12, Q13, Q14, Q15 = (Qv[g] for g in grid)
    base_P = -P11 + P12 - P13 + P14 + P15
    base_Q = -Q11 + Q12 - Q13 + Q14 + Q15
    for i9 in range(n):
        for i10 in range(n):
            P9, P10, Q9, Q10 = Pv[i9], Pv[i10], Qv[i9], Qv[i10]
            P16 = (P9 - P10 + base_P) % p
            Q16 = (Q9 - Q10 + base_Q) % p
            w = mult[P16, Q16]
            sel = w > 0
            if not sel.any():
                continue
            c1 = (P9 - P11[sel]) % p
            c2 = (Q11[sel] - Q15[sel]) % p
            c3 = (P15[sel] - P13[sel]) % p
            c4 = (Q13[sel] - Q14[sel]) % p
            c5 = (P14[sel] - P16[sel]) % p
            c6 = (Q16[sel] - Q12[sel]) % p
            c7 = (P12[sel] - P10) % p
            c8 = (Q10 - Q9) % p + np.zeros_like(c1)
            k1 = ((c1 * p + c2) * p + c3) * p + c4
            k2 = ((c5 * p + c6) * p + c7) * p + c8
            pair = k1 * p**4 + k2
            uniq, inv = np.unique(pair, return_inverse=True)
            # weight each right tuple by the number of y16 completing it
            weights = np.zeros(len(uniq), np.int64)
            np.add.at(weights, inv, w[sel])
            u1, u2 = uniq // p**4, uniq % p**4
            traces = np.einsum("ij,ij->i", front[u1], back_t[u2])
            total += int((weights * traces).sum())
    return total


# ---------------------------------------------------------------------------
# character-sum contraction


def charsum_value(K: KernelTable) -> complex:
    """S = sum_h ||B_h||_F^2 in floating point.

    G_h = delta_kernel(K, h), A_h = G_h^T conj(G_h), B_h = A_h^T conj(A_h).
    conj(B_h) is formed by its own product conj(A_h)^T A_h, so the imaginary
    part of the result measures round-off rather than being zero by construction.
    """
    p = K.p
    re = np.empty(p * p)
    im = np.empty(p * p)
    for h1 in range(p):
        for h2 in range(p):
            G = delta_kernel(K, (h1, h2))
            Gc = G.conj()
            A = G.T @ Gc
            Ac = Gc.T @ G
            B = A.T @ Ac
            Bc = Ac.T @ A
            term = np.sum(B * Bc)
            re[h1 * p + h2] = term.real
            im[h1 * p + h2] = term.imag
    return complex(math.fsum(re), math.fsum(im))


def _primes_one_mod(p: int, count: int, bound: int):
    q = bound - (bound - 1) % p  # largest value <= bound with q = 1 mod p
    out = []
    while len(out) < count and q > p:
        if is_prime(q):
            out.append(q)
        q -= p
    if len(out) < count:
        raise ArithmeticError(f"not enough primes = 1 mod {p} below {bound}")
    return out


def _root_of_unity(p: int, q: int) -> int:
    e = (q - 1) // p
    for g in range(2, q):
        w = pow(g, e, q)
        if w != 1:
            return w
    raise ArithmeticError("no root of unity found")


def _mat_mod(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    # entries < q and q^2 * n < 2^53, so float64 products are exact
    return np.fmod(a @ b, q)


def _charsum_mod(P: RatFunFp, Q: RatFunFp, q: int) -> int:
    """p^6 S reduced mod q, computed with a p-th root of unity in F_q."""
    p = P.p
    _, pv, qv = joint_table(P, Q)
    w = _root_of_unity(p, q)
    wpow = np.array([pow(w, k, q) for k in range(p)], dtype=np.float64)
    a = np.arange(p, dtype=np.int64)
    Am = wpow[np.outer(a, pv) % p]
    Bm = wpow[np.outer(a, qv) % p]
    pK = _mat_mod(Am, Bm.T, q)  # p * K(a, b) with omega in place of e_p(1)
    neg = (-a) % p
    pKbar = pK[np.ix_(neg, neg)]  # conjugation: omega -> omega^-1
    acc = 0
    for h1 in range(p):
        for h2 in range(p):
            # G(n, m) = K(n, m) conj K(n - h1, m + h2)
            G = np.fmod(pK * np.roll(pKbar, (h1, -h2), axis=(0, 1)), q)
            Gb = np.fmod(pKbar * np.roll(pK, (h1, -h2), axis=(0, 1)), q)
            A = _mat_mod(G.T, Gb, q)
            Ab = _mat_mod(Gb.T, G, q)
            B = _mat_mod(A.T, Ab, q)
            Bb = _mat_mod(Ab.T, A, q)
            acc = (acc + int(np.fmod(B * Bb, q).sum()) % q) % q
    # the integer tables carry p^16; the count is p^6 S = (that sum) / p^10
    return acc * pow(p, -10, q) % q


def charsum_exact(P: RatFunFp, Q: RatFunFp) -> int:
    """Exact p^6 S by evaluating the contraction in several F_q and combining by CRT."""
    p = P.p
    n = len(joint_table(P, Q)[0])
    limit = n**16 + 1  # the count is at most n^16
    bound = min(1 << 23, int(math.isqrt((1 << 53) // max(p, 2))))
    primes = []
    modulus = 1
    while modulus <= limit:
        primes = _primes_one_mod(p, len(primes) + 1, bound)
        modulus = math.prod(primes)
    residues = [_charsum_mod(P, Q, q) for q in primes]
    x, m = 0, 1
    for r, q in zip(residues, primes):
        t = (r - x) * pow(m, -1, q) % q
        x, m = x + m * t, m * q
    return x


def roth_count_charsum(P: RatFunFp, Q: RatFunFp, K: KernelTable | None = None,
                       exact_fallback: bool = True) -> VarietyCountReport:
    t0 = time.perf_counter()
    p = P.p
    if K is None:
        K = kernel_table(P, Q)
    S = charsum_value(K)
    raw = p**6 * S.real
    count = int(round(raw))
    residual = abs(raw - count)
    if abs(S.imag) > TOL.charsum_imag * max(abs(S.real), 1e-300):
        raise ArithmeticError(f"charsum has imaginary part {S.imag:.3g}")
    extra = {"float_value": raw}
    reliable = residual < TOL.charsum_residual
    method = "charsum"
    if not reliable and exact_fallback:
        count = charsum_exact(P, Q)
        extra["float_count"] = int(round(raw))
        residual = abs(raw - count)
        reliable = True
        method = "charsum-exact"
    return VarietyCountReport("Y", p, count, 6, method, residual, time.perf_counter() - t0, reliable, extra)


def roth_count(P: RatFunFp, Q: RatFunFp, method: str) -> VarietyCountReport:
    t0 = time.perf_counter()
    if method == "brute":
        c = roth_count_brute(P, Q)
    elif method == "structured":
        c = roth_count_structured(P, Q)
    elif method == "charsum":
        return roth_count_charsum(P, Q)
    elif method == "charsum-exact":
        c = charsum_exact(P, Q)
    else:
        raise ValueError(f"unknown method {method!r}")
    return VarietyCountReport("Y", P.p, c, 6, method, None, time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# signed-sum histograms


def value_distribution(P: RatFunFp, Q: RatFunFp) -> np.ndarray:
    """d[a, b] = #{y defined : (P(y), Q(y)) = (a, b)}."""
    p = P.p
    _, pv, qv = joint_table(P, Q)
    d = np.zeros((p, p), np.int64)
    np.add.at(d, (pv, qv), 1)
    return d


def signed_sum_histogram(P: RatFunFp, Q: RatFunFp, signs) -> np.ndarray:
    """N[a, b] = #{(y_1..y_k) : sum s_i P(y_i) = a, sum s_i Q(y_i) = b}."""
    signs = tuple(int(s) for s in signs)
    if not signs or len(signs) > 8 or any(s not in (1, -1) for s in signs):
        raise ValueError("signs must be 1..8 entries of +1/-1")
    p = P.p
    d = value_distribution(P, Q)
    neg = (-np.arange(p)) % p
    dneg = d[np.ix_(neg, neg)]
    N = None
    for s in signs:
        ds = d if s == 1 else dneg
        if N is None:
            N = ds.copy()
            continue
        # shift-and-add over the support of the single-variable distribution
        out = np.zeros_like(N)
        for a, b in zip(*np.nonzero(ds)):
            out += ds[a, b] * np.roll(N, (a, b), axis=(0, 1))
        N = out
    return N


# ---------------------------------------------------------------------------
# Z'


def _ratio_table(P: RatFunFp, Q: RatFunFp):
    """R(y) = P'(y)/Q'(y) on the defined set; returns (values, defined mask)."""
    p = P.p
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegreeLossWarning)
        dP, dQ = derivative(P), derivative(Q)
    _, _, _, ok = _value_tables(P, Q)
    a, ad = dP.table()
    b, bd = dQ.table()
    defined = ok & ad & bd & (b % p != 0)
    R = np.zeros(p, np.int64)
    idx = np.nonzero(defined)[0]
    R[idx] = [a[i] * pow(int(b[i]), -1, p) % p for i in idx]
    return R, defined


def _half_keys(pv, qv, R, ys, p):
    """Keys (sum P, sum Q, product R) over 4-tuples from ys, encoded in [0, p^3)."""
    g = np.indices((len(ys),) * 4).reshape(4, -1)
    vals = ys[g]
    sp = pv[vals].sum(axis=0) % p
    sq = qv[vals].sum(axis=0) % p
    pr = np.ones(vals.shape[1], np.int64)
    for row in vals:
        pr = pr * R[row] % p
    return (sp * p + sq) * p + pr


def zprime_count(P: RatFunFp, Q: RatFunFp, max_p: int = 37) -> VarietyCountReport:
    """Count 8-tuples where (y1, y4, y6, y7) and (y2, y3, y5, y8) agree in P-sum, Q-sum and R-product.

    Both halves range over the same 4-tuples with the same key, so the count is
    the sum of squared key multiplicities.  Tuples where some R(y_i) is
    undefined are excluded; how many of them satisfy the two linear equations
    is reported in ``extra['undefined_R']``.
    """
    t0 = time.perf_counter()
    p, pv, qv, ok = _value_tables(P, Q)
    if p > max_p:
        raise TooLarge(f"Z' count limited to p <= {max_p}, got {p}")
    R, rdef = _ratio_table(P, Q)
    ys = np.nonzero(rdef)[0]
    keys = _half_keys(pv, qv, R, ys, p)
    half = np.bincount(keys, minlength=p**3).astype(np.int64)
    count = int(np.dot(half, half))
    all_pairs = int(signed_sum_histogram(P, Q, EIGHT_SIGNS)[0, 0])
    # defined tuples satisfying only the linear equations
    lin = np.bincount(keys // p, minlength=p * p).astype(np.int64)
    defined_lin = int(np.dot(lin, lin))
    extra = {"undefined_R": all_pairs - defined_lin, "linear_defined": defined_lin}
    return VarietyCountReport("Zprime", p, count, 5, "join", None, time.perf_counter() - t0, True, extra)


def zprime_count_direct(P: RatFunFp, Q: RatFunFp) -> int:
    """Plain enumeration of all 8-tuples (small p only)."""
    p, pv, qv, ok = _value_tables(P, Q)
    R, rdef = _ratio_table(P, Q)
    ys = np.nonzero(rdef)[0]
    g = ys[np.indices((len(ys),) * 8).reshape(8, -1)]
    s = np.array(EIGHT_SIGNS)[:, None]
    e1 = (s * pv[g]).sum(axis=0) % p == 0
    e2 = (s * qv[g]).sum(axis=0) % p == 0
    lp = R[g[0]] * R[g[3]] % p * R[g[5]] % p * R[g[6]] % p
    rp = R[g[1]] * R[g[2]] % p * R[g[4]] % p * R[g[7]] % p
    return int((e1 & e2 & (lp == rp)).sum())


# ---------------------------------------------------------------------------
# scans


def prime_range(lo: int, hi: int) -> list[int]:
    return [q for q in range(max(lo, 2), hi + 1) if is_prime(q)]


@dataclass
class ScanRow:
    p: int
    variety: str
    count: int | None
    exponent: int
    method: str
    residual: float | None = None
    seconds: float | None = None
    note: str = ""

    @property
    def ratio(self):
        return None if self.count is None else self.count / self.p**self.exponent


def dimension_scan(P: RatFunQ, Q: RatFunQ, primes, zprime_max: int = 31,
                   allow_dependent: bool = False) -> list[ScanRow]:
    """Per prime: |Y|, |Z'|, sup X_{a,b}, sup W_{a,b} and the diagonal count N8(0,0)."""
    rows: list[ScanRow] = []
    for p in sorted(primes):
        try:
            Pp, Qp = reduce_pair_mod_p(P, Q, p)
        except BadPrime as exc:
            if not (allow_dependent and exc.reason == "lost_independence"):
                rows.append(ScanRow(p, "skip", None, 0, "bad-prime", note=exc.reason))
                continue
            Pp, Qp = _reduce_each(P, Q, p)
        t0 = time.perf_counter()
        n8 = int(signed_sum_histogram(Pp, Qp, EIGHT_SIGNS)[0, 0])
        rows.append(ScanRow(p, "N8", n8, 6, "histogram", seconds=time.perf_counter() - t0))
        y = roth_count_charsum(Pp, Qp)
        rows.append(ScanRow(p, "Y", y.count, 6, y.method, y.residual, y.seconds))
        if p <= zprime_max:
            z = zprime_count(Pp, Qp)
            rows.append(ScanRow(p, "Zprime", z.count, 5, "join", seconds=z.seconds))
        t0 = time.perf_counter()
        x = int(signed_sum_histogram(Pp, Qp, X_SIGNS).max())
        rows.append(ScanRow(p, "Xsup", x, 3, "histogram", seconds=time.perf_counter() - t0))
        t0 = time.perf_counter()
        w = int(signed_sum_histogram(Pp, Qp, W_SIGNS).max())
        rows.append(ScanRow(p, "Wsup", w, 4, "histogram", seconds=time.perf_counter() - t0))
    return rows


def _reduce_each(P: RatFunQ, Q: RatFunQ, p: int):
    from .ratfun import reduce_mod_p

    return reduce_mod_p(P, p), reduce_mod_p(Q, p)

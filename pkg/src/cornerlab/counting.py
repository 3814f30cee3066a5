"""Corner counting operator, main term, dual functions, inequality chains and
the degree-lowering trace.

Averages over y skip points where P or Q is undefined but always divide by p.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .config import TOL
from .gowers import (
    box_norm,
    box_norm_power,
    detect_eigenfunction,
    line_correlations,
    u2_dirs,
    u2_inverse,
)
from .grid import GridFn, fourier_aggregate, norm
from .kernel import bombieri_check, joint_table, kernel_table
from .ratfun import RatFunFp


def shift(a: np.ndarray, s: int, t: int) -> np.ndarray:
    """B(x1, x2) = a(x1 + s, x2 + t)."""
    return np.roll(a, (-int(s), -int(t)), axis=(0, 1))


def _check_p(p: int, *objs):
    for o in objs:
        if o.p != p:
            raise ValueError(f"prime mismatch: expected {p}, got {o.p}")


def _shift_pairs(P: RatFunFp, Q: RatFunFp):
    """Distinct (P(y), Q(y)) over defined y, with multiplicities."""
    _, pv, qv = joint_table(P, Q)
    if len(pv) == 0:
        return np.zeros((0, 2), np.int64), np.zeros(0, np.int64)
    pairs, mult = np.unique(np.stack([pv, qv], axis=1), axis=0, return_counts=True)
    return pairs, mult


@dataclass
class CountReport:
    p: int
    lam: complex
    main: complex
    error: float
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "lambda": [self.lam.real, self.lam.imag],
            "main_term": [self.main.real, self.main.imag],
            "error": self.error,
            "metadata": self.metadata,
        }


def corner_operator(f0: GridFn, f1: GridFn, f2: GridFn, P: RatFunFp, Q: RatFunFp) -> complex:
    p = f0.p
    _check_p(p, f1, f2, P, Q)
    pairs, mult = _shift_pairs(P, Q)
    a0, a1, a2 = f0.values, f1.values, f2.values
    total = 0j
    for (u, v), m in zip(pairs, mult):
        total += m * (a0 * shift(a1, u, 0) * shift(a2, 0, v)).sum()
    return complex(total / p**3)


def corner_operator_direct(f0, f1, f2, P: RatFunFp, Q: RatFunFp) -> complex:
    """Plain triple loop, kept as an independent oracle for small p."""
    p = f0.p
    s = 0j
    for y in range(p):
        u, v = P(y), Q(y)
        if u is None or v is None:
            continue
        for x1 in range(p):
            for x2 in range(p):
                s += f0.values[x1, x2] * f1.values[(x1 + u) % p, x2] * f2.values[x1, (x2 + v) % p]
    return complex(s / p**3)


def main_term(f0: GridFn, f1: GridFn, f2: GridFn) -> complex:
    _check_p(f0.p, f1, f2)
    p = f0.p
    s1 = f1.values.sum(axis=0, keepdims=True)  # p * E_a f1(a, x2)
    s2 = f2.values.sum(axis=1, keepdims=True)  # p * E_b f2(x1, b)
    # one division at the end keeps integer-valued inputs exact
    return complex((f0.values * s1 * s2).sum() / p**4)


def corner_report(f0, f1, f2, P, Q, **meta) -> CountReport:
    lam = corner_operator(f0, f1, f2, P, Q)
    mt = main_term(f0, f1, f2)
    return CountReport(f0.p, lam, mt, abs(lam - mt), {"P": str(P), "Q": str(Q), **meta})


def two_term_operator(f0: GridFn, f1: GridFn, P: RatFunFp, axis: str = "first") -> CountReport:
    """E f0(x) f1(x + P(y) e_axis) against E f0 * (line average of f1 along axis)."""
    p = f0.p
    _check_p(p, f1, P)
    vals, ok = P.table()
    counts = np.bincount(vals[ok], minlength=p)
    a0, a1 = f0.values, f1.values
    ax = 0 if axis == "first" else 1
    # the part of the shift distribution that is uniform over F_p sums to the
    # full line sum, so it shares one expression with the main term
    base = (a0 * a1.sum(axis=ax, keepdims=True)).sum()
    floor = int(counts.min())
    total = floor * base
    for s in np.nonzero(counts > floor)[0]:
        moved = shift(a1, s, 0) if axis == "first" else shift(a1, 0, s)
        total += int(counts[s] - floor) * (a0 * moved).sum()
    lam = complex(total / p**3)
    mt = complex(base / p**3)
    return CountReport(p, lam, mt, abs(lam - mt), {"P": str(P), "axis": axis})


def dual_function(f0: GridFn, g: GridFn, P: RatFunFp, Q: RatFunFp, which: str) -> GridFn:
    """F1(x) = E_y f0(x1-P, x2) g(x1-P, x2+Q);  F2(x) = E_y f0(x1, x2-Q) g(x1+P, x2-Q).

    Lambda(f0, f1, f2) = E f1 F1 with g = f2, and = E f2 F2 with g = f1.
    """
    p = f0.p
    _check_p(p, g, P, Q)
    pairs, mult = _shift_pairs(P, Q)
    a0, ag = f0.values, g.values
    out = np.zeros((p, p), dtype=complex)
    for (u, v), m in zip(pairs, mult):
        if which == "F1":
            out += m * shift(a0, -u, 0) * shift(ag, -u, v)
        elif which == "F2":
            out += m * shift(a0, 0, -v) * shift(ag, u, -v)
        else:
            raise ValueError(f"unknown dual {which!r}")
    return GridFn.of(out / p)


def corner_census(A, P: RatFunFp, Q: RatFunFp) -> tuple[int, float, float]:
    """Exact count of (x1, x2, y) with all three corner points in A."""
    p = P.p
    mask = _as_mask(A, p)
    pairs, mult = _shift_pairs(P, Q)
    a = mask.astype(np.int64)
    count = 0
    for (u, v), m in zip(pairs, mult):
        count += int(m) * int((a * shift(a, u, 0) * shift(a, 0, v)).sum())
    delta = float(a.mean())
    ratio = count / (p**3 * delta**3) if delta > 0 else float("nan")
    return count, delta, ratio


def _as_mask(A, p: int) -> np.ndarray:
    if isinstance(A, GridFn):
        return np.abs(A.values) > 0.5
    arr = np.asarray(A)
    if arr.shape == (p, p):
        return arr.astype(bool)
    mask = np.zeros((p, p), bool)
    for x1, x2 in A:
        mask[x1 % p, x2 % p] = True
    return mask


# ---------------------------------------------------------------------------
# inequality chains


@dataclass
class Check:
    name: str
    lhs: float
    rhs: float
    mode: str = "strict"  # strict | identity | ratio-only

    @property
    def slack(self) -> float:
        if self.mode == "identity":
            return -abs(self.lhs - self.rhs)
        return self.rhs - self.lhs

    def ok(self, tol: float | None = None) -> bool:
        if self.mode == "ratio-only":
            return True
        if self.mode == "identity":
            return self.slack >= -(TOL.identity if tol is None else tol)
        return self.slack >= -(TOL.slack if tol is None else tol)

    def to_json(self) -> dict:
        d = asdict(self)
        d["slack"] = self.slack
        return d


def validate_inequality_chain(f0, f1, f2, P, Q, roth_ratio: float, roth_ratio_dual: float | None = None) -> list[Check]:
    """Both sides of the Cauchy-Schwarz chain bounds for one triple.

    ``roth_ratio`` is |Y|/p^6 for (P, Q); ``roth_ratio_dual`` the same for
    (Q, P), used by the transposed bound (defaults to ``roth_ratio``).
    """
    if roth_ratio_dual is None:
        roth_ratio_dual = roth_ratio
    lam = abs(corner_operator(f0, f1, f2, P, Q))
    agg1 = fourier_aggregate(f1, "F1")
    agg2 = fourier_aggregate(f2, "F2")
    n0 = norm(f0, "L", 2)
    n1_4, n2_4 = norm(f1, "L", 4), norm(f2, "L", 4)
    u2_f2 = box_norm(f2, u2_dirs("second"))
    u2_f1 = box_norm(f1, u2_dirs("first"))
    r16 = roth_ratio ** (1 / 16)
    checks = [
        Check("aggregate_bound", lam,
              n0 * agg1.l2() ** 0.5 * agg2.l2() ** 0.25 * agg2.pair_l2() ** 0.125 * r16),
        Check("F1_l2_vs_L4", agg1.l2(), n1_4**2),
        Check("F2_l2_vs_L4", agg2.l2(), n2_4**2),
        Check("F2_pair_vs_U2", agg2.pair_l2(), u2_f2**2),
        Check("gowers_control_f2", lam, n0 * n1_4 * n2_4**0.5 * u2_f2**0.25 * r16),
        Check("gowers_control_f1", lam,
              n0 * n1_4**0.5 * u2_f1**0.25 * n2_4 * roth_ratio_dual ** (1 / 16)),
    ]
    if f0.bounded and f1.bounded and f2.bounded:
        checks.append(Check("trivial_bound", lam, 1.0 + TOL.bounded))
    return checks


def identity_checks(f0, f1, f2, P, Q) -> list[Check]:
    """Duality and de-meaning split identities."""
    lam = corner_operator(f0, f1, f2, P, Q)
    F1 = dual_function(f0, f2, P, Q, "F1")
    F2 = dual_function(f0, f1, P, Q, "F2")
    m2 = f2.line_mean(axis=1)
    m1 = f1.line_mean(axis=0)
    split2 = corner_operator(f0, f1, f2 - m2, P, Q) + corner_operator(f0, f1, m2, P, Q)
    split1 = corner_operator(f0, f1 - m1, f2, P, Q) + corner_operator(f0, m1, f2, P, Q)
    out = []
    for name, other in [
        ("dual_F1", complex((f1.values * F1.values).mean())),
        ("dual_F2", complex((f2.values * F2.values).mean())),
        ("split_f2", split2),
        ("split_f1", split1),
    ]:
        out.append(Check(name + "_re", lam.real, other.real, "identity"))
        out.append(Check(name + "_im", lam.imag, other.imag, "identity"))
    return out


# ---------------------------------------------------------------------------
# degree lowering


@dataclass
class Step:
    level: int
    name: str
    lhs: float
    rhs: float
    mode: str

    @property
    def slack(self) -> float:
        if self.mode == "identity":
            return -abs(self.lhs - self.rhs)
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        if self.mode == "ratio-only":
            return True
        tol = TOL.identity if self.mode == "identity" else TOL.slack
        return self.slack >= -tol

    def to_json(self) -> dict:
        return {"level": self.level, "name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "slack": self.slack, "mode": self.mode, "passed": self.passed}


@dataclass
class LevelRecord:
    level: int
    delta: float
    dual_l2: float | None = None
    dual_directional_u2: float | None = None
    eigen_correlation: float | None = None
    u2_level: float | None = None
    u_density: float | None = None
    dual_sup: float | None = None
    two_term_residual: float | None = None
    terminated: bool = False


@dataclass
class DegreeLoweringTrace:
    p: int
    branch: str
    demeaned: bool
    lam: complex
    main: complex
    levels: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    final_residual: float | None = None
    final_bound: float | None = None

    def _first(self, attr):
        for lv in self.levels:
            v = getattr(lv, attr)
            if v is not None:
                return v
        return None

    @property
    def delta(self):
        return self.levels[0].delta if self.levels else abs(self.lam - self.main)

    @property
    def dual_l2(self):
        return self._first("dual_l2")

    @property
    def dual_directional_u2(self):
        return self._first("dual_directional_u2")

    @property
    def eigen_correlation(self):
        return self._first("eigen_correlation")

    @property
    def u_density(self):
        return self._first("u_density")

    @property
    def final_residual_scaled(self):
        return None if self.final_residual is None else self.final_residual * np.sqrt(self.p)

    def strict_ok(self) -> bool:
        return all(s.passed for s in self.steps)

    def min_strict_slack(self) -> float:
        sl = [s.slack for s in self.steps if s.mode == "strict"]
        return min(sl) if sl else float("inf")

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "branch": self.branch,
            "demeaned": self.demeaned,
            "lambda": [self.lam.real, self.lam.imag],
            "main_term": [self.main.real, self.main.imag],
            "delta": self.delta,
            "dual_l2": self.dual_l2,
            "dual_directional_u2": self.dual_directional_u2,
            "eigen_correlation": self.eigen_correlation,
            "u_density": self.u_density,
            "final_residual": self.final_residual,
            "final_residual_scaled": self.final_residual_scaled,
            "final_bound": self.final_bound,
            "levels": [asdict(lv) for lv in self.levels],
            "steps": [s.to_json() for s in self.steps],
        }


class _Tracer:
    def __init__(self, P, Q, roth_ratio, roth_ratio_dual, demean):
        self.P, self.Q = P, Q
        self.p = P.p
        self.roth = roth_ratio
        self.roth_dual = roth_ratio if roth_ratio_dual is None else roth_ratio_dual
        self.demean = demean
        self.steps: list[Step] = []
        self.levels: list[LevelRecord] = []
        self.final_residual = None
        self.final_bound = None
        self._K = None

    @property
    def K(self):
        if self._K is None:
            self._K = kernel_table(self.P, self.Q)
        return self._K

    def lam(self, f0, f1, f2):
        return corner_operator(f0, f1, f2, self.P, self.Q)

    def step(self, level, name, lhs, rhs, mode="strict"):
        self.steps.append(Step(level, name, float(lhs), float(rhs), mode))

    def identity(self, level, name, a: complex, b: complex):
        self.step(level, name + "_re", a.real, b.real, "identity")
        self.step(level, name + "_im", a.imag, b.imag, "identity")

    # -- shared machinery for the two U^2 levels
    def _lower(self, level, f0, fixed, target, dual_kind, coordinate):
        """One degree-lowering pass.

        ``target`` is the function paired with the dual; ``fixed`` the other
        non-trivial factor.  Returns the eigenfunction grid chi * 1_U that
        replaces ``target`` at the next level, or None when the pass stops.
        """
        P, Q = self.P, self.Q
        rec = self.levels[-1]
        if dual_kind == "F2":
            lam = self.lam(f0, fixed, target)
        else:
            lam = self.lam(f0, target, fixed)
        rec.delta = abs(lam)
        if rec.delta < 1e-12:
            rec.terminated = True
            return None
        F = dual_function(f0, fixed, P, Q, dual_kind)
        self.identity(level, "duality", lam, complex((target.values * F.values).mean()))
        rec.dual_l2 = norm(F, "L", 2)
        self.step(level, "delta_le_dual_l2", rec.delta, norm(target, "L", 2) * rec.dual_l2)
        Fc = F.conj()
        if dual_kind == "F2":
            self.identity(level, "dual_energy", complex(rec.dual_l2**2), self.lam(f0, fixed, Fc))
        else:
            self.identity(level, "dual_energy", complex(rec.dual_l2**2), self.lam(f0, Fc, fixed))
        dirs = u2_dirs(coordinate)
        rec.dual_directional_u2 = box_norm(F, dirs)
        if self.roth is not None:
            # homogeneous bound, so rescaling every factor to be 1-bounded changes nothing
            if dual_kind == "F2":
                rhs = (norm(f0, "L", 2) * norm(fixed, "L", 4) * norm(Fc, "L", 4) ** 0.5
                       * rec.dual_directional_u2**0.25 * self.roth ** (1 / 16))
            else:
                rhs = (norm(f0, "L", 2) * norm(Fc, "L", 4) ** 0.5 * rec.dual_directional_u2**0.25
                       * norm(fixed, "L", 4) * self.roth_dual ** (1 / 16))
            self.step(level, "dual_energy_le_gowers_control", rec.dual_l2**2, rhs)
        # the constant here is not explicit, only the ratio is meaningful
        self.step(level, "dual_u2_vs_delta_sq", rec.delta**2, rec.dual_directional_u2**0.25, "ratio-only")

        s = F.sup()
        rec.dual_sup = s
        if s < 1e-15:
            rec.terminated = True
            return None
        G = GridFn.of(F.values / s, bounded=True)
        chi, corr = u2_inverse(G, coordinate)
        L = box_norm_power(G, dirs)
        rec.eigen_correlation, rec.u2_level = corr, L
        self.step(level, "inverse_correlation", L, corr)
        lines = line_correlations(G, chi).real
        U = lines >= L / 2
        rec.u_density = float(U.mean())
        # lines are <= 1, lines outside U are < L/2
        self.step(level, "pigeonhole_density", corr - L / 2, rec.u_density)
        nxt = chi.restrict(U).grid()
        if dual_kind == "F2":
            lam_next = self.lam(f0, fixed, nxt)
        else:
            lam_next = self.lam(f0, nxt, fixed)
        self.identity(level, "restricted_correlation", lam_next, complex(s * (lines * U).mean()))
        self.step(level, "restricted_lower_bound", s * rec.u_density * L / 2, lam_next.real)
        return nxt

    def level3(self, f0, f1, f2):
        self.levels.append(LevelRecord(3, 0.0))
        m1 = f1.line_mean(axis=0)
        f1d = f1 - m1 if self.demean else f1
        if self.demean:
            whole = self.lam(f0, f1, f2)
            self.identity(3, "split", whole, self.lam(f0, f1d, f2) + self.lam(f0, m1, f2))
            # the mean part is a two-term average in x2 whose main term is the full main term
            rep = two_term_operator(f0 * m1, f2, self.Q, "second")
            self.levels[-1].two_term_residual = rep.error
        nxt = self._lower(3, f0, f1d, f2, "F2", "second")
        if nxt is not None:
            self.level2(f0, f1d, nxt)

    def level2(self, f0, f1, f2):
        self.levels.append(LevelRecord(2, 0.0))
        m2 = f2.line_mean(axis=1)
        f2d = f2 - m2 if self.demean else f2
        if self.demean:
            whole = self.lam(f0, f1, f2)
            self.identity(2, "split", whole, self.lam(f0, f1, f2d) + self.lam(f0, f1, m2))
            rep = two_term_operator(f0 * m2, f1, self.P, "first")
            self.levels[-1].two_term_residual = rep.error
        nxt = self._lower(2, f0, f2d, f1, "F1", "first")
        if nxt is not None:
            self.level1(f0, nxt, f2d)

    def level1(self, f0, f1, f2):
        rec = LevelRecord(1, 0.0)
        self.levels.append(rec)
        lam = self.lam(f0, f1, f2)
        mt = main_term(f0, f1, f2)
        rec.delta = abs(lam - mt)
        e1 = detect_eigenfunction(f1, "first")
        e2 = detect_eigenfunction(f2, "second")
        self.final_residual = rec.delta
        if e1 is None or e2 is None:
            return
        K = self.K
        # each (x1, x2) picks up K(phi(x2), alpha(x1)) from the y-average
        kgrid = K.values[e1.phi[None, :], e2.phi[:, None]]
        exact = complex((f0.values * f1.values * f2.values * kgrid).mean())
        self.identity(1, "kernel_expansion", lam, exact)
        sup, _ = bombieri_check(K)
        bound = float(np.abs(f0.values).mean()) * max(sup, K.pole_count / self.p)
        self.final_bound = bound
        self.step(1, "bombieri_residual", rec.delta, bound)


def degree_lowering_trace(f0: GridFn, f1: GridFn, f2: GridFn, P: RatFunFp, Q: RatFunFp,
                          roth_ratio: float | None = None, roth_ratio_dual: float | None = None,
                          demean: bool = True) -> DegreeLoweringTrace:
    """Run the degree-lowering pipeline and record every step.

    Strict steps hold without unspecified constants and are checked;
    ratio-only steps are recorded for inspection.
    """
    p = f0.p
    _check_p(p, f1, f2, P, Q)
    tr = _Tracer(P, Q, roth_ratio, roth_ratio_dual, demean)
    lam = corner_operator(f0, f1, f2, P, Q)
    mt = main_term(f0, f1, f2)
    e1 = detect_eigenfunction(f1, "first")
    e2 = detect_eigenfunction(f2, "second")
    if e1 is not None and e2 is not None:
        branch = "1"
        tr.level1(f0, f1, f2)
    elif e2 is not None and not e2.phi[e2.support].any():
        # f2 constant along x2: a two-term average
        branch = "1"
        rec = LevelRecord(1, abs(lam - mt))
        tr.levels.append(rec)
        rep = two_term_operator(f0 * f2, f1, P, "first")
        tr.identity(1, "two_term_reduction", lam, rep.lam)
        tr.final_residual = rep.error
    elif e2 is not None:
        branch = "2"
        tr.level2(f0, f1, f2)
    else:
        branch = "3"
        tr.level3(f0, f1, f2)
    return DegreeLoweringTrace(p, branch, demean, lam, mt, tr.levels, tr.steps,
                               tr.final_residual, tr.final_bound)

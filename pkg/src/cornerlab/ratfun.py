"""Rational functions in one variable over Q and over F_p.

Polynomials are tuples of coefficients, lowest degree first, with no trailing
zeros (the zero polynomial is ``()``).  Over Q the coefficients are Python
ints or Fractions during intermediate work; stored representatives always use
integers.  Over F_p they are ints in ``range(p)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import gcd
from typing import NamedTuple

import numpy as np

Poly = tuple


class ParseError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class ZeroDenominatorError(ZeroDivisionError):
    pass


class BadPrime(Exception):
    """Reduction mod p degenerates; scans skip such primes."""

    def __init__(self, p: int, reason: str):
        super().__init__(f"bad prime {p}: {reason}")
        self.p = p
        self.reason = reason


class DegreeLossWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# primality


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for q in small:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # deterministic for n < 3.3e24
    for a in small:
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


# ---------------------------------------------------------------------------
# dense polynomial arithmetic; ``p is None`` means exact rationals


def _trim(a) -> Poly:
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return tuple(a)


def _red(a, p) -> Poly:
    if p is None:
        return _trim(a)
    return _trim(c % p for c in a)


def _inv(c, p):
    if p is None:
        return 1 / Fraction(c)
    return pow(c, -1, p)


def padd(a, b, p=None) -> Poly:
    n = max(len(a), len(b))
    return _red([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)], p)


def pneg(a, p=None) -> Poly:
    return _red([-c for c in a], p)


def psub(a, b, p=None) -> Poly:
    return padd(a, pneg(b, p), p)


def pscale(a, c, p=None) -> Poly:
    return _red([c * x for x in a], p)


def pmul(a, b, p=None) -> Poly:
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return _red(out, p)


def pdivmod(a, b, p=None) -> tuple[Poly, Poly]:
    if not b:
        raise ZeroDenominatorError("polynomial division by zero")
    a = list(a) if p is None else [c % p for c in a]
    lead_inv = _inv(b[-1], p)
    q = [0] * max(len(a) - len(b) + 1, 0)
    while len(_trim(a)) >= len(b):
        a = list(_trim(a))
        k = len(a) - len(b)
        c = a[-1] * lead_inv
        if p is not None:
            c %= p
        q[k] = c
        for i, y in enumerate(b):
            a[i + k] -= c * y
            if p is not None:
                a[i + k] %= p
    return _red(q, p), _red(a, p)


def pmonic(a, p=None) -> Poly:
    if not a:
        return ()
    return pscale(a, _inv(a[-1], p), p)


def _primitive(a) -> Poly:
    g = _content(a)
    return tuple(c // g for c in a) if g > 1 else tuple(a)


def _prem(a, b) -> Poly:
    """Pseudo-remainder of integer polynomials: lc(b)^k a mod b without fractions."""
    a = list(a)
    lb = b[-1]
    while len(a) >= len(b):
        k = len(a) - len(b)
        c = a[-1]
        a = [x * lb for x in a]
        for i, y in enumerate(b):
            a[i + k] -= c * y
        a = list(_trim(a))
    return tuple(a)


def pgcd(a, b, p=None) -> Poly:
    """Monic gcd (over Q the result has Fraction coefficients)."""
    a, b = _red(a, p), _red(b, p)
    if p is None:
        # primitive remainder sequence keeps the coefficients small
        a = _to_integer(a)[0] if a else ()
        b = _to_integer(b)[0] if b else ()
        while b:
            a, b = b, _primitive(_prem(a, b))
        return pmonic(a, p)
    while b:
        a, b = b, pdivmod(a, b, p)[1]
    return pmonic(a, p)


def pderiv(a, p=None) -> Poly:
    return _red([i * c for i, c in enumerate(a)][1:], p)


def peval(a, x, p=None):
    acc = 0
    for c in reversed(a):
        acc = acc * x + c
        if p is not None:
            acc %= p
    return acc


def _content(coeffs) -> int:
    g = 0
    for c in coeffs:
        g = gcd(g, int(c))
    return g


def _to_integer(*polys: Poly) -> tuple[Poly, ...]:
    """Scale Fraction polynomials jointly to integer polynomials of content 1."""
    den = 1
    for a in polys:
        for c in a:
            den = den * Fraction(c).denominator // gcd(den, Fraction(c).denominator)
    ints = [tuple(int(Fraction(c) * den) for c in a) for a in polys]
    g = _content(c for a in ints for c in a) or 1
    return tuple(tuple(c // g for c in a) for a in ints)


# ---------------------------------------------------------------------------
# Q(t)


def _fmt_poly(a: Poly, var: str = "t") -> str:
    if not a:
        return "0"
    parts = []
    for k in range(len(a) - 1, -1, -1):
        c = a[k]
        if c == 0:
            continue
        sign = "-" if c < 0 else "+"
        m = abs(c)
        if k == 0:
            body = str(m)
        else:
            mono = var if k == 1 else f"{var}^{k}"
            body = mono if m == 1 else f"{m}*{mono}"
        parts.append((sign, body))
    first_sign, first = parts[0]
    out = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        out += sign + body
    return out


@dataclass(frozen=True)
class RatFunQ:
    """Reduced numerator/denominator pair with integer coefficients.

    Normal form: gcd(num, den) = 1 over Q, the coefficients of num and den
    jointly have content 1, and den has a positive leading coefficient.  Two
    equal rational functions therefore have equal fields.
    """

    num: Poly
    den: Poly

    @classmethod
    def make(cls, num, den=(1,)) -> "RatFunQ":
        num, den = _trim(num), _trim(den)
        if not den:
            raise ZeroDenominatorError("zero denominator polynomial")
        if not num:
            return cls((), (1,))
        g = pgcd(num, den)
        if len(g) > 1:
            num, den = pdivmod(num, g)[0], pdivmod(den, g)[0]
        num, den = _to_integer(num, den)
        if den[-1] < 0:
            num, den = tuple(-c for c in num), tuple(-c for c in den)
        return cls(num, den)

    @classmethod
    def const(cls, c) -> "RatFunQ":
        c = Fraction(c)
        return cls.make((c.numerator,), (c.denominator,))

    @classmethod
    def t(cls) -> "RatFunQ":
        return cls.make((0, 1))

    # arithmetic
    def __add__(self, other):
        other = _coerce(other)
        return RatFunQ.make(padd(pmul(self.num, other.den), pmul(other.num, self.den)),
                            pmul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self):
        return RatFunQ(tuple(-c for c in self.num), self.den)

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        return RatFunQ.make(pmul(self.num, other.num), pmul(self.den, other.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if not other.num:
            raise ZeroDenominatorError("division by the zero rational function")
        return RatFunQ.make(pmul(self.num, other.den), pmul(self.den, other.num))

    def __rtruediv__(self, other):
        return _coerce(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return RatFunQ.const(1) / self ** (-k)
        out = RatFunQ.const(1)
        for _ in range(k):
            out = out * self
        return out

    @property
    def degree(self) -> int:
        """deg(num) + deg(den); the zero function has degree 0."""
        return max(len(self.num) - 1, 0) + (len(self.den) - 1)

    @property
    def is_constant(self) -> bool:
        return len(self.num) <= 1 and len(self.den) == 1

    def at(self, x) -> Fraction | None:
        """Exact value at a rational point, None at a pole."""
        d = peval(self.den, Fraction(x))
        if d == 0:
            return None
        return peval(self.num, Fraction(x)) / d

    def derivative(self) -> "RatFunQ":
        return derivative(self)

    def __str__(self) -> str:
        return f"({_fmt_poly(self.num)})/({_fmt_poly(self.den)})"


def _coerce(x) -> RatFunQ:
    if isinstance(x, RatFunQ):
        return x
    if isinstance(x, (int, Fraction)):
        return RatFunQ.const(x)
    raise TypeError(f"cannot use {type(x).__name__} as a rational function")


# ---------------------------------------------------------------------------
# parser


class _Parser:
    # expr := ['-'] term (('+'|'-') term)*
    # term := factor (('*'|'/') factor)*
    # factor := base ['^' uint]
    # base := 't' | integer | '(' expr ')'
    VARS = ("t", "y")

    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def peek(self) -> str:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            raise ParseError(f"expected {ch!r}", self.pos)
        self.pos += 1

    def parse(self) -> RatFunQ:
        if not self.text.strip():
            raise ParseError("empty expression", 0)
        out = self.expr()
        if self.peek():
            raise ParseError(f"unexpected {self.peek()!r}", self.pos)
        return out

    def expr(self) -> RatFunQ:
        neg = False
        if self.peek() == "-":
            self.pos += 1
            neg = True
        acc = self.term()
        if neg:
            acc = -acc
        while self.peek() in ("+", "-"):
            op = self.peek()
            self.pos += 1
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self) -> RatFunQ:
        acc = self.factor()
        while self.peek() in ("*", "/"):
            op = self.peek()
            at = self.pos
            self.pos += 1
            rhs = self.factor()
            if op == "*":
                acc = acc * rhs
            else:
                if not rhs.num:
                    raise ZeroDenominatorError(f"division by the zero polynomial at position {at}")
                acc = acc / rhs
        return acc

    def factor(self) -> RatFunQ:
        base = self.base()
        if self.peek() == "^":
            self.pos += 1
            self.peek()
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if start == self.pos:
                raise ParseError("expected unsigned exponent", start)
            base = base ** int(self.text[start:self.pos])
        return base

    def base(self) -> RatFunQ:
        ch = self.peek()
        if ch in self.VARS:
            self.pos += 1
            return RatFunQ.t()
        if ch.isdigit():
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            return RatFunQ.const(int(self.text[start:self.pos]))
        if ch == "(":
            self.pos += 1
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(f"unexpected {ch!r}" if ch else "unexpected end of input", self.pos)


def parse_ratfun(text: str) -> RatFunQ:
    """Parse an expression in ``t`` (``y`` is accepted as an alias)."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# F_p(t)


@dataclass(frozen=True)
class RatFunFp:
    """A rational function over F_p with coprime numerator and monic denominator."""

    p: int
    num: Poly
    den: Poly

    @classmethod
    def make(cls, p: int, num, den=(1,)) -> "RatFunFp":
        num, den = _red(num, p), _red(den, p)
        if not den:
            raise ZeroDenominatorError(f"denominator vanishes mod {p}")
        if not num:
            return cls(p, (), (1,))
        g = pgcd(num, den, p)
        if len(g) > 1:
            num, den = pdivmod(num, g, p)[0], pdivmod(den, g, p)[0]
        inv = pow(den[-1], -1, p)
        return cls(p, pscale(num, inv, p), pscale(den, inv, p))

    @property
    def degree(self) -> int:
        return max(len(self.num) - 1, 0) + (len(self.den) - 1)

    @property
    def is_constant(self) -> bool:
        return len(self.num) <= 1 and len(self.den) == 1

    @cached_property
    def pole_set(self) -> frozenset:
        """Roots of the denominator, found by scanning F_p."""
        if len(self.den) == 1:
            return frozenset()
        if self.p > 10**7:
            raise ValueError("pole scan is only available for small primes")
        return frozenset(y for y in range(self.p) if peval(self.den, y, self.p) == 0)

    def __call__(self, y: int) -> int | None:
        return evaluate(self, y)

    @cached_property
    def _table(self):
        if self.p > 10**6:
            raise ValueError("value tables are only built for small primes")
        p = self.p
        ys = np.arange(p, dtype=np.int64)
        num = np.zeros(p, dtype=np.int64)
        den = np.zeros(p, dtype=np.int64)
        for c in reversed(self.num):
            num = (num * ys + c) % p
        for c in reversed(self.den):
            den = (den * ys + c) % p
        ok = den != 0
        inv = np.array([pow(int(d), -1, p) if d else 0 for d in den], dtype=np.int64)
        vals = np.where(ok, num * inv % p, 0)
        vals.setflags(write=False)
        ok.setflags(write=False)
        return vals, ok

    def table(self) -> tuple[np.ndarray, np.ndarray]:
        """(values, defined) over all of F_p; values are 0 at poles."""
        return self._table

    def derivative(self) -> "RatFunFp":
        return derivative(self)

    def __str__(self) -> str:
        return f"({_fmt_poly(self.num)})/({_fmt_poly(self.den)}) mod {self.p}"


def reduce_mod_p(f: RatFunQ, p: int) -> RatFunFp:
    """Reduce ``f`` modulo ``p``; raises BadPrime on any degeneracy."""
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    den = _red(f.den, p)
    if not den:
        raise BadPrime(p, "denominator_vanishes")
    out = RatFunFp.make(p, f.num, den)
    if not f.is_constant and out.is_constant:
        raise BadPrime(p, "became_constant")
    return out


def reduce_pair_mod_p(P: RatFunQ, Q: RatFunQ, p: int) -> tuple[RatFunFp, RatFunFp]:
    """Reduce both functions and reject primes where {1, P, Q} loses independence."""
    Pp, Qp = reduce_mod_p(P, p), reduce_mod_p(Q, p)
    if is_linearly_independent_with_one(P, Q) and not is_linearly_independent_with_one(Pp, Qp):
        raise BadPrime(p, "lost_independence")
    return Pp, Qp


def evaluate(f: RatFunFp, y: int) -> int | None:
    """f(y) in F_p, or None when y is a pole."""
    p = f.p
    y %= p
    d = peval(f.den, y, p)
    if d == 0:
        return None
    return peval(f.num, y, p) * pow(d, -1, p) % p


def derivative(f):
    """Quotient-rule derivative (a/b)' = (a'b - ab')/b^2, reduced."""
    if isinstance(f, RatFunQ):
        num = psub(pmul(pderiv(f.num), f.den), pmul(f.num, pderiv(f.den)))
        return RatFunQ.make(num, pmul(f.den, f.den))
    p = f.p
    lost = [k for poly in (f.num, f.den) for k, c in enumerate(poly) if k and c and k % p == 0]
    if lost:
        warnings.warn(f"derivative mod {p} annihilates terms of degree {sorted(set(lost))}",
                      DegreeLossWarning, stacklevel=2)
    num = psub(pmul(pderiv(f.num, p), f.den, p), pmul(f.num, pderiv(f.den, p), p), p)
    return RatFunFp.make(p, num, pmul(f.den, f.den, p))


# ---------------------------------------------------------------------------
# linear independence of {1, P, Q}


class Independence(NamedTuple):
    independent: bool
    relation: tuple | None  # (alpha, beta, gamma) with alpha*P + beta*Q + gamma = 0

    def __bool__(self) -> bool:
        return self.independent


def _nullvector(cols, p):
    """A nonzero solution x of sum_j x_j * cols[j] = 0, or None."""
    n = len(cols)
    rows = max((len(c) for c in cols), default=0)
    M = [[(cols[j][i] if i < len(cols[j]) else 0) for j in range(n)] for i in range(rows)]
    if p is None:
        M = [[Fraction(x) for x in r] for r in M]
    else:
        M = [[x % p for x in r] for r in M]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, rows) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = _inv(M[r][c], p)
        M[r] = [x * inv if p is None else x * inv % p for x in M[r]]
        for i in range(rows):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b if p is None else (a - f * b) % p for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    if not free:
        return None
    fc = free[0]
    x = [0] * n
    x[fc] = 1
    for i, c in enumerate(pivots):
        x[c] = -M[i][fc] if p is None else (-M[i][fc]) % p
    return x


def is_linearly_independent_with_one(P, Q) -> Independence:
    """Decide whether 1, P, Q are linearly independent over the base field.

    Clearing denominators, alpha*P + beta*Q + gamma = 0 becomes
    alpha*a*d + beta*c*b + gamma*b*d = 0 for P = a/b and Q = c/d, a linear
    system in the coefficients solved exactly.
    """
    if isinstance(P, RatFunFp) != isinstance(Q, RatFunFp):
        raise TypeError("P and Q must live over the same field")
    p = P.p if isinstance(P, RatFunFp) else None
    if p is not None and Q.p != p:
        raise ValueError("P and Q reduced modulo different primes")
    a, b, c, d = P.num, P.den, Q.num, Q.den
    cols = [pmul(a, d, p), pmul(c, b, p), pmul(b, d, p)]
    x = _nullvector(cols, p)
    if x is None:
        return Independence(True, None)
    if p is None:
        ints = _to_integer(tuple(x))[0]
    else:
        ints = tuple(int(v) for v in x)
        lead = next(v for v in ints if v)
        ints = tuple(v * pow(lead, -1, p) % p for v in ints)
    if p is None and next(v for v in ints if v) < 0:
        ints = tuple(-v for v in ints)
    return Independence(False, ints)

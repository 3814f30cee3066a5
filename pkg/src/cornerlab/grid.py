"""Complex functions on F_p^2, their Fourier transforms, norms and generators.

Conventions: ``f_hat(xi) = E_x f(x) e_p(-x . xi)`` and
``f(x) = sum_xi f_hat(xi) e_p(xi . x)``.  Arrays are indexed ``[x1, x2]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import TOL


def e_p(k, p: int):
    """e^{2 pi i k / p}, with k reduced mod p first for accuracy."""
    return np.exp(2j * np.pi * (np.asarray(k) % p) / p)


def dft_matrix(p: int, sign: int = -1) -> np.ndarray:
    idx = np.arange(p)
    return e_p(sign * np.outer(idx, idx), p)


@dataclass(frozen=True, eq=False)
class GridFn:
    p: int
    values: np.ndarray
    bounded: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.p, self.p):
            raise ValueError(f"grid must be {self.p}x{self.p}, got {v.shape}")
        if self.bounded and v.size and np.abs(v).max() > 1 + TOL.bounded:
            raise ValueError(f"values exceed modulus 1 (max {np.abs(v).max():.3g})")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def of(cls, values, bounded: bool | None = None) -> "GridFn":
        """Wrap an array; ``bounded`` defaults to whether sup|f| <= 1 holds."""
        v = np.asarray(values, dtype=complex)
        if bounded is None:
            bounded = bool(np.abs(v).max() <= 1 + TOL.bounded) if v.size else True
        return cls(v.shape[0], v, bounded)

    def __add__(self, other: "GridFn") -> "GridFn":
        _check_same(self, other)
        return GridFn.of(self.values + other.values)

    def __sub__(self, other: "GridFn") -> "GridFn":
        _check_same(self, other)
        return GridFn.of(self.values - other.values)

    def __mul__(self, other) -> "GridFn":
        if isinstance(other, GridFn):
            _check_same(self, other)
            return GridFn.of(self.values * other.values)
        return GridFn.of(self.values * other)

    __rmul__ = __mul__

    def conj(self) -> "GridFn":
        return GridFn(self.p, self.values.conj(), self.bounded)

    def transpose(self) -> "GridFn":
        return GridFn(self.p, self.values.T, self.bounded)

    def sup(self) -> float:
        return float(np.abs(self.values).max())

    def line_mean(self, axis: int) -> "GridFn":
        """Average over one coordinate, broadcast back along it.

        ``axis=0`` gives ``E_a f(a, x2)``; ``axis=1`` gives ``E_b f(x1, b)``.
        """
        m = self.values.mean(axis=axis, keepdims=True)
        return GridFn.of(np.broadcast_to(m, self.values.shape))

    def to_json(self) -> dict:
        return {"p": self.p, "values": [[[z.real, z.imag] for z in row] for row in self.values]}


def _check_same(*fs: GridFn):
    ps = {f.p for f in fs}
    if len(ps) != 1:
        raise ValueError(f"prime mismatch: {sorted(ps)}")


def dft2(f: GridFn) -> GridFn:
    """Row-column DFT normalized as an expectation (O(p^3))."""
    F = dft_matrix(f.p, -1)
    return GridFn(f.p, F @ f.values @ F.T / f.p**2)


def idft2(fh: GridFn) -> GridFn:
    F = dft_matrix(fh.p, 1)
    return GridFn.of(F @ fh.values @ F.T)


def line_dft(f: GridFn, axis: int) -> np.ndarray:
    """Fourier transform of every line along ``axis`` (axis=1: lines x1 fixed)."""
    F = dft_matrix(f.p, -1)
    if axis == 1:
        return f.values @ F.T / f.p
    return F @ f.values / f.p


def norm(f, kind: str = "L", r: float = 2.0) -> float:
    """L^r (uniform probability) or l^r (counting measure) norm."""
    if r < 1:
        raise ValueError("r must be >= 1")
    v = f.values if isinstance(f, GridFn) else np.asarray(f)
    a = np.abs(v) ** r
    if kind == "L":
        return float(a.mean() ** (1 / r))
    if kind == "l":
        return float(a.sum() ** (1 / r))
    raise ValueError(f"unknown norm kind {kind!r}")


@dataclass(frozen=True, eq=False)
class AggregateTable:
    """F1[n1, h1, h2] or F2[m2, h1, h2]."""

    p: int
    kind: str
    values: np.ndarray = field(repr=False)

    def l2(self) -> float:
        return float(np.sqrt((np.abs(self.values) ** 2).sum()))

    def pair_l2(self) -> float:
        """|| conj(F)(m, h) F(m', h) ||_{l^2 over m, m', h}."""
        per_h = (np.abs(self.values) ** 2).sum(axis=0)
        return float(np.sqrt((per_h**2).sum()))


def fourier_aggregate(f: GridFn, kind: str) -> AggregateTable:
    """F1(n1, h) = sum_{n2} fh(n) conj fh(n - h);  F2(m2, h) = sum_{m1} fh(m) conj fh(m + h)."""
    p = f.p
    fh = dft2(f).values
    out = np.empty((p, p, p), dtype=complex)
    for h1 in range(p):
        for h2 in range(p):
            if kind == "F1":
                # conj fh(n1 - h1, n2 - h2)
                shifted = np.roll(fh, (h1, h2), axis=(0, 1))
                out[:, h1, h2] = (fh * shifted.conj()).sum(axis=1)
            elif kind == "F2":
                shifted = np.roll(fh, (-h1, -h2), axis=(0, 1))
                out[:, h1, h2] = (fh * shifted.conj()).sum(axis=0)
            else:
                raise ValueError(f"unknown aggregate {kind!r}")
    return AggregateTable(p, kind, out)


# ---------------------------------------------------------------------------
# generators


def generate(spec: str, p: int, seed: int = 0) -> GridFn:
    """Build a grid from a descriptor string.

    Descriptors: ``const[:c]``, ``char:a,b``, ``unimodular``, ``bounded``,
    ``set:density``, ``file:path``.  Random kinds draw from a generator seeded
    by ``(seed, p)``.
    """
    name, _, arg = spec.partition(":")
    rng = np.random.default_rng([seed, p])
    if name in ("const", "constant"):
        c = complex(arg) if arg else 1.0
        return GridFn.of(np.full((p, p), c))
    if name in ("char", "character"):
        a, b = (int(s) for s in arg.split(","))
        x1, x2 = np.meshgrid(np.arange(p), np.arange(p), indexing="ij")
        return GridFn(p, e_p(a * x1 + b * x2, p), True)
    if name in ("unimodular", "random_unimodular"):
        return GridFn(p, np.exp(2j * np.pi * rng.random((p, p))), True)
    if name in ("bounded", "random_bounded"):
        r = np.sqrt(rng.random((p, p)))
        return GridFn(p, r * np.exp(2j * np.pi * rng.random((p, p))), True)
    if name in ("set", "indicator_random_set"):
        density = float(arg) if arg else 0.5
        return GridFn(p, (rng.random((p, p)) < density).astype(complex), True)
    if name in ("file", "from_file"):
        return load_grid(arg, p)
    raise ValueError(f"unknown generator {spec!r}")


def load_grid(path, p: int | None = None) -> GridFn:
    """Read ``{"p": int, "values": p x p array of [re, im]}``."""
    data = json.loads(Path(path).read_text())
    try:
        q = int(data["p"])
        vals = np.array(data["values"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed grid file {path}: {exc}") from exc
    if vals.shape != (q, q, 2):
        raise ValueError(f"grid file {path}: expected shape ({q}, {q}, 2), got {vals.shape}")
    if p is not None and p != q:
        raise ValueError(f"grid file {path} has p={q}, expected {p}")
    return GridFn.of(vals[..., 0] + 1j * vals[..., 1])

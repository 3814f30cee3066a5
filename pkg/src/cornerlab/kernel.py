"""The exponential-sum kernel K(a, b) = (1/p) sum_y e_p(a P(y) + b Q(y)).

y ranges over the points where both P and Q are defined; the same excluded
set is used for every (a, b).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .grid import e_p
from .ratfun import RatFunFp


def joint_table(P: RatFunFp, Q: RatFunFp):
    """Values of P and Q on the common domain of definition.

    Returns (ys, Pv, Qv) as int64 arrays.
    """
    if P.p != Q.p:
        raise ValueError(f"prime mismatch: {P.p} vs {Q.p}")
    pv, pd = P.table()
    qv, qd = Q.table()
    ok = pd & qd
    ys = np.nonzero(ok)[0].astype(np.int64)
    return ys, pv[ok].astype(np.int64), qv[ok].astype(np.int64)


def phase_matrix(p: int, vals: np.ndarray) -> np.ndarray:
    """M[a, j] = e_p(a * vals[j])."""
    a = np.arange(p, dtype=np.int64)
    return e_p(np.outer(a, vals) % p, p)


@dataclass(frozen=True, eq=False)
class KernelTable:
    p: int
    values: np.ndarray = field(repr=False)
    pole_count: int

    def __getitem__(self, ab):
        a, b = ab
        return self.values[a % self.p, b % self.p]

    def dumps(self) -> bytes:
        """Header (p, pole_count) as two int64, then row-major (re, im) float64 pairs."""
        head = struct.pack("<qq", self.p, self.pole_count)
        body = np.ascontiguousarray(self.values, dtype="<c16").tobytes()
        return head + body

    @classmethod
    def loads(cls, data: bytes) -> "KernelTable":
        p, npoles = struct.unpack("<qq", data[:16])
        vals = np.frombuffer(data[16:], dtype="<c16").reshape(p, p).copy()
        return cls(p, vals, npoles)


def kernel_table(P: RatFunFp, Q: RatFunFp) -> KernelTable:
    p = P.p
    ys, pv, qv = joint_table(P, Q)
    # K = A @ B^T / p with A[a, j] = e_p(a P(y_j)), B[b, j] = e_p(b Q(y_j))
    A = phase_matrix(p, pv)
    B = phase_matrix(p, qv)
    K = A @ B.T / p
    K[0, 0] = len(ys) / p
    return KernelTable(p, K, p - len(ys))


def kernel_direct(P: RatFunFp, Q: RatFunFp, a: int, b: int) -> complex:
    """Single entry by plain summation, as an independent path."""
    p = P.p
    s = 0j
    for y in range(p):
        u, v = P(y), Q(y)
        if u is None or v is None:
            continue
        s += np.exp(2j * np.pi * ((a * u + b * v) % p) / p)
    return s / p


def delta_kernel(K: KernelTable, h) -> np.ndarray:
    """G(n, m) = K(n, m) conj K(n - h1, m + h2), indices mod p."""
    h1, h2 = h
    shifted = np.roll(K.values, (h1, -h2), axis=(0, 1))
    return K.values * shifted.conj()


def bombieri_check(K: KernelTable) -> tuple[float, float]:
    """(sup over (a, b) != 0 of |K|, that sup times sqrt(p))."""
    mags = np.abs(K.values).copy()
    mags[0, 0] = 0.0
    sup = float(mags.max())
    return sup, sup * np.sqrt(K.p)


def collision_count(P: RatFunFp, Q: RatFunFp) -> int:
    """#{(y, y') defined : P(y) = P(y') and Q(y) = Q(y')}."""
    _, pv, qv = joint_table(P, Q)
    keys = pv * P.p + qv
    _, counts = np.unique(keys, return_counts=True)
    return int((counts.astype(np.int64) ** 2).sum())


def kernel_mass(K: KernelTable) -> float:
    return float((np.abs(K.values) ** 2).sum())

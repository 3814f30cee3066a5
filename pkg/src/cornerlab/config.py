"""Numerical tolerances shared by every module."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    identity: float = 1e-10        # exact identities in double precision
    slack: float = 1e-9            # inequality slack floor
    bounded: float = 1e-12         # headroom on sup|f| <= 1
    clamp: float = 1e-12           # negative round-off allowed in norms
    charsum_residual: float = 1e-3  # distance of p^6 S to nearest integer
    charsum_imag: float = 1e-8     # relative imaginary residue of S
    tie: float = 1e-12             # argmax ties in line spectra


TOL = Tolerances()

# 2^61 - 1, the field used for randomized identity testing.
MERSENNE61 = (1 << 61) - 1

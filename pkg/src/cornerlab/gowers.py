"""Box norms over subgroups of F_p^2 and constructive U^2 inversion along lines."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .config import TOL
from .grid import GridFn, e_p, line_dft

# subgroup names; "vertical" = 0 x F_p (shifts in x2), "horizontal" = F_p x 0
VERTICAL = "0xF"
HORIZONTAL = "Fx0"
FULL = "FxF"
_ALIASES = {
    "0xF": VERTICAL, "0xFp": VERTICAL, "0xF_p": VERTICAL, "vertical": VERTICAL,
    "Fx0": HORIZONTAL, "Fpx0": HORIZONTAL, "F_px0": HORIZONTAL, "horizontal": HORIZONTAL,
    "FxF": FULL, "F2": FULL, "Fp2": FULL, "full": FULL,
}


class NormClampError(ArithmeticError):
    pass


def parse_dirs(dirs) -> tuple[str, ...]:
    if isinstance(dirs, str):
        dirs = [d for d in dirs.replace(";", ",").split(",") if d]
    out = []
    for d in dirs:
        key = d.strip()
        if key not in _ALIASES:
            raise ValueError(f"unknown subgroup {d!r}; use one of 0xF, Fx0, FxF")
        out.append(_ALIASES[key])
    if not 1 <= len(out) <= 3:
        raise ValueError("box-norm degree must be 1, 2 or 3")
    return tuple(out)


def subgroup_elements(name: str, p: int) -> list[tuple[int, int]]:
    if name == VERTICAL:
        return [(0, t) for t in range(p)]
    if name == HORIZONTAL:
        return [(t, 0) for t in range(p)]
    return [(a, b) for a in range(p) for b in range(p)]


def _coset_mean(g: np.ndarray, name: str) -> np.ndarray:
    if name == VERTICAL:
        return np.broadcast_to(g.mean(axis=1, keepdims=True), g.shape)
    if name == HORIZONTAL:
        return np.broadcast_to(g.mean(axis=0, keepdims=True), g.shape)
    return np.full(g.shape, g.mean())


def _diff(g: np.ndarray, h) -> np.ndarray:
    """g(x) conj g(x + h)."""
    return g * np.roll(g, (-h[0], -h[1]), axis=(0, 1)).conj()


def _box_power(g: np.ndarray, dirs: tuple[str, ...]) -> complex:
    # E_x E_{h in H} g(x) conj g(x+h) = E_x g(x) conj (coset mean of g)(x)
    if len(dirs) == 1:
        return complex((g * _coset_mean(g, dirs[0]).conj()).mean())
    p = g.shape[0]
    hs = subgroup_elements(dirs[-1], p)
    return sum(_box_power(_diff(g, h), dirs[:-1]) for h in hs) / len(hs)


def box_norm_power(f: GridFn, dirs) -> float:
    """The 2^s-th power of the box norm, with the round-off clamp applied."""
    dirs = parse_dirs(dirs)
    val = _box_power(np.asarray(f.values), dirs)
    scale = max(1.0, float(np.abs(f.values).max()) ** (2 ** len(dirs)))
    if abs(val.imag) > 1e-9 * scale:
        raise NormClampError(f"box average has imaginary part {val.imag:.3g}")
    v = val.real
    if v < 0:
        if v < -TOL.clamp * scale:
            raise NormClampError(f"box average {v:.3g} is negative beyond tolerance")
        v = 0.0
    return v


def box_norm(f: GridFn, dirs) -> float:
    dirs = parse_dirs(dirs)
    return box_norm_power(f, dirs) ** (1.0 / 2 ** len(dirs))


def u2_line(f: GridFn, coordinate: str = "second") -> float:
    """Directional U^2 norm computed from line Fourier transforms.

    ``second``: lines x1 fixed, so this is the U^2(0 x F_p) norm;
    ``first``: lines x2 fixed, the U^2(F_p x 0) norm.
    """
    axis = _line_axis(coordinate)
    gh = line_dft(f, axis)
    fourth = (np.abs(gh) ** 4).sum(axis=axis).mean()
    return float(fourth ** 0.25)


def u2_dirs(coordinate: str) -> tuple[str, str]:
    return (VERTICAL, VERTICAL) if coordinate == "second" else (HORIZONTAL, HORIZONTAL)


def _line_axis(coordinate: str) -> int:
    if coordinate == "second":
        return 1
    if coordinate == "first":
        return 0
    raise ValueError(f"coordinate must be 'first' or 'second', got {coordinate!r}")


# ---------------------------------------------------------------------------
# eigenfunctions


@dataclass(frozen=True, eq=False)
class Eigenfunction:
    """Lines of a single frequency: for ``second``, chi(x1, x2) = 1_E(x1) e_p(phi(x1) x2) e(psi(x1)).

    ``first`` is the mirror with the roles of x1 and x2 swapped.
    """

    coordinate: str
    support: np.ndarray  # bool, length p
    phi: np.ndarray  # int, length p
    psi: np.ndarray  # float in [0, 1), length p

    @property
    def p(self) -> int:
        return len(self.phi)

    def grid(self) -> GridFn:
        p = self.p
        t = np.arange(p)
        # rows indexed by the line label, columns by the varying coordinate
        lines = e_p(np.outer(self.phi, t), p) * np.exp(2j * np.pi * self.psi)[:, None]
        lines = lines * self.support[:, None]
        vals = lines if self.coordinate == "second" else lines.T
        return GridFn(p, vals, True)

    def restrict(self, mask) -> "Eigenfunction":
        return Eigenfunction(self.coordinate, self.support & np.asarray(mask, bool), self.phi, self.psi)

    def to_json(self) -> dict:
        return {
            "coordinate": self.coordinate,
            "E": [int(b) for b in self.support],
            "phi": [int(v) for v in self.phi],
            "psi": [float(v) for v in self.psi],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def u2_inverse(f: GridFn, coordinate: str = "second") -> tuple[Eigenfunction, float]:
    """Per line pick the largest line Fourier coefficient and align its phase.

    Returns the eigenfunction and E_x f chi, which is at least the fourth power
    of the matching directional U^2 norm for 1-bounded f.
    """
    axis = _line_axis(coordinate)
    p = f.p
    gh = line_dft(f, axis)
    if axis == 0:
        gh = gh.T  # now [line, frequency]
    mags = np.abs(gh)
    top = mags.max(axis=1, keepdims=True)
    # smallest frequency among near-maximal coefficients
    xi = np.argmax(mags >= top - TOL.tie, axis=1)
    coeff = gh[np.arange(p), xi]
    phi = (-xi) % p
    psi = np.where(np.abs(coeff) > 0, (-np.angle(coeff) / (2 * np.pi)) % 1.0, 0.0)
    psi[psi > 1 - TOL.tie] = 0.0  # round-off just below a full turn
    chi = Eigenfunction(coordinate, np.ones(p, bool), phi.astype(np.int64), psi)
    corr = line_correlations(f, chi).mean()
    return chi, float(corr.real)


def line_correlations(f: GridFn, chi: Eigenfunction) -> np.ndarray:
    """E over the varying coordinate of f * chi, one value per line."""
    prod = f.values * chi.grid().values
    return prod.mean(axis=_line_axis(chi.coordinate))


def detect_eigenfunction(f: GridFn, coordinate: str, tol: float = 1e-9) -> Eigenfunction | None:
    """Recognise f as an eigenfunction: every line is zero or a unimodular single character."""
    p = f.p
    v = f.values if coordinate == "second" else f.values.T
    support = np.zeros(p, bool)
    phi = np.zeros(p, np.int64)
    psi = np.zeros(p)
    for i, line in enumerate(v):
        a = np.abs(line)
        if a.max() <= tol:
            continue
        if np.abs(a - 1).max() > tol:
            return None
        ratio = line[1:] * line[:-1].conj() if p > 1 else np.array([1.0])
        k = int(np.rint(np.angle(ratio[0]) * p / (2 * np.pi))) % p
        if np.abs(ratio - e_p(k, p)).max() > tol:
            return None
        support[i] = True
        phi[i] = k
        psi[i] = (np.angle(line[0]) / (2 * np.pi)) % 1.0
    return Eigenfunction(coordinate, support, phi, psi)

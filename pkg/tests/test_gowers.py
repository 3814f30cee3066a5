import itertools
import json

import numpy as np
import pytest

from cornerlab.gowers import (FULL, HORIZONTAL, VERTICAL, Eigenfunction, NormClampError, box_norm, box_norm_power,
                              detect_eigenfunction, line_correlations, parse_dirs, subgroup_elements, u2_dirs,
                              u2_inverse, u2_line)
from cornerlab.grid import GridFn, generate


def box_power_by_definition(f: GridFn, dirs) -> complex:
    """Average over x and h_i in H_i of the signed conjugate product over the 2^s cube vertices."""
    p = f.p
    v = f.values
    groups = [subgroup_elements(d, p) for d in dirs]
    s = len(dirs)
    total = 0j
    count = 0
    for x1 in range(p):
        for x2 in range(p):
            for hs in itertools.product(*groups):
                prod = 1 + 0j
                for eps in itertools.product((0, 1), repeat=s):
                    a = x1 + sum(e * h[0] for e, h in zip(eps, hs))
                    b = x2 + sum(e * h[1] for e, h in zip(eps, hs))
                    z = v[a % p, b % p]
                    prod *= z if sum(eps) % 2 == 0 else np.conj(z)
                total += prod
                count += 1
    return total / count


@pytest.mark.parametrize("dirs", [(VERTICAL,), (VERTICAL, VERTICAL), (HORIZONTAL, FULL), (VERTICAL, HORIZONTAL, VERTICAL)])
def test_box_norm_matches_definition(dirs):
    f = generate("bounded", 5, 3)
    ref = box_power_by_definition(f, dirs)
    assert abs(ref.imag) < 1e-12
    assert box_norm_power(f, dirs) == pytest.approx(ref.real, abs=1e-12)


def test_constant_has_norm_one():
    f = generate("const", 7)
    for dirs in [(VERTICAL,), (FULL, FULL), (VERTICAL, HORIZONTAL, FULL)]:
        assert box_norm(f, dirs) == pytest.approx(1.0)


@pytest.mark.parametrize("p", (5, 7, 11))
def test_delta_norm(p):
    v = np.zeros((p, p))
    v[2, 3] = 1
    assert box_norm(GridFn.of(v), (VERTICAL, VERTICAL)) == pytest.approx(1 / p, rel=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_subgroup_monotonicity(seed):
    f = generate("bounded", 11, seed)
    for H in (VERTICAL, HORIZONTAL):
        assert box_norm(f, (H, FULL)) <= box_norm(f, (H, H)) + 1e-12
        assert box_norm(f, (FULL, FULL)) <= box_norm(f, (H, FULL)) + 1e-12


@pytest.mark.parametrize("gen", ["bounded", "unimodular", "set:0.4", "char:1,4"])
@pytest.mark.parametrize("coord", ["first", "second"])
def test_line_identity(gen, coord):
    f = generate(gen, 13, 5)
    assert abs(box_norm(f, u2_dirs(coord)) - u2_line(f, coord)) < 1e-10


def test_parse_dirs():
    assert parse_dirs("0xF,Fx0") == (VERTICAL, HORIZONTAL)
    assert parse_dirs(["vertical", "F2"]) == (VERTICAL, FULL)
    with pytest.raises(ValueError):
        parse_dirs("0xF,0xF,0xF,0xF")
    with pytest.raises(ValueError):
        parse_dirs("diag")


def test_clamp_error_on_inconsistent_average(monkeypatch):
    # a large negative box average cannot come from round-off
    import cornerlab.gowers as g

    monkeypatch.setattr(g, "_box_power", lambda vals, dirs: -0.5 + 0j)
    with pytest.raises(NormClampError):
        box_norm_power(generate("const", 5), (VERTICAL,))


def test_inverse_single_character():
    f = generate("char:0,3", 13)
    chi, corr = u2_inverse(f, "second")
    assert np.all(chi.phi == 13 - 3)
    assert np.all(chi.psi == 0)
    assert corr == pytest.approx(1.0, abs=1e-12)


def test_inverse_first_coordinate_character():
    f = generate("char:5,0", 13)
    chi, corr = u2_inverse(f, "first")
    assert np.all(chi.phi == 8)
    assert corr == pytest.approx(1.0, abs=1e-12)


def test_inverse_of_zero():
    chi, corr = u2_inverse(GridFn.of(np.zeros((7, 7))), "second")
    assert corr == 0.0
    assert chi.support.all()


@pytest.mark.parametrize("seed", range(20))
@pytest.mark.parametrize("coord", ["first", "second"])
def test_inverse_correlation_bound(seed, coord):
    f = generate("bounded", 13, seed)
    chi, corr = u2_inverse(f, coord)
    assert corr >= box_norm(f, u2_dirs(coord)) ** 4 - 1e-9
    per_line = line_correlations(f, chi)
    assert np.all(np.abs(per_line.imag) < 1e-12)
    assert np.all(per_line.real >= -1e-12)
    assert np.allclose(np.abs(chi.grid().values), 1)
    # correlation computed by direct summation agrees
    direct = sum(f.values[a, b] * chi.grid().values[a, b] for a in range(13) for b in range(13)) / 169
    assert direct.real == pytest.approx(corr, abs=1e-12)


def test_inverse_phase_invariance():
    f = generate("bounded", 11, 2)
    _, c1 = u2_inverse(f, "second")
    _, c2 = u2_inverse(GridFn.of(f.values * np.exp(0.7j)), "second")
    assert abs(c1 - c2) < 1e-12


def test_tie_break_takes_smallest_frequency():
    p = 7
    x2 = np.arange(p)
    line = (np.exp(2j * np.pi * 2 * x2 / p) + np.exp(2j * np.pi * 5 * x2 / p)) / 2
    f = GridFn.of(np.tile(line, (p, 1)))
    chi, _ = u2_inverse(f, "second")
    assert np.all(chi.phi == (-2) % p)


def test_eigenfunction_json_and_restrict():
    f = generate("char:0,2", 5)
    chi, _ = u2_inverse(f, "second")
    sub = chi.restrict([True, False, True, False, True])
    d = json.loads(sub.dumps())
    assert d["E"] == [1, 0, 1, 0, 1]
    assert d["coordinate"] == "second"
    assert np.all(sub.grid().values[1] == 0)


def test_detect_eigenfunction():
    p = 7
    chi = Eigenfunction("second", np.array([1, 0, 1, 1, 0, 1, 1], bool),
                        np.arange(p), np.linspace(0, 0.9, p))
    found = detect_eigenfunction(chi.grid(), "second")
    assert found is not None
    assert np.array_equal(found.support, chi.support)
    assert np.array_equal(found.phi[found.support], chi.phi[chi.support])
    assert np.allclose(found.grid().values, chi.grid().values)
    assert detect_eigenfunction(generate("bounded", p, 1), "second") is None
    # rows of the second-coordinate eigenfunction are not single characters along x1
    assert detect_eigenfunction(chi.grid(), "first") is None

import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cornerlab.grid import GridFn, dft2, fourier_aggregate, generate, idft2, load_grid, norm

PRIMES = (5, 7, 11, 13)
GENERATORS = ("const", "const:0.5-0.5j", "char:2,3", "unimodular", "bounded", "set:0.3")


def dft_by_definition(f: GridFn) -> np.ndarray:
    p = f.p
    out = np.zeros((p, p), complex)
    for a in range(p):
        for b in range(p):
            for x1 in range(p):
                for x2 in range(p):
                    out[a, b] += f.values[x1, x2] * np.exp(-2j * np.pi * (a * x1 + b * x2) / p)
    return out / p**2


def test_dft_of_constant():
    fh = dft2(generate("const", 7)).values
    expected = np.zeros((7, 7))
    expected[0, 0] = 1
    assert np.abs(fh - expected).max() < 1e-12


def test_dft_of_delta_is_flat():
    v = np.zeros((5, 5))
    v[0, 0] = 1
    assert np.abs(dft2(GridFn.of(v)).values - 1 / 25).max() < 1e-15


def test_dft_of_character_is_delta():
    fh = dft2(generate("char:2,3", 11)).values.copy()
    assert abs(fh[2, 3] - 1) < 1e-12
    fh[2, 3] = 0
    assert np.abs(fh).max() < 1e-12


def test_dft_matches_definition():
    f = generate("bounded", 5, 3)
    assert np.abs(dft2(f).values - dft_by_definition(f)).max() < 1e-12


@pytest.mark.parametrize("p", PRIMES)
@pytest.mark.parametrize("gen", GENERATORS)
def test_parseval_and_inversion(p, gen):
    f = generate(gen, p, 1)
    fh = dft2(f)
    assert abs(norm(f, "L", 2) - norm(fh, "l", 2)) < 1e-10
    assert np.abs(idft2(fh).values - f.values).max() < 1e-10


@given(st.integers(0, 10**6), st.complex_numbers(max_magnitude=3), st.complex_numbers(max_magnitude=3))
@settings(max_examples=25, deadline=None)
def test_dft_is_linear(seed, a, b):
    f, g = generate("bounded", 7, seed), generate("unimodular", 7, seed + 1)
    lhs = dft2(GridFn.of(a * f.values + b * g.values)).values
    rhs = a * dft2(f).values + b * dft2(g).values
    assert np.abs(lhs - rhs).max() < 1e-10


def test_norm_examples():
    assert norm(generate("const", 5), "L", 2) == pytest.approx(1.0)
    v = np.zeros((5, 5))
    v[1, 2] = 1
    assert norm(GridFn.of(v), "L", 4) == pytest.approx((1 / 25) ** 0.25)
    assert norm(GridFn.of(v), "l", 4) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        norm(GridFn.of(v), "L", 0.5)


@pytest.mark.parametrize("seed", range(20))
def test_lebesgue_norms_nest(seed):
    f = generate("bounded", 11, seed)
    assert norm(f, "L", 2) <= norm(f, "L", 4) + 1e-15


def test_aggregate_of_constant():
    for kind in ("F1", "F2"):
        tab = fourier_aggregate(generate("const", 5), kind).values
        expected = np.zeros((5, 5, 5))
        expected[0, 0, 0] = 1
        assert np.abs(tab - expected).max() < 1e-12


def test_aggregate_matches_definition():
    p = 5
    f = generate("bounded", p, 8)
    fh = dft2(f).values
    F1 = fourier_aggregate(f, "F1").values
    F2 = fourier_aggregate(f, "F2").values
    for h1 in range(p):
        for h2 in range(p):
            for n in range(p):
                s1 = sum(fh[n, m] * np.conj(fh[(n - h1) % p, (m - h2) % p]) for m in range(p))
                s2 = sum(fh[m, n] * np.conj(fh[(m + h1) % p, (n + h2) % p]) for m in range(p))
                assert abs(F1[n, h1, h2] - s1) < 1e-12
                assert abs(F2[n, h1, h2] - s2) < 1e-12


@pytest.mark.parametrize("p", (5, 7, 11))
@pytest.mark.parametrize("gen", GENERATORS)
def test_aggregate_bounded_by_l4(p, gen):
    f = generate(gen, p, 2)
    bound = norm(f, "L", 4) ** 2
    for kind in ("F1", "F2"):
        assert fourier_aggregate(f, kind).l2() <= bound + 1e-9


def test_generators_are_deterministic():
    for gen in ("unimodular", "bounded", "set:0.5"):
        a, b = generate(gen, 11, 4), generate(gen, 11, 4)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, generate(gen, 11, 5).values)
        assert a.bounded


def test_random_set_density():
    p, d = 31, 0.5
    f = generate(f"set:{d}", p, 1)
    n = p * p
    sigma = np.sqrt(d * (1 - d) / n)
    assert abs(f.values.real.mean() - d) < 3 * sigma


def test_bounded_flag_is_validated():
    with pytest.raises(ValueError):
        GridFn(3, np.full((3, 3), 2.0), True)
    with pytest.raises(ValueError):
        GridFn(3, np.ones((3, 4)))
    assert not GridFn.of(np.full((3, 3), 2.0)).bounded


def test_from_file_roundtrip(tmp_path):
    f = generate("bounded", 5, 9)
    path = tmp_path / "g.json"
    path.write_text(json.dumps(f.to_json()))
    g = generate(f"file:{path}", 5)
    assert np.array_equal(f.values, g.values)
    with pytest.raises(ValueError):
        load_grid(path, 7)
    path.write_text(json.dumps({"p": 5, "values": [[1, 2]]}))
    with pytest.raises(ValueError):
        load_grid(path)


def test_unknown_generator():
    with pytest.raises(ValueError):
        generate("gaussian", 5)


def test_line_mean_axes():
    f = generate("bounded", 7, 1)
    assert np.allclose(f.line_mean(0).values[3, :], f.values.mean(axis=0))
    assert np.allclose(f.line_mean(1).values[:, 3], f.values.mean(axis=1))

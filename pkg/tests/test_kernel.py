import numpy as np
import pytest

from cornerlab.kernel import (KernelTable, bombieri_check, collision_count, delta_kernel, kernel_direct, kernel_mass,
                              kernel_table)
from cornerlab.ratfun import parse_ratfun, reduce_pair_mod_p

PAIRS = [("t", "t^2"), ("1/t", "t^2"), ("t", "t^3"), ("t^2/(t^7-5*t^3)", "t^17+1/(t^13+19)")]


def pair(P, Q, p):
    return reduce_pair_mod_p(parse_ratfun(P), parse_ratfun(Q), p)


@pytest.mark.parametrize("P,Q", PAIRS)
@pytest.mark.parametrize("p", (5, 7, 11))
def test_table_matches_direct_summation(P, Q, p):
    Pp, Qp = pair(P, Q, p)
    K = kernel_table(Pp, Qp)
    for a in range(p):
        for b in range(0, p, 2):
            assert abs(K[a, b] - kernel_direct(Pp, Qp, a, b)) < 1e-12
    assert K.values[0, 0] == (p - K.pole_count) / p
    assert K.pole_count == len(Pp.pole_set | Qp.pole_set)


@pytest.mark.parametrize("P,Q", PAIRS)
@pytest.mark.parametrize("p", (5, 7, 11, 13))
def test_conjugate_symmetry_and_mass(P, Q, p):
    Pp, Qp = pair(P, Q, p)
    K = kernel_table(Pp, Qp)
    neg = (-np.arange(p)) % p
    assert np.abs(K.values.conj() - K.values[np.ix_(neg, neg)]).max() < 1e-12
    # sum |K|^2 counts pairs (y, y') with equal (P, Q) values
    assert abs(kernel_mass(K) - collision_count(Pp, Qp)) < 1e-8


def test_gauss_sum_magnitudes():
    p = 13
    K = kernel_table(*pair("t", "t^2", p))
    assert np.abs(K.values[1:, 0]).max() < 1e-12
    assert np.allclose(np.abs(K.values[:, 1:]), p**-0.5, atol=1e-12)


def test_pole_excluded_origin():
    K = kernel_table(*pair("1/t", "t^2", 7))
    assert K.values[0, 0] == 6 / 7
    assert K.pole_count == 1


@pytest.mark.parametrize("p", (11, 31, 61))
def test_bombieri_normalized_is_one_for_parabola(p):
    _, nrm = bombieri_check(kernel_table(*pair("t", "t^2", p)))
    assert abs(nrm - 1) < 1e-9


def test_bombieri_ignores_origin_only():
    # P = t alone: rows (a, 0) vanish, so the sup is set by b != 0
    K = kernel_table(*pair("t", "t^3", 11))
    sup, nrm = bombieri_check(K)
    mags = np.abs(K.values)
    assert sup == pytest.approx(mags[:, 1:].max())
    assert nrm == pytest.approx(sup * np.sqrt(11))


def test_delta_kernel():
    p = 7
    K = kernel_table(*pair("t", "t^2", p))
    assert np.allclose(delta_kernel(K, (0, 0)), np.abs(K.values) ** 2)
    h1, h2 = 1, 0
    G = delta_kernel(K, (h1, h2))
    for n in range(p):
        for m in range(p):
            assert abs(G[n, m] - K[n, m] * np.conj(K[n - h1, m + h2])) < 1e-15
    sup = np.abs(K.values).max()
    for h in [(2, 3), (5, 1)]:
        assert np.abs(delta_kernel(K, h)).max() <= sup**2 + 1e-15


def test_binary_roundtrip():
    K = kernel_table(*pair("1/t", "t^2", 5))
    data = K.dumps()
    assert len(data) == 16 + 16 * 25
    L = KernelTable.loads(data)
    assert L.p == 5 and L.pole_count == 1
    assert np.array_equal(L.values, K.values)


def test_collision_count_small():
    # P = t is injective, so only the diagonal collides
    Pp, Qp = pair("t", "t^2", 11)
    assert collision_count(Pp, Qp) == 11
    Pp, Qp = pair("t^2", "t^4", 11)
    assert collision_count(Pp, Qp) == 1 + 2 * 2 * 5

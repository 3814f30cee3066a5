import json

import numpy as np
import pytest

from cornerlab.counting import (corner_census, corner_operator, corner_operator_direct, corner_report,
                                degree_lowering_trace, dual_function, identity_checks, main_term, shift,
                                two_term_operator, validate_inequality_chain)
from cornerlab.gowers import Eigenfunction
from cornerlab.grid import GridFn, generate
from cornerlab.ratfun import parse_ratfun, reduce_mod_p, reduce_pair_mod_p
from cornerlab.varieties import roth_count_charsum


def pair(P, Q, p):
    return reduce_pair_mod_p(parse_ratfun(P), parse_ratfun(Q), p)


def triple(p, seed, gen="bounded"):
    return [generate(gen, p, 3 * seed + i) for i in range(3)]


def test_shift_convention():
    a = np.arange(25).reshape(5, 5)
    assert shift(a, 1, 2)[0, 0] == a[1, 2]
    assert shift(a, -1, 0)[0, 3] == a[4, 3]


def test_constant_inputs():
    ones = generate("const", 7)
    assert corner_operator(ones, ones, ones, *pair("t", "t^2", 7)) == pytest.approx(1.0)
    assert corner_operator(ones, ones, ones, *pair("1/t", "t^2", 7)) == pytest.approx(6 / 7)
    assert main_term(ones, ones, ones) == 1.0


@pytest.mark.parametrize("P,Q", [("t", "t^2"), ("1/t", "t^2"), ("t^2", "1/(t+1)")])
@pytest.mark.parametrize("p", (5, 7))
def test_operator_matches_triple_loop(P, Q, p):
    fs = triple(p, 1)
    Pp, Qp = pair(P, Q, p)
    assert abs(corner_operator(*fs, Pp, Qp) - corner_operator_direct(*fs, Pp, Qp)) < 1e-12


def test_main_term_vanishes_for_oscillating_f2():
    f0, f1, _ = triple(11, 2)
    f2 = generate("char:0,1", 11)
    assert abs(main_term(f0, f1, f2)) < 1e-12


def test_main_term_density_ratio_recorded():
    p = 31
    A = generate("set:0.5", p, 1)
    delta = A.values.real.mean()
    mt = main_term(A, A, A).real
    ratio = mt / delta**3
    assert np.isfinite(ratio) and ratio > 0


@pytest.mark.parametrize("seed", range(5))
def test_lambda_is_bounded(seed):
    fs = triple(11, seed, "unimodular")
    rep = corner_report(*fs, *pair("t", "t^2", 11))
    assert abs(rep.lam) <= 1 + 1e-12 and abs(rep.main) <= 1 + 1e-12
    assert rep.error == pytest.approx(abs(rep.lam - rep.main))
    json.dumps(rep.to_json())


@pytest.mark.parametrize("p", (11, 31))
def test_two_term_linear_shift_is_exact(p):
    f0, f1, _ = triple(p, 4)
    P = reduce_mod_p(parse_ratfun("t"), p)
    for axis in ("first", "second"):
        assert two_term_operator(f0, f1, P, axis).error < 1e-12
    P = reduce_mod_p(parse_ratfun("3*t+2"), p)
    assert two_term_operator(f0, f1, P).error < 1e-12


def test_two_term_pole():
    p = 11
    ones = generate("const", p)
    rep = two_term_operator(ones, ones, reduce_mod_p(parse_ratfun("1/t"), p))
    assert rep.lam == pytest.approx((p - 1) / p)
    assert rep.main == pytest.approx(1.0)
    assert rep.error == pytest.approx(1 / p)


def test_two_term_matches_definition():
    p = 7
    f0, f1, _ = triple(p, 3)
    P = reduce_mod_p(parse_ratfun("t^2"), p)
    s = 0j
    for y in range(p):
        u = P(y)
        for x1 in range(p):
            for x2 in range(p):
                s += f0.values[x1, x2] * f1.values[x1, (x2 + u) % p]
    assert abs(two_term_operator(f0, f1, P, "second").lam - s / p**3) < 1e-12


def test_dual_of_constants():
    ones = generate("const", 7)
    F = dual_function(ones, ones, *pair("t", "t^2", 7), "F1")
    assert np.allclose(F.values, 1)


def test_dual_gauss_magnitude():
    p = 11
    F = dual_function(generate("const", p), generate("char:0,1", p), *pair("t", "t^2", p), "F1")
    assert np.allclose(np.abs(F.values), p**-0.5, atol=1e-12)


@pytest.mark.parametrize("p", (11, 17))
@pytest.mark.parametrize("P,Q", [("t", "t^2"), ("1/t", "t^3")])
def test_duality_and_split_identities(p, P, Q):
    for seed in range(3):
        checks = identity_checks(*triple(p, seed), *pair(P, Q, p))
        assert all(abs(c.lhs - c.rhs) < 1e-10 for c in checks)


def census_by_loops(mask, P, Q):
    p = P.p
    count = 0
    for y in range(p):
        u, v = P(y), Q(y)
        if u is None or v is None:
            continue
        for x1 in range(p):
            for x2 in range(p):
                count += mask[x1, x2] and mask[(x1 + u) % p, x2] and mask[x1, (x2 + v) % p]
    return count


def test_census():
    p = 7
    Pp, Qp = pair("t", "t^2", p)
    assert corner_census(np.ones((p, p), bool), Pp, Qp)[0] == p**3
    assert corner_census([], Pp, Qp)[0] == 0
    mask = np.abs(generate("set:0.5", p, 3).values) > 0.5
    assert corner_census(mask, Pp, Qp)[0] == census_by_loops(mask, Pp, Qp)
    Pp, Qp = pair("1/t", "t^2", p)
    assert corner_census(mask, Pp, Qp)[0] == census_by_loops(mask, Pp, Qp)


def test_census_random_set():
    p = 31
    count, delta, ratio = corner_census(generate("set:0.5", p, 1), *pair("t", "t^2", p))
    assert count > 0 and 0 < delta < 1 and np.isfinite(ratio)


@pytest.fixture(scope="module")
def parabola7():
    Pp, Qp = pair("t", "t^2", 7)
    return Pp, Qp, roth_count_charsum(Pp, Qp).ratio


def test_chain_on_constants(parabola7):
    Pp, Qp, ratio = parabola7
    assert ratio >= 1
    ones = generate("const", 7)
    checks = validate_inequality_chain(ones, ones, ones, Pp, Qp, ratio)
    for c in checks:
        if c.name in ("aggregate_bound", "gowers_control_f2", "gowers_control_f1"):
            assert c.lhs == pytest.approx(1.0)
            assert c.rhs >= 1 - 1e-12
        assert c.ok()


@pytest.mark.parametrize("seed", range(5))
def test_chain_random(parabola7, seed):
    Pp, Qp, ratio = parabola7
    assert all(c.ok() for c in validate_inequality_chain(*triple(7, seed), Pp, Qp, ratio))


def test_chain_character_branch(parabola7):
    Pp, Qp, ratio = parabola7
    f0, f1, _ = triple(7, 0)
    f2 = generate("char:0,2", 7)
    checks = {c.name: c for c in validate_inequality_chain(f0, f1, f2, Pp, Qp, ratio)}
    assert checks["F2_pair_vs_U2"].rhs == pytest.approx(1.0)
    assert all(c.ok() for c in checks.values())


def test_trace_all_ones():
    ones = generate("const", 7)
    tr = degree_lowering_trace(ones, ones, ones, *pair("t", "t^2", 7))
    assert tr.lam == pytest.approx(1) and tr.main == pytest.approx(1)
    assert tr.delta == pytest.approx(0, abs=1e-12)
    assert tr.strict_ok()


def test_trace_flat_eigenfunction_branch():
    p = 11
    f0, f1, _ = triple(p, 5)
    chi = Eigenfunction("second", np.ones(p, bool), np.zeros(p, np.int64), np.linspace(0, 0.5, p))
    tr = degree_lowering_trace(f0, f1, chi.grid(), *pair("t", "t^2", p))
    assert tr.branch == "1"
    assert tr.strict_ok()
    assert tr.final_residual is not None


def test_trace_eigenfunction_pair_bombieri():
    p = 13
    rng = np.random.default_rng(0)
    f0 = generate("bounded", p, 1)
    e1 = Eigenfunction("first", np.ones(p, bool), rng.integers(0, p, p), rng.random(p))
    e2 = Eigenfunction("second", np.ones(p, bool), rng.integers(1, p, p), rng.random(p))
    tr = degree_lowering_trace(f0, e1.grid(), e2.grid(), *pair("t", "t^2", p))
    assert tr.branch == "1"
    assert tr.strict_ok()
    assert tr.final_residual <= tr.final_bound + 1e-12


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("demean", [True, False])
def test_trace_random_strict_steps(seed, demean):
    p = 11
    Pp, Qp = pair("t", "t^2", p)
    ratio = roth_count_charsum(Pp, Qp).ratio
    tr = degree_lowering_trace(*triple(p, seed, "unimodular"), Pp, Qp, ratio, demean=demean)
    assert tr.branch == "3"
    assert tr.strict_ok(), [s.to_json() for s in tr.steps if not s.passed]
    assert tr.min_strict_slack() >= -1e-9
    d = json.loads(json.dumps(tr.to_json()))
    assert d["demeaned"] is demean


def test_prime_mismatch():
    with pytest.raises(ValueError):
        corner_operator(*triple(7, 0), *pair("t", "t^2", 11))

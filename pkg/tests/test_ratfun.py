import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cornerlab.config import MERSENNE61
from cornerlab.ratfun import (BadPrime, DegreeLossWarning, ParseError, RatFunQ, ZeroDenominatorError, derivative,
                              evaluate, is_linearly_independent_with_one, is_prime, parse_ratfun, reduce_mod_p,
                              reduce_pair_mod_p)


def test_parse_cancels_common_factor():
    f = parse_ratfun("t^2/(t^7-5*t^3)")
    assert f.num == (1,)
    assert f.den == (0, -5, 0, 0, 0, 1)


def test_parse_identity():
    f = parse_ratfun("t")
    assert (f.num, f.den) == ((0, 1), (1,))


def test_parse_zero_denominator():
    with pytest.raises(ZeroDenominatorError):
        parse_ratfun("1/(t-t)")


@pytest.mark.parametrize("text", ["t^", "(t+1", "t+*2", "x", "2 3", ""])
def test_parse_syntax_errors_carry_position(text):
    with pytest.raises(ParseError) as exc:
        parse_ratfun(text)
    assert exc.value.pos >= 0


def test_y_is_an_alias():
    assert parse_ratfun("y^17+1/(y^13+19)") == parse_ratfun("t^17+1/(t^13+19)")


def test_normal_form_is_structural():
    assert parse_ratfun("(2*t+2)/(4*t^2-4)") == parse_ratfun("1/(2*t-2)")
    f = parse_ratfun("1/(-t)")
    assert f.den[-1] > 0


def test_print_form():
    assert str(parse_ratfun("t^2-1")) == "(t^2-1)/(1)"
    assert str(parse_ratfun("3/(2*t)")) == "(3)/(2*t)"


def test_reduce_examples():
    f = reduce_mod_p(parse_ratfun("t^2"), 7)
    assert f.num == (0, 0, 1) and f.den == (1,) and f.pole_set == frozenset()
    assert reduce_mod_p(parse_ratfun("1/t"), 5).pole_set == frozenset({0})
    with pytest.raises(BadPrime) as exc:
        reduce_mod_p(parse_ratfun("t^2/7"), 7)
    assert exc.value.reason == "denominator_vanishes"


def test_reduce_became_constant():
    with pytest.raises(BadPrime) as exc:
        reduce_mod_p(parse_ratfun("5*t+1"), 5)
    assert exc.value.reason == "became_constant"


def test_reduce_lost_independence():
    # 3t^2 + 2t reduces to 2t mod 3
    with pytest.raises(BadPrime) as exc:
        reduce_pair_mod_p(parse_ratfun("t"), parse_ratfun("3*t^2+2*t"), 3)
    assert exc.value.reason == "lost_independence"
    P, Q = reduce_pair_mod_p(parse_ratfun("t"), parse_ratfun("3*t^2+2*t"), 5)
    assert Q.num == (0, 2, 3)


def test_reduce_rejects_composite():
    with pytest.raises(ValueError):
        reduce_mod_p(parse_ratfun("t"), 9)


def test_evaluate_examples():
    assert evaluate(reduce_mod_p(parse_ratfun("t^2"), 7), 3) == 2
    inv = reduce_mod_p(parse_ratfun("1/t"), 5)
    assert evaluate(inv, 0) is None
    assert evaluate(inv, 2) == 3


def test_derivative_examples():
    assert derivative(parse_ratfun("t^2")) == parse_ratfun("2*t")
    assert derivative(parse_ratfun("1/t")) == parse_ratfun("-1/t^2")
    assert derivative(parse_ratfun("t^2/(t-1)")) == parse_ratfun("(t^2-2*t)/(t-1)^2")


def test_derivative_matches_difference_quotient():
    # central difference in exact rationals, error O(h^2)
    f = parse_ratfun("t^2/(t-1)")
    df = derivative(f)
    for y in (Fraction(3), Fraction(-2, 5), Fraction(7, 3)):
        h = Fraction(1, 10**12)
        approx = (f.at(y + h) - f.at(y - h)) / (2 * h)
        assert abs(approx - df.at(y)) < Fraction(1, 10**9)


def test_derivative_mod_p_flags_degree_loss():
    with pytest.warns(DegreeLossWarning):
        derivative(reduce_mod_p(parse_ratfun("t^5+t"), 5))


def test_independence_examples():
    assert is_linearly_independent_with_one(parse_ratfun("t"), parse_ratfun("t^2"))
    ind = is_linearly_independent_with_one(parse_ratfun("t"), parse_ratfun("3*t+5"))
    assert not ind and ind.relation == (3, -1, 5)
    assert is_linearly_independent_with_one(parse_ratfun("t^3"), parse_ratfun("t^3-t^2+t"))


def test_is_prime():
    assert [n for n in range(30) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert is_prime(MERSENNE61)


# ---------------------------------------------------------------------------
# properties

small = st.integers(-5, 5)
polys = st.lists(small, min_size=1, max_size=4)


@st.composite
def ratfuns(draw):
    num = draw(polys)
    den = draw(polys.filter(lambda c: any(c)))
    return RatFunQ.make(tuple(num), tuple(den))


@given(ratfuns())
@settings(max_examples=60, deadline=None)
def test_print_parse_roundtrip(f):
    assert parse_ratfun(str(f)) == f


@given(ratfuns(), st.sampled_from([5, 7, 11, 101]), st.integers(0, 100))
@settings(max_examples=80, deadline=None)
def test_reduction_commutes_with_evaluation(f, p, y):
    try:
        fp = reduce_mod_p(f, p)
    except BadPrime:
        return
    exact = f.at(y)
    if exact is None or exact.denominator % p == 0:
        return
    v = evaluate(fp, y)
    assert v == exact.numerator * pow(exact.denominator, -1, p) % p


@given(ratfuns(), ratfuns())
@settings(max_examples=30, deadline=None)
def test_product_rule_at_random_points(f, g):
    lhs = reduce_mod_p(derivative(f * g), MERSENNE61)
    rhs = reduce_mod_p(derivative(f) * g + f * derivative(g), MERSENNE61)
    rng = random.Random(0)
    for _ in range(50):
        y = rng.randrange(MERSENNE61)
        assert evaluate(lhs, y) == evaluate(rhs, y)


@given(ratfuns(), ratfuns())
@settings(max_examples=40, deadline=None)
def test_independence_is_symmetric(P, Q):
    assert bool(is_linearly_independent_with_one(P, Q)) == bool(is_linearly_independent_with_one(Q, P))


@given(ratfuns(), st.fractions(max_denominator=9), st.fractions(max_denominator=9))
@settings(max_examples=40, deadline=None)
def test_affine_relation_is_dependent(P, r, s):
    Q = P * RatFunQ.const(r) + RatFunQ.const(s)
    ind = is_linearly_independent_with_one(P, Q)
    assert not ind
    a, b, c = ind.relation
    assert P * a + Q * b + c == RatFunQ.const(0)

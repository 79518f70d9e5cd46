from fractions import Fraction as Q

import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from eqjk.fracform import (
    Frac,
    FracSum,
    Polynomial,
    SingularMatrix,
    ZeroDenominatorFactor,
    change_basis,
    decompose_generating,
    expand,
)
from eqjk.ratline import inverse, rank, vec

X1, X2 = sp.symbols("x1 x2")


def fsum(*terms, dim):
    return FracSum.of([Frac.make(*t, dim=dim) for t in terms], dim)


# -- polynomials -------------------------------------------------------------------

def test_polynomial_arithmetic_and_json():
    x, y = Polynomial.var(0, 2), Polynomial.var(1, 2)
    p = (x + y * 2) ** 2 - x * x
    assert p == Polynomial.from_json(p.to_json(), 2)
    assert p.evaluate((Q(1), Q(3))) == 48
    assert p.degree() == 2 and p.degree_in(1) == 2
    assert (x * y).divide_linear(vec((1, 0))) == y
    assert (x + y).divide_linear(vec((1, 0))) is None


def test_zero_denominator_rejected():
    with pytest.raises(ZeroDenominatorFactor):
        Frac.make(1, None, [((0, 0), 1)])


# -- change of basis ---------------------------------------------------------------------

def test_change_basis_examples():
    F = fsum((1, [1, 0], [((1, 0), 1)]), dim=2)
    assert change_basis(F, [[1, 0], [0, 1]]) == F
    G = change_basis(fsum((1, None, [((1,), 1)]), dim=1), [[2]])
    assert G == fsum((2, None, [((1,), 1)]), dim=1)
    H = change_basis(fsum((1, None, [((1, 1), 1)]), dim=2), [[1, 1], [0, 1]])
    assert H == fsum((1, None, [((1, 0), 1)]), dim=2)


def test_change_basis_singular():
    with pytest.raises(SingularMatrix):
        change_basis(fsum((1, None, [((1, 0), 1)]), dim=2), [[1, 1], [2, 2]])


ints = st.integers(-3, 3)
vec2 = st.tuples(ints, ints).filter(any)


@settings(max_examples=50)
@given(st.lists(vec2, min_size=1, max_size=3), st.tuples(ints, ints),
       st.tuples(ints, ints, ints, ints).filter(lambda m: m[0] * m[3] - m[1] * m[2] != 0))
def test_change_basis_round_trip(den, lam, m):
    F = fsum((Polynomial.var(0, 2) + 1, lam, [(d, 1) for d in den]), dim=2)
    B = [[m[0], m[1]], [m[2], m[3]]]
    Binv = inverse([vec(r) for r in B])
    assert change_basis(change_basis(F, B), Binv) == F


# -- expansion ------------------------------------------------------------------------

def test_expand_geometric():
    s = expand(Frac.make(1, None, [((1, 1), 1)]), [0], 2)
    x2 = (Q(0), Q(7))
    assert [s.coefficient((k,)).evaluate(x2) for k in range(3)] == [Q(1, 7), Q(-1, 49), Q(1, 343)]


def test_expand_exponential_truncation():
    s = expand(Frac.make(1, [2], [((1,), 3)]), [0], 0)
    assert s.coefficient((-1,)).evaluate(()) == 2


def test_expand_two_variables():
    s = expand(Frac.make(1, None, [((1, 0), 1), ((1, 1), 1)]), [0, 1], 1)
    assert {k: v.evaluate(()) for k, v in s.coeffs.items()} == {(-1, -1): 1, (0, -2): -1, (1, -3): 1}


def _sympy_expr(num, lam, den):
    e = sp.exp(lam[0] * X1 + lam[1] * X2) * num
    for (a, b), m in den:
        e /= (a * X1 + b * X2) ** m
    return e


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.tuples(st.integers(-3, 3), st.integers(1, 3)), st.integers(1, 2)),
                min_size=1, max_size=3),
       st.tuples(st.integers(-2, 2), st.integers(-2, 2)), st.integers(0, 2))
def test_expand_matches_sympy_series(den, lam, bound):
    """Expansion in x1 << x2 against sympy's Laurent series in x1."""
    F = Frac.make(1, lam, [(d, m) for d, m in den])
    s = expand(F, [0], bound)
    expr = _sympy_expr(1, lam, den) * sp.exp(-lam[1] * X2)  # unexpanded part stays symbolic
    series = sp.series(expr, X1, 0, bound + 1).removeO()
    low = -sum(m for (a, _), m in den if a)
    point = Q(5, 3)
    for k in range(low, bound + 1):
        want = sp.Rational(series.coeff(X1, k).subs(X2, sp.Rational(5, 3)))
        got = s.coefficient((k,)).evaluate((Q(0), point))
        assert got == Q(int(want.p), int(want.q)), k


# -- generating decomposition ---------------------------------------------------------------

def test_decompose_examples():
    F = fsum((1, [1, 1], [((1, 0), 1), ((0, 1), 1)]), dim=2)
    gen, non = decompose_generating(F, 2)
    assert gen == F and non.is_zero()
    gen, non = decompose_generating(fsum((1, None, [((1, 0), 1)]), dim=2), 2)
    assert gen.is_zero() and not non.is_zero()
    F = fsum((1, None, [((1, 0), 1), ((0, 1), 1), ((1, 1), 1)]), dim=2)
    gen, non = decompose_generating(F, 2)
    assert gen + non == F


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.tuples(ints, ints).filter(any), st.integers(1, 2)), min_size=1, max_size=4),
       st.tuples(ints, ints))
def test_decompose_recombines(den, lam):
    F = fsum((Polynomial.var(1, 2) + 2, lam, den), dim=2)
    gen, non = decompose_generating(F, 2)
    assert gen + non == F
    for t in gen.terms:
        assert rank([a for a, _ in t.den]) == 2 == len(t.den)
    for t in non.terms:
        assert rank([a for a, _ in t.den]) < 2


def test_json_round_trip():
    F = fsum((Polynomial.var(0, 2) * 3 + 1, [1, -2], [((1, 2), 2), ((0, 1), 1)]), dim=2)
    assert FracSum.from_json(F.to_json(split=1)) == F

"""Acceptance criteria 1-10.

Each test is one criterion; the conftest hook prints a PASS/FAIL line per
criterion at the end of the run.  Run directly with
``python3 tests/test_acceptance.py`` or through ``pytest``.
"""

import random
import time
from fractions import Fraction as Q
from math import factorial

import pytest

from eqjk import hilbplane as hp
from eqjk.eqres import eq_res, is_generic_basis_eq
from eqjk.fracform import Polynomial
from eqjk.jkres import closed_form_simple, is_generic_basis, jk_res, res_plus
from eqjk.locint import GroupData, jk_quotient_abelian
from eqjk.ratline import OrderedBasis, cone_contains, polarize

from instances import (
    c2_data,
    cp1_abbv,
    cp1_quotient_reference,
    cp1_s_abbv,
    cp1xcp1_abbv,
    rand_basis,
    rand_independent,
    rand_vec,
    simple_frac,
    simple_instance,
)

P_OF_N = [1, 1, 2, 3, 5, 7, 11]


def test_criterion_01_closed_form_vs_series_oracle():
    rng = random.Random(20240601)
    start = time.perf_counter()
    for _ in range(200):
        r = rng.randint(1, 3)
        lam, alphas = simple_instance(rng, r)
        basis = OrderedBasis.standard(r)
        expected = closed_form_simple(lam, alphas, basis)
        assert res_plus(simple_frac(lam, alphas), basis) == expected, (lam, alphas)
    assert time.perf_counter() - start < 10


def test_criterion_02_cone_vanishing():
    rng = random.Random(7)
    found = 0
    while found < 100:
        r = rng.randint(1, 3)
        alphas = rand_independent(rng, r)
        basis = OrderedBasis.standard(r)
        tilde = [polarize(a, basis)[0] for a in alphas]
        lam = rand_vec(rng, r)
        if cone_contains(tilde, lam):
            continue
        found += 1
        F = simple_frac(lam, [(a, rng.randint(1, 3)) for a in alphas])
        assert res_plus(F, basis).is_zero(), (lam, alphas)


def _generic_bases(rng, F, count, ok):
    """``count`` random generic bases alternating the polarization of F's first weight."""
    w = F.terms[0].den[0][0]
    out = []
    while len(out) < count:
        b = rand_basis(rng, F.dim)
        if polarize(w, b)[1] == (-1) ** len(out) and ok(F, b):
            out.append(b)
    return out


def test_criterion_03_basis_and_polarization_independence():
    rng = random.Random(3)
    start = time.perf_counter()
    for F in (cp1_abbv(), cp1_abbv(-3, 1), cp1xcp1_abbv()):
        ref = jk_res(F, OrderedBasis.standard(F.dim))
        assert not ref.is_zero()
        for b in _generic_bases(rng, F, 5, is_generic_basis):
            assert jk_res(F, b) == ref
    for F in (cp1_s_abbv(), cp1_s_abbv((-2, 1), (5, -2))):
        ref = eq_res(F, OrderedBasis.standard(2), 1)
        assert not ref.is_zero()
        for b in _generic_bases(rng, F, 5, lambda G, b: is_generic_basis_eq(G, b, 1)):
            assert eq_res(F, b, 1) == ref
    assert time.perf_counter() - start < 30


@pytest.mark.parametrize("xi", [1, 2, Q(1, 2)])
def test_criterion_04_quotient_desk_check(xi):
    group = GroupData(gamma=(1, 0), level=(xi, 0))
    v = jk_quotient_abelian(c2_data(), None, group, OrderedBasis.standard(2), 1)
    assert v.limit() == cp1_quotient_reference(xi)


@pytest.mark.parametrize("N", [2, 5, 11])
def test_criterion_05_hilbert_n1(N):
    assert hp.hilb_integrate(Polynomial.const(1, 2), 1, N) == hp.SigmaValue.mono(Q(1, N), -2)


def test_criterion_06_hilbert_n2():
    start = time.perf_counter()
    for N in (3, 4, 5, 9):
        d = 2 * (N + 1) ** 2 * (N - 1)
        assert hp.b_lambda((2,), N) == hp.SigmaValue.mono(Q(N, d), -2)
        assert hp.b_lambda((1, 1), N) == hp.SigmaValue.mono(Q(-1, d), -2)
        want = hp.SigmaValue.mono(Q(1, 2 * N * N), -4)
        one = Polynomial.const(1, 3)
        assert hp.hilb_integrate(one, 2, N) == want
        assert hp.armleg_oracle(one, 2, N) == want
    assert time.perf_counter() - start < 5


def _classes(n):
    C = [None] + [hp.elementary(i, n) for i in range(1, 4)]
    s = hp.sigma_poly(n)
    return {"1": Polynomial.const(1, n + 1), "C1": C[1], "C2": C[2], "C3": C[3],
            "C1^2": C[1] ** 2, "sigma*C1": s * C[1]}


def test_criterion_07_triple_path_equality():
    fast = 0.0
    slow = 0.0
    for n in (1, 2, 3):
        for N in (n + 1, n + 3):
            for name, alpha in _classes(n).items():
                t = time.perf_counter()
                f = hp.hilb_integrate(alpha, n, N, "formula")
                o = hp.hilb_integrate(alpha, n, N, "oracle")
                if n == 3:
                    fast += time.perf_counter() - t
                t = time.perf_counter()
                e = hp.hilb_integrate(alpha, n, N, "eqres")
                if n == 3:
                    slow += time.perf_counter() - t
                assert f == o == e, (n, N, name, f, o, e)
    assert fast < 1
    assert slow < 300


def test_criterion_08_formula_vs_oracle_to_n5():
    start = time.perf_counter()
    for n in range(1, 6):
        one = Polynomial.const(1, n + 1)
        assert hp.hilb_integrate(one, n, n + 1) == hp.armleg_oracle(one, n, n + 1)
    assert time.perf_counter() - start < 30


def test_criterion_09_kernel_and_rank():
    start = time.perf_counter()
    n, N = 2, 5
    C1, s = hp.elementary(1, n), hp.sigma_poly(n)
    assert hp.kernel_member(Polynomial(n + 1), n, N)
    assert hp.kernel_member((C1 + s * 3) * (C1 + s * (N + 2)), n, N)
    assert not hp.kernel_member(Polynomial.const(1, n + 1), n, N)
    assert [hp.evaluation_rank(k, k + 2, k) for k in range(1, 7)] == P_OF_N[1:]
    assert time.perf_counter() - start < 60


def test_criterion_10_vanishing_filter_soundness():
    n = 2
    for N in (3, 4):
        for alpha in (Polynomial.const(1, n + 1), hp.elementary(1, n) ** 2, hp.elementary(2, n)):
            survey = hp.pole_survey(alpha, n, N)
            kept = hp.SigmaValue()
            total = hp.SigmaValue()
            survivors = 0
            for _, _, reasons, value in survey:
                total = total + value
                if reasons:
                    assert value.is_zero(), reasons
                else:
                    survivors += 1
                    kept = kept + value
            assert survivors == factorial(n) * P_OF_N[n]
            formula = hp.hilb_integrate(alpha, n, N)
            assert kept == formula
            assert total == formula


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))

"""The equivariant residue EqRes over k*-poles.

Coordinates ``0..q-1`` are the k* directions and ``q..dim-1`` the s*
directions.  Each pole ``V`` gets the coordinate system ``Y = (v_1..v_q,
e_q..e_{dim-1})`` built from its induced basis, so the residue engine can treat
every factor with an s*-part as analytic (``v << s``).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import factorial
from typing import Sequence

from .fracform import Frac, FracSum, Polynomial
from .jkres import (
    ResidueValue,
    _distinct_forms,
    _poly_in_s,
    _residue_in_U,
    _u_matrix,
    enumerate_tuples,
    is_generic_basis,
    is_zero_generic,
)
from .ratline import (
    ONE,
    ZERO,
    Covector,
    OrderedBasis,
    PerturbedCovector,
    det,
    inverse,
    lex_sign,
    normalize,
    polarize,
    rank,
    rref,
    solve_in_span,
    span_key,
    unit,
    vec,
    vecmat,
)


@dataclass(frozen=True)
class Pole:
    span: tuple          # q spanning covectors (normalized denominator forms)
    key: tuple           # reduced row echelon form of the span
    generators_index: tuple  # (term index, form indices) of the first spanning subset found

    @property
    def q(self) -> int:
        return len(self.span)


def enumerate_poles(F: FracSum, split: int) -> list[Pole]:
    """Distinct spans of ``split`` denominator forms of one term that are complementary to s*."""
    found: dict[tuple, Pole] = {}
    for ti, t in enumerate(F.terms):
        forms = _distinct_forms(t)
        for idx in combinations(range(len(forms)), split):
            sub = [forms[i] for i in idx]
            if rank([a[:split] for a in sub]) < split:
                continue
            key = span_key(sub)
            if key not in found:
                found[key] = Pole(tuple(sub), key, (ti, idx))
    return [found[k] for k in sorted(found)]


def in_pole(alpha: Covector, pole: Pole) -> bool:
    return rank(list(pole.span) + [alpha]) == pole.q


def induced_basis(pole: Pole, x: OrderedBasis) -> tuple:
    """Induced basis ``v_1..v_q`` of the pole, dual to the coordinate directions of minimal index sum."""
    C = [x.coords(w) for w in pole.span]
    # pivot columns of the row space give the lexicographically first
    # independent column set, which also has minimal index sum
    _, piv = rref(C)
    sub = [[row[i] for i in piv] for row in C]
    D = inverse(sub)
    return tuple(vecmat(D[l], list(pole.span)) for l in range(pole.q))


def pole_frame(pole: Pole, x: OrderedBasis, split: int) -> OrderedBasis:
    v = induced_basis(pole, x)
    n = x.dim
    return OrderedBasis(tuple(v) + tuple(unit(n, i) for i in range(split, n)))


def pole_gram(v: Sequence[Covector], split: int, kframe: Sequence[Covector] | None = None) -> Fraction:
    """``1/|det pr_k*(v)|`` in the declared k* frame."""
    d = det([a[:split] for a in v])
    if kframe is not None:
        d = d / det([vec(f) for f in kframe])
    return 1 / abs(d)


def pole_contribution(F: FracSum, pole: Pole, x: OrderedBasis, split: int,
                      keep_eps: bool = True, kframe=None) -> ResidueValue:
    """JKRes over the induced basis of one pole, summed over all terms."""
    Y = pole_frame(pole, x, split)
    gram = pole_gram(Y.vectors[:split], split, kframe)
    out = ResidueValue.zero(F.dim - split)
    in_v = lambda c: not any(c[split:])
    for t in F.terms:
        forms = _distinct_forms(t)
        for _, chain in enumerate_tuples(forms, Y.coords, split, admissible=in_v):
            res = _residue_in_U(t, _u_matrix(chain, Y), split, keep_eps, gate=True)
            for e, fr in (res or {}).items():
                out.add_frac(e, fr.with_num(fr.num * gram))
    return out


def _pole_job(args):
    return pole_contribution(*args)


def eq_res(F: FracSum, x: OrderedBasis, split: int, keep_eps: bool = True,
           kframe=None, workers: int | None = None) -> ResidueValue:
    """EqRes: sum of pole contributions, in canonical pole order."""
    poles = enumerate_poles(F, split)
    jobs = [(F, p, x, split, keep_eps, kframe) for p in poles]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_pole_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        parts = [_pole_job(j) for j in jobs]
    out = ResidueValue.zero(F.dim - split)
    for p in parts:
        out = out + p
    return out


def closed_form_eq_res(lam, alphas: Sequence[tuple[Covector, int]], x: OrderedBasis,
                       split: int, kframe=None) -> ResidueValue:
    """EqRes of ``e^lam / prod alpha_i^(n_i+1)`` with ``split`` alphas, in closed form."""
    if not isinstance(lam, PerturbedCovector):
        lam = PerturbedCovector.plain(lam)
    n = x.dim
    out = ResidueValue.zero(n - split)
    if len(alphas) != split:
        raise ValueError("need exactly split alphas")
    jac = [vec(a)[:split] for a, _ in alphas]
    d = det(jac)
    if d == 0:
        return out
    if kframe is not None:
        d = d / det([vec(f) for f in kframe])
    pol = [polarize(vec(a), x) for a, _ in alphas]
    tilde = [a for a, _ in pol]
    kb = solve_in_span([a[:split] for a in tilde], lam.base[:split])
    kp = solve_in_span([a[:split] for a in tilde], lam.pert[:split])
    rest_b = list(lam.base)
    rest_p = list(lam.pert)
    for a, b, p in zip(tilde, kb, kp):
        for i in range(n):
            rest_b[i] -= b * a[i]
            rest_p[i] -= p * a[i]
    poly = [1 / abs(d)]
    for (alpha, m), (_, eps), b, p in zip(alphas, pol, kb, kp):
        if lex_sign(b, p) < 0:
            return out
        k = m - 1
        f = _poly_in_s(b, p, k)
        c = Fraction(eps ** (k + 1), factorial(k))
        new = [ZERO] * (len(poly) + len(f) - 1)
        for i, u in enumerate(poly):
            for j, w in enumerate(f):
                new[i + j] += u * w * c
        poly = new
    exp = PerturbedCovector(tuple(rest_b[split:]), tuple(rest_p[split:]))
    for k, c in enumerate(poly):
        if c:
            out.add_frac(k, Frac(Polynomial.const(c, n - split), exp))
    return out


# -- genericity in the equivariant setting -----------------------------------------

def _restricted(F: FracSum, pole: Pole, Y: OrderedBasis, split: int) -> FracSum:
    """The pole's part of ``F`` in induced coordinates, with s* treated as a parameter."""
    terms = []
    for t in F.terms:
        forms = []
        for a, m in t.den:
            c = Y.coords(a)
            if not any(c[split:]):
                forms.append((c[:split], m))
        if not forms or rank([f for f, _ in forms]) < split:
            continue
        b = Y.coords(t.exp.base)[:split]
        p = Y.coords(t.exp.pert)[:split]
        terms.append(Frac(Polynomial.const(1, split), PerturbedCovector(b, p), tuple(forms)))
    return FracSum(tuple(terms), split)


def is_zero_generic_eq(F: FracSum, x: OrderedBasis, split: int) -> bool:
    for pole in enumerate_poles(F, split):
        Y = pole_frame(pole, x, split)
        if not is_zero_generic(_restricted(F, pole, Y, split)):
            return False
    return True


def is_generic_basis_eq(F: FracSum, x: OrderedBasis, split: int) -> bool:
    std = OrderedBasis.standard(split)
    for pole in enumerate_poles(F, split):
        Y = pole_frame(pole, x, split)
        if not is_generic_basis(_restricted(F, pole, Y, split), std):
            return False
    return True

"""Iterated residues, Res+, JKRes and the simple-fraction closed form.

Engine outline
--------------
For a tuple ``beta_1..beta_k`` the projected, polarized vectors ``u_i`` are
scaled so that their ``x_i``-coefficient is 1; together with ``x_{k+1}..x_r``
they form the coordinate system ``U``.  The residue is taken one variable at a
time, ``u_1`` first.  At step ``j`` a factor depending on ``u_j`` alone is the
pole; any other factor containing ``u_j`` also contains a variable that
dominates ``u_j`` and is Taylor-expanded.  Only the single Laurent coefficient
that survives is ever formed, over a common denominator.

The infinitesimal perturbation parameter is carried as an extra polynomial
variable (index ``r``); results are returned graded by its degree.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import factorial
from typing import Iterable, Iterator, Sequence

from .fracform import Frac, FracSum, Polynomial, binom, canonical_den
from .ratline import (
    ONE,
    ZERO,
    Covector,
    OrderedBasis,
    PerturbedCovector,
    RatlineError,
    axpy,
    det,
    fmt_q,
    gram_factor,
    in_span,
    inverse,
    is_zero,
    lex_sign,
    normalize,
    polarize,
    rank,
    scale,
    solve_in_span,
    unit,
    vec,
    vecmat,
    zeros,
)


class DependentAlphas(RatlineError):
    pass


class NonGenericLambda(RatlineError):
    pass


class DegenerateTuple(RatlineError):
    pass


class DiscontinuousLimit(RatlineError):
    pass


# -- values ------------------------------------------------------------------

@dataclass
class ResidueValue:
    """A value graded by powers of the infinitesimal parameter.

    ``parts[k]`` is the coefficient of ``s^k``; each is a ``FracSum`` over the
    coordinates left after the residue.
    """

    dim: int
    parts: dict = field(default_factory=dict)

    @classmethod
    def zero(cls, dim: int) -> "ResidueValue":
        return cls(dim, {})

    @classmethod
    def of(cls, F: FracSum) -> "ResidueValue":
        return cls(F.dim, {0: F} if F.terms else {})

    def add_frac(self, k: int, t: Frac) -> None:
        cur = self.parts.get(k)
        self.parts[k] = FracSum((t,), self.dim) if cur is None else FracSum(cur.terms + (t,), self.dim)

    def __add__(self, other: "ResidueValue") -> "ResidueValue":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        parts = dict(self.parts)
        for k, v in other.parts.items():
            parts[k] = parts[k] + v if k in parts else v
        return ResidueValue(self.dim, parts)

    def __neg__(self) -> "ResidueValue":
        return self.scaled(-1)

    def __sub__(self, other: "ResidueValue") -> "ResidueValue":
        return self + (-other)

    def scaled(self, c) -> "ResidueValue":
        return ResidueValue(self.dim, {k: v.scaled(c) for k, v in self.parts.items()})

    def simplify(self) -> "ResidueValue":
        parts = {}
        for k, v in sorted(self.parts.items()):
            s = v.simplify()
            if s.terms:
                parts[k] = s
        return ResidueValue(self.dim, parts)

    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.parts.values())

    def __eq__(self, other) -> bool:
        if not isinstance(other, ResidueValue):
            return NotImplemented
        return self.dim == other.dim and (self - other).is_zero()

    __hash__ = None

    def limit(self) -> FracSum:
        """The value at parameter 0 as a plain ``FracSum``."""
        if any(k < 0 and not v.is_zero() for k, v in self.parts.items()):
            raise DiscontinuousLimit("negative powers of the perturbation parameter")
        v = self.parts.get(0, FracSum((), self.dim))
        return FracSum(tuple(Frac(t.num, t.exp.unperturbed(), t.den, t.lin) for t in v.terms), self.dim)

    def scalar(self) -> Fraction:
        """Rational value of a zero-dimensional, unperturbed result."""
        if self.dim != 0:
            raise ValueError("value still depends on coordinates")
        total = ZERO
        for k, v in self.parts.items():
            if k != 0 and not v.is_zero():
                raise ValueError("value depends on the perturbation parameter")
        for t in self.parts.get(0, FracSum()).terms:
            total += t.numerator().const_value()
        return total

    def to_json(self) -> dict:
        return {"dim": self.dim,
                "parts": {str(k): v.simplify().to_json()["terms"]
                          for k, v in sorted(self.parts.items()) if not v.is_zero()}}

    @classmethod
    def from_json(cls, data) -> "ResidueValue":
        dim = int(data["dim"])
        return cls(dim, {int(k): FracSum.from_json({"dim": dim, "terms": terms})
                         for k, terms in data.get("parts", {}).items()})


def limit_at_zero(v: ResidueValue) -> ResidueValue:
    return ResidueValue.of(v.limit())


# -- engine ------------------------------------------------------------------

class _Term:
    """Working term ``coef * poly * prod lin * e^(base + s*pert) / prod den`` in U coordinates."""

    __slots__ = ("coef", "poly", "lin", "den", "base", "pert")

    def __init__(self, coef, poly, lin, den, base, pert):
        self.coef = coef
        self.poly = poly
        self.lin = lin
        self.den = den
        self.base = base
        self.pert = pert


def _drop(a: Covector, j: int) -> Covector:
    return a[:j] + (ZERO,) + a[j + 1:]


def _to_engine(t: Frac, uinv: Sequence[Covector], keep_eps: bool) -> _Term | None:
    r = len(uinv)
    nv = r + 1
    coef = ONE
    den: Counter = Counter()
    for a, m in t.den:
        s, an = normalize(vecmat(a, uinv))
        coef /= s ** m
        den[an] += m
    lin: Counter = Counter()
    for a, m in t.lin:
        b = vecmat(a, uinv)
        if is_zero(b):
            return None
        s, bn = normalize(b)
        coef *= s ** m
        lin[bn] += m
    if t.num.is_const():
        c = t.num.const_value()
        if not c:
            return None
        coef *= c
        poly = None
    else:
        images = [tuple(row) + (ZERO,) for row in uinv]
        poly = t.num.substitute_linear(images)
        if poly.is_zero():
            return None
    base = vecmat(t.exp.base, uinv)
    pert = vecmat(t.exp.pert, uinv) if keep_eps or any(t.exp.pert) else zeros(r)
    return _Term(coef, poly, lin, den, base, pert)


def _linpoly(a: Covector, nv: int) -> Polynomial:
    return Polynomial.linear(tuple(a) + (ZERO,) * (nv - len(a)))


def _mul_trunc(a: list, b: list, K: int, nv: int) -> list:
    out = []
    for k in range(K + 1):
        acc = Polynomial(nv)
        for i in range(k + 1):
            x, y = a[i], b[k - i]
            if x and y:
                acc = acc + x * y
        out.append(acc)
    return out


def _step(t: _Term, j: int, keep_eps: bool) -> _Term | None:
    r = len(t.base)
    nv = r + 1
    pure = unit(r, j)
    m = t.den.get(pure, 0)
    if not m:
        return None
    coef = t.coef
    den: Counter = Counter()
    mixed_den = []
    for a, p in t.den.items():
        if a == pure:
            continue
        if a[j]:
            mixed_den.append((a, p))
        else:
            den[a] += p
    lin: Counter = Counter()
    mixed_lin = []
    for a, p in t.lin.items():
        if a[j]:
            mixed_lin.append((a, p))
        else:
            lin[a] += p
    base = _drop(t.base, j)
    pert = _drop(t.pert, j)
    if m == 1:
        for a, p in mixed_den:
            s, wn = normalize(_drop(a, j))
            coef /= s ** p
            den[wn] += p
        for a, p in mixed_lin:
            w = _drop(a, j)
            if is_zero(w):
                return None
            s, wn = normalize(w)
            coef *= s ** p
            lin[wn] += p
        poly = t.poly
        if poly is not None:
            poly = poly.set_zero(j)
            if poly.is_zero():
                return None
        return _Term(coef, poly, lin, den, base, pert)

    K = m - 1
    zero = Polynomial(nv)
    if t.poly is None:
        series = [Polynomial.const(1, nv)] + [zero] * K
    else:
        parts = t.poly.coeffs_in(j)
        series = [parts.get(k, zero) for k in range(K + 1)]
    one = Polynomial.const(1, nv)
    for a, p in mixed_lin:
        # factor (u_j + w); a[j] == 1 after normalization
        w = _linpoly(_drop(a, j), nv)
        fac = [w, one] + [zero] * (K - 1) if K >= 1 else [w]
        for _ in range(p):
            series = _mul_trunc(series, fac, K, nv)
    for a, p in mixed_den:
        # (u_j + w)^(-p) = w^(-p-K) * sum_n binom(-p, n) u^n w^(K-n)
        wv = _drop(a, j)
        s, wn = normalize(wv)
        w = _linpoly(wv, nv)
        pows = [one]
        for _ in range(K):
            pows.append(pows[-1] * w)
        fac = [pows[K - n] * binom(-p, n) for n in range(K + 1)]
        series = _mul_trunc(series, fac, K, nv)
        coef /= s ** (p + K)
        den[wn] += p + K
    bj, pj = t.base[j], (t.pert[j] if keep_eps else ZERO)
    if bj or pj:
        e = Polynomial.linear((ZERO,) * r + (pj,), bj)
        ex = [one]
        for n in range(1, K + 1):
            ex.append(ex[-1] * e * Fraction(1, n))
        series = _mul_trunc(series, ex, K, nv)
    poly = series[K]
    if poly.is_zero():
        return None
    return _Term(coef, poly, lin, den, base, pert)


def _from_engine(t: _Term, k: int) -> dict[int, Frac]:
    """Split a finished engine term by perturbation degree, dropping consumed coordinates."""
    r = len(t.base)
    d = r - k
    rest = lambda a: tuple(a[k:])
    den = tuple(sorted((rest(a), m) for a, m in t.den.items()))
    lin = tuple(sorted((rest(a), m) for a, m in t.lin.items()))
    exp = PerturbedCovector(rest(t.base), rest(t.pert))
    positions = [None] * k + list(range(d)) + [None]
    if t.poly is None:
        return {0: Frac(Polynomial.const(t.coef, d), exp, den, lin)}
    out = {}
    for e, part in t.poly.coeffs_in(r).items():
        num = part.reindex(d, positions) * t.coef
        if not num.is_zero():
            out[e] = Frac(num, exp, den, lin)
    return out


def _residue_in_U(t: Frac, U: Sequence[Covector], k: int, keep_eps: bool,
                  gate: bool) -> dict[int, Frac] | None:
    uinv = inverse(U)
    et = _to_engine(t, uinv, keep_eps)
    if et is None:
        return None
    if gate:
        for j in range(k):
            if lex_sign(et.base[j], et.pert[j]) < 0:
                return None
    for j in range(k):
        et = _step(et, j, keep_eps)
        if et is None:
            return None
    return _from_engine(et, k)


# -- projections and tuples --------------------------------------------------

def projected_chain(betas: Sequence[Covector], basis: OrderedBasis) -> list[Covector] | None:
    """Normalized projected vectors ``u_1..u_k`` in basis coordinates.

    None when some ``beta_i`` has no ``x_i`` component left after projecting
    away ``u_1..u_(i-1)``.
    """
    chain: list[Covector] = []
    for i, b in enumerate(betas):
        c = basis.coords(vec(b))
        for l, u in enumerate(chain):
            if c[l]:
                c = axpy(-c[l], u, c)
        if not c[i]:
            return None
        chain.append(scale(1 / c[i], c))
    return chain


def _u_matrix(chain: Sequence[Covector], basis: OrderedBasis) -> list[Covector]:
    k = len(chain)
    rows = [basis.combine(u) for u in chain]
    rows += list(basis.vectors[k:])
    return rows


def iterated_residue(F: Frac, basis: OrderedBasis, betas: Sequence[Covector],
                     keep_eps: bool = True) -> ResidueValue:
    """``Res_{x_k|beta_k} ... Res_{x_1|beta_1} F``, over the coordinates of ``x_{k+1}..x_r``."""
    k = len(betas)
    d = basis.dim - k
    chain = projected_chain(betas, basis)
    out = ResidueValue.zero(d)
    if chain is None:
        return out
    res = _residue_in_U(F, _u_matrix(chain, basis), k, keep_eps, gate=False)
    for e, fr in (res or {}).items():
        out.add_frac(e, fr)
    return out


def enumerate_tuples(forms: Sequence[Covector], coords_of, k: int,
                     admissible=None) -> Iterator[tuple[tuple[int, ...], list[Covector]]]:
    """Non-equivalent ordered ``k``-tuples of ``forms`` with a full projected chain.

    ``coords_of`` maps a form to basis coordinates.  Each class is reported
    once, through its lexicographically smallest index tuple, together with
    its normalized projected chain.  ``admissible`` optionally filters forms.
    """
    cs = [coords_of(a) for a in forms]
    idx = [i for i in range(len(forms)) if admissible is None or admissible(cs[i])]

    def rec(level: int, chain: list[Covector], picked: tuple[int, ...]):
        if level == k:
            yield picked, list(chain)
            return
        groups: dict[Covector, int] = {}
        for i in idx:
            if i in picked:
                continue
            c = cs[i]
            for l, u in enumerate(chain):
                if c[l]:
                    c = axpy(-c[l], u, c)
            if not c[level]:
                continue
            key = scale(1 / c[level], c)
            if key not in groups:
                groups[key] = i
        for key, i in sorted(groups.items(), key=lambda kv: kv[1]):
            chain.append(key)
            yield from rec(level + 1, chain, picked + (i,))
            chain.pop()

    yield from rec(0, [], ())


def _distinct_forms(t: Frac) -> list[Covector]:
    seen = []
    for a, _ in t.den:
        _, an = normalize(a)
        if an not in seen:
            seen.append(an)
    return seen


def tuple_contributions(F: FracSum, basis: OrderedBasis, keep_eps: bool = True):
    """Yield ``(term_index, index_tuple, order, contribution)`` for every gated tuple of Res+."""
    r = basis.dim
    for ti, t in enumerate(F.terms):
        forms = _distinct_forms(t)
        for picked, chain in enumerate_tuples(forms, basis.coords, r):
            U = _u_matrix(chain, basis)
            res = _residue_in_U(t, U, r, keep_eps, gate=True)
            if not res:
                continue
            val = ResidueValue.zero(0)
            for e, fr in res.items():
                val.add_frac(e, fr)
            order = _order_from_chain(t.exp.unperturbed(), U, r)
            yield ti, picked, order, val


def res_plus(F: FracSum, basis: OrderedBasis, keep_eps: bool = True) -> ResidueValue:
    """Res+ over all non-equivalent full tuples of each term."""
    out = ResidueValue.zero(0)
    for _, _, _, v in tuple_contributions(F, basis, keep_eps):
        out = out + v
    return out


def jk_res(F: FracSum, basis: OrderedBasis, keep_eps: bool = True) -> ResidueValue:
    return res_plus(F, basis, keep_eps).scaled(gram_factor(basis))


# -- order and closed form ---------------------------------------------------

def _order_from_chain(lam: PerturbedCovector, U: Sequence[Covector], k: int) -> int:
    uinv = inverse(U)
    b = vecmat(lam.base, uinv)
    p = vecmat(lam.pert, uinv)
    order = 0
    for j in range(k):
        if b[j] or p[j]:
            order = j + 1
    return order


def residue_order(lam: PerturbedCovector, betas: Sequence[Covector], basis: OrderedBasis) -> int:
    """Largest ``j`` with a nonzero ``j``-th coefficient of ``lam`` along the projected tuple."""
    if not isinstance(lam, PerturbedCovector):
        lam = PerturbedCovector.plain(lam)
    chain = projected_chain(betas, basis)
    if chain is None:
        raise DegenerateTuple("tuple does not satisfy the projection condition")
    return _order_from_chain(lam, _u_matrix(chain, basis), len(betas))


def _poly_in_s(b: Fraction, p: Fraction, n: int) -> list[Fraction]:
    """Coefficients of ``(b + s p)^n`` by power of ``s``."""
    return [Fraction(binom(n, k)) * b ** (n - k) * p ** k for k in range(n + 1)]


def closed_form_simple(lam, alphas: Sequence[tuple[Covector, int]], basis: OrderedBasis) -> ResidueValue:
    """Res+ of ``e^lam / prod alpha_i^(n_i+1)`` for ``r`` independent alphas."""
    if not isinstance(lam, PerturbedCovector):
        lam = PerturbedCovector.plain(lam)
    r = basis.dim
    if len(alphas) != r:
        raise DependentAlphas("need exactly r alphas")
    pol = [polarize(vec(a), basis) for a, _ in alphas]
    tilde = [a for a, _ in pol]
    if rank(tilde) < r:
        raise DependentAlphas("alphas are linearly dependent")
    lb = solve_in_span(tilde, lam.base)
    lp = solve_in_span(tilde, lam.pert)
    a = [basis.coords(t) for t in tilde]
    scale_ = 1 / abs(det(a))
    # value = scale * prod eps^(n+1) * (lb_i + s lp_i)^n / n!
    poly = [scale_]
    for (alpha, m), (_, eps), b, p in zip(alphas, pol, lb, lp):
        if not b and not p:
            raise NonGenericLambda("lambda lies in a proper coordinate subspace")
        if lex_sign(b, p) < 0:
            return ResidueValue.zero(0)
        n = m - 1
        f = _poly_in_s(b, p, n)
        c = Fraction(eps ** (n + 1), factorial(n))
        new = [ZERO] * (len(poly) + len(f) - 1)
        for i, x in enumerate(poly):
            for j, y in enumerate(f):
                new[i + j] += x * y * c
        poly = new
    out = ResidueValue.zero(0)
    for k, c in enumerate(poly):
        if c:
            out.add_frac(k, Frac.make(c, dim=0))
    return out


# -- genericity --------------------------------------------------------------

def _lam_in(gens: Sequence[Covector], lam: PerturbedCovector) -> bool:
    return in_span(gens, lam.base) and in_span(gens, lam.pert)


def is_zero_generic(F: FracSum, dim: int | None = None) -> bool:
    """Whether 0 avoids every affine span ``lam_I + <alpha_J>`` of dimension below ``dim``."""
    r = F.dim if dim is None else dim
    for t in F.terms:
        forms = _distinct_forms(t)
        for size in range(0, min(r - 1, len(forms)) + 1):
            for J in combinations(forms, size):
                if rank(J) == size and _lam_in(J, t.exp):
                    return False
    return True


def is_generic_basis(F: FracSum, basis: OrderedBasis) -> bool:
    """Genericity of an ordered basis: no accidental incidences of ``lam_I`` with spans mixing basis vectors."""
    r = basis.dim
    for t in F.terms:
        forms = _distinct_forms(t)
        for size in range(0, min(r - 1, len(forms)) + 1):
            for J in combinations(forms, size):
                if rank(J) < size or _lam_in(J, t.exp):
                    continue
                for extra in combinations(basis.vectors, r - 1 - size):
                    if _lam_in(list(J) + list(extra), t.exp):
                        return False
    return True


def rational_stream(seed: int, dim: int, lo: int = -9, hi: int = 9) -> Iterator[Covector]:
    """Deterministic stream of nonzero rational covectors."""
    rng = random.Random(seed)
    while True:
        v = tuple(Fraction(rng.randint(lo, hi), rng.randint(1, 7)) for _ in range(dim))
        if any(v):
            yield v


def generic_basis(F: FracSum, seed: int = 0, tries: int = 1000) -> OrderedBasis:
    """First basis from the seeded stream that is generic for ``F``."""
    stream = rational_stream(seed, F.dim)
    for _ in range(tries):
        vs = [next(stream) for _ in range(F.dim)]
        if det(vs) == 0:
            continue
        b = OrderedBasis(tuple(vs))
        if is_generic_basis(F, b):
            return b
    raise NonGenericLambda("no generic basis found")

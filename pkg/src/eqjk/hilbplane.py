"""Equivariant integrals on the Hilbert scheme of points of the plane.

Coordinates are ``(tau_1, ..., tau_n, sigma)``: the first ``n`` are the k*
directions, ``sigma`` (index ``n``) spans s*.  A torus fixed point is a
Young diagram whose box in column ``a >= 1`` and row ``b >= 0`` evaluates
``tau`` to ``-(a + N b) sigma``.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, permutations
from math import factorial, prod
from typing import Sequence

from .eqres import Pole, enumerate_poles, eq_res, pole_contribution
from .fracform import Frac, FracSum, Polynomial
from .locint import FixedPointDatum, GroupData, hk_quotient
from .ratline import (
    ONE,
    ZERO,
    OrderedBasis,
    PerturbedCovector,
    RatlineError,
    fmt_q,
    rank,
    solve_in_span,
    unit,
)


class InvalidN(RatlineError):
    pass


class NonSymmetricClass(RatlineError):
    pass


Partition = tuple  # weakly decreasing positive parts


def check_n(n: int, N: int) -> None:
    if n < 0:
        raise ValueError("n must be nonnegative")
    if N <= n:
        raise InvalidN(f"need N > n, got N={N}, n={n}")


def partitions(n: int) -> list[Partition]:
    """All partitions of ``n`` in decreasing lexicographic order."""
    def rec(rest: int, cap: int):
        if rest == 0:
            yield ()
            return
        for first in range(min(rest, cap), 0, -1):
            for tail in rec(rest - first, first):
                yield (first,) + tail
    return list(rec(n, n))


def boxes(lam: Partition) -> list[tuple[int, int]]:
    """Boxes ``(a, b)`` row by row from the bottom-left box ``(1, 0)``."""
    return [(a, b) for b, part in enumerate(lam) for a in range(1, part + 1)]


def content_vector(lam: Partition, N: int) -> tuple[int, ...]:
    check_n(sum(lam), N)
    return tuple(-(a + N * b) for a, b in boxes(lam))


# -- sigma-Laurent values ------------------------------------------------------

@dataclass(frozen=True)
class SigmaValue:
    """A Laurent polynomial in ``sigma``: ``{exponent: coefficient}``."""

    coeffs: tuple = ()

    @classmethod
    def of(cls, d: dict) -> "SigmaValue":
        return cls(tuple(sorted((int(k), Fraction(v)) for k, v in d.items() if v)))

    @classmethod
    def mono(cls, c, k: int) -> "SigmaValue":
        return cls.of({k: c})

    def as_dict(self) -> dict:
        return dict(self.coeffs)

    def __add__(self, other: "SigmaValue") -> "SigmaValue":
        d = self.as_dict()
        for k, v in other.coeffs:
            d[k] = d.get(k, ZERO) + v
        return SigmaValue.of(d)

    def __mul__(self, other) -> "SigmaValue":
        if not isinstance(other, SigmaValue):
            return SigmaValue.of({k: v * other for k, v in self.coeffs})
        d: dict = {}
        for k1, v1 in self.coeffs:
            for k2, v2 in other.coeffs:
                d[k1 + k2] = d.get(k1 + k2, ZERO) + v1 * v2
        return SigmaValue.of(d)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not self.coeffs

    def to_json(self) -> dict:
        if not self.coeffs:
            return {"coeff": "0", "sigma_exp": 0}
        if len(self.coeffs) == 1:
            k, v = self.coeffs[0]
            return {"coeff": fmt_q(v), "sigma_exp": k}
        return {"terms": [{"coeff": fmt_q(v), "sigma_exp": k} for k, v in self.coeffs]}

    def __repr__(self) -> str:
        return " + ".join(f"{v}*sigma^{k}" for k, v in self.coeffs) or "0"


def sigma_value_of(F: FracSum) -> SigmaValue:
    """Read a one-variable, exponential-free ``FracSum`` as a Laurent polynomial in sigma."""
    if F.dim != 1:
        raise ValueError("expected a function of sigma alone")
    total: dict = {}
    for t in F.terms:
        if any(t.exp.base):
            raise ValueError("value carries an exponential factor")
        shift = 0
        c = ONE
        for a, m in t.den:
            c /= a[0] ** m
            shift -= m
        for a, m in t.lin:
            c *= a[0] ** m
            shift += m
        for e, v in t.num.terms.items():
            k = e[0] + shift
            total[k] = total.get(k, ZERO) + v * c
    return SigmaValue.of(total)


# -- classes ---------------------------------------------------------------

def elementary(i: int, n: int) -> Polynomial:
    """``C_i(tau)``, the ``i``-th elementary symmetric polynomial, in ``n + 1`` variables."""
    out = {}
    for S in combinations(range(n), i):
        e = [0] * (n + 1)
        for s in S:
            e[s] = 1
        out[tuple(e)] = ONE
    return Polynomial(n + 1, out)


def sigma_poly(n: int) -> Polynomial:
    return Polynomial.var(n, n + 1)


def is_symmetric(alpha: Polynomial, n: int) -> bool:
    if n < 2:
        return True
    swap = [1, 0] + list(range(2, n + 1))
    cycle = list(range(1, n)) + [0, n]
    return all(alpha.reindex(n + 1, p) == alpha for p in (swap, cycle))


def _check_class(alpha: Polynomial, n: int) -> None:
    if alpha.nvars != n + 1:
        raise ValueError(f"class must be a polynomial in {n + 1} variables")
    if not is_symmetric(alpha, n):
        raise NonSymmetricClass("class is not symmetric in tau_1..tau_n")


def evaluate_at(alpha: Polynomial, p: Sequence[int]) -> SigmaValue:
    """``alpha(p * sigma, sigma)`` as a polynomial in sigma."""
    out: dict = {}
    for e, c in alpha.terms.items():
        v = c
        for pi, k in zip(p, e):
            if k:
                v *= Fraction(pi) ** k
        deg = sum(e)
        out[deg] = out.get(deg, ZERO) + v
    return SigmaValue.of(out)


# -- integrand ---------------------------------------------------------------

def _lf(n: int, tau: Sequence[tuple[int, int]], s) -> tuple:
    v = [ZERO] * (n + 1)
    for i, c in tau:
        v[i] += c
    v[n] = Fraction(s)
    return tuple(v)


def hilb_integrand(n: int, N: int) -> Frac:
    """The fixed-point integrand over ``(tau_1..tau_n, sigma)``, split ``n``.

    The regulator ``e^(s * sum tau_i / 2)`` sits in the perturbation slot.
    """
    check_n(n, N)
    d = n + 1
    const = Fraction((N + 1) ** n, N ** n * factorial(n))
    lin = Counter()
    den = Counter()
    for i in range(n):
        for j in range(n):
            if i != j:
                lin[_lf(n, ((i, 1), (j, -1)), 0)] += 1
                lin[_lf(n, ((i, 1), (j, -1)), N + 1)] += 1
                den[_lf(n, ((i, 1), (j, -1)), 1)] += 1
                den[_lf(n, ((i, 1), (j, -1)), N)] += 1
        den[_lf(n, ((i, 1),), 1)] += 1
        den[_lf(n, ((i, -1),), N)] += 1
    # ((N+1) sigma)^n / (N^n sigma^(2n)) leaves sigma^(-n)
    if n:
        den[_lf(n, (), 1)] += n
    pert = tuple([Fraction(1, 2)] * n + [ZERO])
    num = Polynomial.const(const, d)
    return Frac(num, PerturbedCovector(tuple([ZERO] * d), pert), tuple(sorted(den.items())),
                tuple(sorted(lin.items())))


def hilb_basis(n: int) -> OrderedBasis:
    """The polarizing basis ``(sigma, tau_1, ..., tau_n)``."""
    d = n + 1
    return OrderedBasis((unit(d, n),) + tuple(unit(d, i) for i in range(n)))


# -- b_lambda by factor surgery ------------------------------------------------

def _integrand_factors(n: int, N: int) -> tuple[Counter, Counter]:
    num, den = Counter(), Counter()
    for i in range(n):
        for j in range(n):
            if i != j:
                num[("root", i, j)] += 1
                num[("cx", i, j)] += 1
                den[("h", i, j)] += 1
                den[("v", i, j)] += 1
        den[("h0", i)] += 1
        den[("v0", i)] += 1
    return num, den


def _factor_value(f: tuple, p: Sequence[int], N: int) -> int:
    """Coefficient of sigma of a named linear factor at ``tau = p sigma``."""
    kind = f[0]
    if kind == "root":
        return p[f[1]] - p[f[2]]
    if kind == "cx":
        return N + 1 + p[f[1]] - p[f[2]]
    if kind == "h":
        return 1 + p[f[1]] - p[f[2]]
    if kind == "v":
        return N + p[f[1]] - p[f[2]]
    if kind == "h0":
        return 1 + p[f[1]]
    if kind == "v0":
        return N - p[f[1]]
    raise ValueError(kind)


def _removed_factors(lam: Partition, labels: Sequence[int]) -> tuple[Counter, Counter]:
    """Factors of the integrand cancelled by the tree of the labeled diagram.

    Denominator: every horizontal edge (including the one from vertex 0 into
    the bottom-left box) and every vertical edge.  Numerator: one dashed
    diagonal under each horizontal edge above the bottom row.
    """
    at = {b: labels[k] for k, b in enumerate(boxes(lam))}
    num, den = Counter(), Counter()
    for (a, b), i in at.items():
        if (a, b) == (1, 0):
            den[("h0", i)] += 1
        left = at.get((a - 1, b))
        if left is not None:
            den[("h", i, left)] += 1
            if b > 0:
                num[("cx", i, at[(a - 1, b - 1)])] += 1
        below = at.get((a, b - 1))
        if below is not None:
            den[("v", i, below)] += 1
    return num, den


def b_lambda(lam: Partition, N: int, labels: Sequence[int] | None = None) -> SigmaValue:
    """Per-partition weight ``b_lambda(sigma)``.

    ``labels[k]`` is the 0-based label of the ``k``-th box in row-major
    order; every labeling gives the same value.
    """
    n = sum(lam)
    check_n(n, N)
    labels = list(range(n)) if labels is None else list(labels)
    if sorted(labels) != list(range(n)):
        raise ValueError("labels must be a permutation of 0..n-1")
    p = [0] * n
    for k, c in enumerate(content_vector(lam, N)):
        p[labels[k]] = c
    num, den = _integrand_factors(n, N)
    cut_num, cut_den = _removed_factors(lam, labels)
    value = Fraction(1)
    for factors, sign in ((num - cut_num, 1), (den - cut_den, -1)):
        for f, m in factors.items():
            v = _factor_value(f, p, N)
            if not v:
                raise ArithmeticError(f"factor {f} vanishes at the fixed point")
            value *= Fraction(v) ** (sign * m)
    k = sum((num - cut_num).values()) - sum((den - cut_den).values())
    return SigmaValue.mono(value, k)


# -- integration -----------------------------------------------------------------

def _prefactor(n: int, N: int) -> SigmaValue:
    return SigmaValue.mono(Fraction(N + 1, N) ** n, -n)


def hilb_integrate_formula(alpha: Polynomial, n: int, N: int) -> SigmaValue:
    total = SigmaValue()
    for lam in partitions(n):
        total = total + evaluate_at(alpha, content_vector(lam, N)) * b_lambda(lam, N)
    return _prefactor(n, N) * total


def hilb_integrate_eqres(alpha: Polynomial, n: int, N: int, workers: int | None = None) -> SigmaValue:
    t = hilb_integrand(n, N)
    F = FracSum((t.with_num(t.num * alpha),), n + 1)
    if n == 0:
        return sigma_value_of(F)
    v = eq_res(F, hilb_basis(n), n, keep_eps=False, workers=workers)
    return sigma_value_of(v.limit())


def _armleg_sum(alpha: Polynomial, n: int, t1, t2) -> SigmaValue:
    total = SigmaValue()
    for lam in partitions(n):
        cols = [sum(1 for part in lam if part > i) for i in range(lam[0])] if lam else []
        euler = Fraction(1)
        roots = []
        for j, part in enumerate(lam):
            for i in range(part):
                leg = part - i - 1      # boxes to the right
                arm = cols[i] - j - 1   # boxes above
                euler *= ((leg + 1) * t1 - arm * t2) * (-leg * t1 + (arm + 1) * t2)
                roots.append(-(t1 * (i + 1) + t2 * j))
        total = total + evaluate_at(alpha, roots) * SigmaValue.mono(1 / euler, -2 * n)
    return total


@lru_cache(maxsize=None)
def _oracle_weights(N: int) -> tuple[int, int]:
    """``(t1, t2)`` as multiples of sigma, calibrated once on a single point.

    Of the two assignments of ``{sigma, N sigma}`` to the plane weights, the
    right one gives ``1/(N sigma^2)`` for the class 1 and ``-1/(N sigma)`` for
    ``C_1``.  The class 1 alone cannot tell them apart.
    """
    one, c1 = Polynomial.const(1, 2), elementary(1, 1)
    want = (SigmaValue.mono(Fraction(1, N), -2), SigmaValue.mono(Fraction(-1, N), -1))
    hits = [w for w in ((1, N), (N, 1))
            if (_armleg_sum(one, 1, *w), _armleg_sum(c1, 1, *w)) == want]
    assert len(hits) == 1, "oracle weight convention is ambiguous"
    return hits[0]


def armleg_oracle(alpha: Polynomial, n: int, N: int) -> SigmaValue:
    """Fixed-point sum over monomial ideals with arm/leg tangent weights."""
    check_n(n, N)
    _check_class(alpha, n)
    return _armleg_sum(alpha, n, *_oracle_weights(N))


def hilb_integrate(alpha: Polynomial, n: int, N: int, method: str = "formula",
                   workers: int | None = None) -> SigmaValue:
    check_n(n, N)
    _check_class(alpha, n)
    if method == "formula":
        return hilb_integrate_formula(alpha, n, N)
    if method == "eqres":
        return hilb_integrate_eqres(alpha, n, N, workers)
    if method == "oracle":
        return armleg_oracle(alpha, n, N)
    raise ValueError(f"unknown method {method!r}")


def hilb_fixed_point_data(n: int, N: int) -> tuple[list[FixedPointDatum], GroupData]:
    """Upstairs data: the origin of the linear space with its weights, and the U(n) data."""
    check_n(n, N)
    weights = []
    for i in range(n):
        for j in range(n):
            weights.append(_lf(n, ((i, 1), (j, -1)), N))
            weights.append(_lf(n, ((i, 1), (j, -1)), 1))
        weights.append(_lf(n, ((i, -1),), N))
        weights.append(_lf(n, ((i, 1),), 1))
    roots = [_lf(n, ((i, 1), (j, -1)), 0) for i in range(n) for j in range(n) if i != j]
    cx = [_lf(n, ((i, 1), (j, -1)), N + 1) for i in range(n) for j in range(n)]
    data = [FixedPointDatum("origin", (0,) * (n + 1), tuple(weights))]
    # no K-direction: k* has rank n and the sigma-first basis is used as is
    return data, GroupData(tuple(roots), tuple(cx), factorial(n), None, None)


def hilb_integrate_driver(alpha: Polynomial, n: int, N: int) -> SigmaValue:
    """The same integral through the hyperKähler quotient driver."""
    data, group = hilb_fixed_point_data(n, N)
    rho = tuple([Fraction(1, 2)] * n + [ZERO])
    v = hk_quotient(data, alpha, group, hilb_basis(n), n, rho=rho)
    return sigma_value_of(v.limit())


# -- Kirwan kernel and ring presentation -------------------------------------------

def kernel_member(alpha: Polynomial, n: int, N: int) -> bool:
    check_n(n, N)
    _check_class(alpha, n)
    return all(evaluate_at(alpha, content_vector(lam, N)).is_zero() for lam in partitions(n))


def ideal_generators(lam: Partition, n: int, N: int) -> list[Polynomial]:
    """``C_i(tau) - C_i(p_lambda) sigma^i`` for ``i = 1..n``."""
    check_n(n, N)
    if sum(lam) != n:
        raise ValueError("partition does not match n")
    p = content_vector(lam, N)
    out = []
    for i in range(1, n + 1):
        c = elementary(i, n)
        val = evaluate_at(c, p).as_dict().get(i, ZERO)
        out.append(c - sigma_poly(n) ** i * val)
    return out


def _monomial_symmetric(mu: Sequence[int], point: Sequence[int]) -> Fraction:
    n = len(point)
    e = tuple(mu) + (0,) * (n - len(mu))
    return sum((prod(Fraction(x) ** k for x, k in zip(point, perm)) for perm in set(permutations(e))),
               ZERO)


def evaluation_rank(n: int, N: int, degree_bound: int) -> int:
    """Rank of the matrix of monomial symmetric functions evaluated at all fixed points, sigma = 1."""
    check_n(n, N)
    if degree_bound < n:
        raise ValueError("degree_bound must be at least n")
    mus = [mu for d in range(degree_bound + 1) for mu in partitions(d) if len(mu) <= n]
    points = [content_vector(lam, N) for lam in partitions(n)]
    rows = [tuple(_monomial_symmetric(mu, p) for p in points) for mu in mus]
    return rank(rows)


# -- pole graphs and vanishing filters ---------------------------------------------

@dataclass
class PoleGraph:
    p: tuple              # tau_i = p_i sigma at the pole
    edges: list           # (kind, source, target) with vertex 0 the origin; kind 'h' or 'v'
    coords: dict          # vertex -> (x, y) lattice coordinates (y in units of N)


def _decode(form: tuple, n: int, N: int):
    """Edge encoded by an integrand denominator form, or None for pure sigma."""
    tau = {i: c for i, c in enumerate(form[:n]) if c}
    s = form[n]
    kind = "h" if s == 1 else "v" if s == N else None
    if len(tau) == 2:
        (i, ci), (j, cj) = sorted(tau.items(), key=lambda kv: -kv[1])
        assert ci == 1 and cj == -1
        return kind, j + 1, i + 1
    if len(tau) == 1:
        (i, c), = tau.items()
        if c == 1:
            return "h", 0, i + 1
        return "v", i + 1, 0
    return None


def pole_graph(pole: Pole, n: int, N: int) -> PoleGraph:
    d = n + 1
    # tau = p sigma solves every spanning form at sigma = 1
    rows = [w[:n] for w in pole.span]
    rhs = tuple(-w[n] for w in pole.span)
    cols = [tuple(r[i] for r in rows) for i in range(n)]
    p = solve_in_span(cols, rhs)
    t = hilb_integrand(n, N)
    edges = []
    for a, _ in t.den:
        if a[:n] == (ZERO,) * n:
            continue
        if sum(c * x for c, x in zip(a[:n], p)) + a[n] == 0:
            edges.append(_decode(a, n, N))
    coords = {0: (0, 0)}
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for kind, s, tgt in edges:
                dx, dy = (1, 0) if kind == "h" else (0, 1)
                if s == u and tgt not in coords:
                    coords[tgt] = (coords[u][0] + dx, coords[u][1] + dy)
                    nxt.append(tgt)
                elif tgt == u and s not in coords:
                    coords[s] = (coords[u][0] - dx, coords[u][1] - dy)
                    nxt.append(s)
        frontier = nxt
    return PoleGraph(tuple(p), edges, coords)


def rejection_reasons(g: PoleGraph, n: int) -> list[str]:
    """Names of the vanishing criteria met by a pole graph (empty: the pole may contribute)."""
    reasons = []
    verts = range(1, n + 1)
    tails = {v: [(k, s) for k, s, t in g.edges if t == v] for v in verts}
    pairs = Counter(frozenset((s, t)) for _, s, t in g.edges)
    if any(m > 1 for m in pairs.values()):
        reasons.append("multiple edges")
    if any(t == 0 for _, _, t in g.edges):
        reasons.append("edge into vertex 0")
    if any(not tails[v] for v in verts):
        reasons.append("vertex without tail")
    if any(pi >= 0 for pi in g.p):
        reasons.append("nonnegative evaluation point")
    if len(g.coords) < n + 1:
        reasons.append("disconnected graph")
    if any(v in g.coords and g.coords[v][0] <= 0 for v in verts):
        reasons.append("vertex with x <= 0")
    if any(v in g.coords and g.coords[v][1] < 0 for v in verts):
        reasons.append("vertex with y < 0")
    if not any(s == 0 and k == "h" for k, s, _ in g.edges):
        reasons.append("no edge from vertex 0")
    if any(any(s == 0 for _, s in tails[v]) and len(tails[v]) > 1 for v in verts):
        reasons.append("vertex fed from 0 and another vertex")
    spots = Counter(g.coords[v] for v in verts if v in g.coords)
    if any(m > 1 for m in spots.values()):
        reasons.append("double vertex")
    h = {(s, t) for k, s, t in g.edges if k == "h"}
    v_ = {(s, t) for k, s, t in g.edges if k == "v"}
    for i, j in h:
        if i == 0:
            continue
        for jj, k in v_:
            if jj != j:
                continue
            if not any((i, l) in v_ and (l, k) in h for l in verts):
                reasons.append("missing square (upper left)")
    for i, l in v_:
        for ll, k in h:
            if ll != l:
                continue
            if not any((i, j) in h and (j, k) in v_ for j in verts):
                reasons.append("missing square (lower right)")
    return sorted(set(reasons))


def pole_survey(alpha: Polynomial, n: int, N: int) -> list[tuple[Pole, PoleGraph, list[str], SigmaValue]]:
    """Every pole of the integrand with its graph, rejection reasons and contribution."""
    t = hilb_integrand(n, N)
    F = FracSum((t.with_num(t.num * alpha),), n + 1)
    x = hilb_basis(n)
    out = []
    for pole in enumerate_poles(F, n):
        g = pole_graph(pole, n, N)
        val = sigma_value_of(pole_contribution(F, pole, x, n, keep_eps=False).limit())
        out.append((pole, g, rejection_reasons(g, n), val))
    return out

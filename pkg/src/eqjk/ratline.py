"""Exact rational linear algebra on t* x s*.

Covectors are plain tuples of ``fractions.Fraction``.  A perturbed covector
``base + s*pert`` (``s`` an infinitesimal) is a ``PerturbedCovector``; its
sign queries resolve lexicographically.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Covector = tuple  # tuple[Fraction, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


class RatlineError(ValueError):
    pass


class ZeroVector(RatlineError):
    pass


class DimensionMismatch(RatlineError):
    pass


class DegenerateProjection(RatlineError):
    pass


class SingularBasis(RatlineError):
    pass


# -- scalars ---------------------------------------------------------------

def q(x) -> Fraction:
    """Coerce ints, strings like ``"-3/4"`` and Fractions to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a rational")
    if isinstance(x, (int, str)):
        return Fraction(x)
    raise TypeError(f"cannot read {x!r} as an exact rational")


def fmt_q(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def vec(xs: Iterable) -> Covector:
    return tuple(q(x) for x in xs)


def zeros(n: int) -> Covector:
    return (ZERO,) * n


def unit(n: int, i: int) -> Covector:
    return tuple(ONE if j == i else ZERO for j in range(n))


def add(a: Covector, b: Covector) -> Covector:
    return tuple(x + y for x, y in zip(a, b))


def sub(a: Covector, b: Covector) -> Covector:
    return tuple(x - y for x, y in zip(a, b))


def scale(c, a: Covector) -> Covector:
    return tuple(c * x for x in a)


def axpy(c, a: Covector, b: Covector) -> Covector:
    """Return ``c*a + b``."""
    return tuple(c * x + y for x, y in zip(a, b))


def dot(a: Covector, b: Covector) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), ZERO)


def is_zero(a: Covector) -> bool:
    return not any(a)


def leading_index(a: Covector) -> int:
    for i, x in enumerate(a):
        if x:
            return i
    return -1


def normalize(a: Covector) -> tuple[Fraction, Covector]:
    """Split ``a = c * a_hat`` with the first nonzero entry of ``a_hat`` equal to 1."""
    i = leading_index(a)
    if i < 0:
        raise ZeroVector("cannot normalize the zero covector")
    c = a[i]
    if c == 1:
        return ONE, a
    return c, tuple(x / c for x in a)


# -- perturbed covectors -----------------------------------------------------

@dataclass(frozen=True)
class PerturbedCovector:
    base: Covector
    pert: Covector

    @classmethod
    def plain(cls, base: Sequence) -> "PerturbedCovector":
        b = vec(base)
        return cls(b, zeros(len(b)))

    @classmethod
    def zero(cls, n: int) -> "PerturbedCovector":
        return cls(zeros(n), zeros(n))

    @property
    def dim(self) -> int:
        return len(self.base)

    def __add__(self, other: "PerturbedCovector") -> "PerturbedCovector":
        return PerturbedCovector(add(self.base, other.base), add(self.pert, other.pert))

    def __neg__(self) -> "PerturbedCovector":
        return PerturbedCovector(scale(-1, self.base), scale(-1, self.pert))

    def scaled(self, c) -> "PerturbedCovector":
        return PerturbedCovector(scale(c, self.base), scale(c, self.pert))

    def is_zero(self) -> bool:
        return is_zero(self.base) and is_zero(self.pert)

    def unperturbed(self) -> "PerturbedCovector":
        return PerturbedCovector(self.base, zeros(self.dim))


def lex_sign(base: Fraction, pert: Fraction) -> int:
    """Sign of ``base + s*pert`` for infinitesimal ``s > 0``."""
    if base:
        return 1 if base > 0 else -1
    if pert:
        return 1 if pert > 0 else -1
    return 0


# -- matrices (lists of row tuples) ------------------------------------------

def rref(rows: Sequence[Sequence[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns; zero rows dropped."""
    m = [list(r) for r in rows]
    pivots: list[int] = []
    if not m:
        return m, pivots
    ncols = len(m[0])
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c]), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        piv = m[r][c]
        if piv != 1:
            m[r] = [x / piv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows: Sequence[Sequence[Fraction]]) -> int:
    return len(rref(rows)[1])


def span_key(rows: Sequence[Covector]) -> tuple:
    """Canonical key of the span of ``rows``."""
    m, _ = rref(rows)
    return tuple(tuple(r) for r in m)


def det(m: Sequence[Sequence[Fraction]]) -> Fraction:
    a = [list(map(Fraction, r)) for r in m]
    n = len(a)
    d = ONE
    for c in range(n):
        p = next((i for i in range(c, n) if a[i][c]), None)
        if p is None:
            return ZERO
        if p != c:
            a[c], a[p] = a[p], a[c]
            d = -d
        piv = a[c][c]
        d *= piv
        for i in range(c + 1, n):
            if a[i][c]:
                f = a[i][c] / piv
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return d


def inverse(m: Sequence[Sequence[Fraction]]) -> list[Covector]:
    n = len(m)
    aug = [list(map(Fraction, r)) + list(unit(n, i)) for i, r in enumerate(m)]
    red, piv = rref(aug)
    if len(piv) < n or piv[n - 1] != n - 1:
        raise SingularBasis("matrix is singular")
    return [tuple(r[n:]) for r in red]


def vecmat(v: Covector, m: Sequence[Covector]) -> Covector:
    """Row vector times matrix: ``sum_i v[i] * m[i]``."""
    out = [ZERO] * len(m[0])
    for c, row in zip(v, m):
        if c:
            for j, x in enumerate(row):
                if x:
                    out[j] += c * x
    return tuple(out)


def solve_in_span(gens: Sequence[Covector], target: Covector) -> Covector | None:
    """Coefficients ``c`` with ``sum c_i gens[i] = target``, or None.

    ``gens`` must be linearly independent.
    """
    if not gens:
        return () if is_zero(target) else None
    k = len(gens)
    cols = [[g[d] for g in gens] + [target[d]] for d in range(len(target))]
    red, piv = rref(cols)
    if piv and piv[-1] == k:
        return None
    sol = [ZERO] * k
    for row, p in zip(red, piv):
        sol[p] = row[k]
    return tuple(sol)


def in_span(gens: Sequence[Covector], target: Covector) -> bool:
    if is_zero(target):
        return True
    if not gens:
        return False
    return rank(list(gens) + [target]) == rank(gens)


# -- ordered bases -----------------------------------------------------------

@dataclass(frozen=True)
class OrderedBasis:
    """Ordered basis ``x_1..x_r`` (rows, in standard coordinates).

    ``frame`` lists the vectors of a declared orthonormal frame; the standard
    coordinate frame is used when it is None.
    """

    vectors: tuple
    frame: tuple | None = None

    def __post_init__(self):
        vs = tuple(vec(v) for v in self.vectors)
        if not vs:
            object.__setattr__(self, "vectors", ())
            object.__setattr__(self, "_inv", ())
            return
        n = len(vs[0])
        if len(vs) != n or any(len(v) != n for v in vs):
            raise DimensionMismatch("basis must consist of dim vectors of length dim")
        object.__setattr__(self, "vectors", vs)
        object.__setattr__(self, "_inv", tuple(inverse(vs)))
        if self.frame is not None:
            fr = tuple(vec(v) for v in self.frame)
            if len(fr) != n or det(fr) == 0:
                raise SingularBasis("frame matrix is not invertible")
            object.__setattr__(self, "frame", fr)

    @classmethod
    def standard(cls, n: int) -> "OrderedBasis":
        return cls(tuple(unit(n, i) for i in range(n)))

    @property
    def dim(self) -> int:
        return len(self.vectors)

    def coords(self, alpha: Covector) -> Covector:
        """Coordinates of ``alpha`` in this basis."""
        if len(alpha) != self.dim:
            raise DimensionMismatch(f"expected length {self.dim}, got {len(alpha)}")
        return vecmat(alpha, self._inv) if self.dim else ()

    def combine(self, coeffs: Covector) -> Covector:
        return vecmat(coeffs, self.vectors)


def polarize(alpha: Covector, basis: OrderedBasis) -> tuple[Covector, int]:
    """Return ``(alpha_tilde, sign)`` with ``alpha = sign * alpha_tilde``."""
    alpha = vec(alpha)
    c = basis.coords(alpha)
    i = leading_index(c)
    if i < 0:
        raise ZeroVector("cannot polarize the zero covector")
    if c[i] > 0:
        return alpha, 1
    return scale(-1, alpha), -1


def project_along(alpha: Covector, betas: Sequence[Covector], basis: OrderedBasis,
                  k: int | None = None) -> Covector:
    """Component of ``alpha`` in ``<x_{k+1}, ..., x_r>`` along ``<betas>``.

    ``k`` defaults to ``len(betas)``; it must equal it for the complement
    condition to be checkable, since the span of the betas has to meet the
    first ``k`` coordinate directions transversally.
    """
    k = len(betas) if k is None else k
    if k != len(betas):
        raise DegenerateProjection("k must equal the number of betas")
    a = basis.coords(vec(alpha))
    bs = [basis.coords(vec(b)) for b in betas]
    head = [b[:k] for b in bs]
    if k and det(head) == 0:
        raise DegenerateProjection("betas are not complementary to the target span")
    c = solve_in_span([tuple(h) for h in zip(*head)], a[:k]) if k else ()
    # alpha - sum c_i beta_i
    out = a
    for ci, b in zip(c, bs):
        out = axpy(-ci, b, out)
    return basis.combine(out)


def gram_factor(basis: OrderedBasis) -> Fraction:
    """``1/|det|`` of the basis written in its declared orthonormal frame."""
    if basis.dim == 0:
        return ONE
    d = det(basis.vectors)
    if d == 0:
        raise SingularBasis("basis is singular")
    if basis.frame is not None:
        d = d / det(basis.frame)
    return 1 / abs(d)


# -- cones -------------------------------------------------------------------

def cone_contains(generators: Sequence[Covector], point: Covector, strict: bool = False) -> bool:
    """Whether ``point`` is a nonnegative (``strict``: positive) combination.

    Equalities are eliminated by row reduction, the remaining inequality system
    in the free coefficients by Fourier-Motzkin.
    """
    point = vec(point)
    gens = [vec(g) for g in generators]
    m = len(gens)
    if m == 0:
        return is_zero(point)
    rows = [[g[d] for g in gens] + [point[d]] for d in range(len(point))]
    red, piv = rref(rows)
    if piv and piv[-1] == m:
        return False
    free = [j for j in range(m) if j not in piv]
    idx = {j: t for t, j in enumerate(free)}
    nf = len(free)
    # each inequality: (coeffs a over free vars, b, strict) meaning a.t <= b
    ineqs: list[tuple[tuple, Fraction, bool]] = []
    for row, p in zip(red, piv):
        # c_p = row[m] - sum_f row[f] c_f >= 0  <=>  sum row[f] t_f <= row[m]
        a = [ZERO] * nf
        for j in free:
            a[idx[j]] = row[j]
        ineqs.append((tuple(a), row[m], strict))
    for t in range(nf):
        a = [ZERO] * nf
        a[t] = -ONE
        ineqs.append((tuple(a), ZERO, strict))
    for t in range(nf):
        pos, neg, rest = [], [], []
        for a, b, s in ineqs:
            (pos if a[t] > 0 else neg if a[t] < 0 else rest).append((a, b, s))
        new = set(rest)
        for ap, bp, sp in pos:
            for an, bn, sn in neg:
                fp, fn = ap[t], -an[t]
                a = tuple(fn * x + fp * y for x, y in zip(ap, an))
                b = fn * bp + fp * bn
                new.add(_normalized_ineq(a, b, sp or sn))
        ineqs = list(new)
    return all(b > 0 if s else b >= 0 for _, b, s in ineqs)


def _normalized_ineq(a: tuple, b: Fraction, s: bool):
    i = leading_index(a)
    if i < 0:
        return a, b, s
    c = abs(a[i])
    return tuple(x / c for x in a), b / c, s

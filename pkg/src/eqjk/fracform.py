"""Polynomial-exponential fractions ``P e^lam / prod alpha_i^m_i``.

A ``Frac`` keeps an optional multiset of linear numerator factors next to the
polynomial numerator, so long products of linear forms (the Hilbert-scheme
integrands) survive changes of coordinates without being expanded.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Mapping, Sequence

from .ratline import (
    ONE,
    ZERO,
    Covector,
    OrderedBasis,
    PerturbedCovector,
    SingularBasis,
    fmt_q,
    inverse,
    is_zero,
    leading_index,
    normalize,
    q,
    rank,
    solve_in_span,
    unit,
    vec,
    vecmat,
    zeros,
)


class ZeroDenominatorFactor(ValueError):
    pass


class SingularMatrix(SingularBasis):
    pass


def binom(n: int, k: int) -> int:
    """Generalized binomial coefficient for any integer ``n`` and ``k >= 0``."""
    if n >= 0:
        return comb(n, k)
    return (-1) ** k * comb(k - n - 1, k)


# -- polynomials -------------------------------------------------------------

class Polynomial:
    """Sparse polynomial with rational coefficients in ``nvars`` variables."""

    __slots__ = ("nvars", "terms", "_hash")

    def __init__(self, nvars: int, terms: Mapping[tuple, Fraction] | None = None):
        self.nvars = nvars
        self.terms = {e: c for e, c in (terms or {}).items() if c}
        self._hash = None

    @classmethod
    def const(cls, c, nvars: int) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: q(c)})

    @classmethod
    def var(cls, i: int, nvars: int) -> "Polynomial":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): ONE})

    @classmethod
    def linear(cls, alpha: Covector, const=0) -> "Polynomial":
        n = len(alpha)
        out = {}
        for i, c in enumerate(alpha):
            if c:
                e = [0] * n
                e[i] = 1
                out[tuple(e)] = c
        if const:
            out[(0,) * n] = q(const)
        return cls(n, out)

    # arithmetic
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise ValueError("polynomials live in different rings")
            return other
        return Polynomial.const(q(other), self.nvars)

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, ZERO) + c
        return Polynomial(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            c = q(other)
            if not c:
                return Polynomial(self.nvars)
            return Polynomial(self.nvars, {e: c * v for e, v in self.terms.items()})
        other = self._coerce(other)
        if len(self.terms) < len(other.terms):
            a, b = self.terms, other.terms
        else:
            a, b = other.terms, self.terms
        out: dict[tuple, Fraction] = {}
        get = out.get
        for ea, ca in a.items():
            for eb, cb in b.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = get(e, ZERO) + ca * cb
        return Polynomial(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        result = Polynomial.const(1, self.nvars)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            try:
                other = self._coerce(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self.nvars == other.nvars and self.terms == other.terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self.terms.items())))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(f"x{i}^{k}" if k > 1 else f"x{i}" for i, k in enumerate(e) if k)
            parts.append(f"{fmt_q(c)}*{mono}" if mono else fmt_q(c))
        return " + ".join(parts)

    # queries
    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        return all(not any(e) for e in self.terms)

    def const_value(self) -> Fraction:
        return self.terms.get((0,) * self.nvars, ZERO)

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, i: int) -> int:
        return max((e[i] for e in self.terms), default=-1)

    def evaluate(self, point: Sequence) -> Fraction:
        total = ZERO
        for e, c in self.terms.items():
            v = c
            for x, k in zip(point, e):
                if k:
                    v *= x ** k
            total += v
        return total

    # restructuring
    def set_zero(self, i: int) -> "Polynomial":
        return Polynomial(self.nvars, {e: c for e, c in self.terms.items() if not e[i]})

    def coeffs_in(self, i: int) -> dict[int, "Polynomial"]:
        """Split by the power of variable ``i``."""
        out: dict[int, dict] = {}
        for e, c in self.terms.items():
            k = e[i]
            out.setdefault(k, {})[e[:i] + (0,) + e[i + 1:]] = c
        return {k: Polynomial(self.nvars, t) for k, t in out.items()}

    def substitute_linear(self, images: Sequence[Covector], consts: Sequence | None = None) -> "Polynomial":
        """Replace variable ``i`` by the linear form ``images[i] (+ consts[i])``."""
        n_new = len(images[0]) if images else 0
        lin = [Polynomial.linear(img, consts[i] if consts else 0) for i, img in enumerate(images)]
        cache: dict[tuple[int, int], Polynomial] = {}

        def power(i: int, k: int) -> Polynomial:
            key = (i, k)
            if key not in cache:
                cache[key] = lin[i] if k == 1 else power(i, k - 1) * lin[i]
            return cache[key]

        out = Polynomial(n_new)
        for e, c in self.terms.items():
            t = Polynomial.const(c, n_new)
            for i, k in enumerate(e):
                if k:
                    t = t * power(i, k)
            out = out + t
        return out

    def reindex(self, nvars: int, positions: Sequence[int]) -> "Polynomial":
        """Move variable ``i`` to position ``positions[i]`` of a ring with ``nvars`` variables.

        Variables whose position is None must not occur.
        """
        out = {}
        for e, c in self.terms.items():
            f = [0] * nvars
            for i, k in enumerate(e):
                if k:
                    p = positions[i]
                    if p is None:
                        raise ValueError(f"variable {i} occurs but has no target position")
                    f[p] += k
            f = tuple(f)
            out[f] = out.get(f, ZERO) + c
        return Polynomial(nvars, out)

    def divide_linear(self, alpha: Covector) -> "Polynomial | None":
        """Exact quotient by the linear form ``alpha``, or None if it does not divide."""
        i = leading_index(alpha)
        a = alpha[i]
        rem = dict(self.terms)
        quo: dict[tuple, Fraction] = {}
        lin = [(j, c) for j, c in enumerate(alpha) if c]
        while True:
            top = max((e for e in rem if e[i]), key=lambda e: e[i], default=None)
            if top is None:
                break
            c = rem[top] / a
            qe = top[:i] + (top[i] - 1,) + top[i + 1:]
            quo[qe] = quo.get(qe, ZERO) + c
            for j, cj in lin:
                e = qe[:j] + (qe[j] + 1,) + qe[j + 1:]
                v = rem.get(e, ZERO) - c * cj
                if v:
                    rem[e] = v
                else:
                    rem.pop(e, None)
        if rem:
            return None
        return Polynomial(self.nvars, quo)

    def to_json(self) -> list:
        return [{"exps": list(e), "c": fmt_q(c)} for e, c in sorted(self.terms.items())]

    @classmethod
    def from_json(cls, data: list, nvars: int) -> "Polynomial":
        out: dict[tuple, Fraction] = {}
        for t in data:
            e = tuple(int(k) for k in t["exps"])
            if len(e) != nvars or any(k < 0 for k in e):
                raise ValueError(f"bad exponent vector {t['exps']!r}")
            out[e] = out.get(e, ZERO) + q(t["c"])
        return cls(nvars, out)


def product_of_linear(factors: Iterable[tuple[Covector, int]], nvars: int) -> Polynomial:
    out = Polynomial.const(1, nvars)
    for alpha, m in factors:
        out = out * Polynomial.linear(alpha) ** m
    return out


# -- denominators ------------------------------------------------------------

def canonical_den(den: Iterable[tuple[Covector, int]]) -> tuple[Fraction, Counter]:
    """Normalize denominator forms; returns ``(scalar, Counter)`` with ``prod = scalar * prod normalized``."""
    s = ONE
    out: Counter = Counter()
    for alpha, m in den:
        if m <= 0:
            raise ValueError("multiplicities must be positive")
        c, a = normalize(alpha)
        s *= c ** m
        out[a] += m
    return s, out


class RatFunc:
    """``num / prod den_form^mult`` with normalized denominator forms."""

    __slots__ = ("num", "den")

    def __init__(self, num: Polynomial, den: Mapping[Covector, int] | None = None):
        self.num = num
        self.den = Counter({a: m for a, m in (den or {}).items() if m})

    @classmethod
    def from_factors(cls, num: Polynomial, den: Iterable[tuple[Covector, int]]) -> "RatFunc":
        s, d = canonical_den(den)
        return cls(num * (1 / s), d)

    @property
    def nvars(self) -> int:
        return self.num.nvars

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __mul__(self, other) -> "RatFunc":
        if isinstance(other, RatFunc):
            return RatFunc(self.num * other.num, self.den + other.den)
        return RatFunc(self.num * other, self.den)

    __rmul__ = __mul__

    def lifted(self, den: Counter) -> Polynomial:
        """Numerator over the common denominator ``den`` (which must dominate ``self.den``)."""
        out = self.num
        for a, m in den.items():
            extra = m - self.den.get(a, 0)
            if extra:
                out = out * Polynomial.linear(a) ** extra
        return out

    def __add__(self, other: "RatFunc") -> "RatFunc":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        den = self.den | other.den
        return RatFunc(self.lifted(den) + other.lifted(den), den)

    def __neg__(self) -> "RatFunc":
        return RatFunc(-self.num, self.den)

    def cancel(self) -> "RatFunc":
        if self.num.is_zero():
            return RatFunc(self.num)
        num = self.num
        den = Counter(self.den)
        for a in sorted(den):
            while den[a]:
                quo = num.divide_linear(a)
                if quo is None:
                    break
                num = quo
                den[a] -= 1
        return RatFunc(num, den)

    def evaluate(self, point: Sequence) -> Fraction:
        d = ONE
        for a, m in self.den.items():
            d *= sum((x * y for x, y in zip(a, point)), ZERO) ** m
        return self.num.evaluate(point) / d

    def __repr__(self) -> str:
        return f"RatFunc({self.num!r} / {dict(self.den)!r})"


# -- fractions ---------------------------------------------------------------

@dataclass(frozen=True)
class Frac:
    """One term ``num * prod(lin) * e^exp / prod den``.

    ``den`` and ``lin`` are tuples of ``(covector, multiplicity)``.
    """

    num: Polynomial
    exp: PerturbedCovector
    den: tuple = ()
    lin: tuple = ()

    def __post_init__(self):
        n = self.num.nvars
        if self.exp.dim != n:
            raise ValueError("exponent dimension does not match numerator")
        for alpha, m in tuple(self.den) + tuple(self.lin):
            if len(alpha) != n:
                raise ValueError("factor dimension does not match numerator")
            if m < 1:
                raise ValueError("multiplicities must be >= 1")
        for alpha, _ in self.den:
            if is_zero(alpha):
                raise ZeroDenominatorFactor("zero covector in denominator")

    @classmethod
    def make(cls, num=1, exp=None, den=(), lin=(), dim: int | None = None) -> "Frac":
        if dim is None:
            for alpha, _ in list(den) + list(lin):
                dim = len(alpha)
                break
            else:
                if isinstance(num, Polynomial):
                    dim = num.nvars
                elif exp is not None:
                    dim = len(exp.base if isinstance(exp, PerturbedCovector) else exp)
                else:
                    dim = 0
        if not isinstance(num, Polynomial):
            num = Polynomial.const(q(num), dim)
        if exp is None:
            exp = PerturbedCovector.zero(dim)
        elif not isinstance(exp, PerturbedCovector):
            exp = PerturbedCovector.plain(exp)
        return cls(num, exp, tuple((vec(a), int(m)) for a, m in den),
                   tuple((vec(a), int(m)) for a, m in lin))

    @property
    def dim(self) -> int:
        return self.num.nvars

    def numerator(self) -> Polynomial:
        return self.num * product_of_linear(self.lin, self.dim) if self.lin else self.num

    def ratfunc(self) -> RatFunc:
        return RatFunc.from_factors(self.numerator(), self.den)

    def with_num(self, num: Polynomial) -> "Frac":
        return Frac(num, self.exp, self.den, self.lin)

    def to_json(self) -> dict:
        return {
            "num": self.numerator().to_json(),
            "exp": {"base": [fmt_q(x) for x in self.exp.base],
                    "pert": [fmt_q(x) for x in self.exp.pert]},
            "den": [{"vec": [fmt_q(x) for x in a], "mult": m} for a, m in self.den],
        }

    @classmethod
    def from_json(cls, data: Mapping, dim: int) -> "Frac":
        num = Polynomial.from_json(data.get("num", [{"exps": [0] * dim, "c": "1"}]), dim)
        e = data.get("exp") or {}
        base = vec(e.get("base", ["0"] * dim))
        pert = vec(e.get("pert", ["0"] * dim))
        if len(base) != dim or len(pert) != dim:
            raise ValueError("exponent has wrong dimension")
        den = tuple((vec(d["vec"]), int(d.get("mult", 1))) for d in data.get("den", []))
        return cls(num, PerturbedCovector(base, pert), den)


@dataclass(frozen=True)
class FracSum:
    """A finite sum of ``Frac`` terms over a common ambient space."""

    terms: tuple = ()
    dim: int = 0

    @classmethod
    def of(cls, terms: Iterable[Frac], dim: int | None = None) -> "FracSum":
        terms = tuple(terms)
        if dim is None:
            dim = terms[0].dim if terms else 0
        if any(t.dim != dim for t in terms):
            raise ValueError("terms live in different dimensions")
        return cls(terms, dim)

    def __add__(self, other: "FracSum") -> "FracSum":
        if not self.terms:
            return other
        if not other.terms:
            return self
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        return FracSum(self.terms + other.terms, self.dim)

    def __neg__(self) -> "FracSum":
        return self.scaled(-1)

    def __sub__(self, other: "FracSum") -> "FracSum":
        return self + (-other)

    def scaled(self, c) -> "FracSum":
        c = q(c)
        if not c:
            return FracSum((), self.dim)
        return FracSum(tuple(t.with_num(t.num * c) for t in self.terms), self.dim)

    def times_poly(self, p: Polynomial) -> "FracSum":
        return FracSum(tuple(t.with_num(t.num * p) for t in self.terms), self.dim)

    def grouped(self) -> dict[PerturbedCovector, RatFunc]:
        """Combine terms with equal exponent into reduced rational functions."""
        groups: dict[PerturbedCovector, RatFunc] = {}
        for t in self.terms:
            rf = t.ratfunc()
            groups[t.exp] = groups[t.exp] + rf if t.exp in groups else rf
        out = {}
        for e, rf in groups.items():
            rf = rf.cancel()
            if not rf.is_zero():
                out[e] = rf
        return out

    def is_zero(self) -> bool:
        return not self.grouped()

    def __eq__(self, other) -> bool:
        if not isinstance(other, FracSum):
            return NotImplemented
        if self.dim != other.dim:
            return False
        return (self - other).is_zero()

    __hash__ = None

    def simplify(self) -> "FracSum":
        """Canonical form: one reduced term per exponent, sorted by exponent."""
        groups = self.grouped()
        terms = []
        for e in sorted(groups, key=lambda p: (p.base, p.pert)):
            rf = groups[e]
            terms.append(Frac(rf.num, e, tuple(sorted(rf.den.items()))))
        return FracSum(tuple(terms), self.dim)

    def to_json(self, split: int | None = None) -> dict:
        out = {"dim": self.dim, "terms": [t.to_json() for t in self.terms]}
        if split is not None:
            out["split"] = split
        return out

    @classmethod
    def from_json(cls, data: Mapping) -> "FracSum":
        dim = int(data["dim"])
        return cls(tuple(Frac.from_json(t, dim) for t in data.get("terms", [])), dim)


# -- change of coordinates -----------------------------------------------------

def transform_covector(alpha: Covector, binv: Sequence[Covector]) -> Covector:
    return vecmat(alpha, binv)


def change_basis_frac(t: Frac, binv: Sequence[Covector]) -> Frac:
    images = [tuple(r) for r in binv]
    num = t.num.substitute_linear(images) if not t.num.is_const() else t.num
    return Frac(
        num,
        PerturbedCovector(vecmat(t.exp.base, binv), vecmat(t.exp.pert, binv)),
        tuple((vecmat(a, binv), m) for a, m in t.den),
        tuple((vecmat(a, binv), m) for a, m in t.lin),
    )


def change_basis(F: FracSum | Frac, B: Sequence[Sequence]) -> FracSum | Frac:
    """Rewrite ``F`` in the coordinates ``u = B x``."""
    B = [vec(r) for r in B]
    try:
        binv = inverse(B)
    except SingularBasis as exc:
        raise SingularMatrix(str(exc)) from None
    if isinstance(F, Frac):
        return change_basis_frac(F, binv)
    return FracSum(tuple(change_basis_frac(t, binv) for t in F.terms), F.dim)


# -- Laurent expansion -------------------------------------------------------

@dataclass
class LaurentSeries:
    """Truncated iterated Laurent series in ``order`` (first variable smallest).

    ``coeffs`` maps exponent tuples (one entry per ordered variable) to
    rational functions of the variables not in ``order``; ``exp`` is the part
    of the exponential that was not expanded.
    """

    order: tuple
    bound: tuple
    coeffs: dict
    exp: PerturbedCovector
    dim: int

    def coefficient(self, exps: Sequence[int]) -> RatFunc:
        return self.coeffs.get(tuple(exps), RatFunc(Polynomial(self.dim)))

    def term(self, exps: Sequence[int]) -> FracSum:
        rf = self.coefficient(exps)
        if rf.is_zero():
            return FracSum((), self.dim)
        return FracSum((Frac(rf.num, self.exp, tuple(rf.den.items())),), self.dim)


def _series_in(rf: RatFunc, v: int, lam_v: Fraction, top: int) -> tuple[int, list[RatFunc]]:
    """Laurent coefficients of ``rf * e^(lam_v * x_v)`` in ``x_v`` up to exponent ``top``.

    Returns ``(low, coeffs)`` with ``coeffs[j]`` the coefficient of ``x_v^(low+j)``.
    """
    n = rf.nvars
    pure = unit(n, v)
    m = rf.den.get(pure, 0)
    keep = Counter()
    mixed = []
    for a, p in rf.den.items():
        if a == pure:
            continue
        if a[v]:
            mixed.append((a, p))
        else:
            keep[a] = p
    K = top + m  # highest Taylor order needed
    if K < 0:
        return -m, []
    zero = RatFunc(Polynomial(n))
    series = [zero] * (K + 1)
    for k, c in rf.num.coeffs_in(v).items():
        if k <= K:
            series[k] = RatFunc(c, keep)
    for a, p in mixed:
        c = a[v]
        w = a[:v] + (ZERO,) + a[v + 1:]
        s, wn = normalize(w)
        fac = []
        for j in range(K + 1):
            coef = Fraction(binom(-p, j)) * c ** j / s ** (p + j)
            fac.append(RatFunc(Polynomial.const(coef, n), {wn: p + j}))
        series = _mul_series(series, fac, K)
    if lam_v:
        ex = [RatFunc(Polynomial.const(lam_v ** j / factorial(j), n)) for j in range(K + 1)]
        series = _mul_series(series, ex, K)
    return -m, series


def _mul_series(a: list[RatFunc], b: list[RatFunc], K: int) -> list[RatFunc]:
    out = []
    for k in range(K + 1):
        acc = None
        for i in range(k + 1):
            if a[i].is_zero() or b[k - i].is_zero():
                continue
            t = a[i] * b[k - i]
            acc = t if acc is None else acc + t
        out.append(acc if acc is not None else RatFunc(Polynomial(a[0].nvars)))
    return out


def expand(F: Frac, order: Sequence[int], bound: int | Sequence[int]) -> LaurentSeries:
    """Iterated Laurent expansion with ``x_order[0] << x_order[1] << ... << rest``.

    A factor is expanded in its smallest ordered variable with everything else
    treated as dominant; the exponential is expanded only in ordered variables.
    """
    order = tuple(order)
    if isinstance(bound, int):
        bound = (bound,) * len(order)
    bound = tuple(bound)
    if len(bound) != len(order):
        raise ValueError("one bound per ordered variable")
    for v in order:
        if F.exp.pert[v]:
            raise ValueError("perturbed exponents cannot be expanded in ordered variables")
    state = {(): F.ratfunc()}
    for v, b in zip(order, bound):
        nxt: dict[tuple, RatFunc] = {}
        for key, rf in state.items():
            low, coeffs = _series_in(rf, v, F.exp.base[v], b)
            for j, c in enumerate(coeffs):
                if not c.is_zero():
                    nk = key + (low + j,)
                    nxt[nk] = nxt[nk] + c if nk in nxt else c
        state = nxt
    base = list(F.exp.base)
    for v in order:
        base[v] = ZERO
    return LaurentSeries(order, bound, state, PerturbedCovector(tuple(base), F.exp.pert), F.dim)


# -- generating decomposition --------------------------------------------------

def _split_term(t: Frac) -> list[Frac]:
    """Partial fractions of one term until its denominator forms are independent."""
    s, den = canonical_den(t.den)
    forms = sorted(den)
    start = {i: den[a] for i, a in enumerate(forms)}
    work = [(t.num * (1 / s), start)]
    done = []
    while work:
        num, mults = work.pop()
        live = [i for i in sorted(mults) if mults[i]]
        basis: list[int] = []
        relation = None
        for k in live:
            c = solve_in_span([forms[i] for i in basis], forms[k]) if basis else None
            if c is not None:
                relation = (k, {i: ci for i, ci in zip(basis, c) if ci})
                break
            basis.append(k)
        if relation is None:
            den_out = tuple((forms[i], mults[i]) for i in live)
            done.append(Frac(num, t.exp, den_out, t.lin))
            continue
        k, combo = relation
        # 1 = sum_i c_i alpha_i / alpha_k
        for i, ci in combo.items():
            m = dict(mults)
            m[i] -= 1
            m[k] += 1
            work.append((num * ci, m))
    return done


def decompose_generating(F: FracSum, dim_target: int | None = None,
                         split: int | None = None) -> tuple[FracSum, FracSum]:
    """Split ``F`` into generating and non-generating parts.

    With ``split`` set, a term is generating when the projections of its
    denominator forms onto the first ``split`` coordinates span them.
    """
    if dim_target is None:
        dim_target = F.dim if split is None else split
    gen, non = [], []
    for t in F.terms:
        for piece in _split_term(t):
            forms = [a for a, _ in piece.den]
            if split is not None:
                ok = bool(forms) and rank([a[:split] for a in forms]) == split
            else:
                ok = bool(forms) and rank(forms) == dim_target
            if dim_target == 0 and split is None:
                ok = not forms
            (gen if ok else non).append(piece)
    return FracSum(tuple(gen), F.dim), FracSum(tuple(non), F.dim)

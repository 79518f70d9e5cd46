"""Formal fixed-point integration and quotient-integration drivers."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .eqres import enumerate_poles, eq_res, is_zero_generic_eq
from .fracform import Frac, FracSum, Polynomial
from .jkres import ResidueValue, rational_stream
from .ratline import (
    Covector,
    OrderedBasis,
    PerturbedCovector,
    RatlineError,
    dot,
    in_span,
    is_zero,
    polarize,
    q,
    rank,
    vec,
    zeros,
)


class InadmissiblePolarization(RatlineError):
    pass


class HypothesisViolated(RatlineError):
    pass


class NonWeylInvariant(RatlineError):
    pass


@dataclass(frozen=True)
class FixedPointDatum:
    name: str
    moment: Covector
    weights: tuple
    numerator: Polynomial | None = None
    mult: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "moment", vec(self.moment))
        object.__setattr__(self, "weights", tuple(vec(w) for w in self.weights))
        object.__setattr__(self, "mult", q(self.mult))
        if any(is_zero(w) for w in self.weights):
            raise ValueError(f"fixed point {self.name}: zero isotropy weight")
        if self.mult <= 0:
            raise ValueError("multiplicity must be positive")


@dataclass(frozen=True)
class GroupData:
    roots: tuple = ()
    complex_weights: tuple = ()
    weyl_order: int = 1
    gamma: Covector | None = None
    level: Covector | None = None

    def __post_init__(self):
        object.__setattr__(self, "roots", tuple(vec(r) for r in self.roots))
        object.__setattr__(self, "complex_weights", tuple(vec(w) for w in self.complex_weights))
        if self.gamma is not None:
            object.__setattr__(self, "gamma", vec(self.gamma))
            if is_zero(self.gamma):
                raise ValueError("gamma must be nonzero")
        if self.level is not None:
            object.__setattr__(self, "level", vec(self.level))
        if self.weyl_order < 1:
            raise ValueError("weyl_order must be >= 1")


def formal_integral(data: Sequence[FixedPointDatum], alpha: Polynomial | None,
                    level=None, dim: int | None = None) -> FracSum:
    """One fraction per fixed point: ``alpha * num / mult * e^(level - moment) / prod weights``."""
    if dim is None:
        if not data:
            return FracSum((), 0 if alpha is None else alpha.nvars)
        dim = len(data[0].moment)
    if alpha is None:
        alpha = Polynomial.const(1, dim)
    if level is None:
        level = PerturbedCovector.zero(dim)
    elif not isinstance(level, PerturbedCovector):
        level = PerturbedCovector.plain(level)
    terms = []
    for d in data:
        num = alpha if d.numerator is None else alpha * d.numerator
        num = num * (1 / d.mult)
        den = Counter(d.weights)
        exp = PerturbedCovector(tuple(l - m for l, m in zip(level.base, d.moment)), level.pert)
        terms.append(Frac(num, exp, tuple(den.items())))
    return FracSum(tuple(terms), dim)


def admissible_chamber(data: Sequence[FixedPointDatum], gamma: Covector, x: OrderedBasis) -> tuple:
    """Check that ``x`` polarizes every weight as an admissible basis would.

    A weight with ``pi(alpha) != 0`` must be polarized towards positive ``pi``;
    weights in ``ker pi`` may be polarized either way.  Returns the sign
    pattern (``+1``/``-1`` per distinct weight, 0 for ``ker pi``) as a record
    of the chamber used.
    """
    chamber = []
    seen = set()
    for d in data:
        for w in d.weights:
            if w in seen:
                continue
            seen.add(w)
            tilde, _ = polarize(w, x)
            p = dot(tilde, gamma)
            if p < 0:
                raise InadmissiblePolarization(
                    f"weight {[str(c) for c in w]} is polarized against the K-direction")
            chamber.append(1 if p > 0 else 0)
    return tuple(chamber)


def _regular_proxy(rho: Covector, weights: Sequence[Covector], split: int) -> bool:
    """``rho`` avoids every proper span of k*-projected weights."""
    proj = []
    for w in weights:
        p = w[:split]
        if any(p) and p not in proj:
            proj.append(p)
    for size in range(0, split):
        for sub in combinations(proj, size):
            if rank(sub) == size and in_span(sub, rho[:split]):
                return False
    return True


def choose_rho(F: FracSum, x: OrderedBasis, split: int, weights: Sequence[Covector],
               seed: int = 0, tries: int = 500) -> Covector:
    """First perturbation from the seeded stream making the integrand generic."""
    dim = F.dim
    stream = rational_stream(seed, split)
    for _ in range(tries):
        r = next(stream)
        rho = tuple(r) + zeros(dim - split)
        if not _regular_proxy(rho, weights, split):
            continue
        G = FracSum(tuple(Frac(t.num, PerturbedCovector(t.exp.base, rho), t.den, t.lin)
                          for t in F.terms), dim)
        if is_zero_generic_eq(G, x, split):
            return rho
    raise HypothesisViolated("no generic perturbation found")


def _with_pert(F: FracSum, rho: Covector) -> FracSum:
    return FracSum(tuple(Frac(t.num, PerturbedCovector(t.exp.base, rho), t.den, t.lin)
                         for t in F.terms), F.dim)


def _with_lin(F: FracSum, factors: Sequence[Covector], scale_) -> FracSum:
    extra = Counter(factors)
    out = []
    for t in F.terms:
        lin = Counter(dict(t.lin))
        lin.update(extra)
        out.append(Frac(t.num * scale_, t.exp, t.den, tuple(lin.items())))
    return FracSum(tuple(out), F.dim)


def _check_split(data, split):
    if not data:
        return
    if not 0 < split <= len(data[0].moment):
        raise ValueError("split out of range")


def jk_quotient_abelian(data: Sequence[FixedPointDatum], alpha: Polynomial | None,
                        group: GroupData, x: OrderedBasis, split: int,
                        workers: int | None = None) -> ResidueValue:
    """EqRes of the fixed-point integrand at the group level, then the limit."""
    _check_split(data, split)
    if group.gamma is not None:
        admissible_chamber(data, group.gamma, x)
    F = formal_integral(data, alpha, group.level, x.dim)
    return ResidueValue.of(eq_res(F, x, split, keep_eps=False, workers=workers).limit())


def _nonabelian_integrand(data, alpha, group, x, split, rho, seed, extra):
    F = formal_integral(data, alpha, group.level, x.dim)
    F = _with_lin(F, list(group.roots) + list(extra), Fraction(1, group.weyl_order))
    if rho is None:
        weights = [w for d in data for w in d.weights]
        rho = choose_rho(F, x, split, weights, seed)
    return _with_pert(F, vec(rho))


def jk_quotient_nonabelian(data, alpha, group: GroupData, x: OrderedBasis, split: int,
                           rho=None, seed: int = 0, workers: int | None = None) -> ResidueValue:
    """Weyl-corrected integrand with an infinitesimal regular perturbation ``rho``."""
    _check_split(data, split)
    if group.gamma is not None:
        admissible_chamber(data, group.gamma, x)
    F = _nonabelian_integrand(data, alpha, group, x, split, rho, seed, ())
    return ResidueValue.of(eq_res(F, x, split, keep_eps=False, workers=workers).limit())


def hk_quotient(data, alpha, group: GroupData, x: OrderedBasis, split: int,
                rho=None, seed: int = 0, workers: int | None = None) -> ResidueValue:
    """HyperKähler variant: the complex-moment weights join the numerator."""
    _check_split(data, split)
    for w in group.complex_weights:
        if not any(w[split:]):
            raise HypothesisViolated(
                f"complex weight {[str(c) for c in w]} has no s*-part")
    if group.gamma is not None:
        admissible_chamber(data, group.gamma, x)
    F = _nonabelian_integrand(data, alpha, group, x, split, rho, seed, group.complex_weights)
    return ResidueValue.of(eq_res(F, x, split, keep_eps=False, workers=workers).limit())


def check_weyl_invariant(alpha: Polynomial, perms: Sequence[Sequence[int]]) -> None:
    """Raise unless ``alpha`` is invariant under the given coordinate permutations."""
    for p in perms:
        if alpha.reindex(alpha.nvars, list(p)) != alpha:
            raise NonWeylInvariant("class is not invariant under the Weyl action")

"""Copula families for bivariate exponential dependence.

The centerpiece is the family induced by the self-decomposable
construction,

    C_a(u, v) = u - (1 - v) * [1 - (1 - u) / (1 - v)^a]^+ ,

which interpolates from independence (a = 0) to the Frechet-Hoeffding
upper bound (a = 1) and, composed with exponential marginals, reproduces
the closed-form joint cdf of the correlated pair.  Three classical
bivariate-exponential copulas are provided for comparison (Gumbel,
Marshall-Olkin, Raftery), plus the Frechet bounds themselves.

A note on the Raftery family: the sampler draws
(x, y) = (a*u + b*z, a*v + b*z) with a shared residual b*z.  The Raftery
formula describes the copula of the associated *survival* pair
(e^(-lam x), e^(-lam y)); the distributional copula of (x, y) itself is
its reflection u + v - 1 + C_a(1-u, 1-v).  Both are exposed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "Copula",
    "SelfDecomposableCopula",
    "GumbelCopula",
    "MarshallOlkinCopula",
    "RafteryCopula",
    "FrechetLowerCopula",
    "FrechetUpperCopula",
    "IndependenceCopula",
    "copula_eval",
    "cdf_from_copula",
    "frechet_bounds",
    "survival_reflection",
    "sample_raftery_pairs",
]


def _check_unit(value: float, name: str) -> None:
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise DomainError(f"{name} must lie in [0, 1], got {value}")


class Copula:
    """Base class: subclasses implement cdf(u, v) on the unit square."""

    def cdf(self, u: float, v: float) -> float:  # pragma: no cover
        raise NotImplementedError


@dataclass(frozen=True)
class SelfDecomposableCopula(Copula):
    """C_a(u,v) = u - (1-v) [1 - (1-u)/(1-v)^a]^+ for a in [0, 1].

    a = 0 gives the independence copula, a = 1 the upper Frechet bound.
    (1-v)^a is taken in log space so the positive-part bracket cannot go
    spuriously negative near v = 1.
    """

    a: float

    def __post_init__(self):
        _check_unit(self.a, "a")

    def cdf(self, u: float, v: float) -> float:
        if u == 0.0 or v == 0.0:
            return 0.0
        if v == 1.0:
            return u
        if u == 1.0:
            return v
        pow_term = math.exp(self.a * math.log1p(-v))
        bracket = max(0.0, 1.0 - (1.0 - u) / pow_term)
        return u - (1.0 - v) * bracket


@dataclass(frozen=True)
class GumbelCopula(Copula):
    """Gumbel bivariate-exponential copula with rate-carrying parameter.

    C(u,v) = u + v - 1 + (1-u)(1-v) e^(-theta ln(1-u) ln(1-v)) with
    theta = a/(lam*mu); the joint cdf it comes from couples Exp(lam) and
    Exp(mu) margins through an e^(-lam x - mu y - a lam mu x y) tail, and
    validity requires theta in [0, 1].
    """

    a: float
    lam: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if self.lam <= 0.0 or self.mu <= 0.0:
            raise DomainError("rates must be positive")
        theta = self.a / (self.lam * self.mu)
        if not 0.0 <= theta <= 1.0:
            raise DomainError(
                f"effective Gumbel parameter a/(lam*mu) = {theta} must lie in [0, 1]"
            )

    def cdf(self, u: float, v: float) -> float:
        if u == 0.0 or v == 0.0:
            return 0.0
        if u == 1.0:
            return v
        if v == 1.0:
            return u
        theta = self.a / (self.lam * self.mu)
        cross = math.exp(-theta * math.log1p(-u) * math.log1p(-v))
        return u + v - 1.0 + (1.0 - u) * (1.0 - v) * cross


@dataclass(frozen=True)
class MarshallOlkinCopula(Copula):
    """C_{a,b}(u,v) = min(u^(1-a) v, u v^(1-b)) for a, b in [0, 1]."""

    a: float
    b: float

    def __post_init__(self):
        _check_unit(self.a, "a")
        _check_unit(self.b, "b")

    def cdf(self, u: float, v: float) -> float:
        if u == 0.0 or v == 0.0:
            return 0.0
        return min(u ** (1.0 - self.a) * v, u * v ** (1.0 - self.b))


@dataclass(frozen=True)
class RafteryCopula(Copula):
    """C_a(u,v) = min(u,v) + a/(2-a) (uv)^(1/a) [1 - max(u,v)^(1-2/a)].

    a in (0, 1]; a = 1 is independence and a -> 0 tends to the upper
    bound.  This is the copula of the survival pair of the shared-residual
    construction sampled by :func:`sample_raftery_pairs`.
    """

    a: float

    def __post_init__(self):
        if not 0.0 < self.a <= 1.0:
            raise DomainError(f"a must lie in (0, 1], got {self.a}")

    def cdf(self, u: float, v: float) -> float:
        if u == 0.0 or v == 0.0:
            return 0.0
        lo, hi = min(u, v), max(u, v)
        a = self.a
        if hi == 1.0:
            return lo
        prod = (u * v) ** (1.0 / a)
        tail = 1.0 - hi ** (1.0 - 2.0 / a)
        return lo + a / (2.0 - a) * prod * tail


@dataclass(frozen=True)
class FrechetLowerCopula(Copula):
    """W(u,v) = max(0, u + v - 1), the pointwise lower bound."""

    def cdf(self, u: float, v: float) -> float:
        return max(0.0, u + v - 1.0)


@dataclass(frozen=True)
class FrechetUpperCopula(Copula):
    """M(u,v) = min(u, v), the pointwise upper bound."""

    def cdf(self, u: float, v: float) -> float:
        return min(u, v)


@dataclass(frozen=True)
class IndependenceCopula(Copula):
    """Pi(u,v) = u v."""

    def cdf(self, u: float, v: float) -> float:
        return u * v


def copula_eval(copula: Copula, u: float, v: float) -> float:
    """Validated copula evaluation: arguments and value confined to [0, 1]."""
    _check_unit(u, "u")
    _check_unit(v, "v")
    value = copula.cdf(u, v)
    if value < -1e-14 or value > 1.0 + 1e-14:
        raise DomainError(f"copula value {value} strays outside [0, 1]")
    return min(max(value, 0.0), 1.0)


def cdf_from_copula(copula: Copula, rates: tuple[float, float], x: float, y: float) -> float:
    """Joint cdf C(F(x), G(y)) with exponential marginals F, G."""
    lam, mu = rates
    if lam <= 0.0 or mu <= 0.0:
        raise DomainError(f"rates must be positive, got {rates}")
    if x < 0.0 or y < 0.0:
        return 0.0
    u = -math.expm1(-lam * x)
    v = -math.expm1(-mu * y)
    return copula_eval(copula, u, v)


def frechet_bounds(u: float, v: float) -> tuple[float, float]:
    """The pointwise envelope ((u+v-1)^+, min(u,v)) every copula obeys."""
    _check_unit(u, "u")
    _check_unit(v, "v")
    return max(0.0, u + v - 1.0), min(u, v)


def survival_reflection(copula: Copula, u: float, v: float) -> float:
    """The reflected copula u + v - 1 + C(1-u, 1-v).

    If (U, V) has copula C, this is the copula of (1-U, 1-V); it links a
    pair's distribution functions when C links its survival functions.
    """
    _check_unit(u, "u")
    _check_unit(v, "v")
    return u + v - 1.0 + copula.cdf(1.0 - u, 1.0 - v)


def sample_raftery_pairs(a: float, lam: float, size: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Exponential pairs (x, y) = (a*u + b*z, a*v + b*z) with shared b*z.

    u, v, z are i.i.d. Exp(lam) and b is Bernoulli(1-a), one shared draw
    per pair.  Both margins are Exp(lam); the survival pair
    (e^(-lam x), e^(-lam y)) follows :class:`RafteryCopula` with the same
    a.  Draw order per call: uniforms for b, then exponentials u, v, z.
    """
    if not 0.0 < a < 1.0:
        raise DomainError(f"a must lie in (0, 1), got {a}")
    if lam <= 0.0:
        raise DomainError(f"lam must be > 0, got {lam}")
    b = rng.random(size) < (1.0 - a)
    scale = 1.0 / lam
    u = rng.exponential(scale, size)
    v = rng.exponential(scale, size)
    z = rng.exponential(scale, size)
    shared = b * z
    return a * u + shared, a * v + shared

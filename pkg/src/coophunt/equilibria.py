"""Existence and coordinates of equilibria.

Positive (coexistence) equilibria correspond one-to-one to roots s > 1 of

    f(s) = s**3 - p*s**2 - q*b*(s - 1),        s = 1/u,

via u = 1/s, v = b*(s - 1)/s**2.  Roots are obtained in closed form
(Cardano / trigonometric) and polished by Newton steps, so none can be
missed and residuals stay at rounding level.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .errors import ThresholdUndefinedError
from .model import ScaledParams

#: Relative half-width of the band around the existence threshold q0 inside
#: which a parameter set is classified as the degenerate double root.
DEGENERATE_BAND = 1e-9

#: Residual bound the polished roots must satisfy: |f(s)| <= RESIDUAL_TOL * max(1, s**3).
RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class Cubic:
    """The coexistence cubic for one parameter set, with its critical points
    s1 <= 0 <= s2 (roots of f')."""

    b: float
    p: float
    q: float

    @classmethod
    def from_params(cls, params: ScaledParams) -> "Cubic":
        return cls(params.b, params.p, params.q)

    def value(self, s: float) -> float:
        return s * s * s - self.p * s * s - self.q * self.b * (s - 1.0)

    def derivative(self, s: float) -> float:
        return 3.0 * s * s - 2.0 * self.p * s - self.q * self.b

    def critical_points(self) -> tuple[float, float]:
        root = math.sqrt(self.p * self.p + 3.0 * self.q * self.b)
        return ((self.p - root) / 3.0, (self.p + root) / 3.0)


class ExistenceClass(enum.Enum):
    UNIQUE_POSITIVE = "unique_positive"
    TWO_POSITIVE = "two_positive"
    NONE_POSITIVE = "none_positive"
    DEGENERATE_DOUBLE = "degenerate_double"


class EquilibriumKind(enum.Enum):
    TRIVIAL = "trivial"
    PREDATOR_FREE = "predator_free"
    POSITIVE_PLUS = "positive_plus"
    POSITIVE_MINUS = "positive_minus"


@dataclass(frozen=True)
class Equilibrium:
    kind: EquilibriumKind
    u: float
    v: float
    s: Optional[float] = None  # reciprocal prey level for positive equilibria
    multiplicity: int = 1

    @property
    def state(self) -> tuple[float, float]:
        return (self.u, self.v)


@dataclass(frozen=True)
class RootClassification:
    """Existence class plus the (polished, ascending) roots of f in (1, inf).

    For the degenerate double root the single merged root is listed once
    with ``double`` set.
    """

    existence: ExistenceClass
    roots: tuple[float, ...]
    double: bool = False


@dataclass(frozen=True)
class EquilibriumSet:
    """Coordinates-only enumeration; stability is filled by the stability
    module."""

    existence: ExistenceClass
    equilibria: tuple[Equilibrium, ...]
    q0: Optional[float]

    def find(self, kind: EquilibriumKind) -> Optional[Equilibrium]:
        for eq in self.equilibria:
            if eq.kind is kind:
                return eq
        return None


def q0_value(b: float, p: float) -> float:
    """Existence threshold in q for p <= 1 (reduces to 1/b at p = 1)."""
    if p > 1.0:
        raise ThresholdUndefinedError("existence threshold q0 requires p <= 1")
    return ((9.0 - p) * math.sqrt((9.0 - p) * (1.0 - p)) + 27.0 - 18.0 * p - p * p) / (8.0 * b)


def q0_threshold(params: ScaledParams) -> float:
    """Cooperation level below which no coexistence equilibrium exists (p <= 1)."""
    return q0_value(params.b, params.p)


def _cubic_real_roots(a2: float, a1: float, a0: float) -> list[float]:
    """All real roots of s**3 + a2*s**2 + a1*s + a0, via the depressed form."""
    shift = a2 / 3.0
    P = a1 - a2 * a2 / 3.0
    Q = 2.0 * a2 ** 3 / 27.0 - a2 * a1 / 3.0 + a0
    if P == 0.0 and Q == 0.0:
        return [-shift]
    disc = (Q / 2.0) ** 2 + (P / 3.0) ** 3
    if disc > 0.0:
        r = math.sqrt(disc)
        y = math.copysign(abs(-Q / 2.0 + r) ** (1.0 / 3.0), -Q / 2.0 + r)
        y += math.copysign(abs(-Q / 2.0 - r) ** (1.0 / 3.0), -Q / 2.0 - r)
        return [y - shift]
    if disc == 0.0:
        y1 = 3.0 * Q / P
        return [y1 - shift, -y1 / 2.0 - shift]
    # three distinct real roots
    rho = 2.0 * math.sqrt(-P / 3.0)
    arg = 3.0 * Q / (P * rho)
    arg = min(1.0, max(-1.0, arg))
    theta = math.acos(arg) / 3.0
    return [rho * math.cos(theta - 2.0 * math.pi * k / 3.0) - shift for k in range(3)]


def _polish(cubic: Cubic, s: float, max_iter: int = 4) -> float:
    """Newton-polish a root; keeps the best residual, never diverges."""
    best, best_res = s, abs(cubic.value(s))
    for _ in range(max_iter):
        fp = cubic.derivative(s)
        if fp == 0.0:
            break
        step = cubic.value(s) / fp
        s -= step
        res = abs(cubic.value(s))
        if res < best_res:
            best, best_res = s, res
        if abs(step) <= 1e-16 * max(1.0, abs(s)):
            break
    return best


def classify_roots(params: ScaledParams, *, degenerate_band: float = DEGENERATE_BAND) -> RootClassification:
    """Classify the roots of the coexistence cubic in (1, inf).

    The case split is structural: p is compared to 1 exactly.  For p < 1 a
    relative band of width ``degenerate_band`` around q0 is reported as the
    degenerate double root (exact equality is measure-zero in floating
    point); there the merged root is the critical point of f, which is more
    accurate than solving the near-degenerate cubic.
    """
    b, p, q = params.b, params.p, params.q
    cubic = Cubic(b, p, q)

    if p == 1.0:
        # f factors as (s - 1)(s^2 - q*b): at most one root beyond 1.
        q0 = 1.0 / b
        if q <= q0:
            return RootClassification(ExistenceClass.NONE_POSITIVE, ())
        return RootClassification(ExistenceClass.UNIQUE_POSITIVE, (math.sqrt(q * b),))

    if p > 1.0:
        roots = _cubic_real_roots(-p, -q * b, q * b)
        s_plus = _polish(cubic, max(roots))
        return RootClassification(ExistenceClass.UNIQUE_POSITIVE, (s_plus,))

    q0 = q0_value(b, p)
    if abs(q - q0) <= degenerate_band * max(1.0, q0):
        s2 = cubic.critical_points()[1]
        return RootClassification(ExistenceClass.DEGENERATE_DOUBLE, (s2,), double=True)
    if q < q0:
        return RootClassification(ExistenceClass.NONE_POSITIVE, ())
    roots = sorted(_polish(cubic, s) for s in _cubic_real_roots(-p, -q * b, q * b) if s > 1.0)
    return RootClassification(ExistenceClass.TWO_POSITIVE, tuple(roots))


def coords_from_root(b: float, s: float) -> tuple[float, float]:
    """Map a root s > 1 of the cubic to equilibrium coordinates."""
    return (1.0 / s, b * (s - 1.0) / (s * s))


def equilibria_for(params: ScaledParams, *, degenerate_band: float = DEGENERATE_BAND) -> EquilibriumSet:
    """Enumerate all equilibria (coordinates only).

    The trivial and predator-free states are always present; coexistence
    equilibria follow :func:`classify_roots`.  The larger root s+ has the
    smaller prey level u+ <= u-.
    """
    rc = classify_roots(params, degenerate_band=degenerate_band)
    eqs = [
        Equilibrium(EquilibriumKind.TRIVIAL, 0.0, 0.0),
        Equilibrium(EquilibriumKind.PREDATOR_FREE, 1.0, 0.0),
    ]
    if rc.existence is ExistenceClass.UNIQUE_POSITIVE:
        s = rc.roots[0]
        u, v = coords_from_root(params.b, s)
        eqs.append(Equilibrium(EquilibriumKind.POSITIVE_PLUS, u, v, s=s))
    elif rc.existence is ExistenceClass.TWO_POSITIVE:
        s_minus, s_plus = rc.roots
        u, v = coords_from_root(params.b, s_minus)
        eqs.append(Equilibrium(EquilibriumKind.POSITIVE_MINUS, u, v, s=s_minus))
        u, v = coords_from_root(params.b, s_plus)
        eqs.append(Equilibrium(EquilibriumKind.POSITIVE_PLUS, u, v, s=s_plus))
    elif rc.existence is ExistenceClass.DEGENERATE_DOUBLE:
        s = rc.roots[0]
        u, v = coords_from_root(params.b, s)
        eqs.append(Equilibrium(EquilibriumKind.POSITIVE_PLUS, u, v, s=s, multiplicity=2))
    q0 = q0_value(params.b, params.p) if params.p <= 1.0 else None
    return EquilibriumSet(rc.existence, tuple(eqs), q0)

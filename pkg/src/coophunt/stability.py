"""Trace/determinant stability classification and the Hopf threshold.

Verdicts follow the local analysis of the model exactly: the trivial state
is always unstable; the predator-free state switches at p = 1 (with a
center-manifold verdict on the critical line); the coexistence equilibrium
E+ switches at the Hopf threshold q_h = (p+b)**2/(p+b-1) while E- is a
saddle whenever it exists.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Optional

from . import equilibria as eqmod
from .equilibria import Equilibrium, EquilibriumKind, EquilibriumSet, ExistenceClass
from .errors import ThresholdUndefinedError
from .model import RawParams, ScaledParams, jacobian, nondimensionalize

#: Relative half-width of the band around q_h reported as Hopf-critical.
HOPF_BAND = 1e-9


class Verdict(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    HOPF_CRITICAL = "hopf_critical"
    UNCLASSIFIED_BY_PAPER = "unclassified_by_paper"


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: Verdict
    witness: str  # which inequality fired, with the numbers that decide it

    @property
    def is_stable(self) -> bool:
        return self.verdict is Verdict.STABLE


@dataclass(frozen=True)
class EquilibriumInfo:
    equilibrium: Equilibrium
    trace: float
    det: float
    eigenvalues: tuple[complex, complex]
    verdict: StabilityVerdict

    @property
    def kind(self) -> EquilibriumKind:
        return self.equilibrium.kind


@dataclass(frozen=True)
class EquilibriumReport:
    """Every equilibrium with coordinates, spectral data and verdict, plus
    the parameter-space thresholds that organized the classification."""

    params: ScaledParams
    existence: ExistenceClass
    entries: tuple[EquilibriumInfo, ...]
    q0: Optional[float]
    qh: Optional[float]
    b_threshold: Optional[float]

    def find(self, kind: EquilibriumKind) -> Optional[EquilibriumInfo]:
        for entry in self.entries:
            if entry.kind is kind:
                return entry
        return None


def qh_value(b: float, p: float) -> float:
    if p + b <= 1.0:
        raise ThresholdUndefinedError("Hopf threshold q_h requires p + b > 1")
    return (p + b) ** 2 / (p + b - 1.0)


def qh_threshold(params: ScaledParams) -> float:
    """Hopf threshold q_h = (p+b)**2/(p+b-1); defined when p + b > 1."""
    return qh_value(params.b, params.p)


def b_threshold_value(p: float) -> float:
    """Prey-growth level separating switchable from always-unstable E+ (p <= 1)."""
    if p > 1.0:
        raise ThresholdUndefinedError("birth-rate threshold requires p <= 1")
    return (3.0 * (1.0 - p) + math.sqrt((1.0 - p) * (9.0 - p))) / 4.0


def eigenvalues_from_trace_det(trace: float, det: float) -> tuple[complex, complex]:
    """Closed-form eigenvalues of a real 2x2 matrix from its invariants."""
    disc = trace * trace - 4.0 * det
    root = cmath.sqrt(disc) if disc < 0.0 else complex(math.sqrt(disc), 0.0)
    return ((trace + root) / 2.0, (trace - root) / 2.0)


def classify_boundary(params: ScaledParams) -> tuple[StabilityVerdict, StabilityVerdict]:
    """Verdicts for the trivial and the predator-free equilibrium."""
    b, p, q = params.b, params.p, params.q
    e0 = StabilityVerdict(Verdict.UNSTABLE, f"eigenvalue b={b:.6g}>0 at (0,0)")
    if p < 1.0:
        e1 = StabilityVerdict(Verdict.STABLE, f"p={p:.6g}<1: eigenvalues -b and p-1 both negative")
    elif p > 1.0:
        e1 = StabilityVerdict(Verdict.UNSTABLE, f"p={p:.6g}>1: eigenvalue p-1>0")
    else:
        qcrit = 1.0 / b
        if q < qcrit:
            e1 = StabilityVerdict(
                Verdict.STABLE,
                f"p=1 center manifold: v' ~ (q-1/b)v^2 with q={q:.6g} < 1/b={qcrit:.6g}",
            )
        elif q == qcrit:
            e1 = StabilityVerdict(
                Verdict.STABLE,
                "p=1, q=1/b critically stable (center manifold): v' ~ -2*q^2*v^3",
            )
        else:
            e1 = StabilityVerdict(
                Verdict.UNSTABLE,
                f"p=1 center manifold: v' ~ (q-1/b)v^2 with q={q:.6g} > 1/b={qcrit:.6g}",
            )
    return e0, e1


def classify_positive(
    params: ScaledParams,
    eqset: EquilibriumSet,
    *,
    hopf_band: float = HOPF_BAND,
) -> dict[EquilibriumKind, StabilityVerdict]:
    """Verdicts for the coexistence equilibria present in ``eqset``.

    E- is unstable outright (negative determinant).  E+ switches stability
    across q_h when a switch is possible at all; for p <= 1 with b below the
    birth-rate threshold it is unstable for every admissible q, and exactly
    at that threshold the verdict is left unclassified (the source analysis
    covers strict inequalities only).
    """
    b, p, q = params.b, params.p, params.q
    out: dict[EquilibriumKind, StabilityVerdict] = {}

    minus = eqset.find(EquilibriumKind.POSITIVE_MINUS)
    if minus is not None:
        J = jacobian(params, minus.state)
        det = float(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
        out[EquilibriumKind.POSITIVE_MINUS] = StabilityVerdict(
            Verdict.UNSTABLE, f"det(J-)={det:.6g}<0 (saddle)"
        )

    plus = eqset.find(EquilibriumKind.POSITIVE_PLUS)
    if plus is None:
        return out

    if eqset.existence is ExistenceClass.DEGENERATE_DOUBLE:
        out[EquilibriumKind.POSITIVE_PLUS] = StabilityVerdict(
            Verdict.UNCLASSIFIED_BY_PAPER,
            "degenerate double equilibrium at q=q0: stability unclassified by paper",
        )
        return out

    if p <= 1.0:
        bth = b_threshold_value(p)
        if b < bth:
            out[EquilibriumKind.POSITIVE_PLUS] = StabilityVerdict(
                Verdict.UNSTABLE,
                f"b={b:.6g} < b_threshold={bth:.6g}: tr(J+)>0 for all q>q0",
            )
            return out
        if b == bth:
            out[EquilibriumKind.POSITIVE_PLUS] = StabilityVerdict(
                Verdict.UNCLASSIFIED_BY_PAPER,
                f"b exactly at b_threshold={bth:.6g}: strict-inequality analysis only",
            )
            return out

    qh = qh_value(b, p)  # p>1, or p<=1 with b>b_threshold>=1-p, so defined
    if abs(q - qh) <= hopf_band * max(1.0, qh):
        out[EquilibriumKind.POSITIVE_PLUS] = StabilityVerdict(
            Verdict.HOPF_CRITICAL, f"|q-q_h|<=band: q={q!r}, q_h={qh!r}"
        )
    elif q < qh:
        out[EquilibriumKind.POSITIVE_PLUS] = StabilityVerdict(
            Verdict.STABLE, f"tr(J+)<0: q={q:.6g} < q_h={qh:.6g}"
        )
    else:
        out[EquilibriumKind.POSITIVE_PLUS] = StabilityVerdict(
            Verdict.UNSTABLE, f"tr(J+)>0: q={q:.6g} > q_h={qh:.6g}"
        )
    return out


def analyze(params: ScaledParams, *, hopf_band: float = HOPF_BAND) -> EquilibriumReport:
    """Full equilibrium report: enumeration, spectral data and verdicts."""
    eqset = eqmod.equilibria_for(params)
    verdict_e0, verdict_e1 = classify_boundary(params)
    positive = classify_positive(params, eqset, hopf_band=hopf_band)

    entries = []
    for eq in eqset.equilibria:
        J = jacobian(params, eq.state)
        trace = float(J[0, 0] + J[1, 1])
        det = float(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
        eigs = eigenvalues_from_trace_det(trace, det)
        if eq.kind is EquilibriumKind.TRIVIAL:
            verdict = verdict_e0
        elif eq.kind is EquilibriumKind.PREDATOR_FREE:
            verdict = verdict_e1
        else:
            verdict = positive[eq.kind]
        entries.append(EquilibriumInfo(eq, trace, det, eigs, verdict))

    p, b = params.p, params.b
    return EquilibriumReport(
        params=params,
        existence=eqset.existence,
        entries=tuple(entries),
        q0=eqset.q0,
        qh=qh_value(b, p) if p + b > 1.0 else None,
        b_threshold=b_threshold_value(p) if p <= 1.0 else None,
    )


@dataclass(frozen=True)
class RawEquilibrium:
    kind: EquilibriumKind
    U: float
    V: float
    verdict: StabilityVerdict


@dataclass(frozen=True)
class NonscaledReport:
    """Classification of the original system in its own units.

    Thresholds are reported in the dimensional forms: the Hopf comparison
    C^2*Q*K^2 vs (C*P*K+B)^2/(C*P*K+B-D), the existence comparison
    8*B*C^2*Q*K^2 vs (9D-CPK)*sqrt((D-CPK)(9D-CPK))+27D^2-18D*CPK-C^2P^2K^2,
    and the birth-rate comparison 4B vs 3(D-CPK)+sqrt((D-CPK)(9D-CPK)).
    """

    raw: RawParams
    r0: float
    scaled: ScaledParams
    scaled_report: EquilibriumReport
    equilibria: tuple[RawEquilibrium, ...]
    hopf_lhs: Optional[float]
    hopf_rhs: Optional[float]
    existence_lhs: Optional[float]
    existence_rhs: Optional[float]
    birth_lhs: Optional[float]
    birth_rhs: Optional[float]
    predator_free_critical_lhs: Optional[float]
    predator_free_critical_rhs: Optional[float]


def classify_nonscaled(raw: RawParams, *, hopf_band: float = HOPF_BAND) -> NonscaledReport:
    """Run the scaled classification and map everything back to raw units
    (U = K*u, V = C*K*v), with thresholds in their dimensional forms."""
    scaled = nondimensionalize(raw)
    report = analyze(scaled, hopf_band=hopf_band)
    B, K, P, Q, C, D = raw.B, raw.K, raw.P, raw.Q, raw.C, raw.D
    cpk = C * P * K
    r0 = cpk / D

    mapped = tuple(
        RawEquilibrium(e.kind, K * e.equilibrium.u, C * K * e.equilibrium.v, e.verdict)
        for e in report.entries
    )

    hopf_lhs = hopf_rhs = None
    if cpk + B > D:
        hopf_lhs = C * C * Q * K * K
        hopf_rhs = (cpk + B) ** 2 / (cpk + B - D)
    existence_lhs = existence_rhs = birth_lhs = birth_rhs = None
    if r0 <= 1.0:
        existence_lhs = 8.0 * B * C * C * Q * K * K
        existence_rhs = (
            (9.0 * D - cpk) * math.sqrt((D - cpk) * (9.0 * D - cpk))
            + 27.0 * D * D - 18.0 * D * cpk - cpk * cpk
        )
        birth_lhs = 4.0 * B
        birth_rhs = 3.0 * (D - cpk) + math.sqrt((D - cpk) * (9.0 * D - cpk))
    pf_lhs = pf_rhs = None
    if r0 == 1.0:
        pf_lhs = B * C * C * Q * K * K
        pf_rhs = D * D

    return NonscaledReport(
        raw=raw,
        r0=r0,
        scaled=scaled,
        scaled_report=report,
        equilibria=mapped,
        hopf_lhs=hopf_lhs,
        hopf_rhs=hopf_rhs,
        existence_lhs=existence_lhs,
        existence_rhs=existence_rhs,
        birth_lhs=birth_lhs,
        birth_rhs=birth_rhs,
        predator_free_critical_lhs=pf_lhs,
        predator_free_critical_rhs=pf_rhs,
    )

"""Adaptive integration of the model, attractor events and probes.

The stepper is a fixed, hand-rolled Dormand-Prince 5(4) pair with PI step
control and the standard quartic dense-output interpolant: a pluggable
backend would make the golden CLI outputs irreproducible.  The field is
two-dimensional, smooth and non-stiff in the studied regimes, so the pair
is run on plain floats for speed.

Events supported on top of plain integration: convergence into a small
ball around a known equilibrium (with a residual guard so terminal points
are genuinely stationary), downward crossings of the Poincare section
u = u_plus used for limit-cycle detection, and the enter/exit ball tests
used by the stability probe.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from . import equilibria as eqmod
from . import stability as stmod
from .equilibria import Equilibrium, EquilibriumKind
from .errors import CycleTimeoutError, InvalidParameterError, ProbeInconclusiveError
from .model import RawParams, ScaledParams, raw_vector_field, vector_field
from .stability import Verdict

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)
# dense-output weights
_D1 = -12715105075.0 / 11282082432.0
_D3 = 87487479700.0 / 32700410799.0
_D4 = -10690763975.0 / 1880347072.0
_D5 = 701980252875.0 / 199316789632.0
_D6 = -1453857185.0 / 822651844.0
_D7 = 69997945.0 / 29380423.0

_SAFE = 0.9
_BETA = 0.04
_EXPO1 = 0.2 - _BETA * 0.75
_FACC1 = 5.0  # 1/min-shrink-factor
_FACC2 = 0.1  # 1/max-growth-factor

#: Adaptive steps below this length abort the run as a step failure.
STEP_UNDERFLOW = 1e-14

#: Time localization tolerance for section crossings.
EVENT_TIME_TOL = 1e-12

Field = Callable[[float, float, float], tuple[float, float]]


class TerminationReason(enum.Enum):
    HORIZON = "horizon"
    CONVERGED = "converged-to-equilibrium"
    CYCLE_DETECTED = "cycle-detected"
    STEP_FAILURE = "step-failure"


@dataclass(frozen=True)
class SimConfig:
    """Integration setup: initial state, horizon, tolerances and events."""

    u0: float
    v0: float
    t_max: float
    rtol: float = 1e-9
    atol: float = 1e-12
    max_step: float = math.inf
    initial_step: Optional[float] = None
    detect_equilibrium: bool = True
    equilibrium_radius: float = 1e-6
    residual_tol: float = 1e-8
    cycle_detection: bool = False
    burn_in_fraction: float = 0.5
    cycle_return_rtol: float = 1e-4
    cycle_state_atol: float = 1e-6
    record: bool = True
    store_dense: bool = True

    def __post_init__(self):
        if self.u0 < 0.0 or self.v0 < 0.0:
            raise InvalidParameterError("initial state must lie in the closed first quadrant")
        if not self.t_max > 0.0:
            raise InvalidParameterError("t_max must be positive")
        if not 0.0 < self.rtol <= 1e-3:
            raise InvalidParameterError("rtol must lie in (0, 1e-3]")
        if not self.atol > 0.0:
            raise InvalidParameterError("atol must be positive")
        if not 0.0 < self.burn_in_fraction < 1.0:
            raise InvalidParameterError("burn_in_fraction must lie in (0, 1)")


class DenseOutput:
    """Per-step quartic interpolants of an accepted-step sequence."""

    __slots__ = ("ts", "hs", "coeffs")

    def __init__(self, ts: list[float], hs: list[float], coeffs: list[tuple[float, ...]]):
        self.ts = np.asarray(ts)
        self.hs = np.asarray(hs)
        self.coeffs = coeffs

    def __len__(self) -> int:
        return len(self.coeffs)

    def eval(self, t: float) -> tuple[float, float]:
        if len(self.coeffs) == 0:
            raise ValueError("empty dense output")
        i = int(np.searchsorted(self.ts, t, side="right")) - 1
        i = min(max(i, 0), len(self.coeffs) - 1)
        theta = (t - float(self.ts[i])) / float(self.hs[i])
        return _dense_eval(self.coeffs[i], theta)


def _dense_eval(seg: tuple[float, ...], theta: float) -> tuple[float, float]:
    r1u, r2u, r3u, r4u, r5u, r1v, r2v, r3v, r4v, r5v = seg
    om = 1.0 - theta
    u = r1u + theta * (r2u + om * (r3u + theta * (r4u + om * r5u)))
    v = r1v + theta * (r2v + om * (r3v + theta * (r4v + om * r5v)))
    return (u, v)


@dataclass(frozen=True)
class Trajectory:
    """Sampled orbit: one sample per accepted step plus the event point."""

    t: np.ndarray
    states: np.ndarray  # shape (n, 2)
    reason: TerminationReason
    equilibrium: Optional[Equilibrium] = None  # set for CONVERGED
    dense: Optional[DenseOutput] = None
    section_returns: tuple[tuple[float, float], ...] = ()  # (t, v) at u = u_plus
    clamp_count: int = 0
    max_undershoot: float = 0.0
    stop_label: Optional[str] = None  # private probe outcome

    @property
    def has_dense(self) -> bool:
        return self.dense is not None

    @property
    def final_state(self) -> tuple[float, float]:
        return (float(self.states[-1, 0]), float(self.states[-1, 1]))

    def eval(self, t: float) -> tuple[float, float]:
        if self.dense is None:
            raise ValueError("trajectory was integrated without dense output")
        return self.dense.eval(t)


@dataclass(frozen=True)
class CycleSummary:
    """Limit-cycle statistics from settled Poincare returns."""

    period: float
    u_min: float
    u_max: float
    v_min: float
    v_max: float
    mean_state: tuple[float, float]
    n_returns: int
    converged: bool

    @property
    def u_amplitude(self) -> float:
        return self.u_max - self.u_min

    @property
    def v_amplitude(self) -> float:
        return self.v_max - self.v_min


def _initial_step(f: Field, t0, u, v, fu, fv, rtol, atol, t_max):
    scu = atol + rtol * abs(u)
    scv = atol + rtol * abs(v)
    d0 = math.sqrt(((u / scu) ** 2 + (v / scv) ** 2) / 2.0)
    d1 = math.sqrt(((fu / scu) ** 2 + (fv / scv) ** 2) / 2.0)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, t_max)
    gu, gv = f(t0 + h0, u + h0 * fu, v + h0 * fv)
    d2 = math.sqrt((((gu - fu) / scu) ** 2 + ((gv - fv) / scv) ** 2) / 2.0) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, t_max)


class _CycleWatch:
    """Downward-crossing bookkeeping on the section u = u_section."""

    def __init__(self, u_section, v_section, t_start, return_rtol, state_atol):
        self.u_section = u_section
        self.v_section = v_section
        self.t_start = t_start
        self.return_rtol = return_rtol
        self.state_atol = state_atol
        self.returns: list[tuple[float, float]] = []

    def locate(self, t0, h, seg) -> Optional[tuple[float, float]]:
        lo, hi = 0.0, 1.0
        while h * (hi - lo) > EVENT_TIME_TOL:
            mid = 0.5 * (lo + hi)
            if _dense_eval(seg, mid)[0] > self.u_section:
                lo = mid
            else:
                hi = mid
        theta = 0.5 * (lo + hi)
        return (t0 + theta * h, _dense_eval(seg, theta)[1])

    def settled(self) -> bool:
        if len(self.returns) < 4:
            return False
        t = [r[0] for r in self.returns[-4:]]
        diffs = [t[1] - t[0], t[2] - t[1], t[3] - t[2]]
        mean = sum(diffs) / 3.0
        if mean <= 0.0 or max(diffs) - min(diffs) > self.return_rtol * mean:
            return False
        vs = [r[1] for r in self.returns[-3:]]
        return max(vs) - min(vs) <= self.state_atol


def _integrate_core(
    f: Field,
    cfg: SimConfig,
    targets: tuple[Equilibrium, ...],
    cycle_watch: Optional[_CycleWatch],
    ball_stop: Optional[tuple[float, float, float, float]],
):
    """Run the stepper; returns a finished :class:`Trajectory`.

    ``ball_stop`` = (cu, cv, r_enter, r_exit): terminate with stop_label
    'converged' / 'escaped' upon entering/leaving the respective ball.
    """
    t = 0.0
    u, v = cfg.u0, cfg.v0
    pin_u = u == 0.0
    pin_v = v == 0.0
    fu, fv = f(t, u, v)

    ts = [t]
    us = [u]
    vs = [v]
    dense_ts: list[float] = []
    dense_hs: list[float] = []
    dense_coeffs: list[tuple[float, ...]] = []
    need_dense = cfg.store_dense or cycle_watch is not None

    h = cfg.initial_step or _initial_step(f, t, u, v, fu, fv, cfg.rtol, cfg.atol, cfg.t_max)
    h = min(h, cfg.max_step)
    facold = 1e-4
    clamp_count = 0
    max_undershoot = 0.0

    reason = TerminationReason.HORIZON
    which: Optional[Equilibrium] = None
    stop_label: Optional[str] = None

    while t < cfg.t_max:
        h = min(h, cfg.max_step, cfg.t_max - t)
        if h < STEP_UNDERFLOW:
            reason = TerminationReason.STEP_FAILURE
            break

        k1u, k1v = fu, fv
        yu = u + h * _A21 * k1u
        yv = v + h * _A21 * k1v
        k2u, k2v = f(t + _C2 * h, yu, yv)
        yu = u + h * (_A31 * k1u + _A32 * k2u)
        yv = v + h * (_A31 * k1v + _A32 * k2v)
        k3u, k3v = f(t + _C3 * h, yu, yv)
        yu = u + h * (_A41 * k1u + _A42 * k2u + _A43 * k3u)
        yv = v + h * (_A41 * k1v + _A42 * k2v + _A43 * k3v)
        k4u, k4v = f(t + _C4 * h, yu, yv)
        yu = u + h * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u)
        yv = v + h * (_A51 * k1v + _A52 * k2v + _A53 * k3v + _A54 * k4v)
        k5u, k5v = f(t + _C5 * h, yu, yv)
        yu = u + h * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u)
        yv = v + h * (_A61 * k1v + _A62 * k2v + _A63 * k3v + _A64 * k4v + _A65 * k5v)
        k6u, k6v = f(t + h, yu, yv)
        y1u = u + h * (_B1 * k1u + _B3 * k3u + _B4 * k4u + _B5 * k5u + _B6 * k6u)
        y1v = v + h * (_B1 * k1v + _B3 * k3v + _B4 * k4v + _B5 * k5v + _B6 * k6v)

        if pin_u:
            y1u = 0.0
        if pin_v:
            y1v = 0.0
        undershoot = min(y1u, y1v)
        if undershoot < -cfg.atol:
            h *= 0.5
            continue
        if y1u < 0.0 or y1v < 0.0:
            clamp_count += 1
            max_undershoot = max(max_undershoot, -undershoot)
            y1u = max(y1u, 0.0)
            y1v = max(y1v, 0.0)

        k7u, k7v = f(t + h, y1u, y1v)
        eu = h * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u + _E7 * k7u)
        ev = h * (_E1 * k1v + _E3 * k3v + _E4 * k4v + _E5 * k5v + _E6 * k6v + _E7 * k7v)
        if pin_u:
            eu = 0.0
        if pin_v:
            ev = 0.0
        scu = cfg.atol + cfg.rtol * max(abs(u), abs(y1u))
        scv = cfg.atol + cfg.rtol * max(abs(v), abs(y1v))
        err = math.sqrt(((eu / scu) ** 2 + (ev / scv) ** 2) / 2.0)

        fac11 = err ** _EXPO1 if err > 0.0 else 1e-10
        if err > 1.0:
            h /= min(_FACC1, fac11 / _SAFE)
            continue

        # accepted
        seg = None
        if need_dense:
            du, dv = y1u - u, y1v - v
            bsplu, bsplv = h * k1u - du, h * k1v - dv
            r5u = h * (_D1 * k1u + _D3 * k3u + _D4 * k4u + _D5 * k5u + _D6 * k6u + _D7 * k7u)
            r5v = h * (_D1 * k1v + _D3 * k3v + _D4 * k4v + _D5 * k5v + _D6 * k6v + _D7 * k7v)
            seg = (u, du, bsplu, du - h * k7u - bsplu, r5u, v, dv, bsplv, dv - h * k7v - bsplv, r5v)
            if cfg.store_dense:
                dense_ts.append(t)
                dense_hs.append(h)
                dense_coeffs.append(seg)

        t_new = t + h
        event_hit = False

        if cycle_watch is not None and u > cycle_watch.u_section >= y1u:
            hit = cycle_watch.locate(t, h, seg)
            if hit is not None and hit[0] >= cycle_watch.t_start and hit[1] > cycle_watch.v_section:
                cycle_watch.returns.append(hit)
                if cycle_watch.settled():
                    t_ev, v_ev = hit
                    ts.append(t_ev)
                    us.append(cycle_watch.u_section)
                    vs.append(v_ev)
                    reason = TerminationReason.CYCLE_DETECTED
                    event_hit = True

        if not event_hit:
            if cfg.record:
                ts.append(t_new)
                us.append(y1u)
                vs.append(y1v)
            else:
                ts[-1], us[-1], vs[-1] = t_new, y1u, y1v

            if targets:
                for eq in targets:
                    if math.hypot(y1u - eq.u, y1v - eq.v) <= cfg.equilibrium_radius:
                        g = f(t_new, y1u, y1v)
                        if max(abs(g[0]), abs(g[1])) <= cfg.residual_tol:
                            reason = TerminationReason.CONVERGED
                            which = eq
                            event_hit = True
                            break
            if not event_hit and ball_stop is not None:
                dist = math.hypot(y1u - ball_stop[0], y1v - ball_stop[1])
                if dist <= ball_stop[2]:
                    stop_label = "converged"
                    event_hit = True
                elif dist >= ball_stop[3]:
                    stop_label = "escaped"
                    event_hit = True

        if event_hit:
            break

        t, u, v = t_new, y1u, y1v
        fu, fv = k7u, k7v
        facold = max(err, 1e-4)
        fac = fac11 / facold ** _BETA
        h = h / max(_FACC2, min(_FACC1, fac / _SAFE))

    dense = DenseOutput(dense_ts, dense_hs, dense_coeffs) if cfg.store_dense and dense_coeffs else None
    return Trajectory(
        t=np.asarray(ts),
        states=np.column_stack([np.asarray(us), np.asarray(vs)]),
        reason=reason,
        equilibrium=which,
        dense=dense,
        section_returns=tuple(cycle_watch.returns) if cycle_watch is not None else (),
        clamp_count=clamp_count,
        max_undershoot=max_undershoot,
        stop_label=stop_label,
    )


def _scaled_field(params: ScaledParams) -> Field:
    b, p, q = params.b, params.p, params.q

    def f(t: float, u: float, v: float) -> tuple[float, float]:
        predation = p * u * v + q * u * v * v
        return (b * u * (1.0 - u) - predation, predation - v)

    return f


def integrate(params: ScaledParams, cfg: SimConfig) -> Trajectory:
    """Integrate the scaled system under ``cfg``.

    Terminates at the horizon, on convergence into a known equilibrium
    (distance below the configured radius and residual below the residual
    tolerance), on a settled limit cycle when cycle detection is enabled,
    or with a step failure when the adaptive step underflows.
    """
    eqset = eqmod.equilibria_for(params)
    targets = eqset.equilibria if cfg.detect_equilibrium else ()
    watch = None
    if cfg.cycle_detection:
        plus = eqset.find(EquilibriumKind.POSITIVE_PLUS)
        if plus is not None:
            watch = _CycleWatch(
                plus.u,
                plus.v,
                cfg.burn_in_fraction * cfg.t_max,
                cfg.cycle_return_rtol,
                cfg.cycle_state_atol,
            )
    return _integrate_core(_scaled_field(params), cfg, targets, watch, None)


def integrate_raw(raw: RawParams, cfg: SimConfig) -> Trajectory:
    """Integrate the original dimensional system (scaling-equivalence checks)."""

    def f(t: float, U: float, V: float) -> tuple[float, float]:
        return raw_vector_field(raw, (U, V))

    cfg = dataclasses.replace(cfg, detect_equilibrium=False, cycle_detection=False)
    return _integrate_core(f, cfg, (), None, None)


def _summary_from_returns(traj: Trajectory, returns) -> CycleSummary:
    t_ret = [r[0] for r in returns]
    diffs = [t_ret[i + 1] - t_ret[i] for i in range(len(t_ret) - 1)]
    period = sum(diffs[-3:]) / 3.0
    t_end = t_ret[-1]
    n_samples = 4096
    grid = np.linspace(t_end - period, t_end, n_samples)
    pts = np.array([traj.eval(float(tt)) for tt in grid])
    mean_u = float(np.trapezoid(pts[:, 0], grid) / period)
    mean_v = float(np.trapezoid(pts[:, 1], grid) / period)
    return CycleSummary(
        period=period,
        u_min=float(pts[:, 0].min()),
        u_max=float(pts[:, 0].max()),
        v_min=float(pts[:, 1].min()),
        v_max=float(pts[:, 1].max()),
        mean_state=(mean_u, mean_v),
        n_returns=len(returns),
        converged=True,
    )


def detect_cycle(params: ScaledParams, source: Union[SimConfig, Trajectory]) -> Optional[CycleSummary]:
    """Detect a stable limit cycle around an unstable coexistence state.

    Returns ``None`` quickly when E+ is absent or not unstable.  Otherwise
    integrates (or scans an existing dense trajectory) and requires the
    last three Poincare return-time differences to agree to the configured
    relative tolerance with matching return states; raises
    :class:`CycleTimeoutError` when the returns never settle.
    """
    report = stmod.analyze(params)
    plus = report.find(EquilibriumKind.POSITIVE_PLUS)
    if plus is None or plus.verdict.verdict is not Verdict.UNSTABLE:
        return None

    if isinstance(source, SimConfig):
        cfg = dataclasses.replace(source, cycle_detection=True, store_dense=True)
        traj = integrate(params, cfg)
        if traj.reason is TerminationReason.CYCLE_DETECTED:
            return _summary_from_returns(traj, list(traj.section_returns))
        raise CycleTimeoutError(
            f"no settled section returns within t_max (termination: {traj.reason.value})"
        )

    traj = source
    if traj.dense is None:
        raise InvalidParameterError("cycle scan needs a trajectory with dense output")
    u_sec, v_sec = plus.equilibrium.u, plus.equilibrium.v
    t_end = float(traj.t[-1])
    watch = _CycleWatch(u_sec, v_sec, 0.5 * t_end, 1e-4, 1e-6)
    for i in range(len(traj.dense)):
        seg = traj.dense.coeffs[i]
        t0 = float(traj.dense.ts[i])
        h = float(traj.dense.hs[i])
        u0 = seg[0]
        u1 = _dense_eval(seg, 1.0)[0]
        if u0 > u_sec >= u1:
            hit = watch.locate(t0, h, seg)
            if hit is not None and hit[0] >= watch.t_start and hit[1] > v_sec:
                watch.returns.append(hit)
                if watch.settled():
                    return _summary_from_returns(traj, watch.returns)
    raise CycleTimeoutError("no settled section returns found in the given trajectory")


@dataclass(frozen=True)
class ProbeOrbit:
    angle: float
    start: tuple[float, float]
    outcome: str  # 'converged' | 'escaped' | 'undecided'
    t_final: float
    final_state: tuple[float, float]


@dataclass(frozen=True)
class ProbeResult:
    converged: bool
    orbits: tuple[ProbeOrbit, ...]

    def __bool__(self) -> bool:
        return self.converged


def stability_probe(
    params: ScaledParams,
    equilibrium,
    radius: float = 1e-3,
    *,
    t_max: float = 1e5,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    seed: Optional[int] = None,
) -> ProbeResult:
    """Simulation-based stability check of one equilibrium.

    Integrates from 8 points on the circle of the given radius (clamped to
    the closed first quadrant); converged means entering radius/10, escaped
    means leaving 10*radius.  True iff every orbit converges; the first
    escape decides False.  Non-hyperbolic cases converge at an algebraic
    rate, so pass an extended ``t_max`` for them.  Raises
    :class:`ProbeInconclusiveError` if undecided orbits remain and nothing
    escaped.
    """
    eu, ev = (equilibrium.u, equilibrium.v) if isinstance(equilibrium, Equilibrium) else equilibrium
    offset = 0.0
    if seed is not None:
        offset = float(np.random.default_rng(seed).uniform(0.0, 2.0 * math.pi))
    f = _scaled_field(params)

    orbits: list[ProbeOrbit] = []
    for k in range(8):
        angle = offset + k * math.pi / 4.0
        start = (max(eu + radius * math.cos(angle), 0.0), max(ev + radius * math.sin(angle), 0.0))
        if math.hypot(start[0] - eu, start[1] - ev) <= radius / 10.0:
            orbits.append(ProbeOrbit(angle, start, "converged", 0.0, start))
            continue
        cfg = SimConfig(
            u0=start[0],
            v0=start[1],
            t_max=t_max,
            rtol=rtol,
            atol=atol,
            detect_equilibrium=False,
            record=False,
            store_dense=False,
        )
        traj = _integrate_core(f, cfg, (), None, (eu, ev, radius / 10.0, 10.0 * radius))
        outcome = traj.stop_label or "undecided"
        orbits.append(ProbeOrbit(angle, start, outcome, float(traj.t[-1]), traj.final_state))
        if outcome == "escaped":
            return ProbeResult(False, tuple(orbits))

    if all(o.outcome == "converged" for o in orbits):
        return ProbeResult(True, tuple(orbits))
    undecided = sum(1 for o in orbits if o.outcome == "undecided")
    raise ProbeInconclusiveError(
        f"{undecided} probe orbit(s) neither converged nor escaped within t_max={t_max:g}"
    )

"""Parameter sets, vector fields and Jacobians of the cooperative-hunting
predator-prey model.

The dimensionless system

    u' = b*u*(1 - u) - p*u*v - q*u*v**2
    v' = p*u*v + q*u*v**2 - v

is the canonical internal representation; the original six-parameter system
only appears at the API boundary (``nondimensionalize`` plus
``raw_vector_field`` for the scaling-equivalence check).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

Pair = tuple[float, float]


@dataclass(frozen=True)
class RawParams:
    """Biological parameters of the original (dimensional) system.

    Attributes
    ----------
    B : prey per-capita birth rate (1/time)
    K : prey carrying capacity (density)
    P : mass-action predation rate (1/(density*time))
    Q : cooperative predation rate (1/(density^2*time))
    C : conversion efficiency, in (0, 1]
    D : predator per-capita death rate (1/time)
    """

    B: float
    K: float
    P: float
    Q: float
    C: float
    D: float

    def __post_init__(self):
        for name in ("B", "K", "P", "Q", "D"):
            if not getattr(self, name) > 0.0:
                raise InvalidParameterError(f"{name} must be strictly positive")
        if not 0.0 < self.C <= 1.0:
            raise InvalidParameterError("C must lie in (0, 1]")


@dataclass(frozen=True)
class ScaledParams:
    """Dimensionless parameters: prey growth b, mass-action rate p
    (the predator's basic reproduction number) and cooperation rate q."""

    b: float
    p: float
    q: float

    def __post_init__(self):
        if not self.b > 0.0:
            raise InvalidParameterError("b must be strictly positive")
        if not self.p > 0.0:
            raise InvalidParameterError("p must be strictly positive")
        if not self.q >= 0.0:
            raise InvalidParameterError("q must be non-negative")


@dataclass(frozen=True)
class State:
    """Scaled (prey, predator) densities; meaningful on the closed first
    quadrant only."""

    u: float
    v: float

    def __post_init__(self):
        if self.u < 0.0 or self.v < 0.0:
            raise InvalidParameterError("state must have u >= 0 and v >= 0")

    def __iter__(self):
        return iter((self.u, self.v))


def nondimensionalize(raw: RawParams) -> ScaledParams:
    """Map the six biological parameters to the dimensionless triple.

    b = B/D, p = C*P*K/D, q = C**2*Q*K**2/D.  The state/time scaling that
    goes with it is u = U/K, v = V/(C*K), t = D*T; p equals the predator's
    basic reproduction number R0.
    """
    return ScaledParams(
        b=raw.B / raw.D,
        p=raw.C * raw.P * raw.K / raw.D,
        q=raw.C * raw.C * raw.Q * raw.K * raw.K / raw.D,
    )


def vector_field(params: ScaledParams, state) -> Pair:
    """Right-hand side (du/dt, dv/dt) of the scaled system.

    The polynomial field is evaluated wherever it is asked for; only the
    closed first quadrant is model-meaningful (integrators probe slightly
    outside it during trial steps, and the finite-difference Jacobian
    perturbs boundary states).
    """
    u, v = state
    predation = params.p * u * v + params.q * u * v * v
    return (params.b * u * (1.0 - u) - predation, predation - v)


def raw_vector_field(raw: RawParams, state) -> Pair:
    """Right-hand side (dU/dT, dV/dT) of the original dimensional system."""
    U, V = state
    predation = raw.P * U * V + raw.Q * U * V * V
    return (raw.B * U * (1.0 - U / raw.K) - predation, raw.C * predation - raw.D * V)


def jacobian(params: ScaledParams, state) -> np.ndarray:
    """Analytic Jacobian of the scaled vector field at ``state``."""
    u, v = state
    b, p, q = params.b, params.p, params.q
    return np.array(
        [
            [b * (1.0 - 2.0 * u) - p * v - q * v * v, -p * u - 2.0 * q * u * v],
            [p * v + q * v * v, p * u + 2.0 * q * u * v - 1.0],
        ]
    )


def jacobian_fd_oracle(params: ScaledParams, state, h: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of :func:`vector_field`.

    Validation oracle for tests; ``h`` must be positive.
    """
    if not h > 0.0:
        raise InvalidParameterError("finite-difference step h must be positive")
    u, v = state
    J = np.empty((2, 2))
    fu_plus = vector_field(params, (u + h, v))
    fu_minus = vector_field(params, (u - h, v))
    fv_plus = vector_field(params, (u, v + h))
    fv_minus = vector_field(params, (u, v - h))
    for i in range(2):
        J[i, 0] = (fu_plus[i] - fu_minus[i]) / (2.0 * h)
        J[i, 1] = (fv_plus[i] - fv_minus[i]) / (2.0 * h)
    return J

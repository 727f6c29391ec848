"""Physical data, boundary-condition variants and coordinate changes.

The regulated system lives in v-coordinates (velocity setpoint v1_ref, source
terms f, f1, f2); the stabilization analysis lives in shifted u-coordinates
where the closed loop is autonomous. This module holds the parameter records,
the change of variables between the two, and the steady profile of the
W2-Dirichlet variant.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid


class ParameterError(ValueError):
    """Raised when physical or control parameters violate the standing hypotheses."""


def _as_samples(value, n_nodes: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(n_nodes, float(arr))
    if arr.shape != (n_nodes,):
        raise ParameterError(f"expected scalar or array of {n_nodes} nodal samples, got shape {arr.shape}")
    return arr.copy()


@dataclass(frozen=True, eq=False)
class PhysicalParams:
    """Spatially varying coefficients (nodal samples) and boundary constants."""

    a: np.ndarray        # wave coefficient, > 0
    q: np.ndarray        # in-domain damping, >= 0 (> 0 for certification)
    f: np.ndarray        # distributed source
    beta1: float
    mu1: float
    q1: float = 0.0
    gamma1: float = 0.0
    f1: float = 0.0
    f2: float = 0.0

    @classmethod
    def from_samples(cls, n_nodes: int, a=1.0, q=0.0, f=0.0, *, beta1, mu1,
                     q1=0.0, gamma1=0.0, f1=0.0, f2=0.0) -> "PhysicalParams":
        """Build params on an (N+1)-node grid; scalars expand to constant arrays."""
        return cls(_as_samples(a, n_nodes), _as_samples(q, n_nodes), _as_samples(f, n_nodes),
                   float(beta1), float(mu1), float(q1), float(gamma1), float(f1), float(f2))

    @property
    def n_nodes(self) -> int:
        return self.a.shape[0]

    @property
    def a_lower(self) -> float:
        return float(np.min(self.a))

    @property
    def a_upper(self) -> float:
        return float(np.max(self.a))

    @property
    def q_lower(self) -> float:
        return float(np.min(self.q))

    @property
    def q_upper(self) -> float:
        return float(np.max(self.q))

    def validate(self, require_damping: bool = False) -> None:
        """Check hypotheses h1-h3; `require_damping` additionally enforces h2
        (q strictly positive) and gamma1 > 0, as needed for decay certification."""
        if self.a_lower <= 0.0:
            raise ParameterError("h1 violated: a(x) must be strictly positive")
        if self.q_lower < 0.0:
            raise ParameterError("h2 violated: q(x) must be nonnegative")
        if self.beta1 <= 0.0 or self.mu1 <= 0.0:
            raise ParameterError("h3 violated: beta1 and mu1 must be strictly positive")
        if self.gamma1 < 0.0:
            raise ParameterError("h3 violated: gamma1 must be nonnegative")
        if require_damping:
            if self.q_lower <= 0.0:
                raise ParameterError("h2 violated: certification requires q(x) >= q_lower > 0")
            if self.gamma1 <= 0.0:
                raise ParameterError("h3 violated: certification requires gamma1 > 0")


@dataclass(frozen=True)
class ControlParams:
    """PI gains and velocity setpoint. alpha2 is the integral gain k_i."""

    kp: float = 0.0
    alpha2: float = 0.0
    v1_ref: float = 0.0

    def alpha1(self, q1: float) -> float:
        return self.kp + q1

    def validate(self, q1: float, require_decay: bool = False) -> None:
        if self.kp < 0.0 or self.alpha2 < 0.0:
            raise ParameterError("PI gains must be nonnegative")
        if require_decay and self.alpha1(q1) <= 0.0:
            raise ParameterError("closed-loop decay requires alpha1 = kp + q1 > 0")


@dataclass(frozen=True)
class BoundaryVariant:
    """Tagged boundary-condition variant.

    kind: 'w2w1' (dynamic x=1 with integrator, dynamic x=0),
          'w1d'  (dynamic x=1 without integrator, Dirichlet x=0),
          'w2d'  (dynamic x=1 with integrator, Dirichlet x=0),
          'w1w1' (dynamic x=1 and x=0, no integrator).
    """

    kind: str
    alpha1: float
    alpha2: float = 0.0

    KINDS = ("w2w1", "w1d", "w2d", "w1w1")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParameterError(f"unknown boundary variant {self.kind!r}")

    @property
    def has_integrator(self) -> bool:
        return self.kind in ("w2w1", "w2d")

    @property
    def dynamic_at_zero(self) -> bool:
        return self.kind in ("w2w1", "w1w1")

    @property
    def dirichlet_at_zero(self) -> bool:
        return not self.dynamic_at_zero

    def validate(self, params: PhysicalParams) -> None:
        if self.alpha1 <= 0.0:
            raise ParameterError("variant requires alpha1 > 0")
        if self.has_integrator and self.alpha2 <= 0.0:
            raise ParameterError(f"variant {self.kind} requires alpha2 > 0")
        if self.dynamic_at_zero and params.gamma1 <= 0.0:
            raise ParameterError(f"variant {self.kind} requires gamma1 > 0")
        if params.beta1 <= 0.0 or params.mu1 <= 0.0:
            raise ParameterError("variant requires beta1, mu1 > 0")


@dataclass
class ContinuousState:
    """Nodal state plus finite-dimensional boundary states at one time."""

    u: np.ndarray
    udot: np.ndarray
    eta1: float = 0.0
    eta2: float = 0.0
    xi1: float = 0.0
    t: float = 0.0


def u_star(u0_at_1: float, eta2_0: float) -> float:
    """Limit displacement of the W2W1 loop: u* = u0(1) - eta2(0)."""
    return u0_at_1 - eta2_0


def _static_shift_profile(params: PhysicalParams, ctrl: ControlParams, grid) -> np.ndarray:
    """Time-independent part of the v -> u displacement shift (double integral
    plus the mu1 boundary term), evaluated at the grid nodes by cumulative
    trapezoid rules."""
    x = grid.x
    inner = cumulative_trapezoid(-ctrl.v1_ref * params.q + params.f, x, initial=0.0)
    outer = cumulative_trapezoid(inner / params.a, x, initial=0.0)
    inv_a = cumulative_trapezoid(1.0 / params.a, x, initial=0.0)
    bdry = (params.a[0] / params.mu1) * (-params.gamma1 * ctrl.v1_ref + params.f2)
    return outer + bdry * inv_a


def _eta2_shift(params: PhysicalParams, ctrl: ControlParams, grid) -> float:
    """Constant offset between the controller integrator eta_v and eta2."""
    if ctrl.alpha2 == 0.0:
        # No integral action: eta2 is not a state of the loop.  The shift is
        # only ever needed when it is, or when the shift vanishes anyway.
        if ctrl.v1_ref == 0.0 and params.f1 == 0.0 and not np.any(params.f):
            return 0.0
        raise ParameterError("eta2 shift undefined for alpha2 = 0 with nonzero setpoint/sources")
    x = grid.x
    s = np.trapezoid(-ctrl.v1_ref * params.q + params.f, x)
    shift = (params.beta1 / (ctrl.alpha2 * params.a[-1])) * s
    shift += (params.beta1 * params.a[0] / (ctrl.alpha2 * params.mu1 * params.a[-1])) * \
        (-params.gamma1 * ctrl.v1_ref + params.f2)
    shift -= (params.q1 * ctrl.v1_ref - params.f1) / ctrl.alpha2
    return shift


def regulation_transform(state: ContinuousState, params: PhysicalParams,
                         ctrl: ControlParams, grid, inverse: bool = False) -> ContinuousState:
    """Map a v-coordinate state (regulation problem) to u-coordinates
    (autonomous stabilization problem), or back with inverse=True.

    In forward direction, state.eta2 is interpreted as the controller
    integrator eta_v and the returned eta2 is the shifted integrator state.
    """
    if params.a_lower <= 0.0:
        raise ParameterError("a(x) must be strictly positive")
    profile = _static_shift_profile(params, ctrl, grid)
    shift = _eta2_shift(params, ctrl, grid)
    if not inverse:
        u = state.u - state.t * ctrl.v1_ref + profile
        udot = state.udot - ctrl.v1_ref
        eta1 = state.eta1 - ctrl.v1_ref
        xi1 = state.xi1 - ctrl.v1_ref
        eta2 = state.eta2 - shift
    else:
        u = state.u + state.t * ctrl.v1_ref - profile
        udot = state.udot + ctrl.v1_ref
        eta1 = state.eta1 + ctrl.v1_ref
        xi1 = state.xi1 + ctrl.v1_ref
        eta2 = state.eta2 + shift
    return ContinuousState(u=u, udot=udot, eta1=eta1, eta2=eta2, xi1=xi1, t=state.t)


def steady_profile(params: PhysicalParams, alpha2: float, u_star_1: float, grid):
    """Steady displacement of the W2-Dirichlet variant.

    Returns (profile, C2, eta2_offset) with profile(x) = C2 int_0^x ds/a(s)
    and the exact closure u_star_1 = profile(1) + eta2_offset.
    """
    if alpha2 <= 0.0:
        raise ParameterError("steady profile requires alpha2 > 0")
    if params.beta1 <= 0.0:
        raise ParameterError("steady profile requires beta1 > 0")
    if params.a_lower <= 0.0:
        raise ParameterError("a(x) must be strictly positive")
    inv_a = cumulative_trapezoid(1.0 / params.a, grid.x, initial=0.0)
    a1 = params.a[-1]
    c2 = a1 * alpha2 * u_star_1 / (a1 * alpha2 * inv_a[-1] + params.beta1)
    profile = c2 * inv_a
    eta2_offset = params.beta1 * c2 / (a1 * alpha2)
    return profile, c2, eta2_offset

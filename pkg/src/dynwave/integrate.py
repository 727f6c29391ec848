"""PI control and symplectic (semi-implicit Euler) time stepping.

The velocity update is explicit in the stiffness and componentwise implicit
in the diagonal dissipation; the position update uses the new velocity.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.sparse

from .discretize import DiscreteSystem


class DivergenceError(RuntimeError):
    """Simulation state left the finite range; carries the last valid time."""

    def __init__(self, message: str, t_last: float):
        super().__init__(message)
        self.t_last = t_last


@dataclass
class PIController:
    kp: float = 0.0
    ki: float = 0.0
    y_ref: float = 0.0
    eta: float = 0.0
    saturation: float | None = None


def pi_output(ctrl: PIController, y: float) -> float:
    """U = -kp (y - y_ref) - ki eta, clamped to +-saturation when set."""
    u = -ctrl.kp * (y - ctrl.y_ref) - ctrl.ki * ctrl.eta
    if ctrl.saturation is not None:
        u = float(np.clip(u, -ctrl.saturation, ctrl.saturation))
    return u

def pi_advance(ctrl: PIController, y: float, dt: float) -> PIController:
    """Explicit Euler on the integrator state."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    return replace(ctrl, eta=ctrl.eta + dt * (y - ctrl.y_ref))


@dataclass
class SimState:
    u: np.ndarray
    udot: np.ndarray
    t: float = 0.0
    step: int = 0


def _contraction(sys: DiscreteSystem, dt: float) -> np.ndarray:
    denom = 1.0 + dt * sys.R / sys.E
    if np.any(denom <= 0.0):
        worst = float(np.min(sys.E / np.abs(sys.R), where=sys.R != 0.0, initial=np.inf))
        raise DivergenceError(
            f"anti-dissipative step undefined: need dt < {worst:.3g}", 0.0)
    return 1.0 / denom


def symplectic_step(sys: DiscreteSystem, state: SimState, U: float, dt: float) -> SimState:
    """One semi-implicit Euler step of E u'' = -K u - R u' + b U + f_d."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    if np.any(sys.E == 0.0):
        raise ValueError("zero generalized mass entry")
    contr = _contraction(sys, dt)
    acc = (-(sys.K @ state.u) + sys.b * U + sys.f_d) / sys.E
    udot = (state.udot + dt * acc) * contr
    u = state.u + dt * udot
    if not np.isfinite(udot @ udot + u @ u):
        raise DivergenceError("non-finite state after step", state.t)
    return SimState(u=u, udot=udot, t=state.t + dt, step=state.step + 1)


@dataclass
class Trajectory:
    """Decimated closed-loop history. eta_series is the raw controller
    integrator (eta_v in closed loop, eta2 for autonomous variants)."""

    times: np.ndarray
    u_samples: np.ndarray
    udot_samples: np.ndarray
    y_series: np.ndarray
    U_series: np.ndarray
    eta_series: np.ndarray
    dt: float


def default_dt(sys: DiscreteSystem) -> float:
    """CFL-style default: 0.1 min(dx) / sqrt(a_upper)."""
    return 0.1 * float(np.min(sys.grid.dx)) / np.sqrt(sys.params.a_upper)


def simulate(sys: DiscreteSystem, ctrl: PIController | None, ic: SimState,
             dt: float, T: float, sample_stride: int = 10) -> Trajectory:
    """Run ceil(T/dt) steps of the closed loop.

    Per step: read y, compute U from the current (y, eta), advance the wave,
    then advance the integrator with the post-step y so that the discrete
    conservation law u[N] - eta2 holds exactly.
    """
    if dt <= 0.0 or T <= 0.0:
        raise ValueError("dt and T must be positive")
    if sample_stride < 1:
        raise ValueError("sample_stride must be >= 1")
    n_steps = int(np.ceil(T / dt))
    contr = _contraction(sys, dt)
    m_inv_k = sys.K / sys.E[:, None]
    if sys.size >= 64:
        m_inv_k = scipy.sparse.csr_matrix(m_inv_k)  # K is pentadiagonal
    b_e = sys.b / sys.E
    f_e = sys.f_d / sys.E
    c = sys.c_out

    u = np.array(ic.u, dtype=float)
    udot = np.array(ic.udot, dtype=float)
    t = float(ic.t)

    n_rec = n_steps // sample_stride + 1
    times = np.empty(n_rec)
    us = np.empty((n_rec, u.size))
    uds = np.empty((n_rec, u.size))
    ys = np.empty(n_rec)
    Us = np.empty(n_rec)
    etas = np.empty(n_rec)

    def record(idx, y, U_now):
        times[idx] = t
        us[idx] = u
        uds[idx] = udot
        ys[idx] = y
        Us[idx] = U_now
        etas[idx] = ctrl.eta if ctrl is not None else 0.0

    y = float(c @ udot)
    record(0, y, pi_output(ctrl, y) if ctrl is not None else 0.0)
    rec = 1
    for k in range(n_steps):
        y = float(c @ udot)
        U = pi_output(ctrl, y) if ctrl is not None else 0.0
        udot = (udot + dt * (-(m_inv_k @ u) + b_e * U + f_e)) * contr
        u = u + dt * udot
        t = ic.t + (k + 1) * dt
        if ctrl is not None:
            ctrl.eta += dt * (float(c @ udot) - ctrl.y_ref)
        norm2 = float(udot @ udot + u @ u)
        if not np.isfinite(norm2) or norm2 > 1e24:
            raise DivergenceError(f"divergence at t = {t:.6g} (|state|^2 = {norm2:.3g})", t - dt)
        if (k + 1) % sample_stride == 0:
            record(rec, float(c @ udot), U)
            rec += 1
    return Trajectory(times[:rec], us[:rec], uds[:rec], ys[:rec], Us[:rec], etas[:rec], dt)


def spectrum(sys: DiscreteSystem) -> np.ndarray:
    """Eigenvalues of the first-order system.

    With R = 0 they are +-i sqrt(lambda) for the generalized symmetric
    eigenvalues lambda of (K, E) (purely imaginary by construction); with
    damping the companion-form eigenvalues are returned.
    """
    if np.any(sys.E <= 0.0):
        raise ValueError("E must be positive on unconstrained nodes")
    if not np.any(sys.R):
        s = 1.0 / np.sqrt(sys.E)
        lam = scipy.linalg.eigvalsh(sys.K * s[:, None] * s[None, :])
        lam = np.clip(lam, 0.0, None)
        omega = np.sqrt(lam)
        return np.concatenate([1j * omega, -1j * omega])
    n = sys.size
    comp = np.zeros((2 * n, 2 * n))
    comp[:n, n:] = np.eye(n)
    comp[n:, :n] = -sys.K / sys.E[:, None]
    comp[n:, n:] = -np.diag(sys.R / sys.E)
    return scipy.linalg.eigvals(comp)

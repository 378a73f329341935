"""Reversing behaviour: LOS guidance feeding a P heading loop and an anti-windup PI surge loop."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .control import ControlOutput, Controller
from .model import ModelKind, VehicleParams, VehicleState, coefficients, wrap_angle
from .trajectory import TrajectorySample


class Kill:
    """Sentinel returned by :func:`los_speed` inside the minimal acceptable distance."""

    def __repr__(self) -> str:
        return "KILL"


KILL = Kill()


@dataclass(frozen=True)
class ReverseGains:
    k_psi: float = 400.0  # N m/rad
    k_pu: float = 300.0  # N s/m
    k_iu: float = 60.0  # N/m
    alpha_min: float = 0.5
    alpha_max: float = 1.5
    R_min: float = 2.0  # m
    u_rev_max: float = 1.0  # m/s

    def __post_init__(self) -> None:
        if min(self.k_psi, self.k_pu, self.k_iu) <= 0:
            raise ValueError("reversing gains must be positive")
        if not 0 < self.alpha_min < 1 < self.alpha_max:
            raise ValueError("need 0 < alpha_min < 1 < alpha_max")
        if self.R_min <= 0 or self.u_rev_max <= 0:
            raise ValueError("R_min and u_rev_max must be positive")


class AntiWindupState(NamedTuple):
    integral: float = 0.0  # m
    inside: bool = False
    t_entry: float = 0.0  # s


def los_distances(p: Sequence[float], p_d_next: Sequence[float], R_min: float):
    """Return ``(r_t, l)``: distance to the next waypoint and to its ``R_min`` circle."""
    r_t = math.hypot(p[0] - p_d_next[0], p[1] - p_d_next[1])
    return r_t, r_t - R_min


def los_heading(p: Sequence[float], p_d_next: Sequence[float], psi_d_next: float, l: float) -> float:
    """Heading that points the stern at the waypoint, or the reference heading inside ``R_min``."""
    if l >= 0:
        return math.atan2(p[1] - p_d_next[1], p[0] - p_d_next[0])
    return psi_d_next


def los_speed(l: float, t: float, t_next: float, u_rev_max: float = 1.0):
    """Sternward speed setpoint (m/s, non-positive), or :data:`KILL` when ``l < 0``."""
    if l < 0:
        return KILL
    if t_next <= t:
        return -u_rev_max
    return min(max(l / (t - t_next), -u_rev_max), 0.0)


def heading_p(psi: float, psi_los: float, k_psi: float) -> float:
    return -k_psi * wrap_angle(psi - psi_los)


def antiwindup_update(
    aw: AntiWindupState,
    u: float,
    u_los: float,
    dt: float,
    alpha_min: float,
    alpha_max: float,
    t: float = 0.0,
) -> AntiWindupState:
    """Integrate the surge error only inside the margin around ``|u_los|``.

    Entering the margin restarts the integral from zero; leaving it clears it.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    mag = abs(u_los)
    if alpha_min * mag <= abs(u) <= alpha_max * mag:
        if aw.inside:
            integral, t_entry = aw.integral, aw.t_entry
        else:
            integral, t_entry = 0.0, t
        return AntiWindupState(integral + (u - u_los) * dt, True, t_entry)
    return AntiWindupState(0.0, False, t)


def surge_pi(u: float, u_los, aw: AntiWindupState, l: float, k_pu: float, k_iu: float) -> float:
    if l < 0 or u_los is KILL:
        return 0.0
    return -k_pu * (u - u_los) - k_iu * aw.integral


def reverse_control(
    params: VehicleParams,
    gains: ReverseGains,
    state: VehicleState,
    ref: TrajectorySample,
    aw: AntiWindupState,
    dt: float,
) -> tuple[ControlOutput, AntiWindupState]:
    p = (state.x, state.y)
    wp = ref.eta_next
    _, l = los_distances(p, wp, gains.R_min)
    psi_los = los_heading(p, wp, wp[2], l)
    N = heading_p(state.psi, psi_los, gains.k_psi)
    u_los = los_speed(l, ref.t, ref.t_next, gains.u_rev_max)
    if u_los is KILL:
        return ControlOutput((0.0, 0.0, N), True), AntiWindupState(0.0, False, ref.t)
    aw = antiwindup_update(aw, state.u, u_los, dt, gains.alpha_min, gains.alpha_max, ref.t)
    X = surge_pi(state.u, u_los, aw, l, gains.k_pu, gains.k_iu)
    return ControlOutput((X, 0.0, N), False), aw


def surge_step_response(
    params: VehicleParams,
    gains: ReverseGains,
    u_ref: float,
    duration: float,
    dt: float,
    antiwindup: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Surge speed of the reversing model under the PI loop after a step to ``u_ref``.

    The vehicle starts at rest and the surge force saturates at the combined
    thrust of both thrusters. With ``antiwindup=False`` the integrator runs on
    every step, which is the baseline the margin logic is compared against.
    """
    coef = coefficients(params, ModelKind.REVERSING)
    limit = params.T_max * len(params.thrusters)
    n = int(round(duration / dt))
    s = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    aw = AntiWindupState()
    t = np.arange(n + 1) * dt
    u = np.zeros(n + 1)
    for k in range(n):
        if antiwindup:
            aw = antiwindup_update(aw, s[3], u_ref, dt, gains.alpha_min, gains.alpha_max, t[k])
        else:
            aw = AntiWindupState(aw.integral + (s[3] - u_ref) * dt, True, 0.0)
        X = surge_pi(s[3], u_ref, aw, 0.0, gains.k_pu, gains.k_iu)
        X = min(max(X, -limit), limit)
        s = coef.rk4(s, (X, 0.0, 0.0), (0.0, 0.0, 0.0), dt)
        u[k + 1] = s[3]
    return t, u


class ReverseController(Controller):
    name = "reverse"
    model_kind = ModelKind.REVERSING
    fully_actuated = False

    def __init__(self, params: VehicleParams, gains: ReverseGains, dt: float):
        super().__init__(dt)
        self.params = params
        self.gains = gains
        self.aw = AntiWindupState()

    def reset(self) -> None:
        self.aw = AntiWindupState()

    def command(self, state: VehicleState, ref: TrajectorySample) -> ControlOutput:
        out, self.aw = reverse_control(self.params, self.gains, state, ref, self.aw, self.dt)
        return out

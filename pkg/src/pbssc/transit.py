"""Underactuated backstepping position-tracking controller for transiting.

The controller regulates the body-frame position error into a neighbourhood
set by ``delta`` using only surge force and yaw torque. All vector quantities
are 2-tuples ``(surge, sway)``; gain matrices are diagonal and stored by their
diagonal entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .control import ControlOutput, Controller
from .model import ModelKind, VehicleParams, VehicleState
from .trajectory import TrajectorySample


class SingularNeighborhoodError(ValueError):
    """The neighbourhood's surge component is zero, so the ball matrix is singular."""


@dataclass(frozen=True)
class TransitGains:
    K_e: tuple[float, float] = (190.0, 190.0)
    K_phi: tuple[float, float] = (5.0, 5.0)
    K_z2: float = 10.0
    # A negative surge component places the tracked point ahead of the bow,
    # which makes bow-first transit the stable orientation.
    delta: tuple[float, float] = (-0.6, 0.0)  # m
    N_clamp: float = 270.0  # N m
    N_scale: float = 0.01  # proportional scaling of the torque law before clamping

    def __post_init__(self) -> None:
        if min(self.K_e) <= 0 or min(self.K_phi) <= 0:
            raise ValueError("K_e and K_phi must be positive definite")
        if self.K_z2 <= 0:
            raise ValueError("K_z2 must be positive")
        if self.delta[0] == 0 or self.delta[1] < 0:
            raise SingularNeighborhoodError("delta must satisfy delta_1 != 0, delta_2 >= 0")
        if self.N_clamp <= 0:
            raise ValueError("N_clamp must be positive")
        if not 0.0 < self.N_scale <= 1.0:
            raise ValueError("N_scale must lie in (0, 1]")


def position_error(p: Sequence[float], p_d: Sequence[float], psi: float) -> tuple[float, float]:
    """Body-frame position error ``R(psi)^T (p - p_d)``."""
    dx, dy = p[0] - p_d[0], p[1] - p_d[1]
    c, s = math.cos(psi), math.sin(psi)
    return (c * dx + s * dy, -s * dx + c * dy)


def ball_matrix(params: VehicleParams, delta: Sequence[float]) -> np.ndarray:
    if delta[0] == 0:
        raise SingularNeighborhoodError("delta_1 must be nonzero")
    return np.array(
        [[1.0, params.m22 * delta[1]], [0.0, -params.m11 * delta[0]]]
    )


def _body(vec: Sequence[float], c: float, s: float) -> tuple[float, float]:
    return (c * vec[0] + s * vec[1], -s * vec[0] + c * vec[1])


def backstep_vars(
    params: VehicleParams,
    gains: TransitGains,
    state: VehicleState,
    p_d: Sequence[float],
    pd_dot: Sequence[float],
):
    """Return ``(z1, phi)``."""
    c, s = math.cos(state.psi), math.sin(state.psi)
    pt = position_error((state.x, state.y), p_d, state.psi)
    vd = _body(pd_dot, c, s)
    m1, m2 = params.m11, params.m22
    z1 = (
        state.u - vd[0] + gains.K_e[0] * pt[0] / m1,
        state.v - vd[1] + gains.K_e[1] * pt[1] / m2,
    )
    phi = (z1[0] - gains.delta[0], z1[1] - gains.delta[1])
    return z1, phi


def stabilizer(
    params: VehicleParams,
    gains: TransitGains,
    state: VehicleState,
    p_d: Sequence[float],
    pd_dot: Sequence[float],
    pd_ddot: Sequence[float],
) -> tuple[float, float]:
    """Stabilising function ``alpha = (surge force, desired yaw rate)``.

    Uses the transiting-model submatrices: ``m = diag(m - X_du, m - Y_dv)`` and
    the SNAME-signed drag ``d_v = diag(X_uu |u| + X_u, Y_v)``.
    """
    delta = gains.delta
    if delta[0] == 0:
        raise SingularNeighborhoodError("delta_1 must be nonzero")
    c, s = math.cos(state.psi), math.sin(state.psi)
    pt = position_error((state.x, state.y), p_d, state.psi)
    vd = _body(pd_dot, c, s)
    ad = _body(pd_ddot, c, s)
    m = (params.m11, params.m22)
    dv = (params.X_uu * abs(state.u) + params.X_u, params.Y_v)
    nu = (state.u, state.v)
    Ke, Kphi = gains.K_e, gains.K_phi
    w = [0.0, 0.0]
    for i in range(2):
        z1 = nu[i] - vd[i] + Ke[i] * pt[i] / m[i]
        phi = z1 - delta[i]
        h = (
            dv[i] * vd[i]
            - Ke[i] * dv[i] * pt[i] / m[i]
            - m[i] * ad[i]
            + Ke[i] * z1
            - Ke[i] * Ke[i] * pt[i] / m[i]
        )
        w[i] = h + dv[i] * delta[i] + pt[i] / m[i] + Kphi[i] * phi / m[i]
    # alpha = -B^{-1} w with B = [[1, m2 d2], [0, -m1 d1]]
    b22 = -m[0] * delta[0]
    alpha2 = -w[1] / b22
    alpha1 = -(w[0] - m[1] * delta[1] * w[1] / b22)
    return (alpha1, alpha2)


def transit_torque(
    params: VehicleParams,
    gains: TransitGains,
    phi: Sequence[float],
    alpha: Sequence[float],
    alpha_dot: Sequence[float],
    r: float,
) -> float:
    """Unclamped yaw torque of the final backstepping stage."""
    m1, m2 = params.m11, params.m22
    d1, d2 = gains.delta
    # phi^T m B_b with B_b = (m2 d2, -m1 d1)
    cross = phi[0] * m1 * m2 * d2 - phi[1] * m2 * m1 * d1
    z2 = r - alpha[1]
    return -cross - params.N_r * alpha[1] + params.m33 * alpha_dot[1] - gains.K_z2 * z2


def transit_control(
    params: VehicleParams,
    gains: TransitGains,
    state: VehicleState,
    ref: TrajectorySample,
    prev_alpha: tuple[float, float] | None,
    dt: float,
) -> tuple[ControlOutput, tuple[float, float]]:
    """One evaluation of the transit law; returns the output and this step's alpha."""
    p_d, pd_dot, pd_ddot = ref.eta_d[:2], ref.etad_dot[:2], ref.etad_ddot[:2]
    alpha = stabilizer(params, gains, state, p_d, pd_dot, pd_ddot)
    if prev_alpha is None:
        alpha_dot = (0.0, 0.0)
    else:
        alpha_dot = ((alpha[0] - prev_alpha[0]) / dt, (alpha[1] - prev_alpha[1]) / dt)
        if not (math.isfinite(alpha_dot[0]) and math.isfinite(alpha_dot[1])):
            alpha_dot = (0.0, 0.0)
    _, phi = backstep_vars(params, gains, state, p_d, pd_dot)
    N = gains.N_scale * transit_torque(params, gains, phi, alpha, alpha_dot, state.r)
    N = min(max(N, -gains.N_clamp), gains.N_clamp)
    return ControlOutput((alpha[0], 0.0, N), False), alpha


class TransitController(Controller):
    name = "transit"
    model_kind = ModelKind.TRANSITING
    fully_actuated = False

    def __init__(self, params: VehicleParams, gains: TransitGains, dt: float):
        super().__init__(dt)
        self.params = params
        self.gains = gains
        self.prev_alpha: tuple[float, float] | None = None

    def reset(self) -> None:
        self.prev_alpha = None

    def command(self, state: VehicleState, ref: TrajectorySample) -> ControlOutput:
        out, self.prev_alpha = transit_control(
            self.params, self.gains, state, ref, self.prev_alpha, self.dt
        )
        return out

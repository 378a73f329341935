"""Fully actuated MIMO backstepping controller for station-keeping.

The reference is fed as a sequence of setpoints, so the desired pose rate is
taken as zero and the virtual reference acceleration is obtained by backward
differencing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .control import ControlOutput, Controller
from .model import ModelKind, VehicleParams, VehicleState, wrap_angle
from .trajectory import TrajectorySample

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class StationKeepGains:
    """Diagonal design matrices, stored by their diagonals."""

    Lambda: Vec3 = (0.2, 0.2, 0.2)  # 1/s
    K_p: Vec3 = (40.0, 40.0, 60.0)
    K_d: Vec3 = (150.0, 150.0, 150.0)

    def __post_init__(self) -> None:
        for name in ("Lambda", "K_p", "K_d"):
            if min(getattr(self, name)) <= 0:
                raise ValueError(f"{name} must be positive definite")


def pose_error(eta: Sequence[float], eta_d: Sequence[float]) -> Vec3:
    return (eta[0] - eta_d[0], eta[1] - eta_d[1], wrap_angle(eta[2] - eta_d[2]))


def _to_body(vec: Sequence[float], psi: float) -> Vec3:
    # J(psi)^{-1} = J(psi)^T
    c, s = math.cos(psi), math.sin(psi)
    return (c * vec[0] + s * vec[1], -s * vec[0] + c * vec[1], vec[2])


def _to_ned(vec: Sequence[float], psi: float) -> Vec3:
    c, s = math.cos(psi), math.sin(psi)
    return (c * vec[0] - s * vec[1], s * vec[0] + c * vec[1], vec[2])


def virtual_refs(
    eta: Sequence[float],
    eta_d: Sequence[float],
    etad_dot: Sequence[float],
    Lambda: Sequence[float],
    psi: float,
) -> tuple[Vec3, Vec3]:
    """Return ``(etar_dot, nu_r)``."""
    et = pose_error(eta, eta_d)
    etar_dot = tuple(etad_dot[i] - Lambda[i] * et[i] for i in range(3))
    return etar_dot, _to_body(etar_dot, psi)


def tracking_surface(eta_dot: Sequence[float], etar_dot: Sequence[float]) -> Vec3:
    return tuple(a - b for a, b in zip(eta_dot, etar_dot))


def sk_control(
    params: VehicleParams,
    gains: StationKeepGains,
    state: VehicleState,
    eta_d: Sequence[float],
    prev_nu_r: Vec3 | None,
    dt: float,
) -> tuple[ControlOutput, Vec3]:
    """One evaluation of the station-keeping law; returns the output and this step's nu_r."""
    psi = state.psi
    eta = state.eta
    et = pose_error(eta, eta_d)
    etar_dot, nu_r = virtual_refs(eta, eta_d, (0.0, 0.0, 0.0), gains.Lambda, psi)
    s = tracking_surface(_to_ned(state.nu, psi), etar_dot)
    if prev_nu_r is None:
        nur_dot = (0.0, 0.0, 0.0)
    else:
        nur_dot = tuple((a - b) / dt for a, b in zip(nu_r, prev_nu_r))

    m11, m22, m33 = params.m11, params.m22, params.m33
    u, v = state.u, state.v
    # M_sk nur_dot + C_sk(nu) nu_r + D_sk nu_r
    c13, c23 = -m22 * v, m11 * u
    ff = (
        m11 * nur_dot[0] + c13 * nu_r[2] - params.X_u * nu_r[0],
        m22 * nur_dot[1] + c23 * nu_r[2] - params.Y_v * nu_r[1],
        m33 * nur_dot[2] - c13 * nu_r[0] - c23 * nu_r[1] - params.N_r * nu_r[2],
    )
    # J^T (K_d s + K_p eta_t)
    fb = _to_body(
        tuple(gains.K_d[i] * s[i] + gains.K_p[i] * et[i] for i in range(3)), psi
    )
    tau = (ff[0] - fb[0], ff[1] - fb[1], ff[2] - fb[2])
    return ControlOutput(tau, False), nu_r


class StationKeepController(Controller):
    name = "stationkeep"
    model_kind = ModelKind.STATION_KEEPING
    fully_actuated = True

    def __init__(self, params: VehicleParams, gains: StationKeepGains, dt: float):
        super().__init__(dt)
        self.params = params
        self.gains = gains
        self.prev_nu_r: Vec3 | None = None

    def reset(self) -> None:
        self.prev_nu_r = None

    def command(self, state: VehicleState, ref: TrajectorySample) -> ControlOutput:
        out, self.prev_nu_r = sk_control(
            self.params, self.gains, state, ref.eta_d, self.prev_nu_r, self.dt
        )
        return out

"""Control allocation for twin azimuthing thrusters.

Two paths:

* underactuated: surge attenuation by yaw demand, then differential-thrust
  inversion with both propellers pointing aft;
* overactuated: weighted least-norm extended-thrust solution, then per-thruster
  azimuth feasibility logic (+-45 deg sector, reversed propeller for the
  opposite sector, zero thrust in between).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .control import ControlOutput
from .model import VehicleParams

SECTOR = math.radians(45.0)
_REVERSED_SECTOR = math.pi - SECTOR


class AllocationError(ValueError):
    """Degenerate thruster geometry or rank-deficient transformation."""


class ActuatorCommand(NamedTuple):
    thrust: float  # N, signed
    azimuth: float  # rad, within +-45 deg


def surge_attenuation(X: float, N: float, beta: float) -> float:
    if beta < 0:
        raise ValueError("beta must be non-negative")
    return X * math.exp(-beta * abs(N))


def _lateral_arms(thrusters: Sequence[tuple[float, float]]):
    """Return ``(i_port, i_stbd, l_yp, l_ys)`` with both arms as positive distances."""
    if len(thrusters) != 2:
        raise AllocationError("differential allocation needs exactly two thrusters")
    order = sorted(range(2), key=lambda i: thrusters[i][1])
    ip, is_ = order
    l_yp, l_ys = -thrusters[ip][1], thrusters[is_][1]
    if abs(l_yp + l_ys) < 1e-12:
        raise AllocationError("port and starboard arms cancel; differential map is singular")
    return ip, is_, l_yp, l_ys


def alloc_differential(
    X_prime: float,
    N: float,
    thrusters: Sequence[tuple[float, float]],
    T_max: float | None = None,
) -> tuple[float, float]:
    """Port and starboard thrust realising ``(X', N)``.

    When either thrust exceeds ``T_max`` both are scaled by the same factor,
    which keeps the ratio of yaw torque to surge force.
    """
    _, _, l_yp, l_ys = _lateral_arms(thrusters)
    den = l_yp + l_ys
    T_p = (l_ys * X_prime + N) / den
    T_s = (l_yp * X_prime - N) / den
    if T_max is not None:
        peak = max(abs(T_p), abs(T_s))
        if peak > T_max:
            k = T_max / peak
            T_p, T_s = T_p * k, T_s * k
    return T_p, T_s


def differential_forward(T_p: float, T_s: float, thrusters) -> tuple[float, float]:
    _, _, l_yp, l_ys = _lateral_arms(thrusters)
    return T_p + T_s, l_yp * T_p - l_ys * T_s


def extended_transform(thrusters: Sequence[tuple[float, float]]) -> np.ndarray:
    if not thrusters:
        raise AllocationError("at least one thruster is required")
    cols = []
    for lx, ly in thrusters:
        cols.append([1.0, 0.0, -ly])
        cols.append([0.0, 1.0, lx])
    return np.array(cols).T


def weighted_pseudoinverse(T: np.ndarray, W: np.ndarray | None = None) -> np.ndarray:
    """``W^-1 T^T (T W^-1 T^T)^-1``; the Moore-Penrose pseudoinverse when ``W = I``."""
    T = np.asarray(T, float)
    W = np.eye(T.shape[1]) if W is None else np.asarray(W, float)
    if np.linalg.matrix_rank(T) < T.shape[0]:
        raise AllocationError("transformation matrix is rank deficient")
    Winv = np.linalg.inv(W)
    return Winv @ T.T @ np.linalg.inv(T @ Winv @ T.T)


def azimuth_logic(fx: float, fy: float) -> tuple[float, float]:
    """Map a requested thruster force to ``(signed thrust, azimuth)``.

    Requests in the forward sector are passed through; requests in the
    opposite sector reverse the propeller; anything else is unattainable and
    yields zero thrust. A non-finite request is passed on as NaN thrust so
    that a diverging controller is not silently masked.
    """
    mag = math.hypot(fx, fy)
    if not math.isfinite(mag):
        return math.nan, 0.0
    if mag == 0.0:
        return 0.0, 0.0
    ang = math.atan2(fy, fx)
    if abs(ang) <= SECTOR:
        return mag, ang
    if abs(ang) >= _REVERSED_SECTOR:
        return -mag, ang - math.pi if ang > 0 else ang + math.pi
    return 0.0, 0.0


@dataclass
class Allocator:
    """Precomputed allocation for a fixed thruster layout."""

    params: VehicleParams
    beta: float | None = None  # 1/(N m); None gives half surge at N_max
    W: np.ndarray | None = None

    T: np.ndarray = field(init=False, repr=False)
    T_w_pinv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.beta is None:
            self.beta = math.log(2.0) / self.params.N_max
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        n = 2 * len(self.params.thrusters)
        self.W = np.eye(n) if self.W is None else np.asarray(self.W, float)
        if self.W.shape != (n, n) or not np.allclose(self.W, self.W.T):
            raise ValueError("W must be a symmetric matrix matching the thruster count")
        if np.min(np.linalg.eigvalsh(self.W)) <= 0:
            raise ValueError("W must be positive definite")
        self.T = extended_transform(self.params.thrusters)
        self.T_w_pinv = weighted_pseudoinverse(self.T, self.W)
        self._pinv_rows = tuple(tuple(float(a) for a in row) for row in self.T_w_pinv)
        self._arms = tuple(self.params.thrusters)

    def extended_forces(self, tau: Sequence[float]) -> list[float]:
        t0, t1, t2 = tau
        return [a * t0 + b * t1 + c * t2 for a, b, c in self._pinv_rows]

    def overactuated(self, tau: Sequence[float]) -> list[ActuatorCommand]:
        f = self.extended_forces(tau)
        t_max = self.params.T_max
        out = []
        for i in range(len(self._arms)):
            thrust, az = azimuth_logic(f[2 * i], f[2 * i + 1])
            if math.isfinite(thrust):
                thrust = min(max(thrust, -t_max), t_max)
            out.append(ActuatorCommand(thrust, az))
        return out

    def underactuated(self, tau: Sequence[float], kill: bool = False) -> list[ActuatorCommand]:
        X, _, N = tau
        X_prime = 0.0 if kill else surge_attenuation(X, N, self.beta)
        thrusters = self.params.thrusters
        ip, is_, _, _ = _lateral_arms(thrusters)
        T_p, T_s = alloc_differential(X_prime, N, thrusters, self.params.T_max)
        out = [ActuatorCommand(0.0, 0.0)] * 2
        out[ip] = ActuatorCommand(T_p, 0.0)
        out[is_] = ActuatorCommand(T_s, 0.0)
        return out

    def allocate(self, ctrl: ControlOutput, fully_actuated: bool) -> list[ActuatorCommand]:
        if fully_actuated:
            return self.overactuated(ctrl.tau)
        return self.underactuated(ctrl.tau, ctrl.kill)

    def wrench(self, commands: Sequence[ActuatorCommand]) -> tuple[float, float, float]:
        """Generalised force actually produced by ``commands``."""
        X = Y = N = 0.0
        for (lx, ly), (thrust, az) in zip(self._arms, commands):
            fx, fy = thrust * math.cos(az), thrust * math.sin(az)
            X += fx
            Y += fy
            N += -ly * fx + lx * fy
        return (X, Y, N)


def alloc_overactuated(tau: Sequence[float], allocator: Allocator) -> list[ActuatorCommand]:
    return allocator.overactuated(tau)

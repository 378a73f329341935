"""3-DOF surge/sway/yaw vehicle model.

Holds the vehicle parameters, the four model variants (general plant plus the
reduced models each controller is designed on), the coordinate transform and a
fixed-step RK4 integrator.

The matrix functions (:func:`mass_matrix`, :func:`coriolis`, :func:`damping`)
return numpy arrays and are the reference form. The integrator runs on a
scalar expansion of the same matrices (:class:`Coefficients`) because it sits
inside the supervisor's rollout loop, where small-array numpy overhead would
dominate the run time.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class IntegrationError(RuntimeError):
    """Raised when a plant step produces a non-finite state."""


class ModelKind(enum.Enum):
    GENERAL = "general"
    TRANSITING = "transiting"
    STATION_KEEPING = "station_keeping"
    REVERSING = "reversing"


@dataclass(frozen=True)
class VehicleParams:
    """Rigid-body, added-mass and drag coefficients (SNAME signs) plus thruster layout.

    ``thrusters`` is a tuple of ``(l_x, l_y)`` body-frame positions in metres;
    port thrusters have ``l_y < 0``.
    """

    m: float = 180.0  # kg
    I_z: float = 250.0  # kg m^2
    X_du: float = -10.0  # kg
    Y_dv: float = -90.0  # kg
    Y_dr: float = -10.0  # kg m
    N_dv: float = -10.0  # kg m
    N_dr: float = -120.0  # kg m^2
    X_u: float = -20.0  # N s/m
    X_uu: float = -25.0  # N s^2/m^2
    Y_v: float = -400.0  # N s/m
    Y_r: float = -20.0  # N s
    N_v: float = -20.0  # N s
    N_r: float = -400.0  # N m s
    X_u_rev: float = -40.0  # N s/m, surge drag while moving sternward
    thrusters: tuple[tuple[float, float], ...] = ((-2.0, -0.9), (-2.0, 0.9))
    T_max: float = 150.0  # N per thruster
    N_max: float = 270.0  # N m

    def __post_init__(self) -> None:
        if self.m <= 0 or self.I_z <= 0:
            raise ValueError("mass and yaw inertia must be positive")
        if self.m - self.X_du <= 0 or self.m - self.Y_dv <= 0 or self.I_z - self.N_dr <= 0:
            raise ValueError("effective inertias must be positive")
        for name in ("X_u", "X_uu", "Y_v", "N_r", "X_u_rev"):
            if getattr(self, name) > 0:
                raise ValueError(f"drag coefficient {name} must be non-positive")
        if not self.thrusters:
            raise ValueError("at least one thruster is required")
        object.__setattr__(
            self, "thrusters", tuple((float(lx), float(ly)) for lx, ly in self.thrusters)
        )

    @property
    def m11(self) -> float:
        return self.m - self.X_du

    @property
    def m22(self) -> float:
        return self.m - self.Y_dv

    @property
    def m33(self) -> float:
        return self.I_z - self.N_dr


class VehicleState(NamedTuple):
    """Pose in NED, body-fixed velocity and simulation time."""

    x: float = 0.0
    y: float = 0.0
    psi: float = 0.0
    u: float = 0.0
    v: float = 0.0
    r: float = 0.0
    t: float = 0.0

    @property
    def eta(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.psi)

    @property
    def nu(self) -> tuple[float, float, float]:
        return (self.u, self.v, self.r)


class DisturbanceMode(enum.Enum):
    NONE = "none"
    CONSTANT = "constant"
    GAUSS_MARKOV = "gauss_markov"


@dataclass(frozen=True)
class Disturbance:
    """Environmental force model: constant bias plus optional first-order Gauss-Markov noise.

    ``intensity`` is the stationary standard deviation of the noise per axis.
    """

    mode: DisturbanceMode = DisturbanceMode.GAUSS_MARKOV
    bias: tuple[float, float, float] = (2.0, 2.0, 0.5)
    correlation_time: float = 10.0
    intensity: tuple[float, float, float] = (3.0, 3.0, 1.0)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode is DisturbanceMode.GAUSS_MARKOV and self.correlation_time <= 0:
            raise ValueError("correlation time must be positive")

    def process(self, dt: float) -> "DisturbanceProcess":
        return DisturbanceProcess(self, dt)


class DisturbanceProcess:
    """Stateful sampler for one run; owns its own RNG."""

    def __init__(self, spec: Disturbance, dt: float):
        self.spec = spec
        self._rng = np.random.default_rng(spec.seed)
        self._phi = math.exp(-dt / spec.correlation_time) if spec.correlation_time > 0 else 0.0
        self._gain = math.sqrt(1.0 - self._phi**2)
        self._noise = [0.0, 0.0, 0.0]

    def sample(self) -> tuple[float, float, float]:
        """Force applied over the coming step, then advance the noise state."""
        spec = self.spec
        if spec.mode is DisturbanceMode.NONE:
            return (0.0, 0.0, 0.0)
        if spec.mode is DisturbanceMode.CONSTANT:
            return tuple(float(b) for b in spec.bias)
        out = tuple(b + n for b, n in zip(spec.bias, self._noise))
        w = self._rng.standard_normal(3)
        self._noise = [
            self._phi * n + s * self._gain * float(wi)
            for n, s, wi in zip(self._noise, spec.intensity, w)
        ]
        return out


NO_DISTURBANCE = (0.0, 0.0, 0.0)


def wrap_angle(theta: float) -> float:
    """Map an angle to (-pi, pi]."""
    w = math.fmod(theta, TWO_PI)
    if w <= -math.pi:
        w += TWO_PI
    elif w > math.pi:
        w -= TWO_PI
    return w


def rotation(psi: float) -> np.ndarray:
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def mass_matrix(params: VehicleParams, kind: ModelKind) -> np.ndarray:
    M = np.diag([params.m11, params.m22, params.m33])
    if kind is ModelKind.GENERAL:
        M[1, 2] = -params.Y_dr
        M[2, 1] = -params.N_dv
    return M


def coriolis(params: VehicleParams, kind: ModelKind, nu: Sequence[float]) -> np.ndarray:
    u, v, r = nu
    C = np.zeros((3, 3))
    if kind is ModelKind.REVERSING:
        return C
    c13 = -params.m22 * v
    if kind is ModelKind.GENERAL:
        c13 += 0.5 * (params.Y_dr + params.N_dv) * r
    c23 = params.m11 * u
    C[0, 2] = c13
    C[1, 2] = c23
    if kind is not ModelKind.TRANSITING:
        C[2, 0] = -c13
        C[2, 1] = -c23
    return C


def damping(params: VehicleParams, kind: ModelKind, nu: Sequence[float]) -> np.ndarray:
    u = nu[0]
    if kind is ModelKind.STATION_KEEPING:
        d11 = -params.X_u
    elif kind is ModelKind.REVERSING:
        d11 = -params.X_u_rev
    else:
        d11 = -(params.X_uu * abs(u) + params.X_u)
    D = np.diag([d11, -params.Y_v, -params.N_r])
    if kind is ModelKind.GENERAL:
        D[1, 2] = -params.Y_r
        D[2, 1] = -params.N_v
    return D


def dynamics(
    params: VehicleParams,
    kind: ModelKind,
    state: VehicleState,
    tau: Sequence[float],
    disturbance_force: Sequence[float] = NO_DISTURBANCE,
) -> np.ndarray:
    """State derivative ``[x', y', psi', u', v', r']`` in matrix form."""
    nu = np.array(state.nu)
    eta_dot = rotation(state.psi) @ nu
    rhs = (
        np.asarray(tau, float)
        + np.asarray(disturbance_force, float)
        - coriolis(params, kind, nu) @ nu
        - damping(params, kind, nu) @ nu
    )
    nu_dot = np.linalg.solve(mass_matrix(params, kind), rhs)
    return np.concatenate([eta_dot, nu_dot])


class Coefficients:
    """Scalar expansion of one model variant, used by the integrator."""

    def __init__(self, params: VehicleParams, kind: ModelKind):
        self.params = params
        self.kind = kind
        Minv = np.linalg.inv(mass_matrix(params, kind))
        self.minv = tuple(tuple(float(a) for a in row) for row in Minv)
        self.m11 = params.m11
        self.m22 = params.m22
        self.cr = 0.5 * (params.Y_dr + params.N_dv) if kind is ModelKind.GENERAL else 0.0
        self.coupled = kind is ModelKind.GENERAL
        self.coriolis_mode = {
            ModelKind.GENERAL: 2,
            ModelKind.STATION_KEEPING: 2,
            ModelKind.TRANSITING: 1,
            ModelKind.REVERSING: 0,
        }[kind]
        if kind is ModelKind.STATION_KEEPING:
            self.xu, self.xuu = params.X_u, 0.0
        elif kind is ModelKind.REVERSING:
            self.xu, self.xuu = params.X_u_rev, 0.0
        else:
            self.xu, self.xuu = params.X_u, params.X_uu
        self.yv, self.nr = params.Y_v, params.N_r
        self.yr = params.Y_r if self.coupled else 0.0
        self.nv = params.N_v if self.coupled else 0.0

    def derivative(self, s, tau, dist):
        """Derivative of the 6-tuple ``(x, y, psi, u, v, r)``."""
        _, _, psi, u, v, r = s
        c, sn = math.cos(psi), math.sin(psi)
        # C(nu) nu
        mode = self.coriolis_mode
        if mode:
            c13 = -self.m22 * v + self.cr * r
            c23 = self.m11 * u
            cv1, cv2 = c13 * r, c23 * r
            cv3 = -c13 * u - c23 * v if mode == 2 else 0.0
        else:
            cv1 = cv2 = cv3 = 0.0
        # D(nu) nu with SNAME-signed coefficients
        dv1 = -(self.xuu * abs(u) + self.xu) * u
        dv2 = -self.yv * v - self.yr * r
        dv3 = -self.nv * v - self.nr * r
        f1 = tau[0] + dist[0] - cv1 - dv1
        f2 = tau[1] + dist[1] - cv2 - dv2
        f3 = tau[2] + dist[2] - cv3 - dv3
        a, b, cc = self.minv
        return (
            c * u - sn * v,
            sn * u + c * v,
            r,
            a[0] * f1 + a[1] * f2 + a[2] * f3,
            b[0] * f1 + b[1] * f2 + b[2] * f3,
            cc[0] * f1 + cc[1] * f2 + cc[2] * f3,
        )

    def rk4(self, s, tau, dist, dt):
        k1 = self.derivative(s, tau, dist)
        h = 0.5 * dt
        k2 = self.derivative(tuple(si + h * ki for si, ki in zip(s, k1)), tau, dist)
        k3 = self.derivative(tuple(si + h * ki for si, ki in zip(s, k2)), tau, dist)
        k4 = self.derivative(tuple(si + dt * ki for si, ki in zip(s, k3)), tau, dist)
        w = dt / 6.0
        return tuple(
            si + w * (a + 2.0 * b + 2.0 * c + d) for si, a, b, c, d in zip(s, k1, k2, k3, k4)
        )


@functools.lru_cache(maxsize=64)
def coefficients(params: VehicleParams, kind: ModelKind) -> Coefficients:
    return Coefficients(params, kind)


def step(
    params: VehicleParams,
    kind: ModelKind,
    state: VehicleState,
    tau: Sequence[float],
    disturbance_force: Sequence[float] = NO_DISTURBANCE,
    dt: float = 0.1,
) -> VehicleState:
    """Advance one RK4 step with zero-order-hold input; heading is re-wrapped."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    coef = coefficients(params, kind)
    x, y, psi, u, v, r = coef.rk4(state[:6], tau, disturbance_force, dt)
    if not all(map(math.isfinite, (x, y, psi, u, v, r))):
        raise IntegrationError(
            f"non-finite state at t={state.t + dt:.3f} s after applying tau={tuple(tau)}"
        )
    return VehicleState(x, y, wrap_angle(psi), u, v, r, state.t + dt)

"""Performance-based supervisory switching among behaviour controllers.

Each step, every candidate is rolled out from the measured plant state on its
own reduced model for ``K`` steps. The accumulated weighted pose error is
blended with a forgetting-weighted history into a performance signal, and the
switching logic picks the minimiser subject to a relative hysteresis margin.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .allocation import Allocator
from .control import ControlOutput, Controller, ZERO_OUTPUT
from .model import ModelKind, VehicleParams, VehicleState, coefficients, wrap_angle
from .trajectory import ReferenceTrajectory

INF = math.inf


class SupervisorError(RuntimeError):
    """Every candidate's rollout diverged."""


@dataclass(frozen=True)
class SupervisorConfig:
    K: int = 50  # rollout steps
    L: int = 100  # history length
    alpha_w: float = 1.0
    beta_w: float = 1.0
    forget: float = 0.95
    h: float = 0.2
    P: tuple[tuple[float, float, float], ...] = (
        (1.0, 0.0, 0.0),
        (0.0, 1.0, 0.0),
        (0.0, 0.0, 10.0),
    )

    def __post_init__(self) -> None:
        if self.K < 1 or self.L < 0:
            raise ValueError("need K >= 1 and L >= 0")
        if self.alpha_w <= 0 or self.beta_w <= 0:
            raise ValueError("current and past weights must be positive")
        if not 0.0 <= self.forget <= 1.0:
            raise ValueError("forgetting factor must lie in [0, 1]")
        if self.h <= 0:
            raise ValueError("hysteresis constant must be positive")
        P = np.asarray(self.P, float)
        if P.shape != (3, 3) or not np.allclose(P, P.T) or np.min(np.linalg.eigvalsh(P)) <= 0:
            raise ValueError("P must be a symmetric positive definite 3x3 matrix")
        object.__setattr__(self, "P", tuple(tuple(float(a) for a in row) for row in P))


@dataclass
class Candidate:
    """A controller together with the reduced model its rollouts run on."""

    id: int
    controller: Controller
    model_kind: ModelKind | None = None

    def __post_init__(self) -> None:
        if self.model_kind is None:
            self.model_kind = self.controller.model_kind

    @property
    def name(self) -> str:
        return self.controller.name


@dataclass
class SupervisorState:
    sigma: int | None = None
    history: dict[int, deque] = field(default_factory=dict)
    mu: dict[int, float] = field(default_factory=dict)
    V: dict[int, float] = field(default_factory=dict)


class StepResult(NamedTuple):
    sigma: int
    output: ControlOutput
    V: dict[int, float]
    mu: dict[int, float]


def lyapunov_value(e: Sequence[float], P) -> float:
    """``0.5 e^T P e``."""
    e0, e1, e2 = e
    p0, p1, p2 = P
    return 0.5 * (
        e0 * (p0[0] * e0 + p0[1] * e1 + p0[2] * e2)
        + e1 * (p1[0] * e0 + p1[1] * e1 + p1[2] * e2)
        + e2 * (p2[0] * e0 + p2[1] * e1 + p2[2] * e2)
    )


def estimate_performance(
    candidate: Candidate,
    y: VehicleState,
    traj: ReferenceTrajectory,
    k: int,
    K: int,
    P,
    dt: float,
    params: VehicleParams,
    allocator: Allocator,
) -> float:
    """Accumulated ``0.5 e^T P e`` over a ``K``-step rollout started from ``y`` at index ``k``.

    The rollout uses a clone of the candidate's controller, its allocation
    path and its own model without disturbance. Divergence returns ``inf``.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    ctrl = candidate.controller.clone()
    coef = coefficients(params, candidate.model_kind)
    fully = ctrl.fully_actuated
    s = tuple(y[:6])
    t = y.t
    total = 0.0
    for j in range(K):
        ref = traj.at(k + j)
        state = VehicleState(*s, t)
        out = ctrl.command(state, ref)
        tau = allocator.wrench(allocator.allocate(out, fully))
        s = coef.rk4(s, tau, (0.0, 0.0, 0.0), dt)
        t += dt
        ed = traj.at(k + j + 1).eta_d
        e = (s[0] - ed[0], s[1] - ed[1], wrap_angle(s[2] - ed[2]))
        v = lyapunov_value(e, P)
        if not math.isfinite(v):
            return INF
        total += v
    return total


def performance_signal(V_current: float, V_history: Sequence[float], cfg: SupervisorConfig) -> float:
    """Blend the current estimate with past ones; ``V_history[0]`` is the most recent.

    The entry ``j`` steps in the past carries weight ``forget**j``.
    """
    acc = 0.0
    w = 1.0
    for V in V_history:
        w *= cfg.forget
        acc += w * V
    return cfg.alpha_w * V_current + cfg.beta_w * acc


def select_controller(mu: Mapping[int, float], sigma_prev: int | None, h: float) -> int:
    """Hysteretic argmin: switch only if ``(1 + h) * mu_new <= mu_prev``."""
    if not mu:
        raise ValueError("empty performance map")
    best = min(mu.values())
    ties = [q for q in sorted(mu) if mu[q] == best]
    if sigma_prev is None:
        return ties[0]
    if sigma_prev not in mu:
        raise ValueError(f"previous selection {sigma_prev} is not a candidate")
    challenger = sigma_prev if sigma_prev in ties else ties[0]
    if challenger == sigma_prev:
        return sigma_prev
    if (1.0 + h) * mu[challenger] <= mu[sigma_prev]:
        return challenger
    return sigma_prev


class Supervisor:
    """Runs the estimator, signal generator and switching logic once per control step.

    ``pin`` forces the selection to one candidate while still running the
    estimator; it exists to check that estimation never disturbs the loop.
    """

    def __init__(
        self,
        candidates: Sequence[Candidate],
        cfg: SupervisorConfig,
        params: VehicleParams,
        allocator: Allocator,
        dt: float,
        pin: int | None = None,
    ):
        ids = [c.id for c in candidates]
        if not ids or len(set(ids)) != len(ids):
            raise ValueError("candidate ids must be unique and non-empty")
        self.candidates = sorted(candidates, key=lambda c: c.id)
        self.cfg = cfg
        self.params = params
        self.allocator = allocator
        self.dt = dt
        self.pin = pin
        self.state = SupervisorState(
            history={c.id: deque(maxlen=cfg.L) for c in self.candidates}
        )

    def by_id(self, q: int) -> Candidate:
        for c in self.candidates:
            if c.id == q:
                return c
        raise KeyError(q)

    def step(self, y: VehicleState, traj: ReferenceTrajectory, k: int) -> StepResult:
        cfg, st = self.cfg, self.state
        V = {
            c.id: estimate_performance(
                c, y, traj, k, cfg.K, cfg.P, self.dt, self.params, self.allocator
            )
            for c in self.candidates
        }
        mu = {q: performance_signal(V[q], st.history[q], cfg) for q in V}
        for q, val in V.items():
            st.history[q].appendleft(val)
        ref = traj.at(k)
        # Every live controller sees the plant each step so its memory stays current.
        outputs = {c.id: c.controller.command(y, ref) for c in self.candidates}
        if all(math.isinf(val) for val in V.values()):
            st.V, st.mu = V, mu
            raise SupervisorError(f"all candidate rollouts diverged at t={y.t:.2f} s")
        finite_mu = {q: (m if math.isfinite(m) else INF) for q, m in mu.items()}
        if self.pin is not None:
            sigma = self.pin
        else:
            sigma = select_controller(finite_mu, st.sigma, cfg.h)
        st.sigma, st.V, st.mu = sigma, V, mu
        return StepResult(sigma, outputs[sigma], V, mu)

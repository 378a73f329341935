"""Types shared by the behaviour controllers."""

from __future__ import annotations

import copy
from typing import NamedTuple

from .model import ModelKind, VehicleState
from .trajectory import TrajectorySample


class ControlOutput(NamedTuple):
    """Generalised force ``tau = (X, Y, N)``; ``kill`` asks allocation to drop surge thrust."""

    tau: tuple[float, float, float]
    kill: bool = False


ZERO_OUTPUT = ControlOutput((0.0, 0.0, 0.0), False)


class Controller:
    """Base for the behaviour controllers.

    Subclasses keep at most a step of memory and must be safe to ``clone``
    for rollout simulation.
    """

    name: str = "controller"
    model_kind: ModelKind = ModelKind.GENERAL
    fully_actuated: bool = False

    def __init__(self, dt: float):
        if dt <= 0:
            raise ValueError("dt must be positive")
        self.dt = dt

    def command(self, state: VehicleState, ref: TrajectorySample) -> ControlOutput:
        raise NotImplementedError

    def reset(self) -> None:
        pass

    def clone(self) -> "Controller":
        return copy.copy(self)

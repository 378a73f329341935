"""Load the declarative YAML configuration into typed parameter objects."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .allocation import Allocator
from .model import Disturbance, DisturbanceMode, VehicleParams, VehicleState
from .reverse import ReverseGains
from .stationkeep import StationKeepGains
from .supervisor import SupervisorConfig
from .trajectory import ReferenceTrajectory, build_reference, segments_from_config
from .transit import TransitGains


class ConfigError(ValueError):
    pass


def default_dict() -> dict:
    text = resources.files("pbssc").joinpath("data/default.yaml").read_text()
    return yaml.safe_load(text)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _tuple(seq) -> tuple:
    return tuple(float(x) for x in seq)


@dataclass(frozen=True)
class Config:
    raw: dict
    dt: float
    initial_state: VehicleState
    vehicle: VehicleParams
    disturbance: Disturbance
    transit: TransitGains
    stationkeep: StationKeepGains
    reverse: ReverseGains
    beta: float | None
    W: tuple | None
    supervisor: SupervisorConfig
    seeds: int

    @classmethod
    def from_dict(cls, raw: dict) -> "Config":
        try:
            sim, veh = raw["sim"], raw["vehicle"]
            init = sim.get("initial_state", {})
            vehicle = VehicleParams(
                **{k: float(v) for k, v in veh.items() if k != "thrusters"},
                thrusters=tuple(_tuple(t) for t in veh["thrusters"]),
            )
            dist = raw.get("disturbance", {})
            alloc = raw.get("allocation", {})
            sup = raw["supervisor"]
            config = cls(
                raw=raw,
                dt=float(sim["dt"]),
                initial_state=VehicleState(
                    float(init.get("x", 0.0)),
                    float(init.get("y", 0.0)),
                    math.radians(float(init.get("psi_deg", 0.0))),
                    float(init.get("u", 0.0)),
                    float(init.get("v", 0.0)),
                    float(init.get("r", 0.0)),
                    0.0,
                ),
                vehicle=vehicle,
                disturbance=Disturbance(
                    mode=DisturbanceMode(dist.get("mode", "none")),
                    bias=_tuple(dist.get("bias", (0.0, 0.0, 0.0))),
                    correlation_time=float(dist.get("correlation_time", 10.0)),
                    intensity=_tuple(dist.get("intensity", (0.0, 0.0, 0.0))),
                ),
                transit=TransitGains(
                    K_e=_tuple(raw["transit"]["K_e"]),
                    K_phi=_tuple(raw["transit"]["K_phi"]),
                    K_z2=float(raw["transit"]["K_z2"]),
                    delta=_tuple(raw["transit"]["delta"]),
                    N_clamp=float(raw["transit"].get("N_clamp", vehicle.N_max)),
                    N_scale=float(raw["transit"].get("N_scale", 1.0)),
                ),
                stationkeep=StationKeepGains(
                    Lambda=_tuple(raw["stationkeep"]["Lambda"]),
                    K_p=_tuple(raw["stationkeep"]["K_p"]),
                    K_d=_tuple(raw["stationkeep"]["K_d"]),
                ),
                reverse=ReverseGains(**{k: float(v) for k, v in raw["reverse"].items()}),
                beta=None if alloc.get("beta") is None else float(alloc["beta"]),
                W=None if alloc.get("W") is None else tuple(_tuple(r) for r in alloc["W"]),
                supervisor=SupervisorConfig(
                    K=int(sup["K"]),
                    L=int(sup["L"]),
                    alpha_w=float(sup["alpha"]),
                    beta_w=float(sup["beta"]),
                    forget=float(sup["forget"]),
                    h=float(sup["h"]),
                    P=tuple(_tuple(r) for r in sup["P"]),
                ),
                seeds=int(raw.get("harness", {}).get("seeds", 5)),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"invalid configuration: {exc!r}") from exc
        return config

    def reference(self) -> ReferenceTrajectory:
        tr = self.raw["trajectory"]
        segs = segments_from_config(tr["segments"], tr.get("origin", (0.0, 0.0)))
        return build_reference(segs, float(tr.get("rate", 1.0 / self.dt)))

    def allocator(self) -> Allocator:
        return Allocator(self.vehicle, self.beta, None if self.W is None else np.array(self.W))

    def disturbance_for(self, seed: int) -> Disturbance:
        d = self.disturbance
        return Disturbance(d.mode, d.bias, d.correlation_time, d.intensity, int(seed))

    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> Config:
    """Defaults merged with an optional YAML file and an optional dict of overrides."""
    raw = default_dict()
    if path is not None:
        with open(path) as fh:
            user = yaml.safe_load(fh) or {}
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        raw = _merge(raw, user)
    if overrides:
        raw = _merge(raw, overrides)
    return Config.from_dict(raw)

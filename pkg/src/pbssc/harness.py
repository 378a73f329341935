"""Closed-loop experiment runner, metrics and the comparison matrix."""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .allocation import Allocator
from .config import Config
from .control import ZERO_OUTPUT, Controller
from .model import IntegrationError, ModelKind, VehicleState, step, wrap_angle
from .reverse import ReverseController
from .stationkeep import StationKeepController
from .supervisor import Candidate, Supervisor, SupervisorError
from .trajectory import ReferenceTrajectory
from .transit import TransitController

log = logging.getLogger(__name__)


class Mode(enum.Enum):
    PBSSC = "pbssc"
    TRANSIT = "transit"
    STATIONKEEP = "stationkeep"
    REVERSE = "reverse"


# Candidate ids used in sigma traces.
TRANSIT_ID, STATIONKEEP_ID, REVERSE_ID = 1, 2, 3
CANDIDATE_IDS = (TRANSIT_ID, STATIONKEEP_ID, REVERSE_ID)
_SINGLE = {Mode.TRANSIT: TRANSIT_ID, Mode.STATIONKEEP: STATIONKEEP_ID, Mode.REVERSE: REVERSE_ID}


class RunError(RuntimeError):
    def __init__(self, mode: Mode, seed: int, step: int, cause: Exception):
        super().__init__(f"{mode.value} seed={seed} failed at step {step}: {cause}")
        self.mode, self.seed, self.step = mode, seed, step


COLUMNS = (
    "t", "x", "y", "psi", "u", "v", "r", "x_d", "y_d", "psi_d", "sigma",
    "X", "Y", "N", "kill", "X_ach", "Y_ach", "N_ach",
    "thrust_1", "azimuth_1", "thrust_2", "azimuth_2",
    "V_1", "V_2", "V_3", "mu_1", "mu_2", "mu_3",
)


@dataclass
class RunRecord:
    """Per-step log of one run; ``rows`` follows :data:`COLUMNS`."""

    mode: Mode
    seed: int
    config_hash: str
    rows: np.ndarray
    segment_index: np.ndarray = field(repr=False)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, COLUMNS.index(name)]

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    @property
    def sigma(self) -> np.ndarray:
        return self.column("sigma").astype(int)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# mode={self.mode.value} seed={self.seed} config={self.config_hash}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in self.rows:
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {
                "mode": self.mode.value,
                "seed": self.seed,
                "config_hash": self.config_hash,
                "columns": list(COLUMNS),
                "rows": self.rows.tolist(),
            }
        )

    @classmethod
    def from_csv(cls, text: str) -> "RunRecord":
        lines = text.splitlines()
        meta = dict(item.split("=", 1) for item in lines[0].lstrip("# ").split())
        reader = csv.reader(lines[1:])
        header = next(reader)
        if tuple(header) != COLUMNS:
            raise ValueError("unexpected CSV columns")
        rows = np.array([[float(x) for x in row] for row in reader])
        return cls(Mode(meta["mode"]), int(meta["seed"]), meta["config"], rows, np.zeros(len(rows), int))

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        d = json.loads(text)
        rows = np.array(d["rows"], float)
        return cls(Mode(d["mode"]), int(d["seed"]), d["config_hash"], rows, np.zeros(len(rows), int))


@dataclass(frozen=True)
class Metrics:
    """Integrated squared errors: position in m^2 s, heading in deg^2 s."""

    pi_r: float
    pi_psi: float


def error_integrals(t, pos_err_sq, psi_err_deg) -> Metrics:
    t = np.asarray(t, float)
    if len(t) < 2:
        return Metrics(0.0, 0.0)
    return Metrics(
        float(np.trapezoid(pos_err_sq, t)), float(np.trapezoid(np.square(psi_err_deg), t))
    )


def metrics(record: RunRecord, start: float | None = None, stop: float | None = None) -> Metrics:
    """Trapezoidal integrals of squared position and heading (degrees) error."""
    t = record.t
    mask = np.ones(len(t), bool)
    if start is not None:
        mask &= t >= start - 1e-9
    if stop is not None:
        mask &= t <= stop + 1e-9
    dx = record.column("x") - record.column("x_d")
    dy = record.column("y") - record.column("y_d")
    dpsi = np.array(
        [wrap_angle(a - b) for a, b in zip(record.column("psi"), record.column("psi_d"))]
    )
    return error_integrals(t[mask], (dx * dx + dy * dy)[mask], np.degrees(dpsi)[mask])


def make_controllers(config: Config) -> dict[int, Controller]:
    dt, p = config.dt, config.vehicle
    return {
        TRANSIT_ID: TransitController(p, config.transit, dt),
        STATIONKEEP_ID: StationKeepController(p, config.stationkeep, dt),
        REVERSE_ID: ReverseController(p, config.reverse, dt),
    }


def make_supervisor(config: Config, allocator: Allocator, pin: int | None = None) -> Supervisor:
    ctrls = make_controllers(config)
    cands = [Candidate(q, ctrls[q]) for q in CANDIDATE_IDS]
    return Supervisor(cands, config.supervisor, config.vehicle, allocator, config.dt, pin=pin)


def run_experiment(
    config: Config,
    mode: Mode | str,
    seed: int = 0,
    traj: ReferenceTrajectory | None = None,
    initial_state: VehicleState | None = None,
    disturbance: bool = True,
    pin: int | None = None,
) -> RunRecord:
    """Simulate one closed-loop run of ``mode`` against the general-model plant.

    The active controller's output is allocated, mapped back to the wrench
    the thrusters actually produce, and applied to the plant together with
    the seeded disturbance.
    """
    mode = Mode(mode)
    traj = config.reference() if traj is None else traj
    allocator = config.allocator()
    params, dt = config.vehicle, config.dt
    dist = config.disturbance_for(seed).process(dt) if disturbance else None
    state = config.initial_state if initial_state is None else initial_state
    state = state._replace(t=0.0)

    supervisor = None
    controller = None
    if mode is Mode.PBSSC:
        supervisor = make_supervisor(config, allocator, pin)
    else:
        controller = make_controllers(config)[_SINGLE[mode]]

    n = len(traj)
    rows = np.zeros((n, len(COLUMNS)))
    nan3 = (math.nan, math.nan, math.nan)
    for k in range(n):
        ref = traj.at(k)
        V = mu = None
        try:
            if supervisor is not None:
                try:
                    res = supervisor.step(state, traj, k)
                    sigma, out, V, mu = res.sigma, res.output, res.V, res.mu
                except SupervisorError as exc:
                    log.warning("%s", exc)
                    sigma, out = supervisor.state.sigma or 0, ZERO_OUTPUT
                    V, mu = supervisor.state.V, supervisor.state.mu
                fully = sigma == STATIONKEEP_ID
            else:
                sigma = _SINGLE[mode]
                out = controller.command(state, ref)
                fully = controller.fully_actuated
            cmds = allocator.allocate(out, fully)
            wrench = allocator.wrench(cmds)
            Vs = nan3 if V is None else tuple(V[q] for q in CANDIDATE_IDS)
            mus = nan3 if mu is None else tuple(mu[q] for q in CANDIDATE_IDS)
            rows[k] = (
                state.t, state.x, state.y, state.psi, state.u, state.v, state.r,
                *ref.eta_d, sigma, *out.tau, float(out.kill), *wrench,
                cmds[0].thrust, cmds[0].azimuth, cmds[1].thrust, cmds[1].azimuth,
                *Vs, *mus,
            )
            if k < n - 1:
                d = dist.sample() if dist is not None else (0.0, 0.0, 0.0)
                state = step(params, ModelKind.GENERAL, state, wrench, d, dt)
                # keep time on the reference grid
                state = state._replace(t=traj.at(k + 1).t)
        except IntegrationError as exc:
            raise RunError(mode, seed, k, exc) from exc
    return RunRecord(mode, seed, config.digest(), rows, traj.segment_index.copy())


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


@dataclass
class Comparison:
    """Metrics per (mode, seed), with per-mode averages and the ordering verdict."""

    seeds: list[int]
    table: dict[Mode, dict[int, Metrics | None]]
    records: dict[tuple[Mode, int], RunRecord] = field(default_factory=dict, repr=False)

    def average(self, mode: Mode) -> Metrics | None:
        vals = [m for m in self.table[mode].values() if m is not None]
        if not vals:
            return None
        return Metrics(
            float(np.mean([m.pi_r for m in vals])), float(np.mean([m.pi_psi for m in vals]))
        )

    @staticmethod
    def _ordering(pb: Metrics | None, others: Sequence[Metrics | None], r_margin: float) -> bool:
        if pb is None or any(o is None for o in others):
            return False
        best_r = min(o.pi_r for o in others)
        return all(pb.pi_psi < o.pi_psi for o in others) and pb.pi_r <= r_margin * best_r

    def seed_passes(self, seed: int, r_margin: float = 1.1) -> bool:
        others = [self.table[m][seed] for m in Mode if m is not Mode.PBSSC]
        return self._ordering(self.table[Mode.PBSSC][seed], others, r_margin)

    def ordering_holds(self, r_margin: float = 1.1, min_seeds: int | None = None) -> bool:
        """PBSSC beats every single controller in heading error and is within
        ``r_margin`` of the best position error, on the average and on at least
        ``min_seeds`` individual seeds (default: all but one)."""
        n = len(self.seeds)
        need = max(n - 1, 1) if min_seeds is None else min_seeds
        passed = sum(self.seed_passes(s, r_margin) for s in self.seeds)
        avg_ok = self._ordering(
            self.average(Mode.PBSSC),
            [self.average(m) for m in Mode if m is not Mode.PBSSC],
            r_margin,
        )
        return avg_ok and passed >= need

    def rows(self) -> list[dict]:
        out = []
        for mode in Mode:
            for seed in self.seeds:
                m = self.table[mode][seed]
                out.append(
                    {
                        "mode": mode.value,
                        "seed": str(seed),
                        "pi_r": None if m is None else m.pi_r,
                        "pi_psi": None if m is None else m.pi_psi,
                    }
                )
            avg = self.average(mode)
            out.append(
                {
                    "mode": mode.value,
                    "seed": "mean",
                    "pi_r": None if avg is None else avg.pi_r,
                    "pi_psi": None if avg is None else avg.pi_psi,
                }
            )
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["mode", "seed", "pi_r_m2s", "pi_psi_deg2s"])
        for row in self.rows():
            w.writerow(
                [
                    row["mode"],
                    row["seed"],
                    "nan" if row["pi_r"] is None else repr(row["pi_r"]),
                    "nan" if row["pi_psi"] is None else repr(row["pi_psi"]),
                ]
            )
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"rows": self.rows(), "ordering_holds": self.ordering_holds()})

    def format_table(self) -> str:
        lines = [f"{'mode':<12}{'Pi_r (m^2 s)':>16}{'Pi_psi (deg^2 s)':>20}"]
        for mode in Mode:
            avg = self.average(mode)
            if avg is None:
                lines.append(f"{mode.value:<12}{'failed':>16}{'failed':>20}")
            else:
                lines.append(f"{mode.value:<12}{avg.pi_r:>16.1f}{avg.pi_psi:>20.1f}")
        return "\n".join(lines)


def _run_one(args):
    config, mode, seed = args
    try:
        return mode, seed, run_experiment(config, mode, seed), None
    except RunError as exc:
        return mode, seed, None, str(exc)


def compare(
    config: Config,
    seeds: Iterable[int],
    modes: Sequence[Mode] = tuple(Mode),
    jobs: int = 1,
    keep_records: bool = False,
) -> Comparison:
    """Run every mode for every seed; a failed run leaves a ``None`` cell."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    tasks = [(config, m, s) for m in modes for s in seeds]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_run_one, tasks))
    else:
        results = [_run_one(t) for t in tasks]
    table: dict[Mode, dict[int, Metrics | None]] = {m: {} for m in Mode}
    records = {}
    for mode, seed, rec, err in results:
        if err is not None:
            log.error("%s", err)
            table[mode][seed] = None
            continue
        table[mode][seed] = metrics(rec)
        if keep_records:
            records[(mode, seed)] = rec
    for m in Mode:
        for s in seeds:
            table[m].setdefault(s, None)
    return Comparison(seeds, table, records)

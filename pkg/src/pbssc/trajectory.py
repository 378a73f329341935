"""Time-parameterised reference trajectories built from hold and transit segments."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .model import wrap_angle

_CONTIGUITY_TOL = 1e-9


class TrajectoryError(ValueError):
    pass


class SegmentKind(enum.Enum):
    HOLD = "hold"
    TRANSIT = "transit"


@dataclass(frozen=True)
class Segment:
    """One piece of the reference.

    A hold keeps ``start`` for ``duration`` seconds. A transit moves in a
    straight line from ``start`` to ``end`` with a trapezoidal speed profile;
    its duration follows from distance, cruise speed and acceleration, and
    its heading is the direction of travel.
    """

    kind: SegmentKind
    start: tuple[float, float, float]
    end: tuple[float, float, float]
    duration: float
    speed: float = 0.0
    accel: float = 0.0

    @classmethod
    def hold(cls, pose: Sequence[float], duration: float) -> "Segment":
        if duration <= 0:
            raise TrajectoryError("hold duration must be positive")
        pose = (float(pose[0]), float(pose[1]), wrap_angle(float(pose[2])))
        return cls(SegmentKind.HOLD, pose, pose, float(duration))

    @classmethod
    def transit(
        cls, start: Sequence[float], end_xy: Sequence[float], speed: float, accel: float
    ) -> "Segment":
        dx, dy = end_xy[0] - start[0], end_xy[1] - start[1]
        dist = math.hypot(dx, dy)
        if dist <= 0:
            raise TrajectoryError("transit end must differ from its start")
        if speed <= 0 or accel <= 0:
            raise TrajectoryError("transit speed and acceleration must be positive")
        heading = math.atan2(dy, dx)
        # Triangular profile when the distance is too short to reach cruise speed.
        v_peak = min(speed, math.sqrt(dist * accel))
        duration = dist / v_peak + v_peak / accel
        return cls(
            SegmentKind.TRANSIT,
            (float(start[0]), float(start[1]), wrap_angle(float(start[2]))),
            (float(end_xy[0]), float(end_xy[1]), heading),
            duration,
            v_peak,
            float(accel),
        )

    @property
    def heading(self) -> float:
        return self.end[2]

    def evaluate(self, tau: float):
        """Pose, velocity and acceleration at local time ``tau`` in [0, duration]."""
        if self.kind is SegmentKind.HOLD:
            return self.start, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)
        v, a, T = self.speed, self.accel, self.duration
        ta = v / a
        if tau < ta:
            s, sd, sdd = 0.5 * a * tau * tau, a * tau, a
        elif tau <= T - ta:
            s, sd, sdd = 0.5 * v * ta + v * (tau - ta), v, 0.0
        else:
            rem = max(T - tau, 0.0)
            total = v * (T - ta)
            s, sd, sdd = total - 0.5 * a * rem * rem, a * rem, -a
        c, sn = math.cos(self.heading), math.sin(self.heading)
        x0, y0 = self.start[0], self.start[1]
        return (
            (x0 + c * s, y0 + sn * s, self.heading),
            (c * sd, sn * sd, 0.0),
            (c * sdd, sn * sdd, 0.0),
        )


class TrajectorySample(NamedTuple):
    """Reference at grid index ``k``, with the following waypoint for LOS guidance."""

    k: int
    t: float
    eta_d: tuple[float, float, float]
    etad_dot: tuple[float, float, float]
    etad_ddot: tuple[float, float, float]
    t_next: float
    eta_next: tuple[float, float, float]


class ReferenceTrajectory:
    """Reference sampled on a fixed grid ``t_k = k * dt``, k = 0..n."""

    def __init__(self, t, eta_d, etad_dot, etad_ddot, segment_index, segments):
        self.t = np.asarray(t, float)
        self.eta_d = np.asarray(eta_d, float)
        self.etad_dot = np.asarray(etad_dot, float)
        self.etad_ddot = np.asarray(etad_ddot, float)
        self.segment_index = np.asarray(segment_index, int)
        self.segments = tuple(segments)
        self.dt = float(self.t[1] - self.t[0]) if len(self.t) > 1 else 0.0
        n = len(self.t)
        eta = [tuple(map(float, row)) for row in self.eta_d]
        vel = [tuple(map(float, row)) for row in self.etad_dot]
        acc = [tuple(map(float, row)) for row in self.etad_ddot]
        tl = [float(x) for x in self.t]
        self._samples = [
            TrajectorySample(
                k, tl[k], eta[k], vel[k], acc[k], tl[min(k + 1, n - 1)], eta[min(k + 1, n - 1)]
            )
            for k in range(n)
        ]

    def __len__(self) -> int:
        return len(self._samples)

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    def at(self, k: int) -> TrajectorySample:
        """Sample by grid index, clamped to the ends."""
        return self._samples[min(max(k, 0), len(self._samples) - 1)]

    def sample(self, t: float) -> TrajectorySample:
        """Zero-order-hold lookup: the sample ``k`` with ``t_k <= t < t_{k+1}``."""
        if len(self._samples) == 1 or self.dt == 0.0:
            return self._samples[0]
        k = int(math.floor(t / self.dt + 1e-9))
        return self.at(k)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["t", "x_d", "y_d", "psi_d", "xd_dot", "yd_dot", "psid_dot",
                 "xd_ddot", "yd_ddot", "psid_ddot", "segment"]
            )
            for k in range(len(self)):
                row = [self.t[k], *self.eta_d[k], *self.etad_dot[k], *self.etad_ddot[k]]
                w.writerow([repr(float(x)) for x in row] + [int(self.segment_index[k])])


def build_reference(segments: Sequence[Segment], rate: float = 10.0) -> ReferenceTrajectory:
    """Sample a contiguous segment list at ``rate`` Hz.

    Segment boundaries belong to the later segment; the final sample belongs
    to the last one.
    """
    if not segments:
        raise TrajectoryError("at least one segment is required")
    for prev, nxt in zip(segments, segments[1:]):
        if math.hypot(prev.end[0] - nxt.start[0], prev.end[1] - nxt.start[1]) > _CONTIGUITY_TOL:
            raise TrajectoryError(
                f"segments are not contiguous: {prev.end[:2]} -> {nxt.start[:2]}"
            )
    dt = 1.0 / rate
    starts = np.concatenate([[0.0], np.cumsum([s.duration for s in segments])])
    t_final = float(starts[-1])
    n = int(round(t_final / dt))
    rows_t, rows_eta, rows_vel, rows_acc, rows_seg = [], [], [], [], []
    j = 0
    for k in range(n + 1):
        t = k * dt
        while j < len(segments) - 1 and t >= starts[j + 1] - 1e-9:
            j += 1
        tau = min(max(t - starts[j], 0.0), segments[j].duration)
        eta, vel, acc = segments[j].evaluate(tau)
        rows_t.append(t)
        rows_eta.append(eta)
        rows_vel.append(vel)
        rows_acc.append(acc)
        rows_seg.append(j)
    return ReferenceTrajectory(rows_t, rows_eta, rows_vel, rows_acc, rows_seg, segments)


def segments_from_config(items: Iterable[dict], origin=(0.0, 0.0)) -> list[Segment]:
    """Build a contiguous segment list from config entries.

    Each entry is either ``{kind: hold, duration: s, heading_deg: deg}`` or
    ``{kind: transit, distance: m, heading_deg: deg, speed: m/s, accel: m/s^2}``.
    A hold without ``heading_deg`` keeps the previous heading.
    """
    x, y = float(origin[0]), float(origin[1])
    psi = 0.0
    out: list[Segment] = []
    for item in items:
        kind = SegmentKind(item["kind"])
        if kind is SegmentKind.HOLD:
            if "heading_deg" in item:
                psi = math.radians(float(item["heading_deg"]))
            out.append(Segment.hold((x, y, psi), float(item["duration"])))
        else:
            hdg = math.radians(float(item["heading_deg"]))
            dist = float(item["distance"])
            end = (x + dist * math.cos(hdg), y + dist * math.sin(hdg))
            seg = Segment.transit((x, y, psi), end, float(item["speed"]), float(item["accel"]))
            out.append(seg)
            x, y, psi = seg.end
    return out


def five_segment_reference(rate: float = 10.0) -> ReferenceTrajectory:
    """Hold East 30 s, transit 80 m East, hold West 30 s, transit back West, hold 30 s."""
    items = [
        {"kind": "hold", "duration": 30.0, "heading_deg": 90.0},
        {"kind": "transit", "distance": 80.0, "heading_deg": 90.0, "speed": 1.0, "accel": 0.05},
        {"kind": "hold", "duration": 30.0, "heading_deg": -90.0},
        {"kind": "transit", "distance": 80.0, "heading_deg": -90.0, "speed": 1.0, "accel": 0.05},
        {"kind": "hold", "duration": 30.0},
    ]
    return build_reference(segments_from_config(items), rate)

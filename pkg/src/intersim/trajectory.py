"""Frame-stamped 2D trajectories and their delimited-text file format.

File layout (header required)::

    agent_id,kind,frame,x,y,departure_lane

``departure_lane`` may be empty.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

TRAJECTORY_FIELDS = ("agent_id", "kind", "frame", "x", "y", "departure_lane")


class TrajectoryError(ValueError):
    pass


@dataclass
class Trajectory:
    agent_id: str
    kind: str
    frames: np.ndarray
    xy: np.ndarray
    departure_lane: str | None = None

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.int64)
        self.xy = np.asarray(self.xy, dtype=float).reshape(-1, 2)
        if len(self.frames) != len(self.xy):
            raise TrajectoryError(f"{self.agent_id}: frames and positions differ in length")
        if len(self.frames) < 2:
            raise TrajectoryError(f"{self.agent_id}: a trajectory needs at least 2 samples")
        if np.any(np.diff(self.frames) <= 0):
            raise TrajectoryError(f"{self.agent_id}: frames must be strictly increasing")

    def __len__(self):
        return len(self.frames)

    @property
    def x(self) -> np.ndarray:
        return self.xy[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.xy[:, 1]

    def with_positions(self, xy) -> "Trajectory":
        return Trajectory(self.agent_id, self.kind, self.frames.copy(), np.asarray(xy, dtype=float), self.departure_lane)


def read_trajectories(path) -> list[Trajectory]:
    """Read a trajectory file; rows are grouped by agent id in order of first appearance."""
    rows: dict[str, list] = {}
    meta: dict[str, tuple] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(TRAJECTORY_FIELDS[:5]) - set(reader.fieldnames or ())
        if missing:
            raise TrajectoryError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            aid = row["agent_id"]
            lane = (row.get("departure_lane") or "").strip() or None
            meta.setdefault(aid, (row["kind"], lane))
            rows.setdefault(aid, []).append((int(row["frame"]), float(row["x"]), float(row["y"])))
    out = []
    for aid, samples in rows.items():
        samples.sort()
        arr = np.asarray(samples, dtype=float)
        kind, lane = meta[aid]
        out.append(Trajectory(aid, kind, arr[:, 0].astype(np.int64), arr[:, 1:], lane))
    return out


def write_trajectories(trajectories, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_FIELDS)
        for tr in trajectories:
            lane = tr.departure_lane or ""
            for f, (x, y) in zip(tr.frames, tr.xy):
                w.writerow((tr.agent_id, tr.kind, int(f), repr(float(x)), repr(float(y)), lane))

"""Velocity and steering-angle distributions and their interval-wise difference score.

A score is the sum over bins of the absolute difference in probability mass, so
it lies in ``[0, 2]`` and lower means closer. Steering angles are folded to their
absolute value before binning.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .engine import SimulationRecord
from .trajectory import Trajectory

MIN_STEP = 1e-3  # metres per frame below which a frame counts as stationary for steering


class MetricsError(ValueError):
    pass


class EmptyRecordError(MetricsError):
    """Raised when a record has no samples to evaluate."""


@dataclass(frozen=True)
class Histogram:
    bin_width: float
    bins: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.bin_width > 0:
            raise MetricsError("bin_width must be positive")
        if any(m < 0 for m in self.bins.values()):
            raise MetricsError("bin masses must be non-negative")

    @property
    def total(self) -> float:
        return math.fsum(self.bins.values())

    def rows(self):
        """``(bin index, lower edge, mass)`` in ascending bin order."""
        return [(b, b * self.bin_width, self.bins[b]) for b in sorted(self.bins)]


def histogram(samples, bin_width: float) -> Histogram:
    """Normalised histogram with bin index ``floor(sample / bin_width)``."""
    if not bin_width > 0:
        raise MetricsError("bin_width must be positive")
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        return Histogram(float(bin_width), {})
    idx, counts = np.unique(np.floor(x / bin_width).astype(np.int64), return_counts=True)
    return Histogram(float(bin_width), {int(b): float(c) / x.size for b, c in zip(idx, counts)})


def distribution_difference(h1: Histogram, h2: Histogram) -> float:
    """Sum over the union of bins of ``|p1(b) - p2(b)|``."""
    if h1.bin_width != h2.bin_width:
        raise MetricsError(f"bin widths differ: {h1.bin_width} vs {h2.bin_width}")
    keys = set(h1.bins) | set(h2.bins)
    return math.fsum(abs(h1.bins.get(b, 0.0) - h2.bins.get(b, 0.0)) for b in keys)


def steering_angles(path, min_step: float = MIN_STEP) -> list[float]:
    """Signed turn in degrees between consecutive per-frame displacements (left positive).

    Accepts a :class:`Trajectory` or an ``(n, 2)`` position array. Displacements
    shorter than ``min_step`` are skipped, so the angle spans any standstill.
    """
    xy = path.xy if isinstance(path, Trajectory) else np.asarray(path, dtype=float).reshape(-1, 2)
    if len(xy) < 3:
        return []
    step = np.diff(xy, axis=0)
    step = step[np.hypot(step[:, 0], step[:, 1]) >= min_step]
    if len(step) < 2:
        return []
    a, b = step[:-1], step[1:]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    dot = a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1]
    return np.degrees(np.arctan2(cross, dot)).tolist()


def record_from_trajectories(trajectories, dt: float, origin: str = "ground_truth") -> SimulationRecord:
    """Recorded trajectories as a simulation record.

    The velocity at a frame is the displacement from the previous frame over ``dt``,
    matching how the engine commits positions; the first frame takes the next one.
    """
    rec = SimulationRecord()
    for k, tr in enumerate(trajectories):
        v = np.diff(tr.xy, axis=0) / dt
        v = np.vstack((v[:1], v))
        for f, (x, y), (vx, vy) in zip(tr.frames.tolist(), tr.xy.tolist(), v.tolist()):
            rec.rows.append((int(f), k, tr.kind, x, y, vx, vy, origin))
    rec.rows.sort(key=lambda r: (r[0], r[1]))
    rec.spawned = len(trajectories)
    return rec


def motion_samples(record: SimulationRecord, kinds=None, min_step: float = MIN_STEP):
    """All speeds and absolute steering angles in ``record``, optionally for some kinds only."""
    speeds, angles = [], []
    for kind, _, xy, v in record.trajectories().values():
        if kinds is not None and kind not in kinds:
            continue
        speeds.append(np.hypot(v[:, 0], v[:, 1]))
        angles.extend(abs(a) for a in steering_angles(xy, min_step))
    s = np.concatenate(speeds) if speeds else np.zeros(0)
    return s, np.asarray(angles, dtype=float)


@dataclass
class EvaluationReport:
    velocity_score: float
    steering_score: float
    velocity: tuple   # (sim histogram, ground-truth histogram)
    steering: tuple


def evaluate(record_sim: SimulationRecord, record_gt: SimulationRecord, vel_bin: float = 0.5,
             ang_bin: float = 2.0, kinds=None) -> EvaluationReport:
    """Velocity and steering-angle difference scores of a simulation against ground truth."""
    out = []
    for name, rec in (("simulation", record_sim), ("ground truth", record_gt)):
        if not rec.rows:
            raise EmptyRecordError(f"{name} record has no samples")
        s, a = motion_samples(rec, kinds)
        if s.size == 0:
            raise EmptyRecordError(f"{name} record has no samples for kinds {kinds}")
        out.append((histogram(s, vel_bin), histogram(a, ang_bin)))
    (vs, as_), (vg, ag) = out
    return EvaluationReport(distribution_difference(vs, vg), distribution_difference(as_, ag), (vs, vg), (as_, ag))


def format_report(report: EvaluationReport) -> str:
    """Delimited text: two score lines, then one histogram row per (quantity, source, bin)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("section", "quantity", "source", "bin", "lower_edge", "value"))
    w.writerow(("score", "velocity", "", "", "", repr(report.velocity_score)))
    w.writerow(("score", "steering_angle", "", "", "", repr(report.steering_score)))
    for quantity, pair in (("velocity", report.velocity), ("steering_angle", report.steering)):
        for source, h in zip(("simulation", "ground_truth"), pair):
            for b, lo, mass in h.rows():
                w.writerow(("histogram", quantity, source, b, repr(lo), repr(mass)))
    return buf.getvalue()


def write_report(report: EvaluationReport, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_report(report))

"""Candidate velocity pools keyed by (agent kind, departure lane), sorted by magnitude."""

from __future__ import annotations

import csv

import numpy as np


class DatasetError(ValueError):
    pass


class MissingDepartureLane(DatasetError):
    def __init__(self, agent_ids):
        self.agent_ids = list(agent_ids)
        super().__init__(f"trajectories without a departure lane: {', '.join(map(str, self.agent_ids))}")


class MissingPool(DatasetError, KeyError):
    def __init__(self, kind, lane):
        self.key = (kind, lane)
        super().__init__(f"no candidate velocity pool for kind={kind!r}, lane={lane!r}")

    __str__ = ValueError.__str__


class Pool:
    """Velocities stored with their magnitudes, kept in non-decreasing magnitude order.

    Samples may carry a region tag (where they were recorded); ``sub`` returns the
    sorted sub-pool of one region.
    """

    __slots__ = ("velocities", "magnitudes", "regions", "_sub")

    def __init__(self, velocities=None, regions=None):
        v = np.zeros((0, 2)) if velocities is None else np.asarray(velocities, dtype=float).reshape(-1, 2)
        m = np.hypot(v[:, 0], v[:, 1])
        order = np.argsort(m, kind="stable")
        self.velocities = v[order]
        self.magnitudes = m[order]
        if regions is None:
            self.regions = np.full(len(v), None, dtype=object)
        else:
            r = np.asarray(regions, dtype=object)
            if len(r) != len(v):
                raise DatasetError("regions must align with velocities")
            self.regions = r[order]
        self._sub = None

    def __len__(self):
        return len(self.magnitudes)

    def insert(self, v, region=None) -> int:
        v = np.asarray(v, dtype=float)
        m = float(np.hypot(v[0], v[1]))
        k = int(np.searchsorted(self.magnitudes, m, side="right"))
        self.velocities = np.insert(self.velocities, k, v, axis=0)
        self.magnitudes = np.insert(self.magnitudes, k, m)
        self.regions = np.insert(self.regions, k, region)
        if self._sub is not None and region is not None:
            sub = self._sub.get(region)
            if sub is None:
                self._sub[region] = Pool([v], [region])
            else:
                sub.insert(v, region)
        return k

    def sub(self, region):
        """Sub-pool of samples tagged ``region``, or ``None`` when there are none."""
        if self._sub is None:
            self._sub = {}
            tags = [t for t in dict.fromkeys(self.regions.tolist()) if t is not None]
            for tag in tags:
                mask = self.regions == tag
                self._sub[tag] = Pool(self.velocities[mask], self.regions[mask])
        return self._sub.get(region)

    def is_sorted(self) -> bool:
        return bool(np.all(np.diff(self.magnitudes) >= 0))

    def window_start(self, speed: float, window: int) -> int:
        """Start index of the ``window`` entries whose magnitudes lie closest to ``speed``.

        Equal distances resolve toward the smaller magnitude.
        """
        mag = self.magnitudes
        n = len(mag)
        if window >= n:
            return 0
        lo, hi = 0, n - window
        while lo < hi:
            mid = (lo + hi) // 2
            if speed - mag[mid] > mag[mid + window] - speed:
                lo = mid + 1
            else:
                hi = mid
        return lo


class CandidateVelocityDataset:
    def __init__(self, pools=None):
        self.pools: dict[tuple[str, str], Pool] = dict(pools or {})

    def pool(self, kind, lane) -> Pool:
        try:
            return self.pools[(kind, lane)]
        except KeyError:
            raise MissingPool(kind, lane) from None

    def has_pool(self, kind, lane) -> bool:
        return (kind, lane) in self.pools

    def size(self) -> int:
        return sum(len(p) for p in self.pools.values())

    def copy(self) -> "CandidateVelocityDataset":
        out = CandidateVelocityDataset()
        for key, p in self.pools.items():
            q = Pool()
            q.velocities = p.velocities.copy()
            q.magnitudes = p.magnitudes.copy()
            q.regions = p.regions.copy()
            out.pools[key] = q
        return out

    def thinned(self, fraction: float, seed: int = 0) -> "CandidateVelocityDataset":
        """Keep a random ``fraction`` of each pool.

        For a fixed seed the kept subsets are nested: a smaller fraction keeps a
        subset of what a larger fraction keeps.
        """
        rng = np.random.default_rng(seed)
        out = CandidateVelocityDataset()
        for key in sorted(self.pools):
            p = self.pools[key]
            perm = rng.permutation(len(p))
            keep = max(1, int(round(fraction * len(p)))) if len(p) else 0
            idx = np.sort(perm[:keep])
            out.pools[key] = Pool(p.velocities[idx], p.regions[idx])
        return out


def build_dataset(trajectories, dt: float, scenario=None) -> CandidateVelocityDataset:
    """Difference-quotient velocities from each trajectory, pooled by (kind, departure lane).

    With a ``scenario`` every sample is also tagged with the region it was
    recorded in (see ``region_of``).
    """
    missing = [tr.agent_id for tr in trajectories if not tr.departure_lane]
    if missing:
        raise MissingDepartureLane(missing)
    chunks: dict[tuple[str, str], list] = {}
    tags: dict[tuple[str, str], list] = {}
    for tr in trajectories:
        steps = np.diff(tr.frames).astype(float)[:, None] * dt
        v = np.diff(tr.xy, axis=0) / steps
        key = (tr.kind, tr.departure_lane)
        chunks.setdefault(key, []).append(v)
        if scenario is not None:
            mids = 0.5 * (tr.xy[:-1] + tr.xy[1:])
            tags.setdefault(key, []).extend(region_of(scenario, p, tr.kind, tr.departure_lane) for p in mids)
    return CandidateVelocityDataset({
        key: Pool(np.concatenate(vs), tags.get(key)) for key, vs in chunks.items()
    })


def region_of(scenario, p, kind, departure_lane):
    """Where a sample sits: its departure lane, ``"central"``, another lane id, or ``None`` off the map."""
    from .scenario import in_central_area

    lanes = [lane.id for lane in scenario.lanes_containing(p) if kind in lane.allowed_kinds]
    if departure_lane in lanes:
        return departure_lane
    if in_central_area(scenario, p):
        return "central"
    return lanes[0] if lanes else None


def candidates_near(ds: CandidateVelocityDataset, kind, lane, speed: float, window: int, region=None) -> np.ndarray:
    """The ``window`` velocities of a pool whose magnitudes lie closest to ``speed``.

    ``region`` narrows the search to samples recorded there when any exist.
    """
    if window < 1:
        raise DatasetError("window must be >= 1")
    p = ds.pool(kind, lane)
    if region is not None:
        q = p.sub(region)
        if q is not None and len(q):
            p = q
    k = p.window_start(speed, window)
    return p.velocities[k : k + window]


def append_velocity(ds: CandidateVelocityDataset, kind, lane, v, region=None) -> None:
    v = np.asarray(v, dtype=float)
    if v.shape != (2,) or not np.all(np.isfinite(v)):
        raise DatasetError(f"velocity must be a finite 2-vector, got {v!r}")
    pool = ds.pools.get((kind, lane))
    if pool is None:
        pool = ds.pools[(kind, lane)] = Pool()
    pool.insert(v, region)


def write_dataset(ds: CandidateVelocityDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("kind", "lane", "vx", "vy", "region"))
        for kind, lane in sorted(ds.pools):
            p = ds.pools[(kind, lane)]
            for (vx, vy), tag in zip(p.velocities, p.regions):
                w.writerow((kind, lane, f"{vx:.9g}", f"{vy:.9g}", "" if tag is None else tag))


def read_dataset(path) -> CandidateVelocityDataset:
    chunks: dict[tuple[str, str], list] = {}
    tags: dict[tuple[str, str], list] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["kind"], row["lane"])
            chunks.setdefault(key, []).append((float(row["vx"]), float(row["vy"])))
            tags.setdefault(key, []).append(row.get("region") or None)
    return CandidateVelocityDataset({key: Pool(v, tags[key]) for key, v in chunks.items()})

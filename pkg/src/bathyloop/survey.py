"""Simulated multibeam surveys over synthetic terrain.

A lawn-mower pattern of parallel lines (serpentine traversal), one submap
per pass, with dead-reckoning drift accumulated as a random walk along the
distance traveled. The optional revisit pass re-runs a swath offset half a
line spacing from the middle line, after the full survey, so it carries the
largest accumulated drift.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError
from .geometry import PointCloud, Pose, Submap
from .terrain import TerrainField

HEADER = "bathy-survey v1"


@dataclass
class SurveyPlan:
    line_spacing: float = 50.0
    line_length: float = 900.0
    n_lines: int = 7
    ping_spacing: float = 2.0
    swath_width: float = 140.0
    beams_per_ping: int = 64
    revisit: bool = True

    def __post_init__(self):
        for name in ("line_spacing", "line_length", "n_lines", "ping_spacing",
                     "swath_width", "beams_per_ping"):
            if getattr(self, name) <= 0:
                raise InvalidInputError(f"survey plan field {name} must be positive")
        if self.beams_per_ping < 3:
            raise InvalidInputError("beams_per_ping must be >= 3")


@dataclass
class DriftModel:
    """Random-walk dead-reckoning error. The accumulated horizontal drift
    after D meters of travel has standard deviation xy_rate_sigma * sqrt(D)
    per axis; yaw behaves the same way. Depth error is drawn once per
    submap (pressure-aided depth does not integrate)."""

    xy_rate_sigma: float = 0.05
    yaw_rate_sigma: float = 5e-4
    z_sigma: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if min(self.xy_rate_sigma, self.yaw_rate_sigma, self.z_sigma) < 0:
            raise InvalidInputError("drift sigmas must be non-negative")


@dataclass
class Track:
    """Along-track geometry of one pass, in the true frame."""

    start_xy: np.ndarray
    direction_xy: np.ndarray
    length: float
    ping_spacing: float


@dataclass
class SurveyResult:
    true_submaps: list[Submap]
    dr_submaps: list[Submap]
    tracks: list[Track] = field(default_factory=list)

    def __iter__(self):
        return iter((self.true_submaps, self.dr_submaps))


def _yaw_matrix(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _pass_geometry(plan: SurveyPlan, terrain: TerrainField):
    """Centerlines (start point, direction) for every pass, serpentine order,
    centered inside the terrain; raises if the swath would leave the field."""
    lo, hi = terrain.bounds()
    extent = hi - lo
    x0 = lo[0] + (extent[0] - plan.line_length) / 2.0
    span_y = (plan.n_lines - 1) * plan.line_spacing
    y0 = lo[1] + (extent[1] - span_y) / 2.0
    passes = []
    for i in range(plan.n_lines):
        y = y0 + i * plan.line_spacing
        forward = i % 2 == 0
        start = np.array([x0 if forward else x0 + plan.line_length, y])
        direction = np.array([1.0 if forward else -1.0, 0.0])
        passes.append((f"line{i}", start, direction))
    if plan.revisit:
        y = y0 + (plan.n_lines // 2) * plan.line_spacing + plan.line_spacing / 2.0
        passes.append(("revisit", np.array([x0, y]), np.array([1.0, 0.0])))
    ys = [p[1][1] for p in passes]
    ymin = min(ys) - plan.swath_width / 2.0
    ymax = max(ys) + plan.swath_width / 2.0
    if x0 < lo[0] or x0 + plan.line_length > hi[0] or ymin < lo[1] or ymax > hi[1]:
        raise InvalidInputError("survey footprint exceeds terrain bounds")
    return passes


def simulate_survey(terrain: TerrainField, plan: SurveyPlan, drift: DriftModel) -> SurveyResult:
    """Sample the terrain along the survey pattern into per-pass submaps.

    Returns ground-truth and drift-corrupted submaps over identical point
    sets; only the poses differ. Submap clouds are demeaned, with the true
    centroid recorded and poses mapping local coordinates to the global
    frame.
    """
    passes = _pass_geometry(plan, terrain)
    rng = np.random.default_rng(drift.seed)
    n_pings = int(np.floor(plan.line_length / plan.ping_spacing)) + 1
    lateral = np.linspace(-plan.swath_width / 2.0, plan.swath_width / 2.0, plan.beams_per_ping)

    truth: list[Submap] = []
    dead_reckoned: list[Submap] = []
    tracks: list[Track] = []
    walk = np.zeros(3)  # accumulated (dx, dy, dyaw)
    prev_end: np.ndarray | None = None

    for name, start, direction in passes:
        if prev_end is not None:
            transit = float(np.linalg.norm(start - prev_end))
            if transit > 0:
                walk = walk + rng.normal(0.0, 1.0, size=3) * _step_sigma(drift, transit)
        steps = rng.normal(0.0, 1.0, size=(n_pings - 1, 3)) * _step_sigma(drift, plan.ping_spacing)
        mid = (n_pings - 1) // 2
        walk_mid = walk + steps[:mid].sum(axis=0) if mid > 0 else walk.copy()
        walk = walk + steps.sum(axis=0)
        dz = rng.normal(0.0, drift.z_sigma) if drift.z_sigma > 0 else 0.0
        prev_end = start + direction * plan.line_length

        along = np.arange(n_pings) * plan.ping_spacing
        centers = start[None, :] + along[:, None] * direction[None, :]
        normal = np.array([-direction[1], direction[0]])
        xy = (centers[:, None, :] + lateral[None, :, None] * normal[None, None, :]).reshape(-1, 2)
        z = terrain.sample(xy)
        pts = np.column_stack([xy, z])

        centroid = pts.mean(axis=0)
        cloud = PointCloud(pts - centroid, centroid=centroid, id=name)
        true_pose = Pose(np.eye(3), centroid)
        offset = np.array([walk_mid[0], walk_mid[1], dz])
        ryaw = _yaw_matrix(walk_mid[2])
        drift_pose = Pose(ryaw, centroid - ryaw @ centroid + offset)
        truth.append(Submap(cloud, true_pose))
        dead_reckoned.append(Submap(cloud, drift_pose.compose(true_pose)))
        tracks.append(Track(start.copy(), direction.copy(), plan.line_length, plan.ping_spacing))

    return SurveyResult(truth, dead_reckoned, tracks)


def _step_sigma(drift: DriftModel, ds: float) -> np.ndarray:
    root = np.sqrt(ds)
    return np.array([drift.xy_rate_sigma * root, drift.xy_rate_sigma * root,
                     drift.yaw_rate_sigma * root])


def save_survey(result: SurveyResult, out_dir, write_cloud) -> str:
    """Write submap clouds plus an index file; returns the index path.

    `write_cloud(points, path)` is injected so the caller controls the cloud
    file format.
    """
    import os

    os.makedirs(os.path.join(out_dir, "submaps"), exist_ok=True)
    index_path = os.path.join(out_dir, "survey.txt")
    lines = [HEADER]
    for sub_t, sub_d, track in zip(result.true_submaps, result.dr_submaps, result.tracks):
        rel = os.path.join("submaps", f"{sub_t.cloud.id}.xyz")
        write_cloud(sub_t.cloud.points, os.path.join(out_dir, rel))
        nums = np.concatenate([
            sub_t.cloud.centroid,
            sub_t.pose.rotation.reshape(-1), sub_t.pose.translation,
            sub_d.pose.rotation.reshape(-1), sub_d.pose.translation,
            track.start_xy, track.direction_xy, [track.length, track.ping_spacing],
        ])
        lines.append(f"submap {sub_t.cloud.id} {rel} " + " ".join(f"{v:.12g}" for v in nums))
    with open(index_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return index_path


def load_survey(index_path, read_cloud) -> SurveyResult:
    import os

    base = os.path.dirname(os.path.abspath(index_path))
    truth, dead_reckoned, tracks = [], [], []
    with open(index_path, "r", encoding="utf-8") as fh:
        if fh.readline().strip() != HEADER:
            raise InvalidInputError(f"{index_path}: not a {HEADER!r} file")
        for line in fh:
            parts = line.split()
            if not parts or parts[0] != "submap":
                continue
            sid, rel = parts[1], parts[2]
            nums = np.array(parts[3:], dtype=np.float64)
            centroid = nums[0:3]
            rt, tt = nums[3:12].reshape(3, 3), nums[12:15]
            rd, td = nums[15:24].reshape(3, 3), nums[24:27]
            start, direction = nums[27:29], nums[29:31]
            length, spacing = nums[31], nums[32]
            pts = read_cloud(os.path.join(base, rel))
            cloud = PointCloud(pts, centroid=centroid, id=sid)
            truth.append(Submap(cloud, Pose(rt, tt)))
            dead_reckoned.append(Submap(cloud, Pose(rd, td)))
            tracks.append(Track(start, direction, float(length), float(spacing)))
    return SurveyResult(truth, dead_reckoned, tracks)

"""Point-cloud primitives and preprocessing operations.

Clouds are dense (N, 3) float64 arrays in a local metric frame with z as the
depth axis (positive down). Every operation here is a pure function over
immutable inputs; RNG state is passed explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInputError

ORTHONORMAL_TOL = 1e-9


@dataclass(frozen=True)
class Point3:
    """A single point, meters, in a local east-north-depth frame."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not np.all(np.isfinite([self.x, self.y, self.z])):
            raise InvalidInputError(f"non-finite point ({self.x}, {self.y}, {self.z})")

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @staticmethod
    def from_array(a) -> "Point3":
        a = np.asarray(a, dtype=np.float64).reshape(3)
        return Point3(float(a[0]), float(a[1]), float(a[2]))


@dataclass
class PointCloud:
    """An ordered point set plus the absolute centroid recorded at demean time.

    `points` is (N, 3) float64. `centroid` is the absolute position of this
    cloud's local origin, so `points + centroid` reconstructs absolute
    coordinates. Empty clouds are representable; operations that cannot
    handle them raise InvalidInputError.
    """

    points: np.ndarray
    centroid: np.ndarray = field(default_factory=lambda: np.zeros(3))
    id: str = ""

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.centroid = np.asarray(self.centroid, dtype=np.float64).reshape(3)
        if self.points.size and not np.all(np.isfinite(self.points)):
            raise InvalidInputError(f"cloud {self.id!r} contains non-finite coordinates")
        if not np.all(np.isfinite(self.centroid)):
            raise InvalidInputError(f"cloud {self.id!r} has a non-finite centroid")

    def __len__(self) -> int:
        return self.points.shape[0]

    def absolute(self) -> np.ndarray:
        """Points reconstructed in the absolute frame."""
        return self.points + self.centroid

    def with_points(self, points: np.ndarray) -> "PointCloud":
        return replace(self, points=points)


@dataclass
class Pose:
    """Rigid transform p' = R p + t."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        self.translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        err = np.abs(self.rotation.T @ self.rotation - np.eye(3)).max()
        if err > ORTHONORMAL_TOL:
            raise InvalidInputError(f"rotation not orthonormal (max deviation {err:.3e})")
        det = np.linalg.det(self.rotation)
        if abs(det - 1.0) > ORTHONORMAL_TOL:
            raise InvalidInputError(f"rotation has det {det}, expected +1")

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.rotation.T + self.translation

    def compose(self, other: "Pose") -> "Pose":
        """self ∘ other: apply `other` first, then `self`."""
        return Pose(self.rotation @ other.rotation,
                    self.rotation @ other.translation + self.translation)

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)


@dataclass
class Submap:
    """A point cloud rigidly attached to the collection pose.

    `pose` maps the cloud's local (demeaned) coordinates into the global
    frame used by the survey.
    """

    cloud: PointCloud
    pose: Pose


@dataclass
class AugmentParams:
    """Perturbation magnitudes for training-pair augmentation."""

    max_yaw_deg: float = 3.0
    max_dz_m: float = 0.2
    noise_sigma_m: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if min(self.max_yaw_deg, self.max_dz_m, self.noise_sigma_m) < 0:
            raise InvalidInputError("augmentation magnitudes must be non-negative")


def demean(cloud: PointCloud) -> tuple[PointCloud, Point3]:
    """Shift a cloud so its arithmetic mean sits at the origin.

    Returns the shifted cloud (absolute centroid label updated) and the
    removed mean.
    """
    if len(cloud) == 0:
        raise InvalidInputError("cannot demean an empty cloud")
    mean = cloud.points.mean(axis=0)
    out = PointCloud(cloud.points - mean, centroid=cloud.centroid + mean, id=cloud.id)
    return out, Point3.from_array(mean)


def cylindrical_crop(cloud: PointCloud, center_xy, radius: float) -> PointCloud:
    """Keep points whose horizontal distance to center_xy is <= radius."""
    if radius <= 0:
        raise InvalidInputError("crop radius must be positive")
    center_xy = np.asarray(center_xy, dtype=np.float64).reshape(2)
    d2 = ((cloud.points[:, :2] - center_xy) ** 2).sum(axis=1)
    return cloud.with_points(cloud.points[d2 <= radius * radius])


def grid_downsample(cloud: PointCloud, cell: float) -> PointCloud:
    """Replace the points in each occupied 3-D cell by their centroid.

    Output is ordered by lexicographic cell index, so the result does not
    depend on input ordering.
    """
    if cell <= 0:
        raise InvalidInputError("cell size must be positive")
    if len(cloud) == 0:
        return cloud.with_points(cloud.points.copy())
    keys = np.floor(cloud.points / cell).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    sums = np.zeros((uniq.shape[0], 3))
    np.add.at(sums, inverse, cloud.points)
    counts = np.bincount(inverse, minlength=uniq.shape[0]).astype(np.float64)
    return cloud.with_points(sums / counts[:, None])


def _fps_core(points: np.ndarray, k: int, start: int, value_ties: bool) -> np.ndarray:
    """Greedy max-min selection. Ties break to the lowest index, or to the
    lexicographically smallest coordinates when value_ties is set (the
    latter makes the selection independent of input ordering)."""
    n = points.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = start
    dists = np.linalg.norm(points - points[start], axis=1)
    for i in range(1, k):
        best = dists.max()
        if value_ties:
            cand = np.flatnonzero(dists == best)
            order = np.lexsort((points[cand, 2], points[cand, 1], points[cand, 0]))
            nxt = cand[order[0]]
        else:
            nxt = int(np.argmax(dists))
        chosen[i] = nxt
        np.minimum(dists, np.linalg.norm(points - points[nxt], axis=1), out=dists)
    return chosen


def lexicographic_start(points: np.ndarray) -> int:
    """Index of the lexicographically smallest (x, y, z) point."""
    return int(np.lexsort((points[:, 2], points[:, 1], points[:, 0]))[0])


def farthest_point_sampling(cloud: PointCloud, k: int, seed: int | None = None) -> np.ndarray:
    """Greedy max-min subset of k point indices.

    The first pick is index 0, or a random index when a seed is given; every
    later pick maximizes the distance to the already-selected set, ties
    broken by the lowest index.
    """
    n = len(cloud)
    if not 1 <= k <= n:
        raise InvalidInputError(f"k={k} outside [1, {n}]")
    start = 0 if seed is None else int(np.random.default_rng(seed).integers(n))
    return _fps_core(cloud.points, k, start, value_ties=False)


def occupancy_cells(points: np.ndarray, cell: float) -> set[tuple[int, int]]:
    """The set of 2-D x-y occupancy cells touched by a point array."""
    if points.shape[0] == 0:
        return set()
    keys = np.floor(points[:, :2] / cell).astype(np.int64)
    return set(map(tuple, keys.tolist()))


def overlap_iou(a: PointCloud, b: PointCloud, cell: float = 1.0) -> float:
    """Intersection-over-union of x-y occupancy footprints.

    Both clouds must be expressed in a common frame; bathymetry is treated
    as a height field, so occupancy is 2-D.
    """
    if cell <= 0:
        raise InvalidInputError("cell size must be positive")
    if len(a) == 0 and len(b) == 0:
        raise InvalidInputError("IoU of two empty clouds is undefined")
    ca = occupancy_cells(a.points, cell)
    cb = occupancy_cells(b.points, cell)
    union = len(ca | cb)
    return len(ca & cb) / union


def augment(cloud: PointCloud, params: AugmentParams) -> PointCloud:
    """Perturb a cloud: yaw about the vertical axis through its mean, a
    vertical shift, then i.i.d. Gaussian noise, in that order.

    Deterministic for a fixed (cloud, params). Zero magnitudes leave the
    corresponding stage out entirely, so all-zero params return the input
    bit-for-bit.
    """
    rng = np.random.default_rng(params.seed)
    alpha = np.deg2rad(rng.uniform(-params.max_yaw_deg, params.max_yaw_deg))
    dz = rng.uniform(-params.max_dz_m, params.max_dz_m)
    pts = cloud.points
    if alpha != 0.0:
        c, s = np.cos(alpha), np.sin(alpha)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        center = pts.mean(axis=0)
        pts = (pts - center) @ rot.T + center
    if dz != 0.0:
        pts = pts + np.array([0.0, 0.0, dz])
    if params.noise_sigma_m > 0.0:
        pts = pts + rng.normal(0.0, params.noise_sigma_m, size=pts.shape)
    return cloud.with_points(pts)


def apply_transform(cloud: PointCloud, pose: Pose) -> PointCloud:
    """Apply a rigid transform to every point (and to the centroid label)."""
    return PointCloud(pose.apply(cloud.points), centroid=pose.apply(cloud.centroid),
                      id=cloud.id)


def read_xyz(path) -> np.ndarray:
    """Read a plain-text cloud file: one 'x y z' line per point, '#' comments,
    arbitrary whitespace separation."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 3:
                raise InvalidInputError(f"{path}: malformed line {line!r}")
            rows.append([float(parts[0]), float(parts[1]), float(parts[2])])
    return np.array(rows, dtype=np.float64).reshape(-1, 3)


def write_xyz(points: np.ndarray, path, header: str | None = None) -> None:
    """Write a cloud file with 6 decimal places per coordinate."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# {header}\n")
        for x, y, z in points:
            fh.write(f"{x:.6f} {y:.6f} {z:.6f}\n")

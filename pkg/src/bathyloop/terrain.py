"""Procedural seabed terrain: multi-octave value noise on a regular grid.

Heights are depths in meters, positive down. The synthesis is a pure
function of the seed, bounded to [base_depth - amplitude, base_depth +
amplitude] by construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .seeds import derived_rng

HEADER = "bathy-terrain v1"


@dataclass
class SpectrumParams:
    base_depth: float = 500.0
    amplitude: float = 25.0
    octaves: int = 5
    lacunarity: float = 2.0
    persistence: float = 0.5

    def __post_init__(self):
        if self.amplitude < 0:
            raise InvalidInputError("amplitude must be non-negative")
        if self.octaves < 1:
            raise InvalidInputError("octaves must be >= 1")
        if not 0.0 < self.persistence < 1.0:
            raise InvalidInputError("persistence must lie in (0, 1)")
        if self.lacunarity <= 1.0:
            raise InvalidInputError("lacunarity must exceed 1")


@dataclass
class TerrainField:
    """heights[j, i] is the depth at (origin_xy[0] + i*cell, origin_xy[1] + j*cell)."""

    heights: np.ndarray
    origin_xy: np.ndarray
    cell: float
    seed: int = 0

    def __post_init__(self):
        self.heights = np.asarray(self.heights, dtype=np.float64)
        self.origin_xy = np.asarray(self.origin_xy, dtype=np.float64).reshape(2)
        if self.heights.ndim != 2 or min(self.heights.shape) < 2:
            raise InvalidInputError("terrain grid must be at least 2x2")
        if self.cell <= 0:
            raise InvalidInputError("terrain cell must be positive")
        if not np.all(np.isfinite(self.heights)):
            raise InvalidInputError("terrain contains non-finite heights")

    @property
    def size_xy(self) -> np.ndarray:
        ny, nx = self.heights.shape
        return np.array([(nx - 1) * self.cell, (ny - 1) * self.cell])

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.origin_xy, self.origin_xy + self.size_xy

    def sample(self, xy: np.ndarray) -> np.ndarray:
        """Bilinear depth at arbitrary (n, 2) positions inside the field."""
        xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
        lo, hi = self.bounds()
        if np.any(xy < lo - 1e-9) or np.any(xy > hi + 1e-9):
            raise InvalidInputError("sample position outside terrain bounds")
        u = (xy[:, 0] - self.origin_xy[0]) / self.cell
        v = (xy[:, 1] - self.origin_xy[1]) / self.cell
        ny, nx = self.heights.shape
        i0 = np.clip(np.floor(u).astype(np.int64), 0, nx - 2)
        j0 = np.clip(np.floor(v).astype(np.int64), 0, ny - 2)
        fu = u - i0
        fv = v - j0
        h = self.heights
        return ((1 - fu) * (1 - fv) * h[j0, i0] + fu * (1 - fv) * h[j0, i0 + 1]
                + (1 - fu) * fv * h[j0 + 1, i0] + fu * fv * h[j0 + 1, i0 + 1])


def _value_noise_grid(xs: np.ndarray, ys: np.ndarray, wavelength: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Smoothstep-interpolated lattice noise in [-1, 1] on the xs x ys grid."""
    u = xs / wavelength
    v = ys / wavelength
    iu = np.floor(u).astype(np.int64)
    iv = np.floor(v).astype(np.int64)
    fu = u - iu
    fv = v - iv
    lattice = rng.uniform(-1.0, 1.0, size=(iv.max() + 2, iu.max() + 2))
    su = fu * fu * (3.0 - 2.0 * fu)
    sv = (fv * fv * (3.0 - 2.0 * fv))[:, None]
    a = lattice[np.ix_(iv, iu)]
    b = lattice[np.ix_(iv, iu + 1)]
    c = lattice[np.ix_(iv + 1, iu)]
    d = lattice[np.ix_(iv + 1, iu + 1)]
    top = a + su * (b - a)
    bot = c + su * (d - c)
    return top + sv * (bot - top)


def generate_terrain(params: SpectrumParams, size_xy, cell: float, seed: int) -> TerrainField:
    """Synthesize a terrain field of the given extent.

    size_xy may be a scalar (square field) or an (sx, sy) pair. The longest
    octave wavelength is a quarter of the larger extent.
    """
    size = np.asarray(size_xy, dtype=np.float64).reshape(-1)
    if size.size == 1:
        size = np.array([size[0], size[0]])
    if cell <= 0 or np.any(size < 10.0 * cell):
        raise InvalidInputError("field extent must be at least 10 cells in each axis")
    nx = int(round(size[0] / cell)) + 1
    ny = int(round(size[1] / cell)) + 1
    xs = np.arange(nx) * cell
    ys = np.arange(ny) * cell
    heights = np.full((ny, nx), params.base_depth)
    if params.amplitude > 0:
        base_wavelength = max(size) / 4.0
        acc = np.zeros((ny, nx))
        total = 0.0
        for o in range(params.octaves):
            weight = params.persistence ** o
            wavelength = base_wavelength / (params.lacunarity ** o)
            rng = derived_rng(seed, f"terrain.oct{o}")
            acc += weight * _value_noise_grid(xs, ys, wavelength, rng)
            total += weight
        heights = heights + params.amplitude * acc / total
    return TerrainField(heights, np.zeros(2), cell, seed=seed)


def save_terrain(field: TerrainField, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(HEADER + "\n")
        fh.write(f"origin {field.origin_xy[0]:.6f} {field.origin_xy[1]:.6f}\n")
        fh.write(f"cell {field.cell:.6f}\n")
        ny, nx = field.heights.shape
        fh.write(f"shape {ny} {nx}\n")
        for row in field.heights:
            fh.write(" ".join(f"{v:.6f}" for v in row) + "\n")


def load_terrain(path) -> TerrainField:
    with open(path, "r", encoding="utf-8") as fh:
        if fh.readline().strip() != HEADER:
            raise InvalidInputError(f"{path}: not a {HEADER!r} file")
        origin = np.array(fh.readline().split()[1:3], dtype=np.float64)
        cell = float(fh.readline().split()[1])
        ny, nx = (int(v) for v in fh.readline().split()[1:3])
        heights = np.loadtxt(fh, dtype=np.float64, max_rows=ny).reshape(ny, nx)
    return TerrainField(heights, origin, cell)

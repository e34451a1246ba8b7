"""Truncated unsigned Euclidean distance field over a voxel grid.

Distances are voxel-center to voxel-center, in meters, exact (scipy's
per-axis distance-transform decomposition) and clamped to `truncation`.
The planner only penalizes clearance below d_clear, so no sign is needed.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .grid import Occupancy, VoxelGrid


@dataclass
class EsdfGrid:
    dims: tuple[int, int, int]
    resolution: float
    origin: np.ndarray
    distance: np.ndarray  # meters, shape == dims
    truncation: float

    def voxel_center(self, coord) -> np.ndarray:
        return self.origin + (np.asarray(coord, dtype=np.float64) + 0.5) * self.resolution


class DistanceSample(NamedTuple):
    distance: float
    gradient: np.ndarray
    clamped: bool


def build_esdf(grid: VoxelGrid, truncation: float = 2.0, unknown_is: str = "free",
               ignore_classes: frozenset[int] | None = None) -> EsdfGrid:
    """Distance to the nearest obstacle voxel center, clamped to truncation.

    unknown_is selects whether unknown voxels count as obstacles; occupied
    voxels whose class is in ignore_classes (e.g. drivable surfaces) are not
    obstacles.
    """
    if unknown_is not in ("free", "occupied"):
        raise ValueError(f"unknown_is must be 'free' or 'occupied', got {unknown_is!r}")
    if truncation < grid.resolution:
        raise ValueError(f"truncation {truncation} below resolution {grid.resolution}")

    obstacle = grid.occ == Occupancy.OCCUPIED
    if ignore_classes:
        drivable = np.isin(grid.cls, list(sorted(ignore_classes)))
        obstacle &= ~drivable
    if unknown_is == "occupied":
        obstacle |= grid.occ == Occupancy.UNKNOWN

    if not obstacle.any():
        dist = np.full(grid.dims, truncation, dtype=np.float64)
    else:
        dist = ndimage.distance_transform_edt(~obstacle, sampling=grid.resolution)
        np.minimum(dist, truncation, out=dist)

    return EsdfGrid(
        dims=grid.dims,
        resolution=grid.resolution,
        origin=grid.origin.copy(),
        distance=dist,
        truncation=truncation,
    )


def sample_distance_batch(esdf: EsdfGrid, pts: np.ndarray):
    """Vectorized trilinear interpolation: (values (n,), gradients (n,3),
    clamped (n,)) for world points (n, 3)."""
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 3)
    res = esdf.resolution
    # continuous cell coordinates on the voxel-center lattice
    q = (pts - esdf.origin[None, :]) / res - 0.5
    nx, ny, nz = esdf.dims
    hi = np.array([nx - 1, ny - 1, nz - 1], dtype=np.float64)

    out_low = q < 0
    out_high = q > hi[None, :]
    clamped = (out_low | out_high).any(axis=1)
    qc = np.clip(q, 0.0, hi[None, :])

    base = np.minimum(qc.astype(np.int64), np.maximum(hi.astype(np.int64) - 1, 0)[None, :])
    f = qc - base
    i, j, k = base[:, 0], base[:, 1], base[:, 2]
    i1 = np.minimum(i + 1, nx - 1)
    j1 = np.minimum(j + 1, ny - 1)
    k1 = np.minimum(k + 1, nz - 1)

    d = esdf.distance
    c000, c100 = d[i, j, k], d[i1, j, k]
    c010, c110 = d[i, j1, k], d[i1, j1, k]
    c001, c101 = d[i, j, k1], d[i1, j, k1]
    c011, c111 = d[i, j1, k1], d[i1, j1, k1]

    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]
    c00 = c000 * (1 - fx) + c100 * fx
    c10 = c010 * (1 - fx) + c110 * fx
    c01 = c001 * (1 - fx) + c101 * fx
    c11 = c011 * (1 - fx) + c111 * fx
    c0 = c00 * (1 - fy) + c10 * fy
    c1 = c01 * (1 - fy) + c11 * fy
    values = c0 * (1 - fz) + c1 * fz

    d_dfx = ((c100 - c000) * (1 - fy) + (c110 - c010) * fy) * (1 - fz) \
        + ((c101 - c001) * (1 - fy) + (c111 - c011) * fy) * fz
    d_dfy = (c10 - c00) * (1 - fz) + (c11 - c01) * fz
    d_dfz = c1 - c0
    grads = np.stack([d_dfx, d_dfy, d_dfz], axis=1) / res
    # the interpolant is constant along clamped axes
    grads[out_low | out_high] = 0.0

    return values, grads, clamped


def sample_distance(esdf: EsdfGrid, p) -> DistanceSample:
    """Trilinear interpolation of the field at a world point, with the
    analytic gradient of the interpolant.

    Points outside the voxel-center lattice are clamped onto it and flagged.
    """
    values, grads, clamped = sample_distance_batch(esdf, np.asarray(p).reshape(1, 3))
    return DistanceSample(distance=float(values[0]), gradient=grads[0],
                          clamped=bool(clamped[0]))

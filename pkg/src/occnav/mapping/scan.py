"""Scan integration: carve free space along rays, mark hit voxels occupied.

Rays are encoded by their endpoints: one world point per ray, measured from
the sensor position. A point farther than `max_range` means "this ray saw
nothing" and only carves free space out to max_range.
"""

from dataclasses import dataclass

import numpy as np

from .._kernels import traverse_kernel
from ..geometry import Pose
from .grid import Occupancy, Source, VoxelGrid


@dataclass
class ScanResult:
    grid: VoxelGrid
    changed: np.ndarray  # (n, 3) voxel coords whose state changed


def _traverse_rays(grid: VoxelGrid, origin: np.ndarray, endpoints: np.ndarray,
                   t_limits: np.ndarray):
    """Exact voxel traversal: all voxels entered strictly before each ray's
    t_limit (distance along the ray), including the start voxel. Voxels
    outside the grid are dropped."""
    n = endpoints.shape[0]
    if n == 0:
        return np.zeros((0, 3), dtype=np.int64)
    nx, ny, nz = grid.dims
    return traverse_kernel(
        origin.astype(np.float64), endpoints.astype(np.float64),
        np.asarray(t_limits, dtype=np.float64), grid.resolution,
        float(grid.origin[0]), float(grid.origin[1]), float(grid.origin[2]),
        nx, ny, nz,
    )


def integrate_scan(grid: VoxelGrid, sensor_pose: Pose, hits: np.ndarray,
                   max_range: float, hit_classes: np.ndarray | None = None) -> ScanResult:
    """Integrate one frame of rays into a copy of `grid`.

    Voxels traversed before each hit become free (scanned); the voxel
    containing an in-range hit becomes occupied (scanned). A scanned-occupied
    voxel is never downgraded. Occupied marks are applied after all free
    carving so results do not depend on ray order within the frame.
    """
    if max_range <= 0:
        raise ValueError(f"max_range must be positive, got {max_range}")
    hits = np.asarray(hits, dtype=np.float64).reshape(-1, 3)
    if hits.size and not np.isfinite(hits).all():
        raise ValueError("hit points must be finite")

    g = grid.copy()
    origin = sensor_pose.position
    res = grid.resolution

    dists = np.linalg.norm(hits - origin[None, :], axis=1) if hits.size else np.zeros(0)
    is_hit = dists <= max_range

    # free carving stops just short of the hit voxel: the hit point is inside
    # its voxel, so its entry t is strictly below the hit distance
    if hits.shape[0]:
        hit_vox = g.world_to_voxel_array(hits)
        entry_t = _voxel_entry_t(origin, hits, dists, hit_vox, g)
        t_limits = np.where(is_hit, entry_t, np.minimum(dists, max_range))
        visited = _traverse_rays(g, origin, hits, t_limits)
    else:
        visited = np.zeros((0, 3), dtype=np.int64)

    before_occ = g.occ.copy()
    before_cls = g.cls.copy()
    before_src = g.src.copy()

    if visited.shape[0]:
        vx, vy, vz = visited[:, 0], visited[:, 1], visited[:, 2]
        scanned_occ = (g.occ[vx, vy, vz] == Occupancy.OCCUPIED) & (g.src[vx, vy, vz] == Source.SCANNED)
        keep = ~scanned_occ
        g.occ[vx[keep], vy[keep], vz[keep]] = Occupancy.FREE
        g.cls[vx[keep], vy[keep], vz[keep]] = -1
        g.src[vx[keep], vy[keep], vz[keep]] = Source.SCANNED

    if hits.shape[0] and is_hit.any():
        hv = hit_vox[is_hit]
        inb = g.in_bounds_mask(hv)
        hv = hv[inb]
        hx, hy, hz = hv[:, 0], hv[:, 1], hv[:, 2]
        g.occ[hx, hy, hz] = Occupancy.OCCUPIED
        g.src[hx, hy, hz] = Source.SCANNED
        if hit_classes is not None:
            hc = np.asarray(hit_classes)[is_hit][inb]
            g.cls[hx, hy, hz] = hc.astype(np.int16)

    changed_mask = (g.occ != before_occ) | (g.cls != before_cls) | (g.src != before_src)
    changed = np.argwhere(changed_mask)
    return ScanResult(grid=g, changed=changed)


def _voxel_entry_t(origin, hits, dists, hit_vox, grid):
    """Distance along each ray at which it enters its hit voxel."""
    res = grid.resolution
    lo = grid.origin[None, :] + hit_vox * res
    hi = lo + res
    with np.errstate(divide="ignore", invalid="ignore"):
        dirs = (hits - origin[None, :]) / np.where(dists[:, None] > 0, dists[:, None], 1.0)
        t1 = np.where(dirs != 0, (lo - origin[None, :]) / dirs, -np.inf)
        t2 = np.where(dirs != 0, (hi - origin[None, :]) / dirs, np.inf)
    t_enter = np.max(np.minimum(t1, t2), axis=1)
    # origin already inside the hit voxel -> nothing to carve
    return np.maximum(t_enter, 0.0)

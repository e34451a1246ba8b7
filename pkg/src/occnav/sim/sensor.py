"""Frustum depth sensor: exact per-ray voxel traversal against ground truth.

Each ray reports the first occupied ground-truth voxel within range;
occlusion falls out of the traversal order. Hits are returned as world
points inside the hit voxel (chord midpoint, robust for grazing rays);
no-hit rays return a point beyond max_range, which integrate_scan treats
as carve-only.
"""

from dataclasses import dataclass

import numpy as np

from .._kernels import raycast_kernel
from ..geometry import Pose
from ..mapping.grid import VoxelGrid


@dataclass
class SensorModel:
    h_fov_deg: float = 87.0
    v_fov_deg: float = 58.0
    max_range: float = 5.0
    rays_h: int = 33
    rays_v: int = 17
    rate_hz: float = 10.0

    def __post_init__(self):
        if not (0 < self.h_fov_deg < 180 and 0 < self.v_fov_deg < 180):
            raise ValueError("FoV must be in (0, 180) degrees")
        if self.max_range <= 0:
            raise ValueError("max_range must be positive")

    def directions(self, pose: Pose) -> np.ndarray:
        """(n, 3) unit ray directions covering the frustum."""
        h_half = np.deg2rad(self.h_fov_deg) / 2.0
        v_half = np.deg2rad(self.v_fov_deg) / 2.0
        yaws = pose.yaw + np.linspace(-h_half, h_half, self.rays_h)
        pitches = pose.pitch + np.linspace(-v_half, v_half, self.rays_v)
        yy, pp = np.meshgrid(yaws, pitches, indexing="ij")
        cp = np.cos(pp.ravel())
        return np.stack(
            [cp * np.cos(yy.ravel()), cp * np.sin(yy.ravel()), np.sin(pp.ravel())],
            axis=1,
        )


def sense(world, pose: Pose, sensor: SensorModel):
    """Returns (hit_points (n,3), hit_classes (n,)) one entry per ray."""
    grid: VoxelGrid = world.ground_truth
    if not grid.in_bounds(grid.world_to_voxel(pose.position)):
        raise ValueError(f"sensor pose {pose.position} outside world bounds")

    dirs = sensor.directions(pose)
    origin = pose.position.astype(np.float64)
    hit_t, hit_exit, hit_vox = raycast_kernel(
        grid.occ, origin, dirs, grid.resolution,
        float(grid.origin[0]), float(grid.origin[1]), float(grid.origin[2]),
        sensor.max_range,
    )

    n = dirs.shape[0]
    is_hit = np.isfinite(hit_t)
    points = origin[None, :] + dirs * (sensor.max_range * 1.5)
    if is_hit.any():
        # chord midpoint: strictly inside the hit voxel even for grazing rays,
        # clamped under max_range so the integrator keeps treating it as a hit
        mid = 0.5 * (hit_t[is_hit] + np.minimum(hit_exit[is_hit], sensor.max_range * 2))
        inside_t = np.maximum(np.minimum(mid, sensor.max_range - 1e-9),
                              hit_t[is_hit] + 1e-12)
        points[is_hit] = origin[None, :] + dirs[is_hit] * inside_t[:, None]

    classes = np.full(n, -1, dtype=np.int16)
    hv = hit_vox[is_hit]
    if hv.shape[0]:
        classes[is_hit] = grid.cls[hv[:, 0], hv[:, 1], hv[:, 2]]
    return points, classes

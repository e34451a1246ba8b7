"""Synthetic wall-with-gap scenes for toy completion training.

Each scene is a vertical wall across the grid with a rectangular doorway.
The partial scan reveals most of the scene but hides a contiguous slab
(as if occluded), which the model learns to fill back in.
"""

import numpy as np

from ..rng import Xorshift128Plus
from ..mapping.grid import Occupancy, Source, VoxelGrid

WALL_CLASS = 1


def wall_gap_scene(seed: int, dims=(32, 32, 16), resolution: float = 0.2):
    """Returns (partial_scan, full_grid) for one seeded scene."""
    rng = Xorshift128Plus(seed)
    nx, ny, nz = dims

    full = VoxelGrid(dims, resolution)
    full.occ[:] = Occupancy.FREE
    full.src[:] = Source.SCANNED

    wx = rng.randint(nx // 4, 3 * nx // 4 - 2)
    thickness = 2  # thin walls defeat the coarse-to-fine decoder's localization
    gap_y = rng.randint(2, ny - 8)
    gap_w = rng.randint(3, 6)
    gap_z = rng.randint(0, nz - 8)
    gap_h = rng.randint(3, 6)

    full.occ[wx:wx + thickness, :, :] = Occupancy.OCCUPIED
    full.cls[wx:wx + thickness, :, :] = WALL_CLASS
    full.occ[wx:wx + thickness, gap_y:gap_y + gap_w, gap_z:gap_z + gap_h] = Occupancy.FREE
    full.cls[wx:wx + thickness, gap_y:gap_y + gap_w, gap_z:gap_z + gap_h] = -1

    # hide a y-slab that avoids the doorway so the completion is unambiguous
    hidden_w = max(4, int(ny * 0.55))
    candidates = [y0 for y0 in range(ny - hidden_w + 1)
                  if y0 + hidden_w <= gap_y or y0 >= gap_y + gap_w]
    if not candidates:
        candidates = [0]
    y0 = candidates[rng.randint(0, len(candidates) - 1)]

    scan = full.copy()
    scan.occ[:, y0:y0 + hidden_w, :] = Occupancy.UNKNOWN
    scan.cls[:, y0:y0 + hidden_w, :] = -1
    scan.src[:, y0:y0 + hidden_w, :] = Source.NONE
    return scan, full


def wall_gap_dataset(n_scenes: int, seed_base: int = 0, dims=(32, 32, 16)):
    return [wall_gap_scene(seed_base + i, dims) for i in range(n_scenes)]

"""Sparse-semantics semantic occupancy grid.

Storage is dense numpy (occupancy / class / source per voxel) because the
grids used here stay well under a few hundred MB even at 256^3, while the
*API* is the sparse one the rest of the stack relies on: untouched voxels
read back as unknown, and bulk operations address only the voxels they
actually touch.
"""

from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class Occupancy(IntEnum):
    UNKNOWN = 0
    FREE = 1
    OCCUPIED = 2


class Source(IntEnum):
    NONE = 0
    SCANNED = 1
    PREDICTED = 2


@dataclass(frozen=True)
class VoxelState:
    occupancy: Occupancy
    class_id: int | None = None
    source: Source = Source.NONE

    def __post_init__(self):
        if self.class_id is not None and self.occupancy != Occupancy.OCCUPIED:
            raise ValueError("class_id only valid on occupied voxels")


UNKNOWN_STATE = VoxelState(Occupancy.UNKNOWN)


class VoxelGrid:
    """Axis-aligned voxel grid: `dims` voxels of size `resolution` starting
    at world point `origin` (corner of voxel (0,0,0))."""

    def __init__(self, dims, resolution: float = 0.2, origin=(0.0, 0.0, 0.0)):
        dims = tuple(int(d) for d in dims)
        if len(dims) != 3 or any(d <= 0 for d in dims):
            raise ValueError(f"dims must be three positive counts, got {dims}")
        if resolution <= 0:
            raise ValueError(f"resolution must be positive, got {resolution}")
        self.dims = dims
        self.resolution = float(resolution)
        self.origin = np.asarray(origin, dtype=np.float64).copy()
        self.occ = np.zeros(dims, dtype=np.uint8)
        self.cls = np.full(dims, -1, dtype=np.int16)
        self.src = np.zeros(dims, dtype=np.uint8)

    # -- coordinate transforms -------------------------------------------

    def world_to_voxel(self, p) -> tuple[int, int, int]:
        idx = np.floor((np.asarray(p, dtype=np.float64) - self.origin) / self.resolution)
        return int(idx[0]), int(idx[1]), int(idx[2])

    def world_to_voxel_array(self, pts: np.ndarray) -> np.ndarray:
        return np.floor((pts - self.origin) / self.resolution).astype(np.int64)

    def voxel_center(self, coord) -> np.ndarray:
        return self.origin + (np.asarray(coord, dtype=np.float64) + 0.5) * self.resolution

    def voxel_centers_array(self, coords: np.ndarray) -> np.ndarray:
        return self.origin + (coords.astype(np.float64) + 0.5) * self.resolution

    def in_bounds(self, coord) -> bool:
        x, y, z = coord
        nx, ny, nz = self.dims
        return 0 <= x < nx and 0 <= y < ny and 0 <= z < nz

    def in_bounds_mask(self, coords: np.ndarray) -> np.ndarray:
        nx, ny, nz = self.dims
        return (
            (coords[:, 0] >= 0) & (coords[:, 0] < nx)
            & (coords[:, 1] >= 0) & (coords[:, 1] < ny)
            & (coords[:, 2] >= 0) & (coords[:, 2] < nz)
        )

    @property
    def world_size(self) -> np.ndarray:
        return np.array(self.dims, dtype=np.float64) * self.resolution

    # -- cell access -------------------------------------------------------

    def state_at(self, coord) -> VoxelState:
        if not self.in_bounds(coord):
            raise IndexError(f"voxel {coord} outside grid dims {self.dims}")
        occ = Occupancy(int(self.occ[coord]))
        cls = int(self.cls[coord])
        return VoxelState(
            occupancy=occ,
            class_id=cls if (cls >= 0 and occ == Occupancy.OCCUPIED) else None,
            source=Source(int(self.src[coord])),
        )

    def set_state(self, coord, state: VoxelState) -> None:
        if not self.in_bounds(coord):
            raise IndexError(f"voxel {coord} outside grid dims {self.dims}")
        if state.source == Source.PREDICTED and (
            self.occ[coord] == Occupancy.OCCUPIED and self.src[coord] == Source.SCANNED
        ):
            raise ValueError("predicted source cannot overwrite a scanned-occupied voxel")
        self.occ[coord] = int(state.occupancy)
        self.cls[coord] = -1 if state.class_id is None else int(state.class_id)
        self.src[coord] = int(state.source)

    def occupied_coords(self) -> np.ndarray:
        return np.argwhere(self.occ == Occupancy.OCCUPIED)

    def count(self, occupancy: Occupancy) -> int:
        return int(np.count_nonzero(self.occ == occupancy))

    def copy(self) -> "VoxelGrid":
        g = VoxelGrid(self.dims, self.resolution, self.origin)
        g.occ = self.occ.copy()
        g.cls = self.cls.copy()
        g.src = self.src.copy()
        return g

    def __eq__(self, other) -> bool:
        if not isinstance(other, VoxelGrid):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.resolution == other.resolution
            and np.array_equal(self.origin, other.origin)
            and np.array_equal(self.occ, other.occ)
            and np.array_equal(self.cls, other.cls)
            and np.array_equal(self.src, other.src)
        )

    def __repr__(self) -> str:
        return (
            f"VoxelGrid(dims={self.dims}, res={self.resolution}, "
            f"occupied={self.count(Occupancy.OCCUPIED)}, free={self.count(Occupancy.FREE)})"
        )

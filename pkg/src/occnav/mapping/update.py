"""Query-based prediction update.

The update touches only the predicted-occupied coordinates (M of them), never
the full grid (N voxels), so its cost is O(M) by construction. The dense
full-traversal merge that baseline mapping pipelines perform is kept as an
explicitly-named comparator for the latency benchmark.
"""

from dataclasses import dataclass

import numpy as np

from .grid import Occupancy, Source, VoxelGrid


@dataclass
class QueryUpdateResult:
    grid: VoxelGrid
    changed: np.ndarray          # (n, 3) coords switched to predicted-occupied
    skipped_out_of_bounds: int


def query_update(grid: VoxelGrid, pred) -> QueryUpdateResult:
    """Mark predicted-occupied voxels in a copy of `grid`.

    Only voxels currently free or unknown change state; scanned-occupied
    voxels always win over predictions. Out-of-bounds prediction entries are
    skipped and counted, not raised.
    """
    coords, classes = pred.as_arrays()
    g = grid.copy()
    if coords.shape[0] == 0:
        return QueryUpdateResult(grid=g, changed=np.zeros((0, 3), dtype=np.int64), skipped_out_of_bounds=0)

    inb = g.in_bounds_mask(coords)
    skipped = int(np.count_nonzero(~inb))
    coords = coords[inb]
    classes = classes[inb]

    x, y, z = coords[:, 0], coords[:, 1], coords[:, 2]
    eligible = g.occ[x, y, z] != Occupancy.OCCUPIED
    ex, ey, ez = x[eligible], y[eligible], z[eligible]
    g.occ[ex, ey, ez] = Occupancy.OCCUPIED
    g.src[ex, ey, ez] = Source.PREDICTED
    g.cls[ex, ey, ez] = classes[eligible].astype(np.int16)

    return QueryUpdateResult(grid=g, changed=coords[eligible].copy(), skipped_out_of_bounds=skipped)


def naive_merge_update(grid: VoxelGrid, pred_dense: np.ndarray) -> VoxelGrid:
    """Full-traversal merge comparator: visits every voxel of a dense
    predicted-occupancy array, O(N) in the grid size.

    Produces the same result as query_update for an equivalent prediction.
    """
    if pred_dense.shape != grid.dims:
        raise ValueError(f"dense prediction shape {pred_dense.shape} != grid dims {grid.dims}")
    g = grid.copy()
    eligible = (g.occ != Occupancy.OCCUPIED) & (pred_dense != 0)
    g.occ = np.where(eligible, np.uint8(Occupancy.OCCUPIED), g.occ)
    g.src = np.where(eligible, np.uint8(Source.PREDICTED), g.src)
    return g

from .grid import Occupancy, Source, VoxelState, VoxelGrid
from .scan import ScanResult, integrate_scan
from .update import QueryUpdateResult, query_update, naive_merge_update
from .esdf import EsdfGrid, DistanceSample, build_esdf, sample_distance
from .gridfile import save_grid, load_grid

__all__ = [
    "Occupancy",
    "Source",
    "VoxelState",
    "VoxelGrid",
    "ScanResult",
    "integrate_scan",
    "QueryUpdateResult",
    "query_update",
    "naive_merge_update",
    "EsdfGrid",
    "DistanceSample",
    "build_esdf",
    "sample_distance",
    "save_grid",
    "load_grid",
]

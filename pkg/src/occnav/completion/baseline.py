"""Deterministic stand-in predictors so the planner is testable without a
trained model."""

from dataclasses import dataclass, field

import numpy as np

from ..mapping.grid import Occupancy, Source, VoxelGrid


@dataclass
class PredictedOccupancy:
    """Predicted-occupied voxel coordinates with per-voxel class ids.

    Internally array-backed for speed; `occupied` and `semantics` expose the
    set/dict views the rest of the API works with.
    """

    coords: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.int64))
    classes: np.ndarray = field(default_factory=lambda: np.zeros((0,), dtype=np.int16))

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.int64).reshape(-1, 3)
        self.classes = np.asarray(self.classes, dtype=np.int16).reshape(-1)
        if self.classes.shape[0] != self.coords.shape[0]:
            raise ValueError("coords and classes must have equal length")
        # canonical order makes equality and change detection cheap
        if self.coords.shape[0]:
            order = np.lexsort((self.coords[:, 2], self.coords[:, 1], self.coords[:, 0]))
            self.coords = self.coords[order]
            self.classes = self.classes[order]

    @staticmethod
    def from_sets(occupied, semantics=None) -> "PredictedOccupancy":
        semantics = semantics or {}
        unknown = set(semantics) - set(occupied)
        if unknown:
            raise ValueError(f"semantics keys not in occupied set: {sorted(unknown)[:3]}")
        coords = np.array(sorted(occupied), dtype=np.int64).reshape(-1, 3)
        classes = np.array([semantics.get(tuple(c), -1) for c in coords], dtype=np.int16)
        return PredictedOccupancy(coords, classes)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self.coords, self.classes

    @property
    def occupied(self) -> set[tuple[int, int, int]]:
        return {tuple(int(v) for v in c) for c in self.coords}

    @property
    def semantics(self) -> dict[tuple[int, int, int], int]:
        return {
            tuple(int(v) for v in c): int(k)
            for c, k in zip(self.coords, self.classes)
            if k >= 0
        }

    def __len__(self) -> int:
        return self.coords.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PredictedOccupancy):
            return NotImplemented
        return np.array_equal(self.coords, other.coords) and np.array_equal(self.classes, other.classes)


_SHIFTS = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))


def baseline_predictor(scan: VoxelGrid, strategy: str = "none",
                       dilation_radius: int = 1) -> PredictedOccupancy:
    """`none` predicts nothing; `frontier_extend` marks unknown voxels within
    `dilation_radius` 6-connected steps of an occupied voxel as predicted
    occupied, carrying the class of the occupied seed they grew from."""
    if strategy == "none":
        return PredictedOccupancy()
    if strategy != "frontier_extend":
        raise ValueError(f"unknown baseline strategy {strategy!r}")

    occupied = scan.occ == Occupancy.OCCUPIED
    unknown = scan.occ == Occupancy.UNKNOWN

    region = occupied.copy()
    labels = np.where(occupied, scan.cls, np.int16(-2))  # -2 = not reached
    for _ in range(dilation_radius):
        grown = region.copy()
        new_labels = labels.copy()
        for dx, dy, dz in _SHIFTS:
            shifted = _shift3(region, dx, dy, dz)
            shifted_lab = _shift3(labels, dx, dy, dz, fill=-2)
            fresh = shifted & ~grown & unknown
            grown |= fresh
            new_labels = np.where(fresh, shifted_lab, new_labels)
        region = grown
        labels = new_labels

    pred_mask = region & unknown
    coords = np.argwhere(pred_mask)
    classes = labels[pred_mask[...]] if coords.shape[0] else np.zeros((0,), dtype=np.int16)
    classes = np.where(classes < 0, -1, classes).astype(np.int16)
    return PredictedOccupancy(coords, classes)


def _shift3(a: np.ndarray, dx: int, dy: int, dz: int, fill=False) -> np.ndarray:
    out = np.full_like(a, fill)
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    for axis, d in enumerate((dx, dy, dz)):
        if d > 0:
            src[axis] = slice(0, a.shape[axis] - d)
            dst[axis] = slice(d, a.shape[axis])
        elif d < 0:
            src[axis] = slice(-d, a.shape[axis])
            dst[axis] = slice(0, a.shape[axis] + d)
    out[tuple(dst)] = a[tuple(src)]
    return out

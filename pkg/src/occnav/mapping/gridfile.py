"""Text grid file: human-readable header plus run-length-encoded states.

Format (version 1):

    voxelgrid v1
    dims NX NY NZ
    resolution R
    origin X Y Z
    cells
    <count><token> <count><token> ...   (x-major linear order, wrapped lines)

Tokens: `u` unknown, `f` free, `o` occupied. Occupied tokens carry the class
and source, e.g. `o2s` = occupied, class 2, scanned; `o-1p` = occupied, no
class, predicted. Free carries source: `fs` scanned free, plain `f` untouched.
"""

import re

import numpy as np

from .grid import Occupancy, Source, VoxelGrid

_TOKEN_RE = re.compile(r"(\d+)(u|fs|f|o(-?\d+)(s|p|n))")


def _token_for(occ: int, cls: int, src: int) -> str:
    if occ == Occupancy.UNKNOWN:
        return "u"
    if occ == Occupancy.FREE:
        return "fs" if src == Source.SCANNED else "f"
    s = {Source.NONE: "n", Source.SCANNED: "s", Source.PREDICTED: "p"}[Source(src)]
    return f"o{cls}{s}"


def save_grid(grid: VoxelGrid, path) -> None:
    occ = grid.occ.reshape(-1)
    cls = grid.cls.reshape(-1)
    src = grid.src.reshape(-1)

    tokens: list[str] = []
    n = occ.shape[0]
    i = 0
    while i < n:
        tok = _token_for(occ[i], cls[i], src[i])
        j = i + 1
        while j < n and _token_for(occ[j], cls[j], src[j]) == tok:
            j += 1
        tokens.append(f"{j - i}{tok}")
        i = j

    with open(path, "w") as fh:
        fh.write("voxelgrid v1\n")
        fh.write(f"dims {grid.dims[0]} {grid.dims[1]} {grid.dims[2]}\n")
        fh.write(f"resolution {grid.resolution!r}\n")
        fh.write(f"origin {grid.origin[0]!r} {grid.origin[1]!r} {grid.origin[2]!r}\n")
        fh.write("cells\n")
        for k in range(0, len(tokens), 16):
            fh.write(" ".join(tokens[k:k + 16]) + "\n")


class GridFileError(ValueError):
    pass


def load_grid(path) -> VoxelGrid:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "voxelgrid v1":
        raise GridFileError(f"{path}: not a voxelgrid v1 file (line 1)")

    header: dict[str, list[str]] = {}
    body_start = None
    for ln, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "cells":
            body_start = ln
            break
        header[parts[0]] = parts[1:]
    if body_start is None:
        raise GridFileError(f"{path}: missing 'cells' section")
    for key in ("dims", "resolution", "origin"):
        if key not in header:
            raise GridFileError(f"{path}: missing header field {key!r}")

    dims = tuple(int(v) for v in header["dims"])
    grid = VoxelGrid(dims, float(header["resolution"][0]),
                     tuple(float(v) for v in header["origin"]))

    occ = np.zeros(np.prod(dims), dtype=np.uint8)
    cls = np.full(np.prod(dims), -1, dtype=np.int16)
    src = np.zeros(np.prod(dims), dtype=np.uint8)

    pos = 0
    for ln, line in enumerate(lines[body_start:], start=body_start + 1):
        for tok in line.split():
            m = _TOKEN_RE.fullmatch(tok)
            if m is None:
                raise GridFileError(f"{path}:{ln}: bad token {tok!r}")
            count = int(m.group(1))
            kind = m.group(2)
            if pos + count > occ.shape[0]:
                raise GridFileError(f"{path}:{ln}: runs exceed grid size")
            sl = slice(pos, pos + count)
            if kind == "u":
                pass
            elif kind in ("f", "fs"):
                occ[sl] = Occupancy.FREE
                if kind == "fs":
                    src[sl] = Source.SCANNED
            else:
                occ[sl] = Occupancy.OCCUPIED
                cls[sl] = int(m.group(3))
                src[sl] = {"n": Source.NONE, "s": Source.SCANNED, "p": Source.PREDICTED}[m.group(4)]
            pos += count

    if pos != occ.shape[0]:
        raise GridFileError(f"{path}: runs cover {pos} voxels, expected {occ.shape[0]}")

    grid.occ = occ.reshape(dims)
    grid.cls = cls.reshape(dims)
    grid.src = src.reshape(dims)
    return grid

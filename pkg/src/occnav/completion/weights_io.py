"""Flat binary model-weight files.

Layout (little-endian): magic b"SCON", version u32, layer count u32, then per
layer: name length u32, name bytes, ndim u32, dims u32 x ndim, f32 data.
Layer names are sorted for byte-stable output.
"""

import struct

import numpy as np

from .model import CompletionModel

MAGIC = b"SCON"
VERSION = 1


class WeightsFileError(ValueError):
    pass


def save_weights(model: CompletionModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(model.params) + 1))
        # pseudo-layer carrying grid dims and class count
        _write_layer(fh, "__meta__", np.array(
            [*model.grid_dims, model.n_classes], dtype=np.float64))
        for name in sorted(model.params):
            _write_layer(fh, name, model.params[name])


def _write_layer(fh, name: str, arr: np.ndarray) -> None:
    nb = name.encode()
    fh.write(struct.pack("<I", len(nb)))
    fh.write(nb)
    fh.write(struct.pack("<I", arr.ndim))
    fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    fh.write(arr.astype("<f4").tobytes())


def load_weights(path) -> CompletionModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise WeightsFileError(f"{path}: bad magic {data[:4]!r}")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise WeightsFileError(f"{path}: unsupported weights version {version}")

    off = 12
    layers: dict[str, np.ndarray] = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<I", data, off)
        off += 4
        name = data[off:off + nlen].decode()
        off += nlen
        (ndim,) = struct.unpack_from("<I", data, off)
        off += 4
        shape = struct.unpack_from(f"<{ndim}I", data, off)
        off += 4 * ndim
        n = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=off).astype(np.float64)
        off += 4 * n
        layers[name] = arr.reshape(shape)

    if "__meta__" not in layers:
        raise WeightsFileError(f"{path}: missing meta layer")
    meta = layers.pop("__meta__")
    nx, ny, nz, n_classes = (int(v) for v in meta)
    return CompletionModel(grid_dims=(nx, ny, nz), n_classes=n_classes, params=layers)

"""Numba-compiled hot loops: ray casting and free-space traversal.

Both kernels walk the exact voxel traversal (Amanatides-Woo); the pure-shape
work around them stays in numpy. Compiled objects are cached on disk, so the
first call per environment pays the JIT cost once.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def raycast_kernel(occ, origin, dirs, res, gx, gy, gz, max_range):
    """First-occupied-voxel intersection per ray.

    Returns (hit_t, hit_exit, hit_vox): entry/exit distance of the hit voxel
    (inf when the ray sees nothing in range) and its coords (-1 otherwise).
    """
    n = dirs.shape[0]
    nx, ny, nz = occ.shape
    hit_t = np.full(n, np.inf)
    hit_exit = np.full(n, np.inf)
    hit_vox = np.full((n, 3), -1, dtype=np.int64)

    for r in range(n):
        dx, dy, dz = dirs[r, 0], dirs[r, 1], dirs[r, 2]
        ix = int(np.floor((origin[0] - gx) / res))
        iy = int(np.floor((origin[1] - gy) / res))
        iz = int(np.floor((origin[2] - gz) / res))

        sx = 1 if dx > 0 else (-1 if dx < 0 else 0)
        sy = 1 if dy > 0 else (-1 if dy < 0 else 0)
        sz = 1 if dz > 0 else (-1 if dz < 0 else 0)

        big = 1e30
        tmx = ((gx + (ix + (1 if sx > 0 else 0)) * res) - origin[0]) / dx if dx != 0 else big
        tmy = ((gy + (iy + (1 if sy > 0 else 0)) * res) - origin[1]) / dy if dy != 0 else big
        tmz = ((gz + (iz + (1 if sz > 0 else 0)) * res) - origin[2]) / dz if dz != 0 else big
        tdx = res / abs(dx) if dx != 0 else big
        tdy = res / abs(dy) if dy != 0 else big
        tdz = res / abs(dz) if dz != 0 else big

        while True:
            # advance to the next voxel along the smallest boundary crossing
            if tmx <= tmy and tmx <= tmz:
                t_next = tmx
                ix += sx
                tmx += tdx
            elif tmy <= tmz:
                t_next = tmy
                iy += sy
                tmy += tdy
            else:
                t_next = tmz
                iz += sz
                tmz += tdz
            if t_next > max_range:
                break
            if ix < 0 or ix >= nx or iy < 0 or iy >= ny or iz < 0 or iz >= nz:
                break
            if occ[ix, iy, iz] == 2:
                hit_t[r] = t_next
                e = tmx
                if tmy < e:
                    e = tmy
                if tmz < e:
                    e = tmz
                hit_exit[r] = e
                hit_vox[r, 0] = ix
                hit_vox[r, 1] = iy
                hit_vox[r, 2] = iz
                break
    return hit_t, hit_exit, hit_vox


@njit(cache=True)
def traverse_kernel(origin, endpoints, t_limits, res, gx, gy, gz, nx, ny, nz):
    """All voxels entered strictly before each ray's t_limit (start voxel
    included once per ray). Returns a flat (m, 3) coord array."""
    n = endpoints.shape[0]
    max_len = int(3 * (nx + ny + nz)) + 8
    out = np.empty((n * max_len, 3), dtype=np.int64)
    count = 0

    for r in range(n):
        ex = endpoints[r, 0] - origin[0]
        ey = endpoints[r, 1] - origin[1]
        ez = endpoints[r, 2] - origin[2]
        norm = np.sqrt(ex * ex + ey * ey + ez * ez)
        t_lim = t_limits[r]
        if norm < 1e-12 or t_lim <= 0:
            continue
        dx, dy, dz = ex / norm, ey / norm, ez / norm

        ix = int(np.floor((origin[0] - gx) / res))
        iy = int(np.floor((origin[1] - gy) / res))
        iz = int(np.floor((origin[2] - gz) / res))
        if 0 <= ix < nx and 0 <= iy < ny and 0 <= iz < nz:
            out[count, 0] = ix
            out[count, 1] = iy
            out[count, 2] = iz
            count += 1

        sx = 1 if dx > 0 else (-1 if dx < 0 else 0)
        sy = 1 if dy > 0 else (-1 if dy < 0 else 0)
        sz = 1 if dz > 0 else (-1 if dz < 0 else 0)

        big = 1e30
        tmx = ((gx + (ix + (1 if sx > 0 else 0)) * res) - origin[0]) / dx if dx != 0 else big
        tmy = ((gy + (iy + (1 if sy > 0 else 0)) * res) - origin[1]) / dy if dy != 0 else big
        tmz = ((gz + (iz + (1 if sz > 0 else 0)) * res) - origin[2]) / dz if dz != 0 else big
        tdx = res / abs(dx) if dx != 0 else big
        tdy = res / abs(dy) if dy != 0 else big
        tdz = res / abs(dz) if dz != 0 else big

        while True:
            if tmx <= tmy and tmx <= tmz:
                t_next = tmx
                ix += sx
                tmx += tdx
            elif tmy <= tmz:
                t_next = tmy
                iy += sy
                tmy += tdy
            else:
                t_next = tmz
                iz += sz
                tmz += tdz
            if t_next >= t_lim:
                break
            if 0 <= ix < nx and 0 <= iy < ny and 0 <= iz < nz:
                out[count, 0] = ix
                out[count, 1] = iy
                out[count, 2] = iz
                count += 1
    return out[:count]

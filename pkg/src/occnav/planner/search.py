"""Energy-aware search over the mode-augmented voxel graph.

Nodes are (voxel, mode) with mode ground or aerial. Ground edges are the
8 XY neighbors at the ground level (the cell and the cell above it must be
non-obstacle, robot height one voxel plus one voxel of headroom); aerial
edges are the 26 neighbors of any non-obstacle cell. Mode switches happen
in place, only at ground level, and cost the energy model's transition
penalty. Edge cost is power(mode) * time + w_time * time with time =
distance / v_max, so the search trades joules against seconds.

A* with the admissible straight-line lower bound (cheapest per-meter rate
is driving) returns the same costs as plain Dijkstra.
"""

import heapq
from dataclasses import dataclass

import numpy as np

from ..mapping.esdf import EsdfGrid
from ..mapping.grid import Occupancy, VoxelGrid
from .energy import EnergyModel

GROUND, AERIAL = 0, 1
_MODE_NAMES = ("ground", "aerial")


@dataclass
class SearchConfig:
    v_max: float = 2.5
    w_time: float = 50.0            # joule-equivalents per second
    d_clear: float = 0.5            # clearance gate when an ESDF is supplied
    ground_z_index: int = 1         # voxel layer the robot drives in
    unknown_is: str = "free"        # planning stance on unknown voxels
    start_mode: str = "auto"
    transition_time: float = 0.0    # transitions cost energy, not time


@dataclass
class HybridPath:
    waypoints: list                  # [(np.ndarray point, "ground"/"aerial")]
    est_time: float
    est_energy: float
    cost: float
    _v_max: float = 2.5

    def segments(self):
        """(mode, duration) per movement edge; in-place mode switches are
        zero-duration and excluded."""
        out = []
        for (p0, m0), (p1, m1) in zip(self.waypoints, self.waypoints[1:]):
            if m0 != m1:
                continue
            d = float(np.linalg.norm(p1 - p0))
            if d > 0:
                out.append((m0, d / self._v_max))
        return out

    def transition_count(self) -> int:
        return sum(1 for (_, m0), (_, m1) in zip(self.waypoints, self.waypoints[1:]) if m0 != m1)


def traversable_masks(grid: VoxelGrid, cfg: SearchConfig, esdf: EsdfGrid | None):
    """(ground_ok[x, y], aerial_ok[x, y, z]) traversability arrays."""
    if cfg.unknown_is == "free":
        cell_ok = grid.occ != Occupancy.OCCUPIED
    elif cfg.unknown_is == "occupied":
        cell_ok = grid.occ == Occupancy.FREE
    else:
        raise ValueError(f"unknown_is must be 'free' or 'occupied', got {cfg.unknown_is!r}")

    if esdf is not None:
        clear = esdf.distance >= cfg.d_clear
    else:
        clear = np.ones(grid.dims, dtype=bool)

    aerial_ok = cell_ok & clear

    zg = cfg.ground_z_index
    nz = grid.dims[2]
    if not (0 <= zg < nz):
        raise ValueError(f"ground_z_index {zg} outside grid z range [0, {nz})")
    above = min(zg + 1, nz - 1)
    ground_ok = cell_ok[:, :, zg] & cell_ok[:, :, above] & clear[:, :, zg]
    return ground_ok, aerial_ok


_GROUND_STEPS = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)]
_AERIAL_STEPS = [
    (dx, dy, dz)
    for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)
    if (dx, dy, dz) != (0, 0, 0)
]


def search_hybrid(grid: VoxelGrid, start, goal, energy: EnergyModel,
                  cfg: SearchConfig | None = None,
                  esdf: EsdfGrid | None = None) -> HybridPath | None:
    """Minimum-cost hybrid path between world points, or None if unreachable.

    The start cell is always allowed as a departure point even if it fails
    the clearance gate (the robot may legitimately find itself somewhere
    tight); every other cell on the path satisfies the gate.
    """
    cfg = cfg or SearchConfig()
    start = np.asarray(start, dtype=np.float64)
    goal = np.asarray(goal, dtype=np.float64)
    s_cell = grid.world_to_voxel(start)
    g_cell = grid.world_to_voxel(goal)
    for name, cell in (("start", s_cell), ("goal", g_cell)):
        if not grid.in_bounds(cell):
            raise ValueError(f"{name} {cell} outside grid dims {grid.dims}")
    if grid.occ[s_cell] == Occupancy.OCCUPIED:
        raise ValueError(f"start cell {s_cell} is occupied")

    ground_ok, aerial_ok = traversable_masks(grid, cfg, esdf)
    res = grid.resolution
    zg = cfg.ground_z_index
    nx, ny, nz = grid.dims

    rate_ground = (energy.power_ground + cfg.w_time) / cfg.v_max   # J-equiv per meter
    rate_fly = (energy.power_fly + cfg.w_time) / cfg.v_max
    trans_cost = energy.transition_cost + cfg.w_time * cfg.transition_time

    def node_id(x, y, z, mode):
        return (((x * ny) + y) * nz + z) * 2 + mode

    if cfg.start_mode == "auto":
        start_mode = GROUND if (s_cell[2] == zg and ground_ok[s_cell[0], s_cell[1]]) else AERIAL
    elif cfg.start_mode in _MODE_NAMES:
        start_mode = _MODE_NAMES.index(cfg.start_mode)
    else:
        raise ValueError(f"bad start_mode {cfg.start_mode!r}")

    sx, sy, sz = s_cell
    if start_mode == GROUND:
        sz = zg
    gx, gy, gz_cell = g_cell

    goal_ids = {node_id(gx, gy, gz_cell, GROUND), node_id(gx, gy, gz_cell, AERIAL)}
    if g_cell[2] == zg:
        goal_ids.add(node_id(gx, gy, zg, GROUND))

    # admissible lower bound: everything moves at least at the driving rate
    xs = np.arange(nx)[:, None, None]
    ys = np.arange(ny)[None, :, None]
    zs = np.arange(nz)[None, None, :]
    h_grid = (np.sqrt((xs - gx) ** 2 + (ys - gy) ** 2 + (zs - gz_cell) ** 2)
              * (res * rate_ground)).ravel()

    n_cells = nx * ny * nz
    dist = np.full(2 * n_cells, np.inf)
    parent = np.full(2 * n_cells, -1, dtype=np.int64)
    closed = np.zeros(2 * n_cells, dtype=bool)

    start_id = node_id(sx, sy, sz, start_mode)
    dist[start_id] = 0.0
    pq = [(h_grid[start_id >> 1], 0, start_id)]
    counter = 1
    found = -1

    ground_steps = [(dx, dy, np.sqrt(dx * dx + dy * dy) * res * rate_ground)
                    for dx, dy in _GROUND_STEPS]
    aerial_steps = [(dx, dy, dz, np.sqrt(dx * dx + dy * dy + dz * dz) * res * rate_fly)
                    for dx, dy, dz in _AERIAL_STEPS]

    push = heapq.heappush
    pop = heapq.heappop

    while pq:
        f, _, nid = pop(pq)
        if closed[nid]:
            continue
        closed[nid] = True
        if nid in goal_ids:
            found = nid
            break
        d_here = dist[nid]
        mode = nid & 1
        rest = nid >> 1
        z = rest % nz
        xy = rest // nz
        y = xy % ny
        x = xy // ny

        if mode == GROUND:
            for dx, dy, cost in ground_steps:
                xx, yy = x + dx, y + dy
                if not (0 <= xx < nx and 0 <= yy < ny):
                    continue
                if not ground_ok[xx, yy]:
                    continue
                dst = (((xx * ny) + yy) * nz + zg) * 2
                nd = d_here + cost
                if nd < dist[dst] - 1e-15:
                    dist[dst] = nd
                    parent[dst] = nid
                    push(pq, (nd + h_grid[dst >> 1], counter, dst))
                    counter += 1
            # takeoff in place
            if aerial_ok[x, y, z] or nid == start_id:
                dst = (((x * ny) + y) * nz + z) * 2 + 1
                nd = d_here + trans_cost
                if nd < dist[dst] - 1e-15:
                    dist[dst] = nd
                    parent[dst] = nid
                    push(pq, (nd + h_grid[dst >> 1], counter, dst))
                    counter += 1
        else:
            for dx, dy, dz, cost in aerial_steps:
                xx, yy, zz = x + dx, y + dy, z + dz
                if not (0 <= xx < nx and 0 <= yy < ny and 0 <= zz < nz):
                    continue
                if not aerial_ok[xx, yy, zz]:
                    continue
                dst = (((xx * ny) + yy) * nz + zz) * 2 + 1
                nd = d_here + cost
                if nd < dist[dst] - 1e-15:
                    dist[dst] = nd
                    parent[dst] = nid
                    push(pq, (nd + h_grid[dst >> 1], counter, dst))
                    counter += 1
            # landing: only at ground level over a drivable cell
            if z == zg and ground_ok[x, y]:
                dst = (((x * ny) + y) * nz + zg) * 2
                nd = d_here + trans_cost
                if nd < dist[dst] - 1e-15:
                    dist[dst] = nd
                    parent[dst] = nid
                    push(pq, (nd + h_grid[dst >> 1], counter, dst))
                    counter += 1

    if found < 0:
        return None

    chain = [found]
    while parent[chain[-1]] >= 0:
        chain.append(int(parent[chain[-1]]))
    chain.reverse()

    waypoints = []
    for nid in chain:
        x, y, z, mode = _decode(nid, ny, nz)
        waypoints.append((grid.voxel_center((x, y, z)), _MODE_NAMES[mode]))

    est_time = 0.0
    for (p0, m0), (p1, m1) in zip(waypoints, waypoints[1:]):
        if m0 == m1:
            est_time += float(np.linalg.norm(p1 - p0)) / cfg.v_max
        else:
            est_time += cfg.transition_time
    path = HybridPath(waypoints=waypoints, est_time=est_time, est_energy=0.0,
                      cost=float(dist[found]))
    path._v_max = cfg.v_max
    from .energy import path_energy
    path.est_energy = path_energy(path, energy)
    return path


def _decode(nid: int, ny: int, nz: int):
    mode = nid & 1
    rest = nid >> 1
    z = rest % nz
    rest //= nz
    y = rest % ny
    x = rest // ny
    return x, y, z, mode

"""Deterministic occlusion worlds.

Two templates at the benchmark scale: a 20 x 20 x 5 m square room and a
30 x 3 x 5 m corridor, both seeded and regenerable bit-identically. Each
carries constructs that create occlusion hazards on purpose:

  corridor    -- full-width low hurdles that force a flight, each with a
                 landing-denial slab tucked against its far side (invisible
                 from the approach, discovered mid-flight without prediction)
  square_room -- an occluder wall beside the route with a jut obstacle
                 hidden past its far corner, plus random boxes

Feasibility of every generated world is verified by running the hybrid
search on the fully-known ground truth; infeasible draws are resampled.
"""

from dataclasses import dataclass, field

import numpy as np

from ..mapping.grid import Occupancy, Source, VoxelGrid
from ..mapping.gridfile import load_grid, save_grid
from ..rng import Xorshift128Plus

OBSTACLE_CLASS = 1
ROAD_CLASS = 2

TEMPLATES = ("square_room", "corridor")


@dataclass
class Box:
    lo: np.ndarray  # world min corner
    hi: np.ndarray  # world max corner
    class_id: int = OBSTACLE_CLASS

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=np.float64)
        self.hi = np.asarray(self.hi, dtype=np.float64)


@dataclass
class ScenarioWorld:
    template: str
    seed: int
    bounds: np.ndarray            # world size in meters
    ground_truth: VoxelGrid
    obstacles: list
    start: np.ndarray
    goal: np.ndarray

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=np.float64)
        self.start = np.asarray(self.start, dtype=np.float64)
        self.goal = np.asarray(self.goal, dtype=np.float64)


def _stamp_box(grid: VoxelGrid, box: Box) -> None:
    res = grid.resolution
    lo = np.clip(np.floor(box.lo / res).astype(int), 0, np.array(grid.dims) - 1)
    hi = np.clip(np.ceil(box.hi / res).astype(int), 1, np.array(grid.dims))
    sl = tuple(slice(int(a), int(b)) for a, b in zip(lo, hi))
    grid.occ[sl] = Occupancy.OCCUPIED
    grid.cls[sl] = box.class_id


def generate_world(template: str, seed: int, obstacle_count: int = 6,
                   resolution: float = 0.2, max_retries: int = 100) -> ScenarioWorld:
    if template not in TEMPLATES:
        raise ValueError(f"unknown template {template!r}; choose from {TEMPLATES}")
    if obstacle_count < 0:
        raise ValueError("obstacle_count must be >= 0")

    for attempt in range(max_retries):
        rng = Xorshift128Plus((seed << 8) ^ attempt)
        if template == "corridor":
            world = _corridor(seed, rng, obstacle_count, resolution)
        else:
            world = _square_room(seed, rng, obstacle_count, resolution)
        if _feasible(world):
            return world
    raise RuntimeError(
        f"could not generate a feasible {template} world for seed {seed} "
        f"after {max_retries} retries")


def _make_grid(bounds, resolution) -> VoxelGrid:
    dims = tuple(int(round(b / resolution)) for b in bounds)
    g = VoxelGrid(dims, resolution)
    g.occ[:] = Occupancy.FREE
    g.src[:] = Source.SCANNED
    return g


def _corridor(seed: int, rng: Xorshift128Plus, obstacle_count: int, res: float) -> ScenarioWorld:
    bounds = np.array([30.0, 3.0, 5.0])
    grid = _make_grid(bounds, res)
    obstacles: list[Box] = []

    start = np.array([1.2, 1.5, 0.3])
    goal = np.array([28.8, 1.5, 0.3])

    # hurdle constructs: full-width low wall plus a landing-denial slab
    # hugging its far side, a little lower so the approach never sees it
    n_hurdles = 1 + (rng.next_u64() % 2)
    xs = []
    for i in range(int(n_hurdles)):
        lo = 7.0 + 14.0 * i / n_hurdles
        hi = 7.0 + 14.0 * (i + 1) / n_hurdles - 3.0
        xs.append(rng.uniform(lo, hi))
    for xw in xs:
        h_wall = rng.uniform(0.9, 1.3)
        wall = Box([xw, 0.0, 0.0], [xw + 0.2, 3.0, h_wall])
        slab_depth = rng.uniform(0.3, 0.4)
        slab = Box([xw + 0.2, 0.0, 0.0], [xw + 0.2 + slab_depth, 3.0, h_wall - 0.2])
        obstacles += [wall, slab]

    # scattered side boxes for occlusion variety; keep a driving lane open
    for _ in range(obstacle_count):
        bx = rng.uniform(3.0, 26.0)
        if any(abs(bx - xw) < 2.2 for xw in xs):
            continue
        side = rng.next_u64() % 2
        w = rng.uniform(0.4, 0.9)
        d = rng.uniform(0.3, 0.6)
        h = rng.uniform(0.5, 1.6)
        y0 = 0.0 if side == 0 else 3.0 - w
        obstacles.append(Box([bx, y0, 0.0], [bx + d, y0 + w, h]))

    for b in obstacles:
        _stamp_box(grid, b)
    return ScenarioWorld("corridor", seed, bounds, grid, obstacles, start, goal)


def _square_room(seed: int, rng: Xorshift128Plus, obstacle_count: int, res: float) -> ScenarioWorld:
    bounds = np.array([20.0, 20.0, 5.0])
    grid = _make_grid(bounds, res)
    obstacles: list[Box] = []

    start = np.array([1.2, 10.0, 0.3])
    goal = np.array([18.8, 10.0, 0.3])

    # blind-corner construct: a tall wall across the route forces a swing
    # around its upper end; a jut tucked against its back side pokes into
    # the rounding lane and stays occluded until the robot commits
    xw = rng.uniform(7.5, 12.0)
    side = 1.0 if rng.next_u64() % 2 else -1.0
    y_corner = 10.0 + side * rng.uniform(0.3, 0.7)
    y_far = 10.0 - side * rng.uniform(4.5, 6.5)
    wall_th = 0.5
    wall = Box([xw, min(y_corner, y_far), 0.0],
               [xw + wall_th, max(y_corner, y_far), 2.6])
    jut_depth = rng.uniform(0.5, 0.8)
    jut_reach = rng.uniform(0.2, 0.7)              # past the corner, into the lane
    jy0 = y_corner - side * 0.8
    jy1 = y_corner + side * jut_reach
    jut = Box([xw + wall_th, min(jy0, jy1), 0.0],
              [xw + wall_th + jut_depth, max(jy0, jy1), 2.0])
    obstacles += [wall, jut]

    margin = 2.0
    for _ in range(obstacle_count):
        bx = rng.uniform(2.5, 17.5)
        by = rng.uniform(1.0, 19.0)
        if np.hypot(bx - start[0], by - start[1]) < margin:
            continue
        if np.hypot(bx - goal[0], by - goal[1]) < margin:
            continue
        if xw - 1.5 < bx < xw + 2.5 and abs(by - 10.0) < 4.0:
            continue
        w = rng.uniform(0.4, 1.4)
        d = rng.uniform(0.4, 1.4)
        h = rng.uniform(0.6, 2.4)
        obstacles.append(Box([bx, by, 0.0], [min(bx + d, 20.0), min(by + w, 20.0), h]))

    for b in obstacles:
        _stamp_box(grid, b)
    return ScenarioWorld("square_room", seed, bounds, grid, obstacles, start, goal)


def _feasible(world: ScenarioWorld) -> bool:
    from ..planner.pipeline import PlannerConfig, search_on_map

    try:
        path = search_on_map(world.ground_truth, world.start, world.goal,
                             PlannerConfig())
    except ValueError:
        return False
    return path is not None


# -- world files -------------------------------------------------------------

def save_world(world: ScenarioWorld, path) -> None:
    import io

    with open(path, "w") as fh:
        fh.write("world v1\n")
        fh.write(f"template {world.template}\n")
        fh.write(f"seed {world.seed}\n")
        fh.write(f"bounds {world.bounds[0]!r} {world.bounds[1]!r} {world.bounds[2]!r}\n")
        fh.write(f"start {world.start[0]!r} {world.start[1]!r} {world.start[2]!r}\n")
        fh.write(f"goal {world.goal[0]!r} {world.goal[1]!r} {world.goal[2]!r}\n")
        fh.write(f"obstacles {len(world.obstacles)}\n")
        for b in world.obstacles:
            vals = " ".join(repr(float(v)) for v in (*b.lo, *b.hi))
            fh.write(f"box {vals} {b.class_id}\n")
        buf = io.StringIO()
        _write_grid_into(world.ground_truth, buf)
        fh.write(buf.getvalue())


def _write_grid_into(grid, buf) -> None:
    import tempfile, os

    with tempfile.NamedTemporaryFile("r", suffix=".grid", delete=False) as tmp:
        name = tmp.name
    try:
        save_grid(grid, name)
        with open(name) as fh:
            buf.write(fh.read())
    finally:
        os.unlink(name)


class WorldFileError(ValueError):
    pass


def load_world(path) -> ScenarioWorld:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != "world v1":
        raise WorldFileError(f"{path}: not a world v1 file")

    meta: dict[str, list[str]] = {}
    obstacles: list[Box] = []
    grid_start = None
    i = 1
    while i < len(lines):
        parts = lines[i].split()
        if not parts:
            i += 1
            continue
        if parts[0] == "voxelgrid":
            grid_start = i
            break
        if parts[0] == "box":
            vals = [float(v) for v in parts[1:7]]
            obstacles.append(Box(vals[:3], vals[3:6], int(parts[7])))
        else:
            meta[parts[0]] = parts[1:]
        i += 1
    if grid_start is None:
        raise WorldFileError(f"{path}: missing voxelgrid section")

    import io, tempfile, os
    with tempfile.NamedTemporaryFile("w", suffix=".grid", delete=False) as tmp:
        tmp.write("\n".join(lines[grid_start:]) + "\n")
        name = tmp.name
    try:
        grid = load_grid(name)
    finally:
        os.unlink(name)

    return ScenarioWorld(
        template=meta["template"][0],
        seed=int(meta["seed"][0]),
        bounds=np.array([float(v) for v in meta["bounds"]]),
        ground_truth=grid,
        obstacles=obstacles,
        start=np.array([float(v) for v in meta["start"]]),
        goal=np.array([float(v) for v in meta["goal"]]),
    )

"""Full planning pipeline: prediction update -> ESDF -> hybrid search ->
per-segment B-spline fit -> gradient refinement -> setpoint selection."""

from dataclasses import dataclass, field, replace

import numpy as np

from ..mapping.esdf import EsdfGrid, build_esdf, sample_distance_batch
from ..mapping.grid import Occupancy, VoxelGrid
from ..mapping.update import query_update
from ..trajectory.bspline import AERIAL, GROUND, BSplineTrajectory, evaluate, evaluate_many
from ..trajectory.costs import CostWeights, total_objective
from ..trajectory.optimizer import OptimizeOptions, optimize
from .energy import EnergyModel
from .search import HybridPath, SearchConfig, search_hybrid


@dataclass
class PlannerConfig:
    weights: CostWeights = field(default_factory=CostWeights)
    energy: EnergyModel = field(default_factory=EnergyModel)
    search: SearchConfig = field(default_factory=SearchConfig)
    truncation: float = 2.0
    unknown_is: str = "free"
    search_coarsen: int = 2           # search-grid stride over the map grid
    robot_center_z: float = 0.3       # drive height used for ground segments
    cruise_fraction: float = 0.75     # initial spline speed vs v_max
    waypoint_stride: int = 2          # keep every k-th search waypoint
    collision_retries: int = 2        # lambda_c escalations before fallback
    clearance_margin: float = 0.06    # extra clearance targeted by the cost
    speed_table: dict = field(default_factory=lambda: {2: 1.25})  # class -> multiplier
    lookahead: float = 0.1            # setpoint lookahead seconds
    optimize_options: OptimizeOptions = field(
        default_factory=lambda: OptimizeOptions(max_iters=60, grad_tol=1e-4))


@dataclass
class Setpoint:
    position: np.ndarray
    velocity: np.ndarray
    mode: str
    speed_scale: float = 1.0


@dataclass
class PlanResult:
    segments: list                    # ordered BSplineTrajectory list
    path: HybridPath
    grid: VoxelGrid                   # map after the prediction update
    esdf: EsdfGrid
    clearance_ok: bool
    min_clearance: float

    @property
    def ground_trajectories(self) -> list:
        return [t for t in self.segments if t.mode == GROUND]

    @property
    def aerial_trajectories(self) -> list:
        return [t for t in self.segments if t.mode == AERIAL]

    @property
    def duration(self) -> float:
        return sum(t.duration for t in self.segments)


def coarsen_grid(grid: VoxelGrid, factor: int) -> VoxelGrid:
    """Block-reduce a grid for search: a coarse cell is occupied when any
    fine cell in its block is, unknown when any is unknown, else free."""
    if factor <= 1:
        return grid
    nx, ny, nz = grid.dims
    cx, cy, cz = (-(-nx // factor), -(-ny // factor), -(-nz // factor))
    occ = np.zeros((cx * factor, cy * factor, cz * factor), dtype=np.uint8)
    occ[:nx, :ny, :nz] = grid.occ
    blocks = occ.reshape(cx, factor, cy, factor, cz, factor)
    any_occ = (blocks == Occupancy.OCCUPIED).any(axis=(1, 3, 5))
    any_unk = (blocks == Occupancy.UNKNOWN).any(axis=(1, 3, 5))

    out = VoxelGrid((cx, cy, cz), grid.resolution * factor, grid.origin)
    out.occ = np.where(any_occ, np.uint8(Occupancy.OCCUPIED),
                       np.where(any_unk, np.uint8(Occupancy.UNKNOWN),
                                np.uint8(Occupancy.FREE)))
    return out


def search_on_map(grid: VoxelGrid, start, goal, cfg: PlannerConfig):
    """Hybrid search at the planner's (possibly coarsened) search scale."""
    coarse = coarsen_grid(grid, cfg.search_coarsen)
    esdf_c = build_esdf(coarse, cfg.truncation, cfg.unknown_is)
    scfg = replace(cfg.search,
                   ground_z_index=int(cfg.robot_center_z / coarse.resolution))
    return search_hybrid(coarse, start, goal, cfg.energy, scfg, esdf_c)


def plan(grid: VoxelGrid, pred, start, goal, cfg: PlannerConfig | None = None,
         start_velocity=None):
    """Returns a PlanResult, or None when the goal is unreachable on the
    updated map. `start_velocity` carries the robot's motion into the first
    trajectory segment so replans do not stop-and-go."""
    cfg = cfg or PlannerConfig()
    upd = query_update(grid, pred)
    esdf = build_esdf(upd.grid, cfg.truncation, cfg.unknown_is)
    path = search_on_map(upd.grid, start, goal, cfg)
    if path is None:
        return None

    segments = _fit_segments(path, start, goal, cfg, start_velocity)
    refined, clear_ok, min_clear = _refine_segments(segments, esdf, cfg)
    return PlanResult(
        segments=refined,
        path=path,
        grid=upd.grid,
        esdf=esdf,
        clearance_ok=clear_ok,
        min_clearance=min_clear,
    )


def _fit_segments(path: HybridPath, start, goal, cfg: PlannerConfig,
                  start_velocity=None):
    """Split the search path at mode changes and fit one uniform B-spline
    per contiguous run. Segment boundaries are padded degree times (start and
    end at rest on the boundary waypoint); when a start velocity is given the
    first segment's padding is tilted along it so the curve leaves the start
    point already moving."""
    start = np.asarray(start, dtype=np.float64)
    goal = np.asarray(goal, dtype=np.float64)

    runs: list[tuple[str, list[np.ndarray]]] = []
    for p, mode in path.waypoints:
        if not runs or runs[-1][0] != mode:
            runs.append((mode, [p]))
        else:
            runs[-1][1].append(p)

    # replace the global endpoints with the exact start/goal positions
    if runs:
        runs[0][1][0] = start.copy()
        runs[-1][1][-1] = goal.copy()

    degree = 3
    segments = []
    for seg_i, (mode, pts) in enumerate(runs):
        pts = _decimate(pts, cfg.waypoint_stride)
        arr = np.array(pts, dtype=np.float64)
        if mode == GROUND:
            ground_z = cfg.robot_center_z
            arr = arr[:, :2]
        else:
            ground_z = 0.0

        spacing = _mean_spacing(arr)
        v_cruise = max(cfg.search.v_max * cfg.cruise_fraction, 1e-3)
        dt = max(spacing / v_cruise, 0.05)

        body = arr
        head = np.repeat(arr[:1], degree, axis=0)
        if seg_i == 0 and start_velocity is not None:
            v = np.asarray(start_velocity, dtype=np.float64)[: arr.shape[1]]
            speed = float(np.linalg.norm(v))
            if speed > 0.05 and arr.shape[0] >= 2:
                # cubic uniform spline: control points arr0 + v*dt*(-1, 0, +1)
                # give position arr0 and velocity v at the segment start
                head = arr[0][None, :] + v[None, :] * dt * np.array([[-1.0], [0.0], [1.0]])
                body = arr[1:]
        padded = np.concatenate([head, body, np.repeat(arr[-1:], degree, axis=0)], axis=0)
        segments.append(BSplineTrajectory(padded, knot_interval=dt, degree=degree,
                                          mode=mode, ground_z=ground_z))
    return segments


def _decimate(pts, stride: int):
    if stride <= 1 or len(pts) <= 2:
        return list(pts)
    kept = list(pts[:-1:stride])
    kept.append(pts[-1])
    if len(kept) < 2:
        kept = [pts[0], pts[-1]]
    return kept


def _mean_spacing(arr: np.ndarray) -> float:
    if arr.shape[0] < 2:
        return 0.2
    d = np.linalg.norm(np.diff(arr, axis=0), axis=1)
    return float(max(d.mean(), 1e-3))


def _refine_segments(segments, esdf: EsdfGrid, cfg: PlannerConfig):
    refined = []
    all_ok = True
    min_clear = np.inf
    target = cfg.weights.d_clear
    for traj in segments:
        # optimize against a slightly inflated clearance so the hinge keeps
        # pushing a little past the hard requirement
        weights = replace(cfg.weights, d_clear=target + cfg.clearance_margin)
        best = traj
        best_clear = _min_clearance(traj, esdf)
        for attempt in range(cfg.collision_retries + 1):
            out, _, _ = optimize(traj, esdf, weights, cfg.optimize_options)
            c = _min_clearance(out, esdf)
            if c > best_clear:
                best, best_clear = out, c
            if c >= target - 1e-9:
                break
            weights = replace(weights, collision=weights.collision * 5.0)
        refined.append(best)
        min_clear = min(min_clear, best_clear)
        if best_clear < target - 1e-9:
            all_ok = False
    if not segments:
        min_clear = np.inf
    return refined, all_ok, float(min_clear)


def world_points_many(traj: BSplineTrajectory, ts: np.ndarray) -> np.ndarray:
    pts = evaluate_many(traj, ts, 0)
    if traj.dim == 2:
        pts = np.column_stack([pts, np.full(pts.shape[0], traj.ground_z)])
    return pts


def _min_clearance(traj: BSplineTrajectory, esdf: EsdfGrid, samples_per_span: int = 4) -> float:
    n_spans = traj.n_ctrl - traj.degree
    ts = np.linspace(0.0, traj.duration, max(2, n_spans * samples_per_span + 1))
    pts = world_points_many(traj, ts)
    dists, _, _ = sample_distance_batch(esdf, pts)
    return float(dists.min())


def speed_compensation(class_id, table: dict) -> float:
    """Speed multiplier for the semantic class under the setpoint; unknown or
    missing classes map to 1 (no compensation)."""
    if class_id is None:
        return 1.0
    scale = table.get(int(class_id), 1.0)
    return float(scale) if scale >= 1.0 else 1.0


def select_setpoint(segments, t_now: float, grid: VoxelGrid | None = None,
                    speed_table: dict | None = None, lookahead: float = 0.1) -> Setpoint:
    """Evaluate the active trajectory at t_now + lookahead.

    Beyond the total horizon the terminal point with zero velocity is
    returned. The speed scale comes from the semantic class of the voxel
    directly below the setpoint, when the map stores one.
    """
    if not segments:
        raise ValueError("no trajectory segments")
    t = t_now + lookahead
    if t < 0:
        t = 0.0

    remaining = t
    active = None
    for seg in segments:
        if remaining <= seg.duration:
            active = seg
            break
        remaining -= seg.duration

    if active is None:
        seg = segments[-1]
        pos = seg.world_point(seg.duration)
        return Setpoint(position=pos, velocity=np.zeros(3), mode=seg.mode,
                        speed_scale=_scale_at(pos, grid, speed_table))

    pos = active.world_point(remaining)
    vel = active.world_velocity(remaining)
    return Setpoint(position=pos, velocity=vel, mode=active.mode,
                    speed_scale=_scale_at(pos, grid, speed_table))


def _scale_at(pos: np.ndarray, grid: VoxelGrid | None, speed_table: dict | None) -> float:
    if grid is None or not speed_table:
        return 1.0
    below = pos - np.array([0.0, 0.0, grid.resolution])
    coord = grid.world_to_voxel(below)
    if not grid.in_bounds(coord):
        return 1.0
    state = grid.state_at(coord)
    return speed_compensation(state.class_id, speed_table)

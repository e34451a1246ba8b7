"""Closed-loop trial execution and the seeded benchmark harness.

One trial: sense -> integrate -> predict -> replan on relevant map change ->
follow setpoints kinematically, with collisions checked against ground truth
every step. Everything is deterministic given (template, seed, config).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..completion.baseline import PredictedOccupancy, baseline_predictor
from ..geometry import Pose
from ..mapping.esdf import build_esdf, sample_distance
from ..mapping.grid import VoxelGrid
from ..mapping.scan import integrate_scan
from ..planner.energy import path_energy
from ..planner.pipeline import PlannerConfig, plan, select_setpoint, world_points_many
from .sensor import SensorModel, sense
from .world import ScenarioWorld, generate_world


@dataclass
class TrialConfig:
    predictor: str = "none"              # "none" | "frontier_extend" | callable
    dilation_radius: int = 2
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    sensor: SensorModel = field(default_factory=SensorModel)
    dt: float = 0.05
    timeout: float = 120.0
    robot_radius: float = 0.3
    goal_tolerance: float = 0.3
    replan_radius: float = 3.0
    obstacle_count: int = 6

    def make_predictor(self):
        if callable(self.predictor):
            return self.predictor
        strategy = self.predictor
        radius = self.dilation_radius

        def predictor(grid: VoxelGrid) -> PredictedOccupancy:
            return baseline_predictor(grid, strategy, radius)

        return predictor


@dataclass
class TrialResult:
    success: bool
    reason: str
    travel_time: float
    path_length: float
    energy: float
    collision_count: int
    mode_breakdown: dict
    transitions: int
    replans: int
    seed: int = -1
    executed: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.success and self.collision_count:
            raise ValueError("a successful trial cannot have collisions")


def run_trial(world: ScenarioWorld, cfg: TrialConfig) -> TrialResult:
    gt_esdf = build_esdf(world.ground_truth, 2.0, "free")
    predictor = cfg.make_predictor()
    # the world box is physically closed: motion clamps to just inside it
    box_lo = world.ground_truth.origin + 1e-6
    box_hi = world.ground_truth.origin + world.ground_truth.world_size - 1e-6

    belief = VoxelGrid(world.ground_truth.dims, world.ground_truth.resolution,
                       world.ground_truth.origin)
    pos = world.start.copy()
    goal = world.goal.copy()
    yaw = math.atan2(goal[1] - pos[1], goal[0] - pos[0])
    pitch = 0.0
    v_max = cfg.planner.search.v_max

    sense_period = 1.0 / cfg.sensor.rate_hz
    next_sense = 0.0

    current_plan = None
    plan_t0 = 0.0
    pred = PredictedOccupancy()
    pending_change = None
    mode = "ground"

    energy_j = 0.0
    length_m = 0.0
    mode_seconds = {"ground": 0.0, "aerial": 0.0}
    transitions = 0
    replans = 0
    collision_count = 0
    executed: list[tuple[str, float]] = []

    t = 0.0
    reason = "timeout"
    success = False
    steps = int(round(cfg.timeout / cfg.dt))

    for _ in range(steps):
        # -- perception at the sensor rate --------------------------------
        if t + 1e-9 >= next_sense:
            next_sense += sense_period
            pose = Pose(pos, yaw=yaw, pitch=pitch)
            hits, classes = sense(world, pose, cfg.sensor)
            scan_res = integrate_scan(belief, pose, hits, cfg.sensor.max_range, classes)
            belief = scan_res.grid

            # only occupancy-relevant changes can invalidate a plan: unknown
            # voxels already plan as free, so plain free-space carving is noise
            changed = scan_res.changed
            new_occ = changed
            if changed.size:
                now_occ = belief.occ[changed[:, 0], changed[:, 1], changed[:, 2]]
                new_occ = changed[now_occ == 2]

            # rerun the predictor only when its inputs moved: new occupied
            # voxels anywhere, or a formerly-predicted voxel carved free
            rerun = new_occ.size > 0
            if not rerun and len(pred):
                pc, _ = pred.as_arrays()
                rerun = bool((belief.occ[pc[:, 0], pc[:, 1], pc[:, 2]] == 1).any())
            if rerun:
                new_pred = predictor(belief)
                if not (new_pred == pred):
                    pred_changed = _pred_diff(pred, new_pred)
                    new_occ = np.concatenate([new_occ, pred_changed], axis=0) \
                        if new_occ.size else pred_changed
                    pred = new_pred

            if current_plan is None or _near_plan(new_occ, belief, current_plan,
                                                  pos, goal, t - plan_t0,
                                                  cfg.replan_radius):
                # new obstacles only remove alternatives: a plan that still
                # clears them by d_clear stays optimal, so re-search only on
                # an actual conflict
                conflict_dist = cfg.planner.weights.d_clear + (
                    0.02 if mode == "aerial" else -0.05)
                if current_plan is not None and not _conflicts(
                        new_occ, belief, current_plan, pos, goal, t - plan_t0,
                        conflict_dist):
                    pass
                else:
                    vel = _current_velocity(current_plan, t - plan_t0) \
                        if current_plan is not None else None
                    result = plan(belief, pred, pos, goal, cfg.planner,
                                  start_velocity=vel)
                    replans += 1
                    if result is None:
                        reason = "unreachable"
                        break
                    current_plan = result
                    plan_t0 = t

        if current_plan is None:
            reason = "no plan"
            break

        # -- follow the active trajectory ----------------------------------
        sp = select_setpoint(current_plan.segments, t - plan_t0,
                             grid=current_plan.grid,
                             speed_table=cfg.planner.speed_table,
                             lookahead=cfg.planner.lookahead)
        if sp.mode != mode:
            transitions += 1
            energy_j += cfg.planner.energy.transition_cost
            mode = sp.mode

        delta = sp.position - pos
        dist = float(np.linalg.norm(delta))
        max_step = v_max * sp.speed_scale * cfg.dt
        if dist > 1e-12:
            step_vec = delta * min(1.0, max_step / dist)
            pos = np.clip(pos + step_vec, box_lo, box_hi)
            step_len = float(np.linalg.norm(step_vec))
            length_m += step_len
            if step_len > 1e-6:
                yaw = math.atan2(step_vec[1], step_vec[0])
                horiz = math.hypot(step_vec[0], step_vec[1])
                # the camera tilts with the direction of travel
                pitch = max(-0.8, min(0.8, math.atan2(step_vec[2], max(horiz, 1e-9))))

        energy_j += cfg.planner.energy.power(mode) * cfg.dt
        mode_seconds[mode] += cfg.dt
        executed.append((mode, cfg.dt))
        t += cfg.dt

        # -- ground-truth collision check ----------------------------------
        clearance = sample_distance(gt_esdf, pos).distance
        if clearance < cfg.robot_radius:
            collision_count += 1
            reason = "collision"
            break

        if float(np.linalg.norm(pos - goal)) <= cfg.goal_tolerance:
            success = True
            reason = "goal"
            break

    return TrialResult(
        success=success,
        reason=reason,
        travel_time=t,
        path_length=length_m,
        energy=energy_j,
        collision_count=collision_count,
        mode_breakdown=dict(mode_seconds),
        transitions=transitions,
        replans=replans,
        executed=executed,
    )


def _current_velocity(current_plan, t_plan: float):
    elapsed = max(0.0, t_plan)
    for seg in current_plan.segments:
        if elapsed <= seg.duration:
            return seg.world_velocity(elapsed)
        elapsed -= seg.duration
    return None


def _pred_diff(old: PredictedOccupancy, new: PredictedOccupancy) -> np.ndarray:
    """Coords present in exactly one of the two predictions."""
    a, _ = old.as_arrays()
    b, _ = new.as_arrays()
    if a.shape[0] == 0:
        return b.copy()
    if b.shape[0] == 0:
        return a.copy()
    av = {tuple(c) for c in a}
    bv = {tuple(c) for c in b}
    sym = sorted(av.symmetric_difference(bv))
    if not sym:
        return np.zeros((0, 3), dtype=np.int64)
    return np.array(sym, dtype=np.int64)


def _remaining_samples(current_plan, pos, goal, t_plan: float, step: float = 0.4) -> np.ndarray:
    pts = [np.asarray(pos, dtype=np.float64).reshape(1, 3)]
    elapsed = max(0.0, t_plan)
    for seg in current_plan.segments:
        if elapsed >= seg.duration:
            elapsed -= seg.duration
            continue
        ts = np.linspace(elapsed, seg.duration, max(2, int((seg.duration - elapsed) / step) + 1))
        pts.append(world_points_many(seg, ts))
        elapsed = 0.0
    pts.append(np.asarray(goal, dtype=np.float64).reshape(1, 3))
    return np.concatenate(pts, axis=0)


def _min_dist_to(changed: np.ndarray, belief: VoxelGrid, traj: np.ndarray) -> float:
    centers = belief.voxel_centers_array(changed)
    best = np.inf
    # chunked pairwise distance test to bound memory
    for i in range(0, centers.shape[0], 4096):
        block = centers[i:i + 4096]
        d2 = ((block[:, None, :] - traj[None, :, :]) ** 2).sum(axis=2)
        best = min(best, float(d2.min()))
    return np.sqrt(best)


def _near_plan(changed: np.ndarray, belief: VoxelGrid, current_plan, pos, goal,
               t_plan: float, radius: float) -> bool:
    """True when any changed voxel lies within `radius` meters of the
    remaining trajectory (sampled), triggering a replan."""
    if changed.size == 0:
        return False
    traj = _remaining_samples(current_plan, pos, goal, t_plan)
    return _min_dist_to(changed, belief, traj) < radius


def _conflicts(changed: np.ndarray, belief: VoxelGrid, current_plan, pos, goal,
               t_plan: float, conflict_dist: float) -> bool:
    """True when a changed voxel sits close enough to the remaining
    trajectory to violate its clearance (sampling slack included)."""
    if changed.size == 0:
        return False
    traj = _remaining_samples(current_plan, pos, goal, t_plan, step=0.1)
    return _min_dist_to(changed, belief, traj) < conflict_dist


@dataclass
class BenchmarkAggregate:
    template: str
    strategy: str
    trials: int
    success_rate: float
    mean_time: float
    mean_length: float
    mean_power: float
    total_energy: float
    total_time: float
    collisions: int

    def to_dict(self) -> dict:
        return {
            "template": self.template,
            "strategy": self.strategy,
            "trials": self.trials,
            "success_rate": self.success_rate,
            "mean_time": self.mean_time,
            "mean_length": self.mean_length,
            "mean_power": self.mean_power,
            "total_energy": self.total_energy,
            "total_time": self.total_time,
            "collisions": self.collisions,
        }


def run_benchmark(template: str, trials: int, cfg: TrialConfig,
                  seed_base: int = 0):
    """Runs seeds seed_base .. seed_base+trials-1 sequentially (determinism
    beats parallelism here) and aggregates. Returns (aggregate, results)."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    results: list[TrialResult] = []
    for i in range(trials):
        seed = seed_base + i
        world = generate_world(template, seed, cfg.obstacle_count)
        res = run_trial(world, cfg)
        res.seed = seed
        results.append(res)

    total_energy = sum(r.energy for r in results)
    total_time = sum(r.travel_time for r in results)
    agg = BenchmarkAggregate(
        template=template,
        strategy=cfg.predictor if isinstance(cfg.predictor, str) else "custom",
        trials=trials,
        success_rate=sum(r.success for r in results) / trials,
        mean_time=total_time / trials,
        mean_length=sum(r.path_length for r in results) / trials,
        mean_power=total_energy / total_time if total_time > 0 else 0.0,
        total_energy=total_energy,
        total_time=total_time,
        collisions=sum(r.collision_count for r in results),
    )
    return agg, results


def recomputed_energy(result: TrialResult, energy_model) -> float:
    """Energy re-derived from the executed (mode, dt) log; must equal the
    trial's accumulated bookkeeping."""
    return path_energy(result.executed, energy_model)

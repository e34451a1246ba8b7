"""Trajectory refinement cost terms with analytic gradients.

All terms are evaluated on the control points: squared second differences
for smoothness, hinge-squared clearance deficits against the distance field,
hinge-squared velocity/acceleration violations of the difference-spline
control values, and (ground mode only) a hinge-squared heading-change-per-
chord-length curvature penalty.
"""

from dataclasses import dataclass, field

import numpy as np

from ..mapping.esdf import EsdfGrid, sample_distance_batch
from .bspline import AERIAL, GROUND, BSplineTrajectory


@dataclass
class CostWeights:
    smooth: float = 1.0        # weight on the smoothness term
    collision: float = 10.0    # weight on the clearance term
    feasibility: float = 1.0   # weight on (velocity + acceleration) terms
    curvature: float = 5.0     # weight on the ground curvature term
    v_max: float = 2.5
    a_max: float = 3.0
    c_max: float = 2.0         # rad/m
    d_clear: float = 0.5       # meters

    def __post_init__(self):
        for name in ("smooth", "collision", "feasibility", "curvature"):
            if getattr(self, name) < 0:
                raise ValueError(f"weight {name} must be nonnegative")
        if self.v_max <= 0:
            raise ValueError("v_max must be positive")


@dataclass
class ObjectiveReport:
    f_smooth: float
    f_collision: float
    f_velocity: float
    f_acceleration: float
    f_curvature: float
    f_total: float
    gradient: np.ndarray
    out_of_bounds: int = 0
    skipped_curvature_terms: int = 0


def cost_smoothness(traj: BSplineTrajectory):
    """Sum of squared second differences over interior control points."""
    p = traj.control_points
    n = p.shape[0]
    grad = np.zeros_like(p)
    if n < 3:
        return 0.0, grad
    d2 = p[2:] - 2.0 * p[1:-1] + p[:-2]
    value = float(np.sum(d2 * d2))
    g = 2.0 * d2
    grad[2:] += g
    grad[1:-1] -= 2.0 * g
    grad[:-2] += g
    return value, grad


def cost_collision(traj: BSplineTrajectory, esdf: EsdfGrid, d_clear: float):
    """Hinge-squared clearance deficit of each control point against the
    distance field. Out-of-bounds points use the clamped field value (whose
    gradient vanishes along clamped axes) and are counted in the report."""
    p = traj.control_points
    if traj.dim == 2:
        world = np.column_stack([p, np.full(p.shape[0], traj.ground_z)])
    else:
        world = p
    dists, grads, clamped = sample_distance_batch(esdf, world)

    deficit = np.maximum(d_clear - dists, 0.0)
    value = float(np.sum(deficit * deficit))
    grad = (-2.0 * deficit)[:, None] * grads
    return value, grad[:, : traj.dim], int(np.count_nonzero(clamped))


def cost_limits(traj: BSplineTrajectory, v_max: float, a_max: float):
    """Hinge-squared violations of ||V_i||^2 <= v_max^2 and the analogous
    acceleration bound, on the difference-spline control values."""
    p = traj.control_points
    dt = traj.knot_interval
    grad_v = np.zeros_like(p)
    grad_a = np.zeros_like(p)

    v = np.diff(p, axis=0) / dt
    excess_v = np.maximum((v * v).sum(axis=1) - v_max * v_max, 0.0)
    f_v = float(np.sum(excess_v * excess_v))
    gv = (4.0 * excess_v)[:, None] * v / dt
    grad_v[1:] += gv
    grad_v[:-1] -= gv

    a = np.diff(v, axis=0) / dt
    excess_a = np.maximum((a * a).sum(axis=1) - a_max * a_max, 0.0)
    f_a = float(np.sum(excess_a * excess_a))
    ga = (4.0 * excess_a)[:, None] * a / (dt * dt)
    grad_a[2:] += ga
    grad_a[1:-1] -= 2.0 * ga
    grad_a[:-2] += ga

    return f_v, f_a, grad_v, grad_a


def cost_curvature(traj: BSplineTrajectory, c_max: float,
                   denominator: str = "prev"):
    """Ground-trajectory curvature penalty.

    At each interior control point the heading change between the incoming
    and outgoing chords (full-quadrant, wrapped into (-pi, pi]) is divided
    by a chord length -- the incoming chord by default, the outgoing one
    with denominator='next' (both agree on uniform spacing). Terms with a
    coincident chord are skipped and counted.
    """
    if traj.mode != GROUND:
        raise ValueError("curvature cost applies to ground trajectories only")
    if denominator not in ("prev", "next"):
        raise ValueError(f"denominator must be 'prev' or 'next', got {denominator!r}")

    p = traj.control_points
    n = p.shape[0]
    grad = np.zeros_like(p)
    value = 0.0
    skipped = 0

    deltas = np.diff(p, axis=0)              # delta[i] = p[i+1] - p[i]
    lengths = np.linalg.norm(deltas, axis=1)

    for i in range(1, n - 1):
        d_in = deltas[i - 1]                 # chord ending at p[i]
        d_out = deltas[i]                    # chord leaving p[i]
        s_in, s_out = lengths[i - 1], lengths[i]
        if s_in < 1e-12 or s_out < 1e-12:
            skipped += 1
            continue
        theta_in = np.arctan2(d_in[1], d_in[0])
        theta_out = np.arctan2(d_out[1], d_out[0])
        diff = theta_out - theta_in
        diff = (diff + np.pi) % (2.0 * np.pi) - np.pi  # wrap to (-pi, pi]
        if diff == -np.pi:
            diff = np.pi
        beta = abs(diff)
        s = s_in if denominator == "prev" else s_out
        curv = beta / s
        excess = curv - c_max
        if excess <= 0.0:
            continue
        value += excess * excess

        # d(beta)/d(theta_out) = sign(diff); d(theta)/d(delta) = (-dy, dx)/s^2
        sgn = 1.0 if diff >= 0 else -1.0
        dth_out = np.array([-d_out[1], d_out[0]]) / (s_out * s_out)
        dth_in = np.array([-d_in[1], d_in[0]]) / (s_in * s_in)
        dbeta_ddout = sgn * dth_out
        dbeta_ddin = -sgn * dth_in

        coeff = 2.0 * excess / s
        g_dout = coeff * dbeta_ddout
        g_din = coeff * dbeta_ddin
        # chord-length dependence of the denominator
        if denominator == "prev":
            g_din += (-2.0 * excess * beta / (s * s)) * (d_in / s_in)
        else:
            g_dout += (-2.0 * excess * beta / (s * s)) * (d_out / s_out)

        grad[i + 1] += g_dout
        grad[i] += g_din - g_dout
        grad[i - 1] -= g_din

    return float(value), grad, skipped


def total_objective(traj: BSplineTrajectory, esdf: EsdfGrid,
                    weights: CostWeights,
                    curvature_denominator: str = "prev") -> ObjectiveReport:
    """Weighted sum of all terms; the curvature term participates only for
    ground trajectories."""
    f_s, g_s = cost_smoothness(traj)
    f_c, g_c, oob = cost_collision(traj, esdf, weights.d_clear)
    f_v, f_a, g_v, g_a = cost_limits(traj, weights.v_max, weights.a_max)
    if traj.mode == GROUND:
        f_n, g_n, skipped = cost_curvature(traj, weights.c_max, curvature_denominator)
    else:
        f_n, g_n, skipped = 0.0, np.zeros_like(traj.control_points), 0

    f_total = (
        weights.smooth * f_s
        + weights.collision * f_c
        + weights.feasibility * (f_v + f_a)
        + weights.curvature * f_n
    )
    gradient = (
        weights.smooth * g_s
        + weights.collision * g_c
        + weights.feasibility * (g_v + g_a)
        + weights.curvature * g_n
    )
    return ObjectiveReport(
        f_smooth=f_s,
        f_collision=f_c,
        f_velocity=f_v,
        f_acceleration=f_a,
        f_curvature=f_n,
        f_total=f_total,
        gradient=gradient,
        out_of_bounds=oob,
        skipped_curvature_terms=skipped,
    )

"""Limited-memory quasi-Newton refinement with Armijo backtracking.

The first and last `degree` control points stay fixed (start/goal pinning);
accepted iterates are non-increasing in the objective by construction. The
first search direction and every reset use the normalized negative gradient,
and the L-BFGS two-loop scaling is chosen so that rescaling all cost weights
by a common factor reproduces the identical accepted-step sequence.
"""

from dataclasses import dataclass

import numpy as np

from ..mapping.esdf import EsdfGrid
from .bspline import BSplineTrajectory
from .costs import CostWeights, ObjectiveReport, total_objective


@dataclass
class OptimizeOptions:
    max_iters: int = 200
    grad_tol: float = 1e-6
    memory: int = 8
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 40
    curvature_denominator: str = "prev"


def optimize(traj: BSplineTrajectory, esdf: EsdfGrid, weights: CostWeights,
             options: OptimizeOptions | None = None,
             trace: list | None = None):
    """Returns (refined trajectory, final ObjectiveReport, iterations).

    Raises if the objective is non-finite at the start; afterwards every
    accepted step strictly decreases f_total, so the accepted sequence is
    monotone non-increasing. When `trace` is a list, the objective value of
    the start point and of every accepted iterate is appended to it.
    """
    opt = options or OptimizeOptions()
    n = traj.n_ctrl
    deg = traj.degree
    lo, hi = deg, n - deg
    free = max(0, hi - lo)

    def unpack(x):
        pts = traj.control_points.copy()
        if free:
            pts[lo:hi] = x.reshape(free, traj.dim)
        return traj.with_points(pts)

    def eval_at(x):
        t = unpack(x)
        rep = total_objective(t, esdf, weights, opt.curvature_denominator)
        return rep.f_total, rep.gradient[lo:hi].reshape(-1), rep

    x = traj.control_points[lo:hi].reshape(-1).copy()
    f, g, report = eval_at(x)
    if not np.isfinite(f):
        raise ValueError(f"objective is non-finite at the initial trajectory (f={f})")
    if trace is not None:
        trace.append(f)
    if free == 0 or np.max(np.abs(g)) < opt.grad_tol:
        return unpack(x), report, 0

    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    iters = 0

    for iters in range(1, opt.max_iters + 1):
        d = _direction(g, s_hist, y_hist)
        gd = float(g @ d)
        if gd >= 0.0:
            d = -g / np.linalg.norm(g)
            gd = float(g @ d)

        alpha = 1.0
        accepted = False
        for _ in range(opt.max_backtracks):
            x_new = x + alpha * d
            f_new, g_new, rep_new = eval_at(x_new)
            if np.isfinite(f_new) and f_new <= f + opt.armijo_c1 * alpha * gd:
                accepted = True
                break
            alpha *= opt.backtrack
        if not accepted:
            break

        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-16 * max(1.0, float(np.linalg.norm(s)) * float(np.linalg.norm(y))):
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > opt.memory:
                s_hist.pop(0)
                y_hist.pop(0)

        x, f, g, report = x_new, f_new, g_new, rep_new
        if trace is not None:
            trace.append(f)
        if np.max(np.abs(g)) < opt.grad_tol:
            break

    return unpack(x), report, iters


def _direction(g: np.ndarray, s_hist, y_hist) -> np.ndarray:
    """Two-loop L-BFGS direction; falls back to the normalized steepest
    descent when no curvature pairs exist yet."""
    if not s_hist:
        return -g / np.linalg.norm(g)
    q = g.copy()
    alphas = []
    rhos = [1.0 / float(s @ y) for s, y in zip(s_hist, y_hist)]
    for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rhos)):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    s, y = s_hist[-1], y_hist[-1]
    q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(zip(s_hist, y_hist, rhos), reversed(alphas)):
        b = rho * float(y @ q)
        q += s * (a - b)
    return -q

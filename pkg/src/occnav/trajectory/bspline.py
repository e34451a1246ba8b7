"""Uniform B-spline trajectories.

Knots are uniformly spaced `knot_interval` apart; the exposed parameter runs
from 0 to (n_ctrl - degree) * knot_interval. Evaluation is the iterative
de Boor recurrence; derivatives come from the standard difference-spline
construction (velocity control points (P[i+1]-P[i]) / dt, one degree lower).
"""

from dataclasses import dataclass, field

import numpy as np

GROUND = "ground"
AERIAL = "aerial"


@dataclass
class BSplineTrajectory:
    control_points: np.ndarray           # (n, 2) ground or (n, 3) aerial
    knot_interval: float
    degree: int = 3
    mode: str = GROUND
    ground_z: float = 0.0                # world z of ground-mode motion

    def __post_init__(self):
        self.control_points = np.asarray(self.control_points, dtype=np.float64)
        if self.control_points.ndim != 2 or self.control_points.shape[1] not in (2, 3):
            raise ValueError(
                f"control points must be (n, 2) or (n, 3), got {self.control_points.shape}")
        if self.mode not in (GROUND, AERIAL):
            raise ValueError(f"mode must be '{GROUND}' or '{AERIAL}', got {self.mode!r}")
        if self.mode == GROUND and self.control_points.shape[1] != 2:
            raise ValueError("ground trajectories use 2D control points")
        if self.knot_interval <= 0:
            raise ValueError(f"knot interval must be positive, got {self.knot_interval}")
        if self.degree < 1:
            raise ValueError(f"degree must be >= 1, got {self.degree}")
        if self.control_points.shape[0] < self.degree + 1:
            raise ValueError(
                f"need at least degree+1={self.degree + 1} control points, "
                f"got {self.control_points.shape[0]}")

    @property
    def n_ctrl(self) -> int:
        return self.control_points.shape[0]

    @property
    def dim(self) -> int:
        return self.control_points.shape[1]

    @property
    def duration(self) -> float:
        return (self.n_ctrl - self.degree) * self.knot_interval

    def with_points(self, points: np.ndarray) -> "BSplineTrajectory":
        return BSplineTrajectory(points, self.knot_interval, self.degree, self.mode, self.ground_z)

    def world_point(self, t: float) -> np.ndarray:
        """Position lifted to 3D (ground trajectories get z = ground_z)."""
        p = evaluate(self, t, 0)
        if self.dim == 3:
            return p
        return np.array([p[0], p[1], self.ground_z])

    def world_velocity(self, t: float) -> np.ndarray:
        v = evaluate(self, t, 1)
        if self.dim == 3:
            return v
        return np.array([v[0], v[1], 0.0])

    # -- text record -------------------------------------------------------

    def to_text(self) -> str:
        lines = [
            "traj v1",
            f"mode {self.mode}",
            f"degree {self.degree}",
            f"dt {self.knot_interval!r}",
            f"ground_z {self.ground_z!r}",
            f"points {self.n_ctrl} {self.dim}",
        ]
        for p in self.control_points:
            lines.append(" ".join(repr(float(v)) for v in p))
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str) -> "BSplineTrajectory":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != "traj v1":
            raise ValueError("not a traj v1 record (first line)")
        fields = {}
        for ln in lines[1:6]:
            k, *vals = ln.split()
            fields[k] = vals
        n, dim = int(fields["points"][0]), int(fields["points"][1])
        pts = np.array([[float(v) for v in ln.split()] for ln in lines[6:6 + n]])
        if pts.shape != (n, dim):
            raise ValueError(f"traj record truncated: expected {n}x{dim} points, got {pts.shape}")
        return BSplineTrajectory(
            pts,
            knot_interval=float(fields["dt"][0]),
            degree=int(fields["degree"][0]),
            mode=fields["mode"][0],
            ground_z=float(fields["ground_z"][0]),
        )


def _deboor(points: np.ndarray, degree: int, dt: float, t_internal: float) -> np.ndarray:
    """de Boor on uniform knots u_j = j * dt, valid for
    t_internal in [degree * dt, n * dt]."""
    n = points.shape[0]
    span = int(np.floor(t_internal / dt))
    span = min(max(span, degree), n - 1)
    d = [points[j + span - degree].astype(np.float64).copy() for j in range(degree + 1)]
    for r in range(1, degree + 1):
        for j in range(degree, r - 1, -1):
            lo = (j + span - degree) * dt
            hi = (j + 1 + span - r) * dt
            alpha = (t_internal - lo) / (hi - lo)
            d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j]
    return d[degree]


# uniform cubic basis matrix: C(u) = [1 u u^2 u^3] B3 [P_s-3 .. P_s] / 6
_B3 = np.array([
    [1.0, 4.0, 1.0, 0.0],
    [-3.0, 0.0, 3.0, 0.0],
    [3.0, -6.0, 3.0, 0.0],
    [-1.0, 3.0, -3.0, 1.0],
]) / 6.0


def _eval_cubic(traj: "BSplineTrajectory", t: float, order: int) -> np.ndarray:
    dt = traj.knot_interval
    n = traj.n_ctrl
    span = min(max(int(t / dt), 0), n - 4)
    u = t / dt - span
    if order == 0:
        row = np.array([1.0, u, u * u, u * u * u])
    elif order == 1:
        row = np.array([0.0, 1.0, 2.0 * u, 3.0 * u * u]) / dt
    else:
        row = np.array([0.0, 0.0, 2.0, 6.0 * u]) / (dt * dt)
    return (row @ _B3) @ traj.control_points[span:span + 4]


def evaluate(traj: BSplineTrajectory, t: float, order: int = 0) -> np.ndarray:
    """Position (order 0), velocity (1) or acceleration (2) at parameter t,
    t in [0, traj.duration]."""
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    dur = traj.duration
    if not (-1e-9 <= t <= dur + 1e-9):
        raise ValueError(f"t={t} outside valid interval [0, {dur}]")
    t = min(max(t, 0.0), dur)

    if traj.degree == 3:
        return _eval_cubic(traj, t, order)

    pts = traj.control_points
    degree = traj.degree
    dt = traj.knot_interval
    for _ in range(order):
        pts = np.diff(pts, axis=0) / dt
        degree -= 1
    if degree < 1:
        # derivative order reached a piecewise-constant spline
        if pts.shape[0] == 0:
            return np.zeros(traj.dim)
        span = min(int(np.floor(t / dt)), pts.shape[0] - 1)
        return pts[span]
    return _deboor(pts, degree, dt, t + degree * dt)


def evaluate_many(traj: BSplineTrajectory, ts: np.ndarray, order: int = 0) -> np.ndarray:
    """Vectorized evaluation at many parameters (cubic fast path)."""
    ts = np.clip(np.asarray(ts, dtype=np.float64), 0.0, traj.duration)
    if traj.degree != 3:
        return np.array([evaluate(traj, float(t), order) for t in ts])
    dt = traj.knot_interval
    n = traj.n_ctrl
    spans = np.clip((ts / dt).astype(np.int64), 0, n - 4)
    u = ts / dt - spans
    one = np.ones_like(u)
    zero = np.zeros_like(u)
    if order == 0:
        rows = np.stack([one, u, u * u, u ** 3], axis=1)
    elif order == 1:
        rows = np.stack([zero, one, 2.0 * u, 3.0 * u * u], axis=1) / dt
    else:
        rows = np.stack([zero, zero, 2.0 * one, 6.0 * u], axis=1) / (dt * dt)
    windows = traj.control_points[spans[:, None] + np.arange(4)[None, :]]  # (m,4,dim)
    return np.einsum("mk,mkd->md", rows @ _B3, windows)


def active_control_points(traj: BSplineTrajectory, t: float) -> np.ndarray:
    """The degree+1 control points whose basis functions are nonzero at t."""
    dur = traj.duration
    if not (-1e-9 <= t <= dur + 1e-9):
        raise ValueError(f"t={t} outside valid interval [0, {dur}]")
    t = min(max(t, 0.0), dur)
    span = int(np.floor((t + traj.degree * traj.knot_interval) / traj.knot_interval))
    span = min(max(span, traj.degree), traj.n_ctrl - 1)
    return traj.control_points[span - traj.degree: span + 1]

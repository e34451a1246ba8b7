"""Occlusion-aware air-ground navigation testbed.

Subpackages:
  completion  -- lightweight scene-completion numerics (depthwise-separable
                 convolution, criss-cross attention, separable attention),
                 a toy completion model, and deterministic baseline predictors
  mapping     -- sparse semantic occupancy grid, scan integration, query-based
                 prediction updates, and truncated ESDF construction
  trajectory  -- uniform B-splines, the planner cost terms with analytic
                 gradients, and an L-BFGS refinement loop
  planner     -- energy-aware hybrid air/ground graph search and the full
                 plan -> refine -> setpoint pipeline
  sim         -- deterministic occlusion-world simulator and benchmark harness
"""

__version__ = "0.1.0"

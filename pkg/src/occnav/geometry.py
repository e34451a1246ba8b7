"""Small shared geometry types."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Pose:
    """Sensor/robot pose: position plus yaw/pitch viewing direction (radians).

    Roll is irrelevant for a symmetric frustum and is omitted.
    """

    position: np.ndarray
    yaw: float = 0.0
    pitch: float = 0.0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=np.float64)
        if self.position.shape != (3,):
            raise ValueError(f"pose position must be a 3-vector, got shape {self.position.shape}")

    def forward(self) -> np.ndarray:
        cp = np.cos(self.pitch)
        return np.array(
            [cp * np.cos(self.yaw), cp * np.sin(self.yaw), np.sin(self.pitch)]
        )


def wrap_angle(a: float) -> float:
    """Wrap an angle difference into (-pi, pi]."""
    a = (a + np.pi) % (2.0 * np.pi) - np.pi
    if a == -np.pi:
        a = np.pi
    return a

"""Per-mode power bookkeeping.

The default constants are the measured average power draws of the reference
vehicle: 987.61 W flying, 532.07 W hovering, 197.52 W driving. Hover power
enters only through the mode-transition proxy (2 s of hover per switch).
"""

from dataclasses import dataclass


@dataclass
class EnergyModel:
    power_fly: float = 987.61        # watts
    power_hover: float = 532.07      # watts
    power_ground: float = 197.52     # watts
    transition_cost: float = 2.0 * 532.07  # joules per takeoff/landing

    def __post_init__(self):
        if not (self.power_fly > self.power_hover > self.power_ground > 0):
            raise ValueError(
                f"power ordering must be fly > hover > ground > 0, got "
                f"{self.power_fly} / {self.power_hover} / {self.power_ground}")
        if self.transition_cost < 0:
            raise ValueError("transition_cost must be nonnegative")

    def power(self, mode: str) -> float:
        if mode == "ground":
            return self.power_ground
        if mode == "aerial":
            return self.power_fly
        if mode == "hover":
            return self.power_hover
        raise ValueError(f"unknown mode {mode!r}")


def path_energy(path, energy: EnergyModel) -> float:
    """Total joules for a hybrid path or executed step list.

    Accepts anything exposing `segments()` yielding (mode, duration_seconds)
    plus `transition_count()`, or a plain iterable of (mode, duration) with
    transitions inferred from mode changes between consecutive entries.
    """
    if hasattr(path, "segments") and hasattr(path, "transition_count"):
        segs = list(path.segments())
        transitions = path.transition_count()
    else:
        segs = [(m, d) for m, d in path]
        transitions = sum(
            1 for a, b in zip(segs, segs[1:]) if a[0] != b[0]
        )
    total = sum(energy.power(mode) * duration for mode, duration in segs)
    return total + transitions * energy.transition_cost

"""Common placement representation shared by the SMC and MILP pipelines."""

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Sensor:
    x: float
    y: float
    type_id: int
    role: str = "primary"  # "primary" | "relay"


@dataclass
class Placement:
    sensors: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.sensors)

    @property
    def n_relays(self) -> int:
        return sum(1 for s in self.sensors if s.role == "relay")

    def positions(self) -> np.ndarray:
        if not self.sensors:
            return np.zeros((0, 2))
        return np.array([[s.x, s.y] for s in self.sensors], dtype=float)

    def extend(self, sensors) -> "Placement":
        return Placement(self.sensors + list(sensors))

    def to_dict(self) -> dict:
        return {
            "sensors": [
                {"x_m": s.x, "y_m": s.y, "type_id": s.type_id, "role": s.role}
                for s in self.sensors
            ]
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Placement":
        return cls(
            [
                Sensor(float(s["x_m"]), float(s["y_m"]), int(s["type_id"]), s.get("role", "primary"))
                for s in data["sensors"]
            ]
        )

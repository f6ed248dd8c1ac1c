""" Docstring for the geometry.py file.

Small geometric value types shared by the simulator, the maps and the planner.
"""
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np


def wrap_angle(angle: float) -> float:
    """
    Normalises an angle to the half-open interval (-pi, pi].

    :param angle: Angle in radians.
    :return: The equivalent angle in (-pi, pi].
    """
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class Pose:
    """
    Robot base pose on the 2.5D manifold: a world position in meters and a heading in radians. Roll and pitch are
    zero except during the scanning action, which the sensor model applies on its own.
    """
    position: tuple
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "yaw", wrap_angle(float(self.yaw)))

    @property
    def xyz(self) -> np.ndarray:
        """ Position as a numpy array. """
        return np.asarray(self.position, dtype=float)

    @property
    def xy(self) -> np.ndarray:
        """ Horizontal position as a numpy array. """
        return np.asarray(self.position[:2], dtype=float)

    def sensor_origin(self, sensor_height: float) -> np.ndarray:
        """
        Returns the LiDAR origin of a robot standing at this pose.

        :param sensor_height: Vertical offset between the robot position and the sensor, in meters.
        :return: The sensor origin in the map frame.
        """
        origin = self.xyz.copy()
        origin[2] += sensor_height
        return origin

    def to_list(self) -> list:
        """ Flat [x, y, z, yaw] representation used in JSON records. """
        return [*self.position, self.yaw]

    @classmethod
    def from_list(cls, values: Iterable[float]) -> "Pose":
        """
        Builds a pose from [x, y, z, yaw].

        :param values: Four numbers.
        :return: The pose.
        """
        values = [float(v) for v in values]
        if len(values) != 4:
            raise ValueError(f"a pose needs 4 values (x, y, z, yaw), got {len(values)}")
        return cls(position=tuple(values[:3]), yaw=values[3])


@dataclass(frozen=True)
class BoundingBox:
    """
    Axis-aligned box given by its minimum and maximum corners.
    """
    minimum: tuple
    maximum: tuple

    def __post_init__(self):
        minimum = tuple(float(v) for v in self.minimum)
        maximum = tuple(float(v) for v in self.maximum)
        if len(minimum) != 3 or len(maximum) != 3:
            raise ValueError("bounding box corners must be 3D points")
        if any(lo >= hi for lo, hi in zip(minimum, maximum)):
            raise ValueError(f"degenerate bounding box {minimum} - {maximum}")
        object.__setattr__(self, "minimum", minimum)
        object.__setattr__(self, "maximum", maximum)

    @property
    def lower(self) -> np.ndarray:
        """ Minimum corner as a numpy array. """
        return np.asarray(self.minimum, dtype=float)

    @property
    def upper(self) -> np.ndarray:
        """ Maximum corner as a numpy array. """
        return np.asarray(self.maximum, dtype=float)

    @property
    def size(self) -> np.ndarray:
        """ Edge lengths. """
        return self.upper - self.lower

    def inflate(self, margin: float) -> "BoundingBox":
        """
        Grows the box by the same margin on every side.

        :param margin: Margin in meters.
        :return: The inflated box.
        """
        return BoundingBox(tuple(self.lower - margin), tuple(self.upper + margin))

    def contains(self, points: np.ndarray) -> np.ndarray:
        """
        Tests which points lie inside the closed box.

        :param points: (N, 3) array or a single point.
        :return: Boolean mask (or a scalar boolean for a single point).
        """
        points = np.asarray(points, dtype=float)
        inside = np.all((points >= self.lower) & (points <= self.upper), axis=-1)
        return inside

    def distance_to_surface(self, point: np.ndarray) -> float:
        """
        Euclidean distance from a point to the box, zero when the point is inside.

        :param point: A 3D point.
        :return: Distance in meters.
        """
        point = np.asarray(point, dtype=float)
        gap = np.maximum(np.maximum(self.lower - point, point - self.upper), 0.0)
        return float(np.linalg.norm(gap))

    def to_list(self) -> list:
        """ Flat [min_x, min_y, min_z, max_x, max_y, max_z] representation. """
        return [*self.minimum, *self.maximum]

    @classmethod
    def from_list(cls, values: Iterable[float]) -> "BoundingBox":
        """
        Builds a box from six numbers.

        :param values: [min_x, min_y, min_z, max_x, max_y, max_z].
        :return: The box.
        """
        values = [float(v) for v in values]
        if len(values) != 6:
            raise ValueError(f"a bounding box needs 6 values, got {len(values)}")
        return cls(tuple(values[:3]), tuple(values[3:]))

""" Docstring for the elevation_map.py file.

Robot-centred 2.5D elevation grid built from LiDAR points. Arrays are indexed [ix, iy] with ix along world x.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from simulator.geometry import Pose
from simulator.sensor_sim import Sweep

logger = logging.getLogger(__name__)


@dataclass
class ElevationMap:
    """
    Height grid centred on the robot. Unknown cells hold NaN heights.
    """
    center: np.ndarray
    extent: Tuple[float, float]
    cell_size: float
    height: np.ndarray
    known: np.ndarray

    @property
    def shape(self) -> Tuple[int, int]:
        """ Grid shape (nx, ny). """
        return self.height.shape

    @property
    def lower_corner(self) -> np.ndarray:
        """ World xy of the grid's minimum corner. """
        return np.asarray(self.center, dtype=float) - np.asarray(self.extent, dtype=float) / 2.0

    def cell_of(self, xy: np.ndarray) -> Optional[Tuple[int, int]]:
        """
        Index of the cell containing a horizontal position.

        :param xy: World x, y (extra coordinates are ignored).
        :return: (ix, iy), or None outside the grid.
        """
        index = np.floor((np.asarray(xy, dtype=float)[:2] - self.lower_corner) / self.cell_size).astype(int)
        if np.any(index < 0) or np.any(index >= np.asarray(self.shape)):
            return None
        return int(index[0]), int(index[1])

    def cell_center(self, ix: int, iy: int) -> np.ndarray:
        """ World xy of a cell center. """
        return self.lower_corner + (np.array([ix, iy], dtype=float) + 0.5) * self.cell_size

    def height_at(self, xy: np.ndarray) -> float:
        """
        Height of the cell containing a position.

        :param xy: World x, y.
        :return: Height in meters, NaN for unknown or outside cells.
        """
        cell = self.cell_of(xy)
        if cell is None:
            return float("nan")
        return float(self.height[cell])


def _gather_points(sweeps: Union[np.ndarray, Sequence[Sweep]]) -> np.ndarray:
    if isinstance(sweeps, np.ndarray):
        return sweeps.reshape(-1, 3)
    clouds = [sweep.points for sweep in sweeps if len(sweep)]
    return np.concatenate(clouds) if clouds else np.empty((0, 3))


def build_elevation_map(sweeps: Union[np.ndarray, Sequence[Sweep]], robot_pose: Pose,
                        extent: Tuple[float, float] = (12.0, 12.0), cell_size: float = 0.1) -> ElevationMap:
    """
    Builds the elevation map from scratch: every cell takes the median height of the points falling in it. Cells
    without points stay unknown.

    :param sweeps: Sweeps, or an (N, 3) point array, in the map frame.
    :param robot_pose: Robot pose the map is centred on.
    :param extent: Map size in meters along x and y.
    :param cell_size: Cell edge in meters.
    :return: The elevation map.
    """
    points = _gather_points(sweeps)
    shape = tuple(int(round(e / cell_size)) for e in extent)
    height = np.full(shape, np.nan)
    elevation = ElevationMap(center=robot_pose.xy, extent=tuple(extent), cell_size=cell_size, height=height,
                             known=np.zeros(shape, dtype=bool))

    cells = np.floor((points[:, :2] - elevation.lower_corner) / cell_size).astype(np.int64)
    inside = np.all((cells >= 0) & (cells < np.asarray(shape)), axis=1)
    if not inside.any():
        logger.warning("No points inside the %s m elevation map around %s", extent, robot_pose.xy.tolist())
        return elevation

    frame = pd.DataFrame({"ix": cells[inside, 0], "iy": cells[inside, 1], "z": points[inside, 2]})
    medians = frame.groupby(["ix", "iy"])["z"].median()
    ix = medians.index.get_level_values("ix").to_numpy()
    iy = medians.index.get_level_values("iy").to_numpy()
    height[ix, iy] = medians.to_numpy()
    elevation.known[ix, iy] = True

    logger.info("Elevation map %s cells: %d measured", shape, int(elevation.known.sum()))
    return elevation


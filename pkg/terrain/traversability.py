""" Docstring for the traversability.py file.

Binary traversability from a local plane fit (slope and normal) and the step height to the 8 neighbours.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from simulator.geometry import Pose
from terrain.elevation_map import ElevationMap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TerrainParams:
    """
    Elevation map and traversability settings. Defaults are conservative values for a quadruped.
    """
    extent: Tuple[float, float] = (12.0, 12.0)
    cell_size: float = 0.1
    slope_max: float = np.radians(20.0)
    step_max: float = 0.15
    footprint_radius: float = 0.4
    window: int = 3

    def __post_init__(self):
        if self.cell_size <= 0.0 or min(self.extent) <= 0.0:
            raise ValueError("cell_size and extent must be positive")
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be an odd number of cells, at least 3")
        if self.footprint_radius < 0.0:
            raise ValueError("footprint_radius must be non-negative")


@dataclass
class TraversabilityMap:
    """
    Per-cell safety over an elevation map. Cells without a plane fit keep a NaN slope and a zero normal.
    """
    elevation: ElevationMap
    safe: np.ndarray
    slope: np.ndarray
    normal: np.ndarray

    @property
    def known(self) -> np.ndarray:
        """ Known mask of the underlying elevation map. """
        return self.elevation.known

    def cell_of(self, xy: np.ndarray) -> Optional[Tuple[int, int]]:
        """ See ElevationMap.cell_of. """
        return self.elevation.cell_of(xy)

    def is_cell_safe(self, xy: np.ndarray) -> bool:
        """ True when the cell under a position exists and is safe. """
        cell = self.cell_of(xy)
        return cell is not None and bool(self.safe[cell])

    def is_cell_known(self, xy: np.ndarray) -> bool:
        """ True when the cell under a position exists and is known. """
        cell = self.cell_of(xy)
        return cell is not None and bool(self.known[cell])

    def height_at(self, xy: np.ndarray) -> float:
        """ Terrain height under a position, NaN when unknown. """
        return self.elevation.height_at(xy)

    def footprint_offsets(self, footprint_radius: float) -> np.ndarray:
        """
        Cell offsets whose centers lie within a radius of a cell center, plus the center cell.

        :param footprint_radius: Radius in meters.
        :return: (M, 2) integer offsets.
        """
        reach = int(np.ceil(footprint_radius / self.elevation.cell_size))
        di, dj = np.meshgrid(np.arange(-reach, reach + 1), np.arange(-reach, reach + 1), indexing="ij")
        inside = (di ** 2 + dj ** 2) * self.elevation.cell_size ** 2 <= footprint_radius ** 2 + 1e-12
        return np.stack([di[inside], dj[inside]], axis=1)


def _plane_fit(elevation: ElevationMap, window: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Least-squares plane z = a*dx + b*dy + c over the known cells of every window, solved for all cells at once from
    window sums.

    :return: Normals (nx, ny, 3), slopes (nx, ny) and a mask of cells with a well-posed fit.
    """
    radius = window // 2
    offsets = (np.arange(window) - radius) * elevation.cell_size
    kx = np.repeat(offsets[:, None], window, axis=1)
    ky = np.repeat(offsets[None, :], window, axis=0)
    weights = elevation.known.astype(float)
    heights = np.where(elevation.known, elevation.height, 0.0)

    def window_sum(values, kernel):
        return ndimage.correlate(values, kernel, mode="constant", cval=0.0)

    ones = np.ones((window, window))
    s_w, s_x, s_y = window_sum(weights, ones), window_sum(weights, kx), window_sum(weights, ky)
    s_xx, s_yy, s_xy = window_sum(weights, kx * kx), window_sum(weights, ky * ky), window_sum(weights, kx * ky)
    s_z, s_xz, s_yz = window_sum(heights, ones), window_sum(heights, kx), window_sum(heights, ky)

    system = np.stack([np.stack([s_xx, s_xy, s_x], axis=-1),
                       np.stack([s_xy, s_yy, s_y], axis=-1),
                       np.stack([s_x, s_y, s_w], axis=-1)], axis=-2)
    rhs = np.stack([s_xz, s_yz, s_z], axis=-1)
    well_posed = elevation.known & (s_w >= 3.0) & (np.abs(np.linalg.det(system)) > 1e-9 * elevation.cell_size ** 4)

    normals = np.zeros(elevation.shape + (3,))
    slopes = np.full(elevation.shape, np.nan)
    if well_posed.any():
        solution = np.linalg.solve(system[well_posed], rhs[well_posed][..., None])[..., 0]
        raw = np.stack([-solution[:, 0], -solution[:, 1], np.ones(solution.shape[0])], axis=1)
        norms = np.linalg.norm(raw, axis=1)
        normals[well_posed] = raw / norms[:, None]
        slopes[well_posed] = np.arccos(np.clip(1.0 / norms, 0.0, 1.0))
    return normals, slopes, well_posed


def compute_traversability(elevation: ElevationMap, slope_max: float = np.radians(20.0), step_max: float = 0.15,
                           window: int = 3) -> TraversabilityMap:
    """
    Classifies every cell: safe iff known, with a well-posed plane fit, slope at most slope_max and a height
    difference to every known 8-neighbour of at most step_max. Known cells without any known neighbour are unsafe.

    :param elevation: Elevation map.
    :param slope_max: Maximum slope in radians.
    :param step_max: Maximum step height in meters.
    :param window: Plane fit window in cells.
    :return: The traversability map.
    """
    normals, slopes, well_posed = _plane_fit(elevation, window)

    neighbours = np.ones((3, 3), dtype=np.int64)
    neighbours[1, 1] = 0
    neighbour_count = ndimage.correlate(elevation.known.astype(np.int64), neighbours, mode="constant", cval=0)
    highest = ndimage.maximum_filter(np.where(elevation.known, elevation.height, -np.inf), size=3,
                                     mode="constant", cval=-np.inf)
    lowest = ndimage.minimum_filter(np.where(elevation.known, elevation.height, np.inf), size=3,
                                    mode="constant", cval=np.inf)
    with np.errstate(invalid="ignore"):
        step = np.maximum(highest - elevation.height, elevation.height - lowest)

    safe = elevation.known & well_posed & (neighbour_count > 0)
    safe &= np.nan_to_num(slopes, nan=np.inf) <= slope_max
    safe &= np.nan_to_num(step, nan=np.inf) <= step_max
    logger.info("Traversability: %d safe of %d known cells", int(safe.sum()), int(elevation.known.sum()))
    return TraversabilityMap(elevation=elevation, safe=safe, slope=slopes, normal=normals)


def is_pose_valid(pose: Pose, traversability: TraversabilityMap, footprint_radius: float = 0.4) -> bool:
    """
    True iff the cell under the pose and every cell whose center lies within footprint_radius of it are safe.
    Footprints reaching outside the map are invalid.

    :param pose: Pose to check (only x, y matter).
    :param traversability: Traversability map.
    :param footprint_radius: Footprint radius in meters.
    :return: Validity.
    """
    cell = traversability.cell_of(pose.xy)
    if cell is None:
        return False
    cells = np.asarray(cell) + traversability.footprint_offsets(footprint_radius)
    shape = np.asarray(traversability.safe.shape)
    if np.any(cells < 0) or np.any(cells >= shape):
        return False
    return bool(traversability.safe[cells[:, 0], cells[:, 1]].all())


def valid_cell_mask(traversability: TraversabilityMap, footprint_radius: float = 0.4) -> np.ndarray:
    """
    is_pose_valid evaluated at every cell center at once: a safe-set erosion by the footprint disk.

    :param traversability: Traversability map.
    :param footprint_radius: Footprint radius in meters.
    :return: Boolean mask over cells.
    """
    offsets = traversability.footprint_offsets(footprint_radius)
    reach = int(np.abs(offsets).max()) if offsets.size else 0
    structure = np.zeros((2 * reach + 1, 2 * reach + 1), dtype=bool)
    structure[offsets[:, 0] + reach, offsets[:, 1] + reach] = True
    return ndimage.binary_erosion(traversability.safe, structure=structure, border_value=0)

""" Docstring for the occupancy_map.py file.

Probabilistic occupancy map over a bounded region of interest. Voxels are addressed by integer keys at the finest
resolution and store log-odds occupancy; voxels never updated stay at probability 0.5. Storage is a dense array
over the (small) region of interest plus a mask of stored voxels, which gives the same semantics as a sparse octree
while letting ray traversals run vectorised over many rays at once.
"""
import enum
import logging
import math
from dataclasses import dataclass
from typing import Iterator, List, NamedTuple, Optional, Tuple

import numpy as np

from errors import MapBoundsError
from simulator.geometry import BoundingBox

# Parameter gaps below this are treated as simultaneous boundary crossings.
TIE_EPS = 1e-10
# Traversal parameters this close to the range limit count as reaching it.
RANGE_EPS = 1e-9


def logit(p: float) -> float:
    """
    Log-odds of a probability.

    :param p: Probability in (0, 1).
    :return: ln(p / (1 - p)).
    """
    return math.log(p / (1.0 - p))


class VoxelKey(NamedTuple):
    """ Integer grid indices of a voxel at the finest resolution. """
    i: int
    j: int
    k: int


class OccupancyState(enum.Enum):
    """ Three-state discretisation of the occupancy probability. """
    FREE = "free"
    OCCUPIED = "occupied"
    UNKNOWN = "unknown"


class RayTerminal(enum.Enum):
    """ Why a ray traversal stopped. """
    HIT = "hit"
    MAX_RANGE = "max_range"
    BOUNDARY = "boundary"
    INVALID_ORIGIN = "invalid_origin"


@dataclass(frozen=True)
class OctreeParams:
    """
    Occupancy update parameters. Probabilities are converted to log-odds increments and clamps on use.
    """
    resolution: float = 0.05
    prob_hit: float = 0.7
    prob_miss: float = 0.4
    clamp_min_prob: float = 0.12
    clamp_max_prob: float = 0.97
    occ_threshold: float = 0.65
    free_threshold: float = 0.35
    bounds_margin: float = 2.0

    def __post_init__(self):
        if self.resolution <= 0.0:
            raise ValueError("resolution must be positive")
        if not 0.0 < self.free_threshold < 0.5 < self.occ_threshold < 1.0:
            raise ValueError("thresholds must satisfy 0 < free < 0.5 < occ < 1")
        if not 0.0 < self.clamp_min_prob < 0.5 < self.clamp_max_prob < 1.0:
            raise ValueError("clamps must satisfy 0 < min < 0.5 < max < 1")

    @property
    def hit_update(self) -> float:
        """ Log-odds increment of a hit. """
        return logit(self.prob_hit)

    @property
    def miss_update(self) -> float:
        """ Log-odds increment of a miss (negative). """
        return logit(self.prob_miss)

    @property
    def clamp_min(self) -> float:
        """ Lower log-odds clamp. """
        return logit(self.clamp_min_prob)

    @property
    def clamp_max(self) -> float:
        """ Upper log-odds clamp. """
        return logit(self.clamp_max_prob)


@dataclass
class InsertSummary:
    """ Outcome of one sweep insertion. """
    voxels_touched: int = 0
    hits: int = 0
    misses: int = 0
    skipped_zero_length: int = 0
    skipped_out_of_bounds: int = 0

    def to_dict(self) -> dict:
        """ JSON friendly view. """
        return dict(self.__dict__)


class OccupancyOctree:
    """
    This module defines the OccupancyOctree class, which stores log-odds occupancy for every voxel of an axis-aligned
    region, integrates sweeps by ray casting and answers ray traversal and probability queries.
    """

    def __init__(self, bounds: BoundingBox, params: OctreeParams = OctreeParams()):
        """
        Constructor for the OccupancyOctree class. The grid origin is the minimum corner of the bounds.

        :param bounds: Region where the map is built, usually the object bounding box inflated by a margin.
        :param params: Resolution, sensor model and thresholds.
        """
        self.logger = logging.getLogger(__name__)
        self.params = params
        self.resolution = params.resolution
        self.bounds = bounds
        self.origin = bounds.lower
        self.shape = tuple(int(math.ceil(s / self.resolution - 1e-9)) for s in bounds.size)
        self.log_odds = np.zeros(self.shape, dtype=np.float64)
        self.stored = np.zeros(self.shape, dtype=bool)
        self.occ_log_odds = logit(params.occ_threshold)
        self.free_log_odds = logit(params.free_threshold)
        self.logger.info("Occupancy map %s voxels at %.3f m over %s", self.shape, self.resolution, bounds.to_list())

    # ------------------------------------------------------------------ keys

    def key_of(self, point: np.ndarray) -> Optional[VoxelKey]:
        """
        Maps a world point to the key of the voxel containing it.

        :param point: A world point.
        :return: The voxel key, or None if the point lies outside the map.
        """
        ijk = np.floor((np.asarray(point, dtype=float) - self.origin) / self.resolution).astype(np.int64)
        if not self.key_in_bounds(ijk):
            return None
        return VoxelKey(int(ijk[0]), int(ijk[1]), int(ijk[2]))

    def center_of(self, key: Tuple[int, int, int]) -> np.ndarray:
        """
        Returns the world coordinates of a voxel center.

        :param key: Voxel key.
        :return: Center point.
        """
        if not self.key_in_bounds(key):
            raise MapBoundsError(f"key {tuple(key)} outside map of shape {self.shape}")
        return self.origin + (np.asarray(key, dtype=float) + 0.5) * self.resolution

    def key_in_bounds(self, key) -> bool:
        """
        Checks a key against the grid shape.

        :param key: Voxel key (any length-3 sequence).
        :return: True if every index is inside the grid.
        """
        return all(0 <= int(key[axis]) < self.shape[axis] for axis in range(3))

    def keys_in_bounds(self, keys: np.ndarray) -> np.ndarray:
        """ Vectorised key_in_bounds over an (N, 3) integer array. """
        return np.all((keys >= 0) & (keys < np.asarray(self.shape)), axis=1)

    def contains_point(self, point: np.ndarray) -> bool:
        """
        Checks whether a world point falls inside the map.

        :param point: A world point.
        :return: True if inside.
        """
        return self.key_of(point) is not None

    # --------------------------------------------------------------- queries

    def probability(self, key: Tuple[int, int, int]) -> float:
        """
        Occupancy probability of a voxel; 0.5 for voxels never updated.

        :param key: Voxel key.
        :return: P_o in [0, 1].
        """
        if not self.key_in_bounds(key) or not self.stored[tuple(key)]:
            return 0.5
        return 1.0 / (1.0 + math.exp(-self.log_odds[tuple(key)]))

    def probability_grid(self) -> np.ndarray:
        """ Occupancy probability of every voxel as a dense array. """
        return 1.0 / (1.0 + np.exp(-self.log_odds))

    def state(self, key: Tuple[int, int, int]) -> OccupancyState:
        """
        Three-state classification of a voxel.

        :param key: Voxel key.
        :return: Free, Occupied or Unknown.
        """
        p_occ = self.probability(key)
        if p_occ > self.params.occ_threshold:
            return OccupancyState.OCCUPIED
        if p_occ < self.params.free_threshold:
            return OccupancyState.FREE
        return OccupancyState.UNKNOWN

    def occupied_mask(self) -> np.ndarray:
        """ Dense mask of Occupied voxels. """
        return self.log_odds > self.occ_log_odds

    def free_mask(self) -> np.ndarray:
        """ Dense mask of Free voxels. """
        return self.log_odds < self.free_log_odds

    def unknown_mask(self) -> np.ndarray:
        """ Dense mask of Unknown voxels. """
        return ~(self.occupied_mask() | self.free_mask())

    def set_log_odds(self, key: Tuple[int, int, int], value: float):
        """
        Stores a log-odds value directly, clamped. Used by dump loading and by tests that force voxel states.

        :param key: Voxel key.
        :param value: Log-odds value.
        """
        if not self.key_in_bounds(key):
            raise MapBoundsError(f"key {tuple(key)} outside map of shape {self.shape}")
        self.log_odds[tuple(key)] = min(max(value, self.params.clamp_min), self.params.clamp_max)
        self.stored[tuple(key)] = True

    def snapshot(self) -> "OccupancyOctree":
        """
        Returns a read-only copy for concurrent readers.

        :return: An OccupancyOctree whose arrays refuse writes.
        """
        frozen = OccupancyOctree.__new__(OccupancyOctree)
        frozen.__dict__.update(self.__dict__)
        frozen.log_odds = self.log_odds.copy()
        frozen.stored = self.stored.copy()
        frozen.log_odds.setflags(write=False)
        frozen.stored.setflags(write=False)
        return frozen

    # ------------------------------------------------------------- traversal

    def traverse(self, origins: np.ndarray, directions: np.ndarray, limits: np.ndarray,
                 stop_mask: Optional[np.ndarray] = None,
                 end_keys: Optional[np.ndarray] = None) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """
        Walks many rays through the grid in lockstep, one voxel per ray and iteration (exact grid traversal;
        simultaneous boundary crossings step diagonally so no zero-length voxel is visited).

        A ray stops when it leaves the grid, when the entry parameter of the next voxel reaches its limit, after it
        yields a voxel flagged in stop_mask, or right before it would yield its end key.

        :param origins: (N, 3) ray origins; rays whose origin lies outside the grid yield nothing.
        :param directions: (N, 3) unit directions.
        :param limits: (N,) maximum traversal distance per ray.
        :param stop_mask: Optional dense boolean grid of voxels that terminate a ray (inclusive).
        :param end_keys: Optional (N, 3) keys at which rays stop (exclusive).
        :return: Iterator of (ray_ids, flat_indices) pairs, one pair per lockstep iteration.
        """
        origins = np.asarray(origins, dtype=float).reshape(-1, 3)
        directions = np.asarray(directions, dtype=float).reshape(-1, 3)
        limits = np.broadcast_to(np.asarray(limits, dtype=float), (origins.shape[0],)).copy()
        shape = np.asarray(self.shape)

        keys = np.floor((origins - self.origin) / self.resolution).astype(np.int64)
        ray_ids = np.nonzero(self.keys_in_bounds(keys))[0]
        keys = keys[ray_ids]
        origins = origins[ray_ids]
        directions = directions[ray_ids]
        limits = limits[ray_ids]
        ends = None if end_keys is None else np.asarray(end_keys, dtype=np.int64).reshape(-1, 3)[ray_ids]
        steps = np.sign(directions).astype(np.int64)
        entry = np.zeros(ray_ids.shape[0])
        stop_flat = None if stop_mask is None else stop_mask.ravel()

        with np.errstate(divide="ignore", invalid="ignore"):
            inv_dir = np.where(directions != 0.0, 1.0 / directions, np.inf)

        while ray_ids.size:
            alive = np.all((keys >= 0) & (keys < shape), axis=1) & (entry < limits - RANGE_EPS)
            if ends is not None:
                alive &= ~np.all(keys == ends, axis=1)
            if not alive.all():
                ray_ids, keys, origins, directions, limits, steps, entry, inv_dir = (
                    arr[alive] for arr in (ray_ids, keys, origins, directions, limits, steps, entry, inv_dir))
                if ends is not None:
                    ends = ends[alive]
                if not ray_ids.size:
                    break

            flat = np.ravel_multi_index(tuple(keys.T), self.shape)
            yield ray_ids, flat

            if stop_flat is not None:
                going = ~stop_flat[flat]
                if not going.all():
                    ray_ids, keys, origins, directions, limits, steps, entry, inv_dir = (
                        arr[going] for arr in (ray_ids, keys, origins, directions, limits, steps, entry, inv_dir))
                    if ends is not None:
                        ends = ends[going]
                    if not ray_ids.size:
                        break

            # parameter at which each axis crosses into the next voxel
            boundary = self.origin + (keys + (steps > 0)) * self.resolution
            with np.errstate(invalid="ignore"):
                t_next = np.where(steps != 0, (boundary - origins) * inv_dir, np.inf)
            t_min = t_next.min(axis=1)
            tied = t_next <= (t_min + TIE_EPS)[:, None]
            keys = keys + steps * tied
            entry = t_min

    def raycast(self, origin: np.ndarray, direction: np.ndarray,
                max_range: float) -> Tuple[List[VoxelKey], RayTerminal]:
        """
        Ordered voxels traversed by a single ray, stopping at (and including) the first Occupied voxel.

        :param origin: Ray origin.
        :param direction: Unit direction.
        :param max_range: Maximum range in meters.
        :return: The voxel list and the reason the traversal ended.
        """
        origin = np.asarray(origin, dtype=float)
        direction = np.asarray(direction, dtype=float)
        if max_range <= 0.0:
            raise ValueError("max_range must be positive")
        norm = np.linalg.norm(direction)
        if not math.isclose(norm, 1.0, rel_tol=1e-6):
            raise ValueError(f"direction must be a unit vector, norm is {norm}")
        if not self.contains_point(origin):
            self.logger.warning("Raycast origin %s outside map bounds", origin.tolist())
            return [], RayTerminal.INVALID_ORIGIN

        occupied = self.occupied_mask()
        voxels = []
        for _, flat in self.traverse(origin[None, :], direction[None, :], np.array([max_range]), stop_mask=occupied):
            voxels.append(VoxelKey(*(int(v) for v in np.unravel_index(flat[0], self.shape))))

        if voxels and occupied[voxels[-1]]:
            return voxels, RayTerminal.HIT
        if self.__exit_distance(origin, direction) < max_range - RANGE_EPS:
            return voxels, RayTerminal.BOUNDARY
        return voxels, RayTerminal.MAX_RANGE

    def __exit_distance(self, origin: np.ndarray, direction: np.ndarray) -> float:
        """
        Distance along a ray from an interior origin to the map boundary.

        :param origin: Ray origin inside the map.
        :param direction: Unit direction.
        :return: Exit distance in meters.
        """
        upper = self.origin + np.asarray(self.shape) * self.resolution
        with np.errstate(divide="ignore", invalid="ignore"):
            t_far = np.where(direction > 0, (upper - origin) / direction,
                             np.where(direction < 0, (self.origin - origin) / direction, np.inf))
        return float(t_far.min())

    # ---------------------------------------------------------------- update

    def insert_sweep(self, points: np.ndarray, sensor_origin: np.ndarray) -> InsertSummary:
        """
        Integrates a sweep by ray casting from the sensor origin to every point. Every voxel strictly between origin
        and endpoint receives the miss update and the endpoint voxel receives the hit update, each voxel at most once
        per sweep with hits taking precedence. Void rays never reach this method since they produce no point.

        :param points: (N, 3) sweep points in the map frame.
        :param sensor_origin: Sensor origin of the sweep.
        :return: Counts of updated voxels and skipped points.
        """
        points = np.asarray(points, dtype=float).reshape(-1, 3)
        sensor_origin = np.asarray(sensor_origin, dtype=float)
        if not self.contains_point(sensor_origin):
            self.logger.error("Sweep origin %s outside map bounds %s", sensor_origin.tolist(), self.bounds.to_list())
            raise MapBoundsError(f"sensor origin {sensor_origin.tolist()} outside map bounds")
        if points.shape[0] == 0:
            raise ValueError("cannot insert an empty sweep")

        summary = InsertSummary()
        end_keys = np.floor((points - self.origin) / self.resolution).astype(np.int64)
        inside = self.keys_in_bounds(end_keys)
        summary.skipped_out_of_bounds = int((~inside).sum())

        offsets = points - sensor_origin
        lengths = np.linalg.norm(offsets, axis=1)
        zero_length = inside & (lengths < 1e-9)
        summary.skipped_zero_length = int(zero_length.sum())
        usable = inside & ~zero_length

        origins = np.broadcast_to(sensor_origin, (int(usable.sum()), 3))
        directions = offsets[usable] / lengths[usable, None]
        hit_flat = np.unique(np.ravel_multi_index(tuple(end_keys[usable].T), self.shape))

        traversed = [flat for _, flat in self.traverse(origins, directions, lengths[usable],
                                                       end_keys=end_keys[usable])]
        miss_flat = np.unique(np.concatenate(traversed)) if traversed else np.empty(0, dtype=np.int64)
        miss_flat = np.setdiff1d(miss_flat, hit_flat, assume_unique=True)

        self.__apply(miss_flat, self.params.miss_update)
        self.__apply(hit_flat, self.params.hit_update)

        summary.hits = int(hit_flat.size)
        summary.misses = int(miss_flat.size)
        summary.voxels_touched = summary.hits + summary.misses
        self.logger.info("Inserted sweep of %d points: %d hits, %d misses, %d out of bounds",
                         points.shape[0], summary.hits, summary.misses, summary.skipped_out_of_bounds)
        return summary

    def __apply(self, flat: np.ndarray, update: float):
        """
        Adds a log-odds update to a set of voxels and clamps the result.

        :param flat: Flat voxel indices.
        :param update: Log-odds increment.
        """
        if not flat.size:
            return
        values = self.log_odds.ravel()
        values[flat] = np.clip(values[flat] + update, self.params.clamp_min, self.params.clamp_max)
        self.stored.ravel()[flat] = True

    # ---------------------------------------------------------------- dumps

    def write_dump(self, path: str):
        """
        Writes every stored voxel as "i j k log_odds" after a header "resolution origin_x origin_y origin_z".
        The shape is appended to the header so the map can be rebuilt exactly.

        :param path: Output file path.
        """
        keys = np.argwhere(self.stored)
        with open(path, "w", encoding="utf-8") as file:
            origin = " ".join(repr(float(v)) for v in self.origin)
            file.write(f"{float(self.resolution)!r} {origin} {self.shape[0]} {self.shape[1]} {self.shape[2]}\n")
            for i, j, k in keys:
                file.write(f"{i} {j} {k} {float(self.log_odds[i, j, k])!r}\n")
        self.logger.info("Octree dump with %d voxels written to %s", keys.shape[0], path)

    @classmethod
    def load_dump(cls, path: str, params: Optional[OctreeParams] = None) -> "OccupancyOctree":
        """
        Rebuilds a map from a dump written by write_dump. Dumps without the shape columns are sized to the
        largest stored key.

        :param path: Dump file path.
        :param params: Update parameters; resolution is taken from the file.
        :return: The restored map.
        """
        with open(path, "r", encoding="utf-8") as file:
            header = file.readline().split()
            rows = [line.split() for line in file if line.strip()]

        resolution = float(header[0])
        origin = np.array([float(v) for v in header[1:4]])
        keys = np.array([[int(r[0]), int(r[1]), int(r[2])] for r in rows], dtype=np.int64).reshape(-1, 3)
        values = np.array([float(r[3]) for r in rows])
        if len(header) >= 7:
            shape = np.array([int(v) for v in header[4:7]])
        else:
            shape = keys.max(axis=0) + 1 if keys.size else np.ones(3, dtype=np.int64)

        base = params or OctreeParams()
        params = OctreeParams(**{**base.__dict__, "resolution": resolution})
        octree = cls(BoundingBox(tuple(origin), tuple(origin + shape * resolution)), params)
        for key, value in zip(keys, values):
            octree.set_log_odds(tuple(key), value)
        return octree

""" Docstring for the info_gain.py file.

Volumetric information of voxels and the information gain of hypothetical scan poses. The per-voxel functions work
on plain probability lists; the InformationGainEvaluator casts the rays of many candidates through the map at once.
"""
import enum
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import ndimage
from scipy.special import xlogy

from mapping.occupancy_map import OccupancyOctree, OccupancyState, VoxelKey
from simulator.geometry import BoundingBox, Pose

logger = logging.getLogger(__name__)


class ViKind(enum.Enum):
    """ Volumetric information formulations. """
    OCCLUSION_AWARE = "oa"
    REAR_SIDE_ENTROPY = "rse"

    @classmethod
    def parse(cls, value: str) -> "ViKind":
        """
        Accepts the short names used on the command line and in config files.

        :param value: "oa" or "rse" (case insensitive).
        :return: The matching kind.
        """
        try:
            return cls(value.strip().lower())
        except ValueError as e:
            raise ValueError(f"unknown volumetric information kind {value!r}, expected 'oa' or 'rse'") from e


@dataclass(frozen=True)
class IgRayParams:
    """
    Density and reach of the rays cast from a candidate pose. Coarser than the real sensor.
    """
    azimuth_step: float = 10.0
    elevation_step: float = 5.0
    elevation_half_fov: float = 55.0
    max_range: float = 15.0
    sensor_height: float = 0.70

    def __post_init__(self):
        if not 0.0 < self.azimuth_step <= 360.0 or self.elevation_step <= 0.0:
            raise ValueError("angular steps must be positive")
        if not 0.0 < self.elevation_half_fov < 90.0:
            raise ValueError("elevation half field of view must be in (0, 90)")
        if self.max_range <= 0.0:
            raise ValueError("max_range must be positive")


@dataclass
class CandidateRaySet:
    """
    Rays cast by a scan candidate: full azimuth circle times the effective vertical field of view.
    """
    origin: np.ndarray
    directions: np.ndarray
    azimuth_step: float
    elevation_step: float

    @classmethod
    def from_pose(cls, pose: Pose, params: IgRayParams,
                  directions: Optional[np.ndarray] = None) -> "CandidateRaySet":
        """
        Builds the ray set of a candidate pose. The set is yaw invariant.

        :param pose: Candidate robot pose.
        :param params: Ray density parameters.
        :param directions: Precomputed unit_directions(params), shared between candidates.
        :return: The candidate ray set.
        """
        return cls(origin=pose.sensor_origin(params.sensor_height),
                   directions=unit_directions(params) if directions is None else directions,
                   azimuth_step=params.azimuth_step, elevation_step=params.elevation_step)

    def __len__(self) -> int:
        return int(self.directions.shape[0])


def unit_directions(params: IgRayParams) -> np.ndarray:
    """
    Unit vectors on an azimuth/elevation lattice.

    :param params: Ray density parameters.
    :return: (R, 3) array of directions.
    """
    azimuths = np.radians(np.arange(0.0, 360.0 - 1e-9, params.azimuth_step))
    elevations = np.radians(np.arange(-params.elevation_half_fov, params.elevation_half_fov + 1e-9,
                                      params.elevation_step))
    az, el = np.meshgrid(azimuths, elevations, indexing="ij")
    directions = np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=-1)
    return directions.reshape(-1, 3)


def entropy(p: float) -> float:
    """
    Binary entropy of an occupancy probability, in nats, with 0 ln 0 = 0.

    :param p: Occupancy probability in [0, 1].
    :return: -p ln p - (1 - p) ln (1 - p).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability {p} outside [0, 1]")
    return float(-(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p)))


def entropy_array(probabilities: np.ndarray) -> np.ndarray:
    """ Vectorised entropy without range checks. """
    return -(xlogy(probabilities, probabilities) + xlogy(1.0 - probabilities, 1.0 - probabilities))


def visibility_probability(ray_voxels: Sequence[float], n: int) -> float:
    """
    Probability that the n-th voxel of a ray is visible: product of the free probabilities of the voxels before it.

    :param ray_voxels: Occupancy probabilities along the ray, in traversal order.
    :param n: Index of the voxel of interest.
    :return: Visibility probability in [0, 1].
    """
    if not 0 <= n < len(ray_voxels):
        raise ValueError(f"voxel index {n} outside ray of length {len(ray_voxels)}")
    visibility = 1.0
    for p_occ in ray_voxels[:n]:
        visibility *= 1.0 - p_occ
    return visibility


def occlusion_aware_vi(ray_voxels: Sequence[float], n: int) -> float:
    """
    Occlusion aware volumetric information: visibility probability times entropy.

    :param ray_voxels: Occupancy probabilities along the ray.
    :param n: Index of the voxel of interest.
    :return: Information in nats.
    """
    return visibility_probability(ray_voxels, n) * entropy(ray_voxels[n])


def classify_rear_side(octree: OccupancyOctree, key: VoxelKey, object_bbox: BoundingBox) -> bool:
    """
    A rear side voxel is an Unknown voxel inside the object box with at least one face-adjacent Occupied voxel.

    :param octree: The occupancy map.
    :param key: Voxel key.
    :param object_bbox: Bounding box of the object of interest.
    :return: True for rear side voxels.
    """
    if not octree.key_in_bounds(key) or not object_bbox.contains(octree.center_of(key)):
        return False
    if octree.state(key) is not OccupancyState.UNKNOWN:
        return False
    i, j, k = key
    neighbours = ((i + 1, j, k), (i - 1, j, k), (i, j + 1, k), (i, j - 1, k), (i, j, k + 1), (i, j, k - 1))
    return any(octree.key_in_bounds(n) and octree.state(n) is OccupancyState.OCCUPIED for n in neighbours)


def rear_side_mask(octree: OccupancyOctree, object_bbox: BoundingBox) -> np.ndarray:
    """
    Dense version of classify_rear_side over the whole map.

    :param octree: The occupancy map.
    :param object_bbox: Bounding box of the object of interest.
    :return: Boolean grid of rear side voxels.
    """
    face_adjacent = ndimage.generate_binary_structure(3, 1)
    face_adjacent[1, 1, 1] = False
    near_occupied = ndimage.binary_dilation(octree.occupied_mask(), structure=face_adjacent)

    inside = np.ones(octree.shape, dtype=bool)
    for axis in range(3):
        centers = octree.origin[axis] + (np.arange(octree.shape[axis]) + 0.5) * octree.resolution
        axis_inside = (centers >= object_bbox.lower[axis]) & (centers <= object_bbox.upper[axis])
        view = [np.newaxis] * 3
        view[axis] = slice(None)
        inside &= axis_inside[tuple(view)]
    return inside & octree.unknown_mask() & near_occupied


def rear_side_entropy_vi(octree: OccupancyOctree, ray_voxels: Sequence[VoxelKey], n: int,
                         object_bbox: BoundingBox) -> float:
    """
    Rear side entropy volumetric information: the occlusion aware value for rear side voxels, zero otherwise.

    :param octree: The occupancy map.
    :param ray_voxels: Voxel keys along the ray, in traversal order.
    :param n: Index of the voxel of interest.
    :param object_bbox: Bounding box of the object of interest.
    :return: Information in nats.
    """
    probabilities = [octree.probability(key) for key in ray_voxels]
    value = occlusion_aware_vi(probabilities, n)
    return value if classify_rear_side(octree, ray_voxels[n], object_bbox) else 0.0


class InformationGainEvaluator:
    """
    This module defines the InformationGainEvaluator class, which computes the information gain of many candidate
    poses against one occupancy map snapshot. All rays of all candidates are traversed together; per ray sums run in
    traversal order and per candidate sums use compensated summation, so results do not depend on batching.
    """

    def __init__(self, octree: OccupancyOctree, ray_params: IgRayParams, kind: ViKind,
                 object_bbox: BoundingBox):
        """
        Constructor for the InformationGainEvaluator class. Precomputes per-voxel probability, entropy and the rear
        side mask of the map.

        :param octree: Occupancy map snapshot; it must not change while the evaluator is in use.
        :param ray_params: Candidate ray set parameters.
        :param kind: Volumetric information formulation.
        :param object_bbox: Bounding box of the object of interest (used by rear side entropy).
        """
        self.logger = logging.getLogger(__name__)
        self.octree = octree
        self.ray_params = ray_params
        self.kind = kind
        self.directions = unit_directions(ray_params)
        self.probabilities = octree.probability_grid().ravel()
        weights = entropy_array(self.probabilities)
        if kind is ViKind.REAR_SIDE_ENTROPY:
            weights = weights * rear_side_mask(octree, object_bbox).ravel()
        self.weights = weights
        self.occupied = octree.occupied_mask()

    def gains(self, poses: Sequence[Pose]) -> np.ndarray:
        """
        Information gain of every pose.

        :param poses: Candidate poses.
        :return: Array of gains in nats, zero for poses whose sensor origin lies outside the map.
        """
        if not poses:
            return np.zeros(0)
        ray_sets = [CandidateRaySet.from_pose(pose, self.ray_params, self.directions) for pose in poses]
        for index, rays in enumerate(ray_sets):
            if not self.octree.contains_point(rays.origin):
                self.logger.debug("Candidate %d sensor origin %s outside map, gain 0", index, rays.origin.tolist())

        return self.gains_from_origins(np.array([rays.origin for rays in ray_sets]), self.directions)

    def gains_from_origins(self, origins: np.ndarray, directions: np.ndarray) -> np.ndarray:
        """
        Information gain for explicit sensor origins sharing one direction set.

        :param origins: (C, 3) sensor origins.
        :param directions: (R, 3) unit directions cast from every origin.
        :return: Array of C gains.
        """
        n_candidates, n_rays = origins.shape[0], directions.shape[0]
        ray_origins = np.repeat(origins, n_rays, axis=0)
        ray_directions = np.tile(directions, (n_candidates, 1))
        visibility = np.ones(ray_origins.shape[0])
        ray_gain = np.zeros(ray_origins.shape[0])

        for ids, flat in self.octree.traverse(ray_origins, ray_directions, self.ray_params.max_range,
                                              stop_mask=self.occupied):
            ray_gain[ids] += visibility[ids] * self.weights[flat]
            visibility[ids] *= 1.0 - self.probabilities[flat]

        per_candidate = ray_gain.reshape(n_candidates, n_rays)
        return np.array([math.fsum(row) for row in per_candidate])


def information_gain(octree: OccupancyOctree, candidate_pose: Pose, ray_params: IgRayParams, kind: ViKind,
                     object_bbox: BoundingBox) -> float:
    """
    Information gain of one candidate pose: the sum of the chosen volumetric information over every voxel traversed
    by every candidate ray, rays stopping at the first Occupied voxel.

    :param octree: Occupancy map.
    :param candidate_pose: Candidate robot pose.
    :param ray_params: Candidate ray set parameters.
    :param kind: Volumetric information formulation.
    :param object_bbox: Bounding box of the object of interest.
    :return: G_c in nats; zero with a warning when the sensor origin is outside the map.
    """
    rays = CandidateRaySet.from_pose(candidate_pose, ray_params)
    if not octree.contains_point(rays.origin):
        logger.warning("Candidate sensor origin %s outside map bounds, information gain is 0", rays.origin.tolist())
        return 0.0
    evaluator = InformationGainEvaluator(octree, ray_params, kind, object_bbox)
    return float(evaluator.gains_from_origins(rays.origin[None, :], rays.directions)[0])


def ray_gain_from_keys(octree: OccupancyOctree, ray_voxels: List[VoxelKey], kind: ViKind,
                       object_bbox: BoundingBox) -> float:
    """
    Sum of the volumetric information along one already traversed ray, voxel by voxel.

    :param octree: Occupancy map.
    :param ray_voxels: Voxel keys in traversal order.
    :param kind: Volumetric information formulation.
    :param object_bbox: Bounding box of the object of interest.
    :return: Ray contribution in nats.
    """
    probabilities = [octree.probability(key) for key in ray_voxels]
    if kind is ViKind.OCCLUSION_AWARE:
        return math.fsum(occlusion_aware_vi(probabilities, n) for n in range(len(ray_voxels)))
    return math.fsum(rear_side_entropy_vi(octree, ray_voxels, n, object_bbox) for n in range(len(ray_voxels)))

""" Docstring for the coverage.py file.

Point cloud coverage against a ground truth cloud, the ground truth sampling of scene meshes and the per-episode
metrics record.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import trimesh
from scipy.spatial import cKDTree

from simulator.scene import SceneMesh

logger = logging.getLogger(__name__)

# Tolerance on the object box when selecting object triangles.
OBJECT_TOLERANCE = 0.01


@dataclass(frozen=True)
class CoverageReport:
    """
    Fraction of ground truth points with an accumulated point within threshold.
    """
    c_p: float
    n_observed: int
    n_ground_truth: int
    threshold: float

    def to_dict(self) -> dict:
        """ JSON record of the report. """
        return {"c_p": self.c_p, "n_observed": self.n_observed, "n_ground_truth": self.n_ground_truth,
                "threshold": self.threshold}


def default_threshold(resolution: float) -> float:
    """
    Distance between a voxel center and its corners.

    :param resolution: Voxel edge in meters.
    :return: sqrt(3) / 2 * resolution.
    """
    if resolution <= 0.0:
        raise ValueError("resolution must be positive")
    return math.sqrt(3.0) / 2.0 * resolution


def point_cloud_coverage(ground_truth: np.ndarray, accumulated: np.ndarray, threshold: float) -> CoverageReport:
    """
    Counts the ground truth points whose nearest accumulated point lies within threshold.

    :param ground_truth: (N, 3) ground truth points, non-empty.
    :param accumulated: (M, 3) reconstructed points, possibly empty.
    :param threshold: Distance threshold in meters.
    :return: The coverage report.
    """
    ground_truth = np.asarray(ground_truth, dtype=float).reshape(-1, 3)
    accumulated = np.asarray(accumulated, dtype=float).reshape(-1, 3)
    if ground_truth.shape[0] == 0:
        raise ValueError("ground truth cloud is empty")
    if threshold < 0.0:
        raise ValueError("threshold must be non-negative")
    if accumulated.shape[0] == 0:
        return CoverageReport(0.0, 0, ground_truth.shape[0], threshold)

    distances, _ = cKDTree(accumulated).query(ground_truth, k=1, distance_upper_bound=threshold * (1.0 + 1e-9) + 1e-12)
    observed = int(np.count_nonzero(distances <= threshold))
    return CoverageReport(observed / ground_truth.shape[0], observed, ground_truth.shape[0], threshold)


@dataclass
class GroundTruth:
    """
    Points sampled on the object surface with the normal of the triangle each one came from.
    """
    points: np.ndarray
    normals: np.ndarray

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def side(self) -> np.ndarray:
        """ Mask of points on near-vertical faces. """
        return np.abs(self.normals[:, 2]) < 0.5

    def observable(self, sensor_height: float, vertical_fov: float, d_thres: float) -> np.ndarray:
        """
        Mask of points a ground robot can see: up-facing points above the sensor are excluded, as is everything
        higher than the effective field of view reaches from d_thres away.

        :param sensor_height: Sensor height above the ground in meters.
        :param vertical_fov: Effective half vertical field of view in degrees.
        :param d_thres: Standoff distance in meters.
        :return: Boolean mask.
        """
        z = self.points[:, 2]
        roof = (self.normals[:, 2] > 0.5) & (z > sensor_height)
        ceiling = sensor_height + math.tan(math.radians(vertical_fov)) * d_thres
        return ~roof & (z <= ceiling)


def sample_ground_truth(scene: SceneMesh, spacing: float = 0.05, seed: int = 0) -> GroundTruth:
    """
    Samples the object surface uniformly by area at one point per spacing^2. Object triangles are those with every
    corner inside the object box; down-facing faces resting on the ground are left out.

    :param scene: Scene mesh with its object box.
    :param spacing: Sampling spacing in meters.
    :param seed: Sampling seed.
    :return: The ground truth.
    """
    faces = scene.triangles[scene.object_triangle_mask(OBJECT_TOLERANCE)]
    candidates = trimesh.Trimesh(vertices=scene.vertices, faces=faces, process=False)
    floor = scene.object_bbox.lower[2] + OBJECT_TOLERANCE
    resting = (candidates.face_normals[:, 2] < -0.5) & np.all(candidates.triangles[:, :, 2] <= floor, axis=1)
    mesh = trimesh.Trimesh(vertices=scene.vertices, faces=faces[~resting], process=False)
    if len(mesh.faces) == 0:
        logger.warning("Scene %s has no object triangles inside %s", scene.name, scene.object_bbox.to_list())
        return GroundTruth(np.empty((0, 3)), np.empty((0, 3)))

    count = max(int(math.ceil(mesh.area / spacing ** 2)), 1)
    points, face_index = trimesh.sample.sample_surface(mesh, count, seed=seed)
    logger.info("Ground truth for %s: %d points over %.2f m2", scene.name, count, mesh.area)
    return GroundTruth(np.asarray(points), np.asarray(mesh.face_normals[face_index]))


@dataclass
class EpisodeMetrics:
    """
    Efficiency and quality figures of one episode. Timings are kept apart from the deterministic fields.
    """
    d_t: float = 0.0
    n_s: int = 0
    t_all: float = 0.0
    t_nbv: float = 0.0
    coverage_per_step: List[float] = field(default_factory=list)
    observable_coverage_per_step: List[float] = field(default_factory=list)
    final_coverage: Optional[CoverageReport] = None

    def record_step(self, coverage: float, observable_coverage: float):
        """
        Appends the coverage after one scan.

        :param coverage: c_p against the full ground truth.
        :param observable_coverage: c_p against the observable subset.
        """
        self.coverage_per_step.append(coverage)
        self.observable_coverage_per_step.append(observable_coverage)
        self.n_s = len(self.coverage_per_step)

    def to_dict(self) -> dict:
        """ Deterministic part of the metrics. """
        return {"d_t": self.d_t, "n_s": self.n_s, "coverage_per_step": self.coverage_per_step,
                "observable_coverage_per_step": self.observable_coverage_per_step,
                "final_coverage": self.final_coverage.to_dict() if self.final_coverage else None}

    def timing_dict(self) -> dict:
        """ Wall clock part of the metrics. """
        return {"t_all": self.t_all, "t_nbv": self.t_nbv}

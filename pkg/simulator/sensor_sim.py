""" Docstring for the sensor_sim.py file.

Rolling multi-beam LiDAR simulation against a ground truth mesh, plus the downsampling and outlier filtering that
every sweep goes through before it reaches the maps.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree
from scipy.spatial.transform import Rotation

from simulator.geometry import Pose
from simulator.scene import SceneMesh

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LidarModel:
    """
    Multi-beam spinning LiDAR. Defaults follow a 16 beam, +/-15 degree sensor mounted 0.7 m above the feet.
    """
    n_beams: int = 16
    vertical_fov: float = 15.0
    horizontal_step: float = 1.0
    max_range: float = 50.0
    noise_sigma: float = 0.01
    sensor_height: float = 0.70

    def __post_init__(self):
        if self.n_beams < 1:
            raise ValueError("n_beams must be at least 1")
        if not 0.0 < self.vertical_fov < 90.0:
            raise ValueError("vertical_fov must be in (0, 90) degrees")
        if not 0.0 < self.horizontal_step <= 360.0:
            raise ValueError("horizontal_step must be in (0, 360] degrees")
        if self.max_range <= 0.0 or self.noise_sigma < 0.0:
            raise ValueError("max_range must be positive and noise_sigma non-negative")

    def beam_directions(self) -> np.ndarray:
        """
        Unit beam directions in the sensor frame for one full revolution.

        :return: (n_beams * n_azimuths, 3) array.
        """
        elevations = np.radians(np.linspace(-self.vertical_fov, self.vertical_fov, self.n_beams)
                                if self.n_beams > 1 else np.zeros(1))
        azimuths = np.radians(np.arange(0.0, 360.0 - 1e-9, self.horizontal_step))
        el, az = np.meshgrid(elevations, azimuths, indexing="ij")
        return np.stack([np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)], axis=-1).reshape(-1, 3)


@dataclass(frozen=True)
class ScanActionModel:
    """
    Roll of the robot base while standing, sampled at discrete frames.
    """
    roll_start: float = 40.0
    roll_end: float = -40.0
    roll_steps: int = 9

    def __post_init__(self):
        if self.roll_steps < 1:
            raise ValueError("roll_steps must be at least 1")

    def roll_angles(self) -> np.ndarray:
        """ Roll angle of every frame, in degrees. """
        if self.roll_steps == 1:
            return np.array([self.roll_start])
        return np.linspace(self.roll_start, self.roll_end, self.roll_steps)

    def effective_vertical_fov(self, lidar: LidarModel) -> float:
        """ Half vertical field of view reached by the action, in degrees. """
        return lidar.vertical_fov + max(abs(self.roll_start), abs(self.roll_end))


@dataclass
class Sweep:
    """
    Accumulated points of one scanning action in the map frame.
    """
    points: np.ndarray
    sensor_origin: np.ndarray
    robot_pose: Pose

    def __len__(self) -> int:
        return int(self.points.shape[0])

    def with_points(self, points: np.ndarray) -> "Sweep":
        """ Same sweep metadata with a different point set. """
        return Sweep(points=points, sensor_origin=self.sensor_origin, robot_pose=self.robot_pose)


def simulate_scan(scene: SceneMesh, pose: Pose, lidar: LidarModel = LidarModel(),
                  action: ScanActionModel = ScanActionModel(), rng_seed: int = 0) -> Sweep:
    """
    Simulates one scanning action: every roll frame casts every beam of a full revolution against the scene. Rays
    without a hit within range produce no point. Range noise is Gaussian, truncated at 3 sigma, drawn from a
    generator seeded per frame so the result does not depend on evaluation order.

    :param scene: Ground truth scene.
    :param pose: Robot pose; the sensor sits sensor_height above its position.
    :param lidar: Sensor model.
    :param action: Roll action.
    :param rng_seed: Seed of the range noise.
    :return: The sweep in the map frame.
    """
    origin = pose.sensor_origin(lidar.sensor_height)
    if scene.is_empty:
        logger.warning("Scene %s is empty, returning an empty sweep", scene.name)
        return Sweep(points=np.empty((0, 3)), sensor_origin=origin, robot_pose=pose)

    body_directions = lidar.beam_directions()
    frames = []
    for frame_index, roll in enumerate(action.roll_angles()):
        rotation = Rotation.from_euler("ZX", [pose.yaw, np.radians(roll)])
        directions = rotation.apply(body_directions)
        origins = np.broadcast_to(origin, directions.shape)
        distances, _ = scene.index.intersect(origins, directions, lidar.max_range)
        hit = np.isfinite(distances)
        ranges = distances[hit]
        if lidar.noise_sigma > 0.0:
            rng = np.random.default_rng([int(rng_seed), frame_index])
            noise = rng.normal(0.0, lidar.noise_sigma, ranges.shape[0])
            ranges = ranges + np.clip(noise, -3.0 * lidar.noise_sigma, 3.0 * lidar.noise_sigma)
        frames.append(origin + directions[hit] * ranges[:, None])

    points = np.concatenate(frames) if frames else np.empty((0, 3))
    logger.info("Simulated scan at %s: %d points over %d frames", np.round(pose.xyz, 3).tolist(),
                points.shape[0], len(frames))
    return Sweep(points=points, sensor_origin=origin, robot_pose=pose)


def voxel_downsample(points: np.ndarray, leaf_size: float) -> np.ndarray:
    """
    Replaces the points of every leaf cell by their centroid. Output is ordered by cell key.

    :param points: (N, 3) points.
    :param leaf_size: Cell edge in meters.
    :return: (M, 3) centroids.
    """
    if leaf_size <= 0.0:
        raise ValueError("leaf_size must be positive")
    if points.shape[0] == 0:
        return points.reshape(0, 3)
    frame = pd.DataFrame(points, columns=["x", "y", "z"])
    cells = np.floor(points / leaf_size).astype(np.int64)
    frame["i"], frame["j"], frame["k"] = cells[:, 0], cells[:, 1], cells[:, 2]
    centroids = frame.groupby(["i", "j", "k"], sort=True)[["x", "y", "z"]].mean()
    return centroids.to_numpy()


def statistical_outlier_mask(points: np.ndarray, outlier_k: int, outlier_stddev: float) -> np.ndarray:
    """
    Keeps points whose mean distance to their k nearest neighbours is at most the global mean plus outlier_stddev
    standard deviations. Clouds with fewer than k + 1 points, or k = 0, keep everything.

    :param points: (N, 3) points.
    :param outlier_k: Neighbour count.
    :param outlier_stddev: Standard deviation factor.
    :return: Boolean keep mask.
    """
    if outlier_k < 1 or points.shape[0] < outlier_k + 1:
        return np.ones(points.shape[0], dtype=bool)
    distances, _ = cKDTree(points).query(points, k=outlier_k + 1)
    mean_distances = distances[:, 1:].mean(axis=1)
    threshold = mean_distances.mean() + outlier_stddev * mean_distances.std()
    return mean_distances <= threshold


def downsample_filter(sweep: Sweep, leaf_size: float = 0.05, outlier_k: int = 10,
                      outlier_stddev: float = 1.0) -> Sweep:
    """
    Voxel-grid downsampling followed by statistical outlier removal.

    :param sweep: Raw sweep.
    :param leaf_size: Leaf cell edge in meters.
    :param outlier_k: Neighbour count of the outlier stage.
    :param outlier_stddev: Standard deviation factor of the outlier stage.
    :return: The filtered sweep.
    """
    reduced = voxel_downsample(sweep.points, leaf_size)
    if outlier_k >= 1 and reduced.shape[0] < outlier_k + 1:
        logger.debug("Only %d points after downsampling, outlier removal skipped", reduced.shape[0])
    keep = statistical_outlier_mask(reduced, outlier_k, outlier_stddev)
    logger.info("Filtered sweep: %d raw, %d downsampled, %d kept", len(sweep), reduced.shape[0], int(keep.sum()))
    return sweep.with_points(reduced[keep])

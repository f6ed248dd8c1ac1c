""" Docstring for the costs_utility.py file.

Position cost, traversal cost and the utility that ranks scan candidates.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from simulator.geometry import BoundingBox, Pose, wrap_angle
from terrain.traversability import TraversabilityMap

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PositionCostParams:
    """ Distance below which a candidate is penalised for being close to a visited pose or to the object. """
    d_thres: float = 2.0

    def __post_init__(self):
        if self.d_thres <= 0.0:
            raise ValueError("d_thres must be positive")


@dataclass(frozen=True)
class TraversalCostParams:
    """ Constant penalty for candidates whose bearing from the robot heading exceeds behind_angle. """
    behind_penalty: float = 0.5
    behind_angle: float = math.pi / 2.0

    def __post_init__(self):
        if not 0.0 <= self.behind_penalty < 1.0:
            raise ValueError("behind_penalty must be in [0, 1)")


@dataclass
class VisitedRegistry:
    """
    Poses at which a scan has been executed, in order. Only ever appended to.
    """
    poses: List[Pose] = field(default_factory=list)

    def append(self, pose: Pose):
        """ Records an executed scan pose. """
        self.poses.append(pose)

    def __len__(self) -> int:
        return len(self.poses)

    def horizontal_positions(self) -> np.ndarray:
        """ (N, 2) array of visited x, y. """
        return np.array([pose.xy for pose in self.poses]).reshape(-1, 2)


@dataclass
class ScanCandidate:
    """
    A scan pose with its information gain, costs and utility.
    """
    pose: Pose
    g: float
    p_cost: float
    t_cost: float
    node_index: int = -1
    path_distance: float = 0.0

    @property
    def utility(self) -> float:
        """ g * (1 - p_cost) * (1 - t_cost). """
        return utility(self.g, self.p_cost, self.t_cost)

    def to_dict(self) -> dict:
        """ JSON record of the candidate. """
        return {"node": self.node_index, "pose": self.pose.to_list(), "g": self.g, "p_cost": self.p_cost,
                "t_cost": self.t_cost, "utility": self.utility, "path_distance": self.path_distance}


def position_cost(candidate_pose: Pose, visited: VisitedRegistry, object_bbox: BoundingBox,
                  params: PositionCostParams = PositionCostParams()) -> float:
    """
    Linear penalty on the distance d_c to the closest visited pose (horizontal) or to the object box surface (3D).

    :param candidate_pose: Candidate pose.
    :param visited: Executed scan poses.
    :param object_bbox: Object of interest box.
    :param params: Threshold parameters.
    :return: 1 - d_c / d_thres when d_c <= d_thres, else 0.
    """
    distance = object_bbox.distance_to_surface(candidate_pose.xyz)
    if len(visited):
        gaps = np.linalg.norm(visited.horizontal_positions() - candidate_pose.xy, axis=1)
        distance = min(distance, float(gaps.min()))
    if distance <= params.d_thres:
        return 1.0 - distance / params.d_thres
    return 0.0


def bearing(robot_pose: Pose, candidate_pose: Pose) -> float:
    """
    Absolute angle between the robot heading and the direction to the candidate, in [0, pi]. A candidate at the
    robot position has bearing 0.

    :param robot_pose: Current robot pose.
    :param candidate_pose: Candidate pose.
    :return: Bearing in radians.
    """
    offset = candidate_pose.xy - robot_pose.xy
    if np.hypot(*offset) < 1e-9:
        return 0.0
    return abs(wrap_angle(math.atan2(offset[1], offset[0]) - robot_pose.yaw))


def traversal_cost(candidate_pose: Pose, robot_pose: Pose, traversability: TraversabilityMap,
                   params: TraversalCostParams = TraversalCostParams()) -> float:
    """
    Binary safety cost plus a constant penalty for candidates behind the robot.

    :param candidate_pose: Candidate pose.
    :param robot_pose: Current robot pose.
    :param traversability: Current traversability map.
    :param params: Behind penalty parameters.
    :return: 1 on unsafe or unknown cells, behind_penalty behind the robot, 0 otherwise.
    """
    if not traversability.is_cell_known(candidate_pose.xy):
        logger.warning("Candidate %s lies on an unknown cell, treated as not traversable",
                       np.round(candidate_pose.xy, 3).tolist())
        return 1.0
    if not traversability.is_cell_safe(candidate_pose.xy):
        return 1.0
    if bearing(robot_pose, candidate_pose) > params.behind_angle:
        return params.behind_penalty
    return 0.0


def utility(g: float, p_cost: float, t_cost: float) -> float:
    """
    Utility of a scan candidate.

    :param g: Information gain, non-negative.
    :param p_cost: Position cost in [0, 1].
    :param t_cost: Traversal cost in [0, 1].
    :return: g * (1 - p_cost) * (1 - t_cost).
    """
    if g < 0.0 or not 0.0 <= p_cost <= 1.0 or not 0.0 <= t_cost <= 1.0:
        raise ValueError(f"utility inputs out of range: g={g}, p_cost={p_cost}, t_cost={t_cost}")
    return g * (1.0 - p_cost) * (1.0 - t_cost)

"""Docstring for the distance_utils.py file.

"""
from typing import Sequence

import numpy as np

from simulator.geometry import Pose


def cumulative_distances(pose_history: Sequence[Pose]) -> np.ndarray:
    """
    Calculate the travelled distance at every pose of an ordered history.

    :param pose_history: Executed poses in order.
    :return: Array starting at 0 with one entry per pose.
    """
    if not pose_history:
        return np.zeros(0)
    xy = np.array([pose.xy for pose in pose_history]).reshape(-1, 2)

    # Segment lengths, then their running sum
    segments = np.hypot(*np.diff(xy, axis=0).T) if xy.shape[0] > 1 else np.zeros(0)
    return np.concatenate([[0.0], np.cumsum(segments)])


def travel_distance(pose_history: Sequence[Pose]) -> float:
    """
    Calculate the travel distance d_t of an episode: the sum of consecutive horizontal distances along the executed
    waypoints.

    :param pose_history: Executed poses in order.
    :return: Distance in meters, 0 for fewer than two poses.
    """
    distances = cumulative_distances(pose_history)
    return float(distances[-1]) if distances.size else 0.0

""" Docstring for the point_cloud_io.py file.

"""
import logging

import numpy as np
import trimesh

from errors import SceneError

logger = logging.getLogger(__name__)


def write_ply(path: str, points: np.ndarray):
    """
    Writes an ASCII PLY point cloud with x, y, z double properties.

    :param path: Output path.
    :param points: (N, 3) points.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    header = "\n".join(["ply", "format ascii 1.0", f"element vertex {points.shape[0]}",
                        "property double x", "property double y", "property double z", "end_header"])
    with open(path, "w", encoding="utf-8") as file:
        file.write(header + "\n")
        np.savetxt(file, points, fmt="%.6f")
    logger.info("Point cloud with %d points written to %s", points.shape[0], path)


def read_ply(path: str) -> np.ndarray:
    """
    Reads the vertices of a PLY file (ASCII or binary, point cloud or mesh).

    :param path: PLY path.
    :return: (N, 3) points.
    """
    try:
        loaded = trimesh.load(path, file_type="ply", process=False)
    # pylint: disable=broad-except
    except Exception as e:
        logger.error("Error reading point cloud %s: %s", path, e)
        raise SceneError(f"cannot read point cloud {path}: {e}") from e
    points = np.asarray(loaded.vertices, dtype=float).reshape(-1, 3)
    logger.info("Read %d points from %s", points.shape[0], path)
    return points

""" Docstring for the scene.py file.

Ground truth triangle mesh scenes and ray/mesh intersection. Triangles are grouped into spatially coherent clusters
with axis-aligned bounds; a ray batch is tested against a cluster's triangles only when it enters the cluster box
before its current nearest hit.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import trimesh

from errors import SceneError
from simulator.geometry import BoundingBox

logger = logging.getLogger(__name__)

# Minimum positive hit distance and minimum |det| of the ray/triangle system.
HIT_EPS = 1e-9
# Triangles with smaller area are skipped.
DEGENERATE_AREA = 1e-12
RAY_CHUNK = 8192


@dataclass
class SceneMesh:
    """
    Ground truth scene: vertices, triangle index triples and the box marking the object of interest.
    """
    vertices: np.ndarray
    triangles: np.ndarray
    object_bbox: BoundingBox
    name: str = "scene"
    _index: Optional["TriangleIndex"] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= self.vertices.shape[0]):
            raise SceneError(f"scene {self.name!r} has triangle indices outside its {self.vertices.shape[0]} vertices")

    @property
    def is_empty(self) -> bool:
        """ True when the scene holds no triangle. """
        return self.triangles.shape[0] == 0

    @property
    def index(self) -> "TriangleIndex":
        """ Lazily built intersection index. """
        if self._index is None:
            self._index = TriangleIndex(self.vertices, self.triangles)
        return self._index

    def triangle_corners(self) -> np.ndarray:
        """ (T, 3, 3) array of triangle corner coordinates. """
        return self.vertices[self.triangles]

    def object_triangle_mask(self, tolerance: float = 0.01) -> np.ndarray:
        """
        Triangles whose three corners lie inside the object box (inflated by a tolerance).

        :param tolerance: Inflation in meters.
        :return: Boolean mask over triangles.
        """
        box = self.object_bbox.inflate(tolerance)
        return np.all(box.contains(self.triangle_corners()), axis=1)


def load_scene_mesh(path: str, object_bbox: BoundingBox) -> SceneMesh:
    """
    Reads a Wavefront OBJ file; polygons are triangulated on load.

    :param path: OBJ file path.
    :param object_bbox: Object of interest box (from the episode config, not the mesh file).
    :return: The scene.
    """
    try:
        mesh = trimesh.load(path, file_type="obj", force="mesh", process=False)
    # pylint: disable=broad-except
    except Exception as e:
        logger.error("Error loading scene mesh %s: %s", path, e)
        raise SceneError(f"cannot read scene mesh {path}: {e}") from e
    logger.info("Loaded scene %s with %d vertices and %d triangles", path, len(mesh.vertices), len(mesh.faces))
    return SceneMesh(np.asarray(mesh.vertices), np.asarray(mesh.faces), object_bbox, name=str(path))


def export_scene_mesh(scene: SceneMesh, path: str):
    """
    Writes a scene as a Wavefront OBJ file.

    :param scene: Scene to write.
    :param path: Output path.
    """
    mesh = trimesh.Trimesh(vertices=scene.vertices, faces=scene.triangles, process=False)
    mesh.export(path, file_type="obj")
    logger.info("Scene %s written to %s", scene.name, path)


def moller_trumbore(origins: np.ndarray, directions: np.ndarray, corners: np.ndarray) -> np.ndarray:
    """
    Ray/triangle intersection distances for every ray against every triangle.

    :param origins: (R, 3) ray origins.
    :param directions: (R, 3) unit directions.
    :param corners: (K, 3, 3) triangle corners.
    :return: (R, K) hit distances, inf where there is no hit.
    """
    v0 = corners[:, 0, :]
    e1 = corners[:, 1, :] - v0
    e2 = corners[:, 2, :] - v0
    pvec = np.cross(directions[:, None, :], e2[None, :, :])
    det = np.einsum("kj,rkj->rk", e1, pvec)
    valid = np.abs(det) > HIT_EPS
    inv_det = np.where(valid, 1.0 / np.where(valid, det, 1.0), 0.0)
    tvec = origins[:, None, :] - v0[None, :, :]
    u = np.einsum("rkj,rkj->rk", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1[None, :, :])
    v = np.einsum("rj,rkj->rk", directions, qvec) * inv_det
    t = np.einsum("kj,rkj->rk", e2, qvec) * inv_det
    hit = valid & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > HIT_EPS)
    return np.where(hit, t, np.inf)


class TriangleIndex:
    """
    This module defines the TriangleIndex class, an axis-aligned cluster index over the triangles of a mesh used to
    find the nearest intersection of many rays at once.
    """

    def __init__(self, vertices: np.ndarray, triangles: np.ndarray, leaf_size: int = 32):
        """
        Constructor for the TriangleIndex class. Degenerate triangles are dropped here.

        :param vertices: (V, 3) vertices.
        :param triangles: (T, 3) vertex indices.
        :param leaf_size: Maximum triangles per cluster.
        """
        self.logger = logging.getLogger(__name__)
        corners = np.asarray(vertices, dtype=float)[np.asarray(triangles, dtype=np.int64)].reshape(-1, 3, 3)
        areas = 0.5 * np.linalg.norm(np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]), axis=1)
        keep = np.nonzero(areas > DEGENERATE_AREA)[0]
        if keep.size < corners.shape[0]:
            self.logger.warning("Skipping %d degenerate triangles", corners.shape[0] - keep.size)
        self.triangle_ids = keep
        self.corners = corners[keep]
        self.clusters = self.__split(np.arange(keep.size), leaf_size)
        boxes = [self.corners[c].reshape(-1, 3) for c in self.clusters]
        self.cluster_lower = np.array([box.min(axis=0) for box in boxes]).reshape(-1, 3)
        self.cluster_upper = np.array([box.max(axis=0) for box in boxes]).reshape(-1, 3)

    def __split(self, members: np.ndarray, leaf_size: int) -> list:
        """
        Recursive median split of triangle centroids along the widest axis.

        :param members: Indices into self.corners.
        :param leaf_size: Maximum cluster size.
        :return: List of index arrays.
        """
        if members.size <= leaf_size:
            return [members] if members.size else []
        centroids = self.corners[members].mean(axis=1)
        axis = int(np.argmax(centroids.max(axis=0) - centroids.min(axis=0)))
        order = members[np.argsort(centroids[:, axis], kind="stable")]
        half = order.size // 2
        return self.__split(order[:half], leaf_size) + self.__split(order[half:], leaf_size)

    @staticmethod
    def __slab_entry(origins: np.ndarray, inv_dir: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
        """
        Entry distance of each ray into a box, inf when the ray misses it.

        :return: (R,) entry distances (0 for origins inside the box).
        """
        with np.errstate(invalid="ignore"):
            t1 = (lower - origins) * inv_dir
            t2 = (upper - origins) * inv_dir
        t1 = np.nan_to_num(t1, nan=-np.inf)
        t2 = np.nan_to_num(t2, nan=np.inf)
        t_near = np.max(np.minimum(t1, t2), axis=1)
        t_far = np.min(np.maximum(t1, t2), axis=1)
        t_near = np.maximum(t_near, 0.0)
        return np.where(t_far >= t_near, t_near, np.inf)

    def intersect(self, origins: np.ndarray, directions: np.ndarray,
                  max_range: float = np.inf) -> Tuple[np.ndarray, np.ndarray]:
        """
        Nearest hit of every ray.

        :param origins: (R, 3) ray origins.
        :param directions: (R, 3) unit directions.
        :param max_range: Hits beyond this distance are ignored.
        :return: Distances (inf when no hit) and original triangle ids (-1 when no hit).
        """
        origins = np.asarray(origins, dtype=float).reshape(-1, 3)
        directions = np.asarray(directions, dtype=float).reshape(-1, 3)
        best = np.full(origins.shape[0], np.inf)
        best_id = np.full(origins.shape[0], -1, dtype=np.int64)
        with np.errstate(divide="ignore"):
            inv_dir = 1.0 / directions

        for start in range(0, origins.shape[0], RAY_CHUNK):
            part = slice(start, start + RAY_CHUNK)
            o, d, inv = origins[part], directions[part], inv_dir[part]
            chunk_best = np.full(o.shape[0], float(max_range))
            chunk_id = np.full(o.shape[0], -1, dtype=np.int64)
            entries = np.array([self.__slab_entry(o, inv, lo, hi)
                                for lo, hi in zip(self.cluster_lower, self.cluster_upper)]).reshape(-1, o.shape[0])
            # nearest clusters first so later clusters are culled by the running best distance
            for cluster_pos in np.argsort(entries.min(axis=1), kind="stable"):
                candidates = np.nonzero(entries[cluster_pos] <= chunk_best)[0]
                if not candidates.size:
                    continue
                members = self.clusters[cluster_pos]
                distances = moller_trumbore(o[candidates], d[candidates], self.corners[members])
                nearest = np.argmin(distances, axis=1)
                nearest_t = distances[np.arange(candidates.size), nearest]
                closer = nearest_t <= chunk_best[candidates]
                # equal distances keep the lowest triangle id so the result does not depend on cluster order
                ties = closer & (nearest_t == chunk_best[candidates])
                new_ids = self.triangle_ids[members[nearest]]
                closer &= ~ties | (new_ids < np.where(chunk_id[candidates] < 0, np.iinfo(np.int64).max,
                                                      chunk_id[candidates]))
                closer &= np.isfinite(nearest_t)
                chunk_best[candidates[closer]] = nearest_t[closer]
                chunk_id[candidates[closer]] = new_ids[closer]
            hit = chunk_id >= 0
            best[part] = np.where(hit, chunk_best, np.inf)
            best_id[part] = chunk_id
        return best, best_id


def ray_mesh_intersect(origin: np.ndarray, direction: np.ndarray,
                       scene: SceneMesh) -> Optional[Tuple[float, int]]:
    """
    Nearest positive-distance intersection of one ray with the scene.

    :param origin: Ray origin.
    :param direction: Unit direction.
    :param scene: Scene mesh.
    :return: (distance, triangle id), or None when the ray hits nothing.
    """
    if scene.is_empty:
        return None
    distances, ids = scene.index.intersect(np.asarray(origin)[None, :], np.asarray(direction)[None, :])
    if ids[0] < 0:
        return None
    return float(distances[0]), int(ids[0])

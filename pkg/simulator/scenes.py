""" Docstring for the scenes.py file.

Builtin synthetic scenes standing in for the evaluation models: a box, a facade-like wall behind a hazard strip, a
helicopter-like hull on a skirt and a small gabled house. Every scene sits on a flat ground square.
"""
from typing import Callable, Dict

import numpy as np
import trimesh

from errors import SceneError
from simulator.geometry import BoundingBox
from simulator.scene import SceneMesh, load_scene_mesh

BUILTIN_PREFIX = "builtin:"
GROUND_HALF_SIZE = 20.0


def ground_plane(half_size: float = GROUND_HALF_SIZE, height: float = 0.0) -> trimesh.Trimesh:
    """
    Square ground patch made of two triangles, facing up.

    :param half_size: Half of the square edge in meters.
    :param height: Ground height.
    :return: The ground mesh.
    """
    vertices = np.array([[-half_size, -half_size, height], [half_size, -half_size, height],
                         [half_size, half_size, height], [-half_size, half_size, height]])
    return trimesh.Trimesh(vertices=vertices, faces=[[0, 1, 2], [0, 2, 3]], process=False)


def box_mesh(lower, upper) -> trimesh.Trimesh:
    """
    Axis-aligned box between two corners.

    :param lower: Minimum corner.
    :param upper: Maximum corner.
    :return: The box mesh.
    """
    lower, upper = np.asarray(lower, dtype=float), np.asarray(upper, dtype=float)
    return trimesh.creation.box(extents=upper - lower,
                                transform=trimesh.transformations.translation_matrix((lower + upper) / 2.0))


def _assemble(name: str, parts: list, object_bbox: BoundingBox) -> SceneMesh:
    mesh = trimesh.util.concatenate(parts)
    return SceneMesh(np.asarray(mesh.vertices), np.asarray(mesh.faces), object_bbox, name=name)


def box_scene() -> SceneMesh:
    """ A 2 x 2 x 1.5 m box, taller than the sensor so its top stays unobserved. """
    lower, upper = (-1.0, -1.0, 0.0), (1.0, 1.0, 1.5)
    return _assemble("box", [ground_plane(), box_mesh(lower, upper)], BoundingBox(lower, upper))


def wall_scene() -> SceneMesh:
    """ A 10 x 0.3 x 3 m facade with a 0.25 m high kerb strip standing off its front face. """
    wall_lower, wall_upper = (-5.0, 0.0, 0.0), (5.0, 0.3, 3.0)
    strip = box_mesh((-3.5, -0.9, 0.0), (3.5, -0.6, 0.25))
    return _assemble("wall", [ground_plane(), box_mesh(wall_lower, wall_upper), strip],
                      BoundingBox(wall_lower, wall_upper))


def hull_scene() -> SceneMesh:
    """ An 8 m long capsule hull of radius 1.2 m resting on a 0.6 m skirt. """
    radius, length, center_z = 1.2, 8.0, 1.8
    hull = trimesh.creation.capsule(height=length - 2.0 * radius, radius=radius, count=[24, 24])
    hull.apply_transform(trimesh.transformations.rotation_matrix(np.pi / 2.0, [0.0, 1.0, 0.0]))
    hull.apply_translation([0.0, 0.0, center_z])
    skirt = box_mesh((-2.5, -0.5, 0.0), (2.5, 0.5, 0.6))
    bbox = BoundingBox((-length / 2.0, -radius, 0.0), (length / 2.0, radius, center_z + radius))
    return _assemble("hull", [ground_plane(), hull, skirt], bbox)


def house_scene() -> SceneMesh:
    """ A 4 x 3 m house with 2.5 m walls and a gable roof ridge at 3.5 m. """
    walls = box_mesh((-2.0, -1.5, 0.0), (2.0, 1.5, 2.5))
    roof_vertices = np.array([[-2.0, -1.5, 2.5], [2.0, -1.5, 2.5], [2.0, 1.5, 2.5], [-2.0, 1.5, 2.5],
                              [-2.0, 0.0, 3.5], [2.0, 0.0, 3.5]])
    roof_faces = [[0, 1, 5], [0, 5, 4], [2, 3, 4], [2, 4, 5], [0, 4, 3], [1, 2, 5]]
    roof = trimesh.Trimesh(vertices=roof_vertices, faces=roof_faces, process=False)
    return _assemble("house", [ground_plane(), walls, roof], BoundingBox((-2.0, -1.5, 0.0), (2.0, 1.5, 3.5)))


BUILTIN_SCENES: Dict[str, Callable[[], SceneMesh]] = {
    "box": box_scene,
    "wall": wall_scene,
    "hull": hull_scene,
    "house": house_scene,
}


def builtin_scene(name: str) -> SceneMesh:
    """
    Builds a builtin scene by name.

    :param name: One of BUILTIN_SCENES.
    :return: The scene.
    """
    try:
        return BUILTIN_SCENES[name]()
    except KeyError as e:
        raise SceneError(f"unknown builtin scene {name!r}, expected one of {sorted(BUILTIN_SCENES)}") from e


def resolve_scene(reference: str, object_bbox: BoundingBox = None) -> SceneMesh:
    """
    Loads the scene an episode config points at: "builtin:<name>" or an OBJ path.

    :param reference: Scene reference from the config.
    :param object_bbox: Object box for OBJ scenes; builtin scenes carry their own unless one is given.
    :return: The scene.
    """
    if reference.startswith(BUILTIN_PREFIX):
        scene = builtin_scene(reference[len(BUILTIN_PREFIX):])
        if object_bbox is not None:
            scene.object_bbox = object_bbox
        return scene
    if object_bbox is None:
        raise SceneError(f"scene {reference} needs an object bounding box in the config")
    return load_scene_mesh(reference, object_bbox)

""" Docstring for the conftest.py file.

Shared fixtures: small maps, flat terrain and fast episode configuration files.
"""
import textwrap

import numpy as np
import pytest

from mapping.occupancy_map import OccupancyOctree, OctreeParams
from simulator.geometry import BoundingBox, Pose
from terrain.elevation_map import build_elevation_map
from terrain.traversability import compute_traversability

FAST_EPISODE = """
[episode]
preset = sim-profile
start_pose = {start_pose}
rng_seed = {rng_seed}
max_scans = {max_scans}

[scene]
path = builtin:{scene}
ground_truth_spacing = 0.1

[sensor]
horizontal_step = 2.0
roll_steps = 5
noise_sigma = 0.0

[octree]
resolution = 0.1
bounds_margin = {bounds_margin}

[info_gain]
azimuth_step = 30.0
elevation_step = 15.0

[terrain]
extent = 8.0, 8.0

[planner]
n_nodes = 20
rrt_star_iterations = 200
u_thres = {u_thres}
"""


@pytest.fixture
def unit_octree() -> OccupancyOctree:
    """ 1 m voxels over [0, 10]^3, useful for counting voxels by hand. """
    return OccupancyOctree(BoundingBox((0.0, 0.0, 0.0), (10.0, 10.0, 10.0)), OctreeParams(resolution=1.0))


@pytest.fixture
def flat_traversability():
    """ Traversability of a dense flat floor 8 m wide around the origin. """
    xs, ys = np.meshgrid(np.arange(-4.0, 4.0, 0.05), np.arange(-4.0, 4.0, 0.05), indexing="ij")
    points = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(xs.size)])
    elevation = build_elevation_map(points, Pose((0.0, 0.0, 0.0)), extent=(8.0, 8.0), cell_size=0.1)
    return compute_traversability(elevation)


@pytest.fixture
def episode_file(tmp_path):
    """
    Writes a fast episode file and returns a factory. The box scene seen from -2.5, 0 with seed 3 is the default;
    scene, start_pose, bounds_margin and rng_seed change it.
    """
    def write(max_scans: int = 3, u_thres: str = "0.0", scene: str = "box", start_pose: str = "-2.5, 0.0, 0.0, 0.0",
              bounds_margin: float = 2.0, rng_seed: int = 3) -> str:
        path = tmp_path / f"fast_{scene}_{max_scans}_{u_thres}_{rng_seed}_{start_pose.replace(', ', '_')}.ini"
        text = FAST_EPISODE.format(max_scans=max_scans, u_thres=u_thres, scene=scene, start_pose=start_pose,
                                   bounds_margin=bounds_margin, rng_seed=rng_seed)
        path.write_text(textwrap.dedent(text), encoding="utf-8")
        return str(path)
    return write

""" Docstring for the __init__.py file.

"""
from .geometry import BoundingBox, Pose, wrap_angle
from .scene import SceneMesh, ray_mesh_intersect
from .sensor_sim import LidarModel, ScanActionModel, Sweep, downsample_filter, simulate_scan

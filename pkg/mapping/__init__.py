""" Docstring for the __init__.py file.

"""
from .occupancy_map import OccupancyOctree, OccupancyState, OctreeParams, VoxelKey
from .info_gain import InformationGainEvaluator, IgRayParams, ViKind, information_gain

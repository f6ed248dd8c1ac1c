from .elevation_map import ElevationMap, build_elevation_map
from .traversability import TerrainParams, TraversabilityMap, compute_traversability, is_pose_valid, valid_cell_mask

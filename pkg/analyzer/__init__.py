""" Docstring for the __init__.py file.

"""
from .coverage import CoverageReport, EpisodeMetrics, GroundTruth, default_threshold, point_cloud_coverage, \
    sample_ground_truth
from .distance_utils import travel_distance

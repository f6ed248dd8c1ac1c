""" Docstring for the file_manager.py file.

"""
import json
import logging
import os
from typing import List

import numpy as np
import pandas as pd

from mapping.occupancy_map import OccupancyOctree
from simulator.point_cloud_io import write_ply
from terrain.traversability import TraversabilityMap


class FileManager:
    """
    This module defines the FileManager class, which manages the files of an episode output folder. It writes the
    metrics and timing documents, the per-step table and candidate records, the accumulated cloud, the octree dump and
    the optional terrain grids.
    """

    def __init__(self, output_dir: str):
        """
        Constructor for the FileManager class. The output folder is created if it does not exist.

        :param output_dir: The directory where every artifact of the episode is written.
        """
        self.output_dir = output_dir
        self.logger = logging.getLogger(__name__)
        os.makedirs(output_dir, exist_ok=True)
        self.logger.info("FileManager initialized with output directory: %s", output_dir)

    def path(self, name: str) -> str:
        """ Full path of a file in the output folder. """
        return os.path.join(self.output_dir, name)

    def write_json(self, name: str, data: dict) -> str:
        """
        Writes a dictionary as an indented JSON file with sorted keys.

        :param name: File name inside the output folder.
        :param data: JSON-serialisable data.
        :return: The written path.
        """
        output_file_path = self.path(name)
        self.logger.info("Creating output file at: %s", output_file_path)
        with open(output_file_path, 'w', encoding='utf-8') as file:
            file.write(json.dumps(data, indent=4, sort_keys=True, default=_numpy_scalar))
        return output_file_path

    def write_steps(self, rows: List[dict]) -> str:
        """
        Writes the per-step table (step, c_p, d_t cumulative, t_nbv).

        :param rows: One dictionary per scan step.
        :return: The written path.
        """
        output_file_path = self.path("steps.csv")
        frame = pd.DataFrame(rows, columns=["step", "c_p", "c_p_observable", "d_t", "t_nbv"])
        frame.to_csv(output_file_path, index=False)
        self.logger.info("Step table with %d rows written to %s", len(frame), output_file_path)
        return output_file_path

    def write_candidates(self, step: int, data: dict) -> str:
        """ Writes the candidate record of one step as candidates_<step>.json. """
        return self.write_json(f"candidates_{step}.json", data)

    def write_cloud(self, points: np.ndarray, name: str = "accumulated.ply") -> str:
        """ Writes a point cloud as ASCII PLY. """
        output_file_path = self.path(name)
        write_ply(output_file_path, points)
        return output_file_path

    def write_octree(self, octree: OccupancyOctree, name: str = "octree.txt") -> str:
        """ Writes the octree dump. """
        output_file_path = self.path(name)
        octree.write_dump(output_file_path)
        return output_file_path

    def write_terrain(self, step: int, traversability: TraversabilityMap) -> List[str]:
        """
        Writes the height grid and the safe flags of one step as CSV grids (rows along x).

        :param step: Step index.
        :param traversability: Traversability map of the step.
        :return: The written paths.
        """
        heights_path = self.path(f"elevation_{step}.csv")
        safe_path = self.path(f"traversable_{step}.csv")
        pd.DataFrame(traversability.elevation.height).to_csv(heights_path, index=False, header=False,
                                                             float_format="%.4f")
        pd.DataFrame(traversability.safe.astype(int)).to_csv(safe_path, index=False, header=False)
        self.logger.debug("Terrain grids of step %d written to %s", step, self.output_dir)
        return [heights_path, safe_path]


def _numpy_scalar(value):
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")

""" Docstring for the episode_plots.py file.
"""
import logging
import os
from typing import Optional, Sequence

import matplotlib
import numpy as np

matplotlib.use("Agg")
from matplotlib import pyplot as plt  # pylint: disable=wrong-import-position
from matplotlib.colors import ListedColormap  # pylint: disable=wrong-import-position
from matplotlib.patches import Rectangle  # pylint: disable=wrong-import-position

from analyzer.coverage import EpisodeMetrics  # pylint: disable=wrong-import-position
from simulator.geometry import BoundingBox, Pose  # pylint: disable=wrong-import-position
from terrain.traversability import TraversabilityMap  # pylint: disable=wrong-import-position


class EpisodePlotter:
    """
    This module defines the EpisodePlotter class, which draws the coverage curve of an episode and a top view of the
    last elevation and traversability maps with the executed path, saving both as PNG files.
    """

    def __init__(self, output_dir: str):
        """
        Constructor for the EpisodePlotter class.

        :param output_dir: The directory where the figures will be saved.
        """
        self.logger = logging.getLogger(__name__)
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)

    def plot_coverage(self, metrics: EpisodeMetrics, label: str = "") -> str:
        """
        Plots point cloud coverage per scan step, against the full and the observable ground truth.

        :param metrics: Episode metrics.
        :param label: Title suffix, e.g. the volumetric information kind.
        :return: The path of the saved figure.
        """
        self.logger.info("Generating coverage plot for %d steps", metrics.n_s)
        steps = np.arange(1, metrics.n_s + 1)

        fig, ax = plt.subplots(figsize=(8, 5))
        ax.plot(steps, np.asarray(metrics.coverage_per_step) * 100.0, marker='o', color='blue', label='Full')
        ax.plot(steps, np.asarray(metrics.observable_coverage_per_step) * 100.0, marker='s', color='green',
                linestyle='--', label='Observable')

        # Add title and labels
        ax.set_title(f'Point cloud coverage per step {label}'.strip())
        ax.set_xlabel('Scan step')
        ax.set_ylabel('Coverage (%)')
        ax.set_ylim(0.0, 100.0)
        ax.grid(True)
        ax.legend()

        output_file_path = os.path.join(self.output_dir, "coverage.png")
        fig.savefig(output_file_path, bbox_inches='tight', dpi=150)
        plt.close(fig)
        self.logger.info("Coverage plot saved to %s", output_file_path)
        return output_file_path

    # pylint: disable-msg=too-many-locals
    def plot_terrain(self, traversability: TraversabilityMap, pose_history: Sequence[Pose],
                     object_bbox: Optional[BoundingBox] = None, candidates: Optional[np.ndarray] = None) -> str:
        """
        Plots the elevation map next to the traversability map, both with the executed path on top.

        :param traversability: Traversability map of the last step.
        :param pose_history: Executed robot poses.
        :param object_bbox: Object box drawn as a rectangle.
        :param candidates: (N, 2) scan candidate positions of the last step.
        :return: The path of the saved figure.
        """
        self.logger.info("Generating terrain plot")
        elevation = traversability.elevation
        lower = elevation.lower_corner
        extent = [lower[0], lower[0] + elevation.extent[0], lower[1], lower[1] + elevation.extent[1]]
        path = np.array([pose.xy for pose in pose_history]).reshape(-1, 2)

        fig, axs = plt.subplots(1, 2, figsize=(14, 6))
        height_image = axs[0].imshow(elevation.height.T, origin='lower', extent=extent, cmap='terrain')
        fig.colorbar(height_image, ax=axs[0], label='Height (meters)')
        axs[0].set_title('Elevation map')

        # Unknown cells in grey, unsafe in red, safe in green
        classes = np.where(~elevation.known, 0, np.where(traversability.safe, 2, 1))
        axs[1].imshow(classes.T, origin='lower', extent=extent,
                      cmap=ListedColormap(['lightgrey', 'red', 'green']), vmin=0, vmax=2)
        axs[1].set_title('Traversability')

        for ax in axs:
            ax.plot(path[:, 0], path[:, 1], color='black', linewidth=1.5, label='Path')
            ax.scatter(path[:1, 0], path[:1, 1], color='blue', zorder=3, label='Start')
            if candidates is not None and len(candidates):
                ax.scatter(candidates[:, 0], candidates[:, 1], s=6, color='orange', label='Candidates')
            if object_bbox is not None:
                ax.add_patch(Rectangle(tuple(object_bbox.lower[:2]), *object_bbox.size[:2],
                                       fill=False, edgecolor='magenta', linewidth=1.5))
            ax.set_xlabel('x (meters)')
            ax.set_ylabel('y (meters)')
            ax.set_aspect('equal')
        axs[1].legend(loc='upper right')

        plt.tight_layout()
        output_file_path = os.path.join(self.output_dir, "terrain.png")
        fig.savefig(output_file_path, bbox_inches='tight', dpi=150)
        plt.close(fig)
        self.logger.info("Terrain plot saved to %s", output_file_path)
        return output_file_path

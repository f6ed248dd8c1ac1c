""" Docstring for the episode_controller.py file.

"""
import dataclasses
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from analyzer.coverage import EpisodeMetrics, GroundTruth, default_threshold, point_cloud_coverage, \
    sample_ground_truth
from analyzer.distance_utils import travel_distance
from analyzer.episode_plots import EpisodePlotter
from controller.episode_config import EpisodeConfig
from controller.file_manager import FileManager
from errors import ActiveMappingError, PlannerError
from mapping.info_gain import InformationGainEvaluator
from mapping.occupancy_map import OccupancyOctree
from planner.costs_utility import ScanCandidate, VisitedRegistry, position_cost, traversal_cost
from planner.rrt import PathPlan, PlannerParams, RrtTree, check_termination, grow_rrt, replan_rrt_star, \
    select_nbv
from simulator.geometry import Pose
from simulator.scenes import resolve_scene
from simulator.sensor_sim import downsample_filter, simulate_scan
from terrain.elevation_map import build_elevation_map
from terrain.traversability import TraversabilityMap, compute_traversability, is_pose_valid

TERMINATION_THRESHOLD = "threshold"
TERMINATION_MAX_SCANS = "max_scans"
TERMINATION_PLANNER = "planner_failure"
TERMINATION_ERROR = "error"


@dataclass
class EpisodeLog:
    """
    Record of one episode: ordered step records, final metrics and the single termination reason.
    """
    config: dict
    steps: List[dict] = field(default_factory=list)
    metrics: EpisodeMetrics = field(default_factory=EpisodeMetrics)
    termination_reason: Optional[str] = None
    error: Optional[dict] = None
    pose_history: List[Pose] = field(default_factory=list)
    step_timings: List[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        """ Deterministic record written as metrics.json. """
        return {"config": self.config, "termination_reason": self.termination_reason, "error": self.error,
                "metrics": self.metrics.to_dict(), "steps": self.steps,
                "pose_history": [pose.to_list() for pose in self.pose_history]}

    def timing_dict(self) -> dict:
        """ Wall clock figures written as timing.json. """
        return {**self.metrics.timing_dict(), "t_nbv_per_step": self.step_timings}


def footprint_points(pose: Pose, radius: float, spacing: float) -> np.ndarray:
    """
    Ground points of the disk the robot stands on, at foot height.

    :param pose: Robot pose.
    :param radius: Disk radius in meters.
    :param spacing: Grid spacing in meters.
    :return: (N, 3) points.
    """
    reach = int(np.ceil(radius / spacing))
    offsets = np.arange(-reach, reach + 1) * spacing
    dx, dy = np.meshgrid(offsets, offsets, indexing="ij")
    inside = dx ** 2 + dy ** 2 <= radius ** 2
    x, y, z = pose.position
    return np.stack([x + dx[inside], y + dy[inside], np.full(int(inside.sum()), z)], axis=1)


class EpisodeController:
    """
    This module defines the EpisodeController class, which runs the scan, map, plan and move loop of one active
    mapping episode until the best utility falls below the threshold, the scan budget is used up or the planner
    fails. When an output directory is given every artifact of the episode is written there.
    """

    # pylint: disable=too-many-instance-attributes
    def __init__(self, config: EpisodeConfig, output_dir: Optional[str] = None, plots: bool = False):
        """
        Constructor for the EpisodeController class. Loads the scene and samples its ground truth.

        :param config: Episode configuration.
        :param output_dir: Artifact directory, or None to keep everything in memory.
        :param plots: Also write the coverage and terrain figures.
        """
        self.logger = logging.getLogger(__name__)
        self.config = config
        self.file_manager = FileManager(output_dir) if output_dir else None
        self.plotter = EpisodePlotter(output_dir) if output_dir and plots else None

        self.scene = resolve_scene(config.scene_path, config.object_bbox)
        self.object_bbox = self.scene.object_bbox
        self.octree = OccupancyOctree(self.object_bbox.inflate(config.octree.bounds_margin), config.octree)
        self.ground_truth: GroundTruth = sample_ground_truth(self.scene, config.ground_truth_spacing,
                                                             seed=config.rng_seed)
        self.observable = self.ground_truth.observable(config.lidar.sensor_height,
                                                       config.action.effective_vertical_fov(config.lidar),
                                                       config.position_cost.d_thres)
        self.threshold = config.coverage_threshold or default_threshold(config.octree.resolution)

        self.visited = VisitedRegistry()
        self.robot = config.start_pose
        self.accumulated: List[np.ndarray] = []
        self.terrain_points: List[np.ndarray] = []
        self.traversability: Optional[TraversabilityMap] = None
        self.last_candidates = np.empty((0, 2))
        self.log = EpisodeLog(config=config.to_dict(), pose_history=[self.robot])
        self.logger.info("EpisodeController initialized for %s with %d ground truth points (%d observable)",
                         config.name, len(self.ground_truth), int(self.observable.sum()))

    def __seed_footprint(self):
        radius = self.config.terrain.footprint_radius + 2.0 * self.config.terrain.cell_size
        self.terrain_points.append(footprint_points(self.robot, radius, self.config.terrain.cell_size / 2.0))

    def __planner_params(self, step: int) -> PlannerParams:
        return dataclasses.replace(self.config.planner, rng_seed=self.config.rng_seed * 1000 + step)

    def accumulated_cloud(self) -> np.ndarray:
        """ Every filtered sweep so far, stacked. """
        return np.concatenate(self.accumulated) if self.accumulated else np.empty((0, 3))

    def __coverage(self) -> tuple:
        cloud = self.accumulated_cloud()
        if not len(self.ground_truth):
            return 0.0, 0.0
        full = point_cloud_coverage(self.ground_truth.points, cloud, self.threshold)
        self.log.metrics.final_coverage = full
        observable = self.ground_truth.points[self.observable]
        partial = point_cloud_coverage(observable, cloud, self.threshold).c_p if len(observable) else 0.0
        return full.c_p, partial

    def __scan_and_map(self, step: int) -> dict:
        """
        Scans at the current pose, filters the sweep, updates the occupancy and terrain maps and the coverage.

        :param step: Step index.
        :return: Step record.
        """
        config = self.config
        sweep = simulate_scan(self.scene, self.robot, config.lidar, config.action,
                              rng_seed=config.rng_seed * 1000 + step)
        filtered = downsample_filter(sweep, config.sweep_filter.leaf_size, config.sweep_filter.outlier_k,
                                     config.sweep_filter.outlier_stddev)
        record = {"step": step, "pose": self.robot.to_list(), "raw_points": len(sweep),
                  "filtered_points": len(filtered)}
        if len(filtered):
            record["insert"] = self.octree.insert_sweep(filtered.points, filtered.sensor_origin).to_dict()
            self.accumulated.append(filtered.points)
            self.terrain_points.append(filtered.points)
        else:
            self.logger.warning("Step %d produced an empty sweep, maps unchanged", step)
        self.visited.append(self.robot)

        c_p, c_p_observable = self.__coverage()
        self.log.metrics.record_step(c_p, c_p_observable)
        record.update({"c_p": c_p, "c_p_observable": c_p_observable,
                       "d_t": travel_distance(self.log.pose_history)})

        terrain = config.terrain
        elevation = build_elevation_map(np.concatenate(self.terrain_points), self.robot, terrain.extent,
                                        terrain.cell_size)
        self.traversability = compute_traversability(elevation, terrain.slope_max, terrain.step_max, terrain.window)
        self.logger.info("Step %d scanned at %s: c_p %.4f (observable %.4f)", step,
                         np.round(self.robot.xyz, 3).tolist(), c_p, c_p_observable)
        return record

    def __evaluate_candidates(self, tree: RrtTree) -> List[ScanCandidate]:
        """
        Scores every node of the candidate tree.

        :param tree: Candidate tree of the current step.
        :return: The scored candidates.
        """
        config = self.config
        evaluator = InformationGainEvaluator(self.octree, config.info_gain, config.vi_kind, self.object_bbox)
        gains = evaluator.gains(tree.nodes)
        candidates = []
        for index, (pose, gain) in enumerate(zip(tree.nodes, gains)):
            candidate = ScanCandidate(pose=pose, g=float(gain),
                                      p_cost=position_cost(pose, self.visited, self.object_bbox, config.position_cost),
                                      t_cost=traversal_cost(pose, self.robot, self.traversability,
                                                            config.traversal_cost),
                                      node_index=index, path_distance=tree.cost[index])
            self.logger.debug("Candidate %d: G %.4f P %.3f T %.3f U %.4f", index, candidate.g, candidate.p_cost,
                              candidate.t_cost, candidate.utility)
            candidates.append(candidate)
        return candidates

    def __move(self, plan: PathPlan):
        """
        Teleports the robot along the validated waypoints of a plan.

        :param plan: Path plan starting at the current pose.
        """
        footprint = self.config.terrain.footprint_radius
        for waypoint in plan.waypoints[1:]:
            if not is_pose_valid(waypoint, self.traversability, footprint):
                self.logger.warning("Waypoint %s is not valid, stopping there", np.round(waypoint.xy, 3).tolist())
                break
            self.robot = waypoint
            self.log.pose_history.append(waypoint)
        self.__seed_footprint()

    # pylint: disable=too-many-statements
    def run(self) -> EpisodeLog:
        """
        Runs the episode. A module error ends the episode with the error termination reason: the error record is kept
        in the log, the artifacts written so far are saved and the error is re-raised with its step index.

        :return: The episode log.
        """
        config = self.config
        start_time = time.perf_counter()
        nbv_times = []
        self.__seed_footprint()
        self.logger.info("Episode %s started at %s with vi %s", config.name, self.robot.to_list(),
                         config.vi_kind.value)

        for step in range(config.max_scans):
            try:
                record = self.__scan_and_map(step)
                self.log.steps.append(record)
                if step + 1 >= config.max_scans:
                    self.log.termination_reason = TERMINATION_MAX_SCANS
                    break

                try:
                    tree = grow_rrt(self.robot, self.traversability, self.__planner_params(step))
                    nbv_start = time.perf_counter()
                    candidates = self.__evaluate_candidates(tree)
                    nbv = select_nbv(candidates)
                    nbv_time = time.perf_counter() - nbv_start
                except PlannerError as e:
                    e.step = step
                    self.logger.error("Planner failure at step %d: %s", step, e.message)
                    self.log.termination_reason = TERMINATION_PLANNER
                    self.log.error = e.to_record()
                    break
                nbv_times.append(nbv_time)
                self.log.step_timings.append(nbv_time)
                self.last_candidates = tree.positions()
                record.update({"n_candidates": len(candidates), "nbv": nbv.to_dict()})
                if self.file_manager:
                    self.file_manager.write_candidates(step, {"step": step, "nbv": nbv.node_index,
                                                              "candidates": [c.to_dict() for c in candidates]})

                if check_termination(nbv.utility, config.planner.u_thres):
                    self.logger.info("Best utility %.5f below %.5f, exploration finished", nbv.utility,
                                     config.planner.u_thres)
                    self.log.termination_reason = TERMINATION_THRESHOLD
                    break

                plan = replan_rrt_star(self.robot, nbv.pose, self.traversability, self.__planner_params(step),
                                       fallback=tree.path_to(nbv.node_index))
                record["path"] = plan.to_dict()
                self.__move(plan)
            except ActiveMappingError as e:
                e.step = step if e.step is None else e.step
                self.logger.error("Episode %s failed at step %d: %s", config.name, step, e.message)
                self.log.termination_reason = TERMINATION_ERROR
                self.log.error = e.to_record()
                self.__finish(start_time, nbv_times)
                raise

        self.__finish(start_time, nbv_times)
        return self.log

    def __finish(self, start_time: float, nbv_times: List[float]):
        """
        Completes the metrics and writes the artifacts.

        :param start_time: perf_counter value at the episode start.
        :param nbv_times: NBV computation time of every planning step.
        """
        metrics = self.log.metrics
        metrics.d_t = travel_distance(self.log.pose_history)
        metrics.t_all = time.perf_counter() - start_time
        metrics.t_nbv = float(np.mean(nbv_times)) if nbv_times else 0.0
        self.logger.info("Episode %s finished (%s): %d scans, c_p %.4f, d_t %.2f m, t_all %.1f s, t_nbv %.2f s",
                         self.config.name, self.log.termination_reason, metrics.n_s,
                         metrics.coverage_per_step[-1] if metrics.coverage_per_step else 0.0, metrics.d_t,
                         metrics.t_all, metrics.t_nbv)
        if self.file_manager:
            self.__write_artifacts()

    def __write_artifacts(self):
        manager = self.file_manager
        manager.write_json("metrics.json", self.log.to_dict())
        manager.write_json("timing.json", self.log.timing_dict())
        timings = dict(enumerate(self.log.step_timings))
        rows = []
        for record in self.log.steps:
            rows.append({"step": record["step"], "c_p": record["c_p"], "c_p_observable": record["c_p_observable"],
                         "d_t": record["d_t"],
                         "t_nbv": timings.get(record["step"], float("nan"))})
        manager.write_steps(rows)
        manager.write_cloud(self.accumulated_cloud())
        manager.write_octree(self.octree)
        if self.traversability is not None:
            manager.write_terrain(len(self.log.steps) - 1, self.traversability)
        if self.plotter:
            self.plotter.plot_coverage(self.log.metrics, self.config.vi_kind.value.upper())
            if self.traversability is not None:
                self.plotter.plot_terrain(self.traversability, self.log.pose_history, self.object_bbox,
                                          self.last_candidates)


def run_episode(config: EpisodeConfig, output_dir: Optional[str] = None, plots: bool = False) -> EpisodeLog:
    """
    Runs one active mapping episode.

    :param config: Episode configuration.
    :param output_dir: Artifact directory, or None.
    :param plots: Also write figures.
    :return: The episode log.
    """
    return EpisodeController(config, output_dir, plots).run()

""" Docstring for the test_mission.py file.

"""
import json
import math
import os
import time

import numpy as np
import pandas as pd
import pytest

import controller.episode_controller as episode_controller
from analyzer.coverage import default_threshold, point_cloud_coverage, sample_ground_truth
from controller.episode_config import load_episode_config
from controller.episode_controller import (TERMINATION_ERROR, TERMINATION_MAX_SCANS, TERMINATION_PLANNER,
                                          TERMINATION_THRESHOLD, EpisodeController, run_episode)
from errors import ConfigError, MapBoundsError
from mapping.info_gain import ViKind
from mapping.occupancy_map import OccupancyOctree
from simulator.geometry import Pose
from simulator.point_cloud_io import read_ply
from simulator.scenes import box_scene
from simulator.sensor_sim import LidarModel, ScanActionModel, downsample_filter, simulate_scan
from terrain.traversability import is_pose_valid


def test_infinite_threshold_stops_after_the_first_scan(episode_file, tmp_path):
    config = load_episode_config(episode_file(max_scans=5, u_thres="inf"))
    log = run_episode(config, str(tmp_path / "out"))
    assert log.termination_reason == TERMINATION_THRESHOLD
    assert log.metrics.n_s == 1
    assert len(log.pose_history) == 1
    assert log.metrics.d_t == 0.0
    assert os.path.isfile(tmp_path / "out" / "candidates_0.json")


@pytest.mark.slow
def test_scan_budget_ends_the_episode(episode_file, tmp_path):
    output_dir = tmp_path / "out"
    log = run_episode(load_episode_config(episode_file(max_scans=3)), str(output_dir))
    assert log.termination_reason == TERMINATION_MAX_SCANS
    assert log.error is None
    assert log.metrics.n_s == 3
    assert [record["step"] for record in log.steps] == [0, 1, 2]

    coverage = log.metrics.coverage_per_step
    assert all(0.0 <= value <= 1.0 for value in coverage)
    assert all(later >= earlier for earlier, later in zip(coverage[:-1], coverage[1:]))
    assert coverage[-1] > 0.0

    # scanned poses are visited and the cumulative distance only grows
    distances = [record["d_t"] for record in log.steps]
    assert distances == sorted(distances)
    assert log.metrics.d_t >= distances[-1]

    for name in ("metrics.json", "timing.json", "steps.csv", "accumulated.ply", "octree.txt", "elevation_2.csv",
                 "traversable_2.csv", "candidates_0.json", "candidates_1.json"):
        assert os.path.isfile(output_dir / name), name
    assert not os.path.isfile(output_dir / "candidates_2.json")

    steps = pd.read_csv(output_dir / "steps.csv")
    assert list(steps.columns) == ["step", "c_p", "c_p_observable", "d_t", "t_nbv"]
    np.testing.assert_allclose(steps["c_p"], coverage)
    assert len(read_ply(str(output_dir / "accumulated.ply"))) > 0

    octree = OccupancyOctree.load_dump(str(output_dir / "octree.txt"))
    assert octree.params.resolution == pytest.approx(0.1)

    metrics = json.loads((output_dir / "metrics.json").read_text(encoding="utf-8"))
    assert metrics["termination_reason"] == TERMINATION_MAX_SCANS
    assert metrics["metrics"]["n_s"] == 3


@pytest.mark.slow
def test_same_seed_gives_the_same_episode(episode_file, tmp_path):
    path = episode_file(max_scans=2)
    run_episode(load_episode_config(path), str(tmp_path / "first"))
    run_episode(load_episode_config(path), str(tmp_path / "second"))
    first = (tmp_path / "first" / "metrics.json").read_text(encoding="utf-8")
    second = (tmp_path / "second" / "metrics.json").read_text(encoding="utf-8")
    assert first == second


def test_single_scan_budget_skips_planning(episode_file):
    log = run_episode(load_episode_config(episode_file(max_scans=1)))
    assert log.termination_reason == TERMINATION_MAX_SCANS
    assert log.metrics.n_s == 1
    assert "nbv" not in log.steps[0]
    assert log.step_timings == []


def test_config_values_and_overrides(episode_file):
    path = episode_file(max_scans=4, u_thres="0.05")
    config = load_episode_config(path)
    assert config.max_scans == 4
    assert config.planner.u_thres == pytest.approx(0.05)
    assert config.planner.rng_seed == 3
    assert config.octree.resolution == pytest.approx(0.1)
    assert config.vi_kind is ViKind.OCCLUSION_AWARE
    assert config.start_pose.to_list() == [-2.5, 0.0, 0.0, 0.0]

    changed = load_episode_config(path, {"episode": {"vi": "rse", "rng_seed": "9"}})
    assert changed.vi_kind is ViKind.REAR_SIDE_ENTROPY
    assert changed.rng_seed == 9
    assert changed.planner.rng_seed == 9


@pytest.mark.parametrize("section, key, value", [("episode", "max_scans", "0"), ("octree", "resolution", "abc"),
                                                 ("planner", "unknown_key", "1"), ("episode", "start_pose", "1,2"),
                                                 ("octree", "occ_threshold", "0.3")])
def test_bad_values_are_config_errors(episode_file, section, key, value):
    with pytest.raises(ConfigError):
        load_episode_config(episode_file(), {section: {key: value}})


def test_unknown_section_and_missing_file(episode_file, tmp_path):
    path = episode_file()
    with open(path, "a", encoding="utf-8") as file:
        file.write("\n[mystery]\nkey = 1\n")
    with pytest.raises(ConfigError):
        load_episode_config(path)
    with pytest.raises(ConfigError):
        load_episode_config(str(tmp_path / "missing.ini"))


def test_module_error_is_recorded_before_it_propagates(episode_file, tmp_path):
    # the sensor origin of the first scan lies outside the occupancy map
    output_dir = tmp_path / "out"
    controller = EpisodeController(load_episode_config(episode_file(max_scans=2, start_pose="-3.5, 0.0, 0.0, 0.0")),
                                   str(output_dir))
    with pytest.raises(MapBoundsError) as error_info:
        controller.run()
    assert error_info.value.step == 0

    log = controller.log
    assert log.termination_reason == TERMINATION_ERROR
    assert log.error["error"] == "map_bounds"
    assert log.error["step"] == 0
    assert log.steps == []

    metrics = json.loads((output_dir / "metrics.json").read_text(encoding="utf-8"))
    assert metrics["termination_reason"] == TERMINATION_ERROR
    assert metrics["error"]["error"] == "map_bounds"
    assert os.path.isfile(output_dir / "timing.json")


def test_nbv_time_leaves_out_candidate_tree_growth(episode_file, monkeypatch):
    marks = {}
    grow_rrt, select_nbv = episode_controller.grow_rrt, episode_controller.select_nbv

    def slow_grow_rrt(*args, **kwargs):
        marks.setdefault("grow_start", time.perf_counter())
        tree = grow_rrt(*args, **kwargs)
        time.sleep(0.5)
        return tree

    def timed_select_nbv(*args, **kwargs):
        nbv = select_nbv(*args, **kwargs)
        marks.setdefault("selected", time.perf_counter())
        return nbv

    monkeypatch.setattr(episode_controller, "grow_rrt", slow_grow_rrt)
    monkeypatch.setattr(episode_controller, "select_nbv", timed_select_nbv)
    log = run_episode(load_episode_config(episode_file(max_scans=2)))

    assert len(log.step_timings) == 1
    assert log.step_timings[0] < marks["selected"] - marks["grow_start"] - 0.4
    assert log.metrics.t_nbv == pytest.approx(log.step_timings[0])


def distance_to_rectangle(xy: np.ndarray, lower, upper) -> float:
    """ Horizontal distance from a point to an axis-aligned rectangle, 0 inside it. """
    gap = np.maximum(np.maximum(np.asarray(lower) - xy, xy - np.asarray(upper)), 0.0)
    return float(np.hypot(*gap))


@pytest.mark.slow
@pytest.mark.parametrize("seed", [7, 11])
def test_wall_episode_keeps_the_footprint_off_the_hazards(episode_file, monkeypatch, seed):
    config = load_episode_config(episode_file(max_scans=4, scene="wall", start_pose="0.0, -2.2, 0.0, 1.5708",
                                              bounds_margin=3.0, rng_seed=seed))
    controller = EpisodeController(config)
    maps = []
    compute_traversability = episode_controller.compute_traversability

    def recorded(*args, **kwargs):
        traversability = compute_traversability(*args, **kwargs)
        maps.append((len(controller.log.pose_history), traversability))
        return traversability

    monkeypatch.setattr(episode_controller, "compute_traversability", recorded)
    log = controller.run()
    assert log.termination_reason in (TERMINATION_MAX_SCANS, TERMINATION_THRESHOLD, TERMINATION_PLANNER)
    assert len(maps) == log.metrics.n_s

    # every pose reached during a step is valid on the terrain map of that step
    radius, cell = config.terrain.footprint_radius, config.terrain.cell_size
    bounds = [first for first, _ in maps[1:]] + [len(log.pose_history)]
    for (first, traversability), end in zip(maps, bounds):
        for pose in log.pose_history[first:end]:
            assert is_pose_valid(pose, traversability, radius), pose.to_list()

    # and stands clear of the kerb strip and the facade
    for pose in log.pose_history:
        assert distance_to_rectangle(pose.xy, (-3.5, -0.9), (3.5, -0.6)) >= radius - cell
        assert distance_to_rectangle(pose.xy, (-5.0, 0.0), (5.0, 0.3)) >= radius - cell


@pytest.mark.slow
def test_wall_episode_covers_the_facade(episode_file, tmp_path):
    config = load_episode_config(episode_file(max_scans=4, scene="wall", start_pose="0.0, -2.2, 0.0, 1.5708",
                                              bounds_margin=3.0, rng_seed=7))
    log = run_episode(config, str(tmp_path / "wall"))
    assert log.termination_reason != TERMINATION_ERROR
    for series in (log.metrics.coverage_per_step, log.metrics.observable_coverage_per_step):
        assert all(later >= earlier for earlier, later in zip(series[:-1], series[1:]))
    assert log.metrics.observable_coverage_per_step[-1] > 0.1


@pytest.mark.slow
def test_box_top_stays_unseen_from_the_ground():
    scene = box_scene()
    lidar, action = LidarModel(), ScanActionModel()
    poses = [Pose((0.0, -2.3, 0.0)), Pose((2.3, 0.0, 0.0), yaw=math.pi / 2.0), Pose((0.0, 2.3, 0.0), yaw=math.pi),
             Pose((-2.3, 0.0, 0.0), yaw=-math.pi / 2.0)]
    cloud = np.concatenate([downsample_filter(simulate_scan(scene, pose, lidar, action, rng_seed=index)).points
                            for index, pose in enumerate(poses)])

    ground_truth = sample_ground_truth(scene, 0.05)
    threshold = default_threshold(0.05)
    top = ((np.abs(ground_truth.points[:, :2]) < 0.85).all(axis=1)) & (ground_truth.normals[:, 2] > 0.5)
    assert top.any()

    assert point_cloud_coverage(ground_truth.points, cloud, threshold).c_p < 1.0
    assert point_cloud_coverage(ground_truth.points[ground_truth.side], cloud, threshold).c_p >= 0.9
    assert point_cloud_coverage(ground_truth.points[top], cloud, threshold).c_p == 0.0

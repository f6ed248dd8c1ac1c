""" Docstring for the test_planner.py file.

"""
import dataclasses
import math

import numpy as np
import pytest

from errors import PlannerError
from planner.costs_utility import ScanCandidate
from planner.rrt import (PlannerParams, ValidityChecker, check_termination, grow_rrt, path_length, replan_rrt_star,
                         select_nbv)
from simulator.geometry import Pose

FAST = PlannerParams(n_nodes=40, rrt_star_iterations=600, rng_seed=1)


def dense_route(waypoints, spacing: float = 0.01) -> np.ndarray:
    points = [waypoints[0].xy]
    for first, second in zip(waypoints[:-1], waypoints[1:]):
        count = max(int(math.ceil(np.hypot(*(second.xy - first.xy)) / spacing)), 1)
        points.extend(np.linspace(first.xy, second.xy, count + 1)[1:])
    return np.array(points)


def candidate(index: int, u: float, distance: float = 0.0) -> ScanCandidate:
    return ScanCandidate(pose=Pose((float(index), 0.0, 0.0)), g=u, p_cost=0.0, t_cost=0.0, node_index=index,
                         path_distance=distance)


def test_flat_map_gets_every_node(flat_traversability):
    tree = grow_rrt(Pose((0.0, 0.0, 0.0)), flat_traversability, PlannerParams(n_nodes=150))
    assert len(tree) == 150
    positions = tree.positions()
    assert np.all(np.abs(positions) <= 4.0)
    assert all(-1 <= parent < index for index, parent in enumerate(tree.parent))
    checker = ValidityChecker(flat_traversability, 0.4, 0.1)
    assert checker.points_valid(positions).all()


def test_tree_edges_respect_the_step_and_costs_add_up(flat_traversability):
    params = PlannerParams(n_nodes=60, step=0.5)
    tree = grow_rrt(Pose((0.0, 0.0, 0.0)), flat_traversability, params)
    for index, parent in enumerate(tree.parent):
        parent_xy = tree.root.xy if parent < 0 else tree.nodes[parent].xy
        edge = float(np.hypot(*(tree.nodes[index].xy - parent_xy)))
        assert edge <= 0.5 + 1e-9
        parent_cost = 0.0 if parent < 0 else tree.cost[parent]
        assert tree.cost[index] == pytest.approx(parent_cost + edge)
        assert path_length(tree.path_to(index)) == pytest.approx(tree.cost[index])


def test_unsafe_map_is_an_error(flat_traversability):
    flat_traversability.safe[:] = False
    with pytest.raises(PlannerError):
        grow_rrt(Pose((0.0, 0.0, 0.0)), flat_traversability, FAST)


def test_budget_exhaustion_returns_a_partial_tree(flat_traversability):
    # safe band 0 <= y < 2
    flat_traversability.safe[:, :40] = False
    flat_traversability.safe[:, 60:] = False
    params = PlannerParams(n_nodes=150, sample_budget_factor=1)
    tree = grow_rrt(Pose((0.0, 1.0, 0.0)), flat_traversability, params)
    assert 0 < len(tree) < 150
    assert tree.samples_used == 150


def test_nodes_stay_in_the_corridor(flat_traversability):
    # safe band |y| < 0.6, everything else unsafe
    flat_traversability.safe[:, :34] = False
    flat_traversability.safe[:, 46:] = False
    tree = grow_rrt(Pose((0.0, 0.0, 0.0)), flat_traversability, FAST)
    assert len(tree) > 0
    assert all(flat_traversability.is_cell_safe(node.xy) for node in tree.nodes)
    assert np.all(np.abs(tree.positions()[:, 1]) < 0.6)


def test_same_seed_same_tree(flat_traversability):
    first = grow_rrt(Pose((0.0, 0.0, 0.0)), flat_traversability, FAST)
    second = grow_rrt(Pose((0.0, 0.0, 0.0)), flat_traversability, FAST)
    other = grow_rrt(Pose((0.0, 0.0, 0.0)), flat_traversability, dataclasses.replace(FAST, rng_seed=2))
    np.testing.assert_array_equal(first.positions(), second.positions())
    assert first.parent == second.parent
    assert not np.array_equal(first.positions(), other.positions())


def test_select_nbv_takes_the_highest_utility():
    assert select_nbv([candidate(0, 0.2), candidate(1, 0.9), candidate(2, 0.4)]).node_index == 1


def test_select_nbv_ties_go_to_the_nearest_candidate():
    chosen = select_nbv([candidate(0, 0.5, 3.0), candidate(1, 0.5, 1.0), candidate(2, 0.5, 2.0)])
    assert chosen.node_index == 1
    assert select_nbv([candidate(4, 0.5, 1.0), candidate(3, 0.5, 1.0)]).node_index == 3


def test_select_nbv_rejects_an_empty_set():
    with pytest.raises(PlannerError):
        select_nbv([])


def test_check_termination():
    assert check_termination(0.01, 0.05)
    assert not check_termination(0.05, 0.05)
    assert not check_termination(1.2, 0.05)


def test_low_utilities_signal_termination():
    best = select_nbv([candidate(0, 0.01), candidate(1, 0.02)])
    assert check_termination(best.utility, 0.03)


def test_planner_params_validation():
    with pytest.raises(ValueError):
        PlannerParams(n_nodes=0)
    with pytest.raises(ValueError):
        PlannerParams(goal_bias=1.0)


def test_straight_line_is_close_to_euclidean(flat_traversability):
    start, goal = Pose((-2.0, 0.0, 0.0)), Pose((2.0, 0.5, 0.0))
    plan = replan_rrt_star(start, goal, flat_traversability, FAST)
    euclidean = float(np.hypot(4.0, 0.5))
    assert not plan.fallback
    assert plan.length <= 1.05 * euclidean
    assert plan.length >= euclidean - 1e-9
    assert plan.first_found_length >= plan.length - 1e-9
    np.testing.assert_allclose(plan.waypoints[0].xy, start.xy)
    assert np.hypot(*(plan.waypoints[-1].xy - goal.xy)) <= FAST.goal_tolerance


def test_route_goes_through_the_gap(flat_traversability):
    # unsafe wall at 1.0 <= x < 1.2 with a gap for 1.5 <= y < 3.5
    flat_traversability.safe[50:52, :55] = False
    flat_traversability.safe[50:52, 75:] = False
    params = dataclasses.replace(FAST, rrt_star_iterations=2000)
    plan = replan_rrt_star(Pose((-1.0, 0.0, 0.0)), Pose((3.0, 0.0, 0.0)), flat_traversability, params)
    assert not plan.fallback

    checker = ValidityChecker(flat_traversability, params.footprint_radius, params.edge_check)
    assert checker.points_valid(np.array([pose.xy for pose in plan.waypoints])).all()
    route = dense_route(plan.waypoints)
    crossing = route[(route[:, 0] >= 1.0) & (route[:, 0] < 1.2)]
    assert len(crossing)
    assert np.all((crossing[:, 1] >= 1.5) & (crossing[:, 1] < 3.5))


def test_goal_equal_to_start(flat_traversability):
    start = Pose((0.5, 0.5, 0.0))
    plan = replan_rrt_star(start, Pose((0.5, 0.5, 0.0), yaw=1.0), flat_traversability, FAST)
    assert plan.waypoints == [start]
    assert plan.length == 0.0
    assert not plan.fallback


def test_unreachable_goal_uses_the_fallback(flat_traversability):
    flat_traversability.safe[50:52, :] = False
    params = dataclasses.replace(FAST, rrt_star_iterations=150)
    start, goal = Pose((-1.0, 0.0, 0.0)), Pose((3.0, 0.0, 0.0))
    fallback = [start, Pose((0.0, 0.0, 0.0)), goal]

    plan = replan_rrt_star(start, goal, flat_traversability, params, fallback)
    assert plan.fallback
    assert plan.waypoints == fallback
    with pytest.raises(PlannerError):
        replan_rrt_star(start, goal, flat_traversability, params)


def test_replanning_is_deterministic(flat_traversability):
    start, goal = Pose((-2.0, -1.0, 0.0)), Pose((2.0, 1.5, 0.0))
    first = replan_rrt_star(start, goal, flat_traversability, FAST)
    second = replan_rrt_star(start, goal, flat_traversability, FAST)
    assert first.to_dict() == second.to_dict()

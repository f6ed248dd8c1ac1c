""" Docstring for the test_costs_utility.py file.

"""
import math

import numpy as np
import pytest

from planner.costs_utility import (PositionCostParams, ScanCandidate, TraversalCostParams, VisitedRegistry, bearing,
                                   position_cost, traversal_cost, utility)
from planner.rrt import select_nbv
from simulator.geometry import BoundingBox, Pose

FAR_BOX = BoundingBox((50.0, 50.0, 0.0), (51.0, 51.0, 1.0))


def test_position_cost_follows_the_linear_ramp():
    visited = VisitedRegistry()
    visited.append(Pose((0.0, 0.0, 0.0)))
    assert position_cost(Pose((0.0, 0.0, 0.0)), visited, FAR_BOX) == 1.0
    assert position_cost(Pose((2.0, 0.0, 0.0)), visited, FAR_BOX) == 0.0
    assert position_cost(Pose((0.0, 1.0, 0.0)), visited, FAR_BOX) == pytest.approx(0.5)
    assert position_cost(Pose((0.0, 3.0, 0.0)), visited, FAR_BOX) == 0.0


def test_visited_distance_is_horizontal():
    visited = VisitedRegistry([Pose((0.0, 0.0, 0.0))])
    assert position_cost(Pose((1.0, 0.0, 5.0)), visited, FAR_BOX) == pytest.approx(0.5)


def test_empty_registry_uses_the_object_box():
    box = BoundingBox((1.0, -1.0, 0.0), (2.0, 1.0, 1.0))
    assert position_cost(Pose((0.0, 0.0, 0.0)), VisitedRegistry(), box) == pytest.approx(0.5)
    assert position_cost(Pose((1.5, 0.0, 0.5)), VisitedRegistry(), box) == 1.0
    assert position_cost(Pose((-5.0, 0.0, 0.0)), VisitedRegistry(), box) == 0.0


def test_closest_of_visited_and_object_wins():
    box = BoundingBox((3.0, -1.0, 0.0), (4.0, 1.0, 1.0))
    visited = VisitedRegistry([Pose((0.0, 0.0, 0.0)), Pose((-3.0, 0.0, 0.0))])
    assert position_cost(Pose((2.5, 0.0, 0.0)), visited, box) == pytest.approx(0.75)
    assert position_cost(Pose((0.5, 0.0, 0.0)), visited, box) == pytest.approx(0.75)


def test_custom_threshold():
    visited = VisitedRegistry([Pose((0.0, 0.0, 0.0))])
    assert position_cost(Pose((1.0, 0.0, 0.0)), visited, FAR_BOX, PositionCostParams(d_thres=4.0)) == \
        pytest.approx(0.75)
    with pytest.raises(ValueError):
        PositionCostParams(d_thres=0.0)


def test_bearing():
    robot = Pose((0.0, 0.0, 0.0), yaw=0.0)
    assert bearing(robot, Pose((1.0, 0.0, 0.0))) == pytest.approx(0.0)
    assert bearing(robot, Pose((0.0, 1.0, 0.0))) == pytest.approx(math.pi / 2.0)
    assert bearing(robot, Pose((-1.0, 0.0, 0.0))) == pytest.approx(math.pi)
    assert bearing(robot, Pose((0.0, 0.0, 0.0))) == 0.0
    assert bearing(Pose((0.0, 0.0, 0.0), yaw=math.pi), Pose((-1.0, -0.01, 0.0))) == pytest.approx(0.01, abs=1e-4)


def test_traversal_cost(flat_traversability):
    robot = Pose((0.0, 0.0, 0.0), yaw=0.0)
    cell = flat_traversability.cell_of(np.array([1.05, 1.05]))
    flat_traversability.safe[cell] = False

    assert traversal_cost(Pose((1.05, 1.05, 0.0)), robot, flat_traversability) == 1.0
    assert traversal_cost(Pose((2.0, 0.0, 0.0)), robot, flat_traversability) == 0.0
    assert traversal_cost(Pose((-2.0, 0.0, 0.0)), robot, flat_traversability) == 0.5
    # exactly sideways is not behind
    assert traversal_cost(Pose((0.0, 2.0, 0.0)), robot, flat_traversability) == 0.0
    assert traversal_cost(Pose((-2.0, 0.0, 0.0)), robot, flat_traversability,
                          TraversalCostParams(behind_penalty=0.2)) == 0.2


def test_unknown_cell_is_not_traversable(flat_traversability):
    flat_traversability.elevation.known[:] = False
    flat_traversability.safe[:] = False
    assert traversal_cost(Pose((1.0, 0.0, 0.0)), Pose((0.0, 0.0, 0.0)), flat_traversability) == 1.0
    assert traversal_cost(Pose((30.0, 0.0, 0.0)), Pose((0.0, 0.0, 0.0)), flat_traversability) == 1.0


def test_traversal_penalty_validation():
    with pytest.raises(ValueError):
        TraversalCostParams(behind_penalty=1.0)


def test_utility_values():
    assert utility(2.0, 0.25, 0.0) == 1.5
    assert utility(7.3, 0.1, 1.0) == 0.0
    assert utility(0.0, 0.3, 0.2) == 0.0
    with pytest.raises(ValueError):
        utility(-1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        utility(1.0, 1.5, 0.0)


def test_utility_is_bounded_by_gain():
    rng = np.random.default_rng(2)
    for g, p_cost, t_cost in zip(rng.uniform(0, 10, 50), rng.uniform(0, 1, 50), rng.uniform(0, 1, 50)):
        assert utility(g, p_cost, t_cost) <= g
    assert utility(3.0, 0.0, 0.0) == 3.0


def test_candidate_at_a_visited_pose_has_no_utility():
    visited = VisitedRegistry([Pose((1.0, 1.0, 0.0))])
    pose = Pose((1.0, 1.0, 0.0))
    candidate = ScanCandidate(pose=pose, g=5.0, p_cost=position_cost(pose, visited, FAR_BOX), t_cost=0.0)
    assert candidate.utility == 0.0
    record = candidate.to_dict()
    assert record["utility"] == 0.0
    assert record["pose"] == [1.0, 1.0, 0.0, 0.0]


def test_scaling_gains_keeps_the_selected_candidate():
    rng = np.random.default_rng(8)
    candidates = [ScanCandidate(pose=Pose((float(i), 0.0, 0.0)), g=float(g), p_cost=float(p), t_cost=float(t),
                                node_index=i, path_distance=float(i))
                  for i, (g, p, t) in enumerate(zip(rng.uniform(0, 5, 20), rng.uniform(0, 1, 20),
                                                    rng.choice([0.0, 0.5, 1.0], 20)))]
    scaled = [ScanCandidate(pose=c.pose, g=c.g * 3.7, p_cost=c.p_cost, t_cost=c.t_cost, node_index=c.node_index,
                            path_distance=c.path_distance) for c in candidates]
    assert select_nbv(candidates).node_index == select_nbv(scaled).node_index

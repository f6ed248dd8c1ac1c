""" Docstring for the rrt.py file.

Goal-free RRT growth over the traversable area (its nodes are the scan candidates), NBV selection, RRT* replanning
to the chosen candidate and the termination test. Planning happens in the horizontal plane; node heights come from
the elevation map.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set

import numpy as np

from errors import PlannerError
from planner.costs_utility import ScanCandidate
from simulator.geometry import Pose
from terrain.traversability import TraversabilityMap, valid_cell_mask

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlannerParams:
    """
    RRT and RRT* settings. n_nodes counts scan candidates, the root excluded.
    """
    n_nodes: int = 150
    step: float = 0.5
    edge_check: float = 0.1
    goal_tolerance: float = 0.3
    rrt_star_iterations: int = 2000
    u_thres: float = 0.03
    rng_seed: int = 0
    sample_budget_factor: int = 100
    goal_bias: float = 0.05
    footprint_radius: float = 0.4

    def __post_init__(self):
        if self.n_nodes < 1:
            raise ValueError("n_nodes must be at least 1")
        if self.step <= 0.0 or self.edge_check <= 0.0:
            raise ValueError("step and edge_check must be positive")
        if self.goal_tolerance < 0.0 or self.rrt_star_iterations < 0:
            raise ValueError("goal_tolerance and rrt_star_iterations must be non-negative")
        if not 0.0 <= self.goal_bias < 1.0:
            raise ValueError("goal_bias must be in [0, 1)")


class ValidityChecker:
    """
    This module defines the ValidityChecker class, which answers point and edge validity queries against one
    traversability map. A point is valid when the footprint around its cell is entirely safe.
    """

    def __init__(self, traversability: TraversabilityMap, footprint_radius: float, edge_check: float):
        """
        Constructor for the ValidityChecker class.

        :param traversability: Traversability map.
        :param footprint_radius: Robot footprint radius in meters.
        :param edge_check: Spacing of the edge samples in meters.
        """
        self.traversability = traversability
        self.edge_check = edge_check
        self.valid = valid_cell_mask(traversability, footprint_radius)
        elevation = traversability.elevation
        self.lower = elevation.lower_corner
        self.upper = self.lower + np.asarray(elevation.extent, dtype=float)
        self.cell_size = elevation.cell_size

    def points_valid(self, xy: np.ndarray) -> np.ndarray:
        """
        Validity of many horizontal positions.

        :param xy: (N, 2) positions.
        :return: Boolean mask.
        """
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        cells = np.floor((xy - self.lower) / self.cell_size).astype(np.int64)
        inside = np.all((cells >= 0) & (cells < np.asarray(self.valid.shape)), axis=1)
        result = np.zeros(xy.shape[0], dtype=bool)
        result[inside] = self.valid[cells[inside, 0], cells[inside, 1]]
        return result

    def point_valid(self, xy: np.ndarray) -> bool:
        """ Validity of one position. """
        return bool(self.points_valid(xy)[0])

    def edge_valid(self, start: np.ndarray, end: np.ndarray) -> bool:
        """
        Checks samples along a straight edge, both ends included, spaced at most edge_check apart.

        :param start: Edge start (x, y).
        :param end: Edge end (x, y).
        :return: True when every sample is valid.
        """
        length = float(np.hypot(*(np.asarray(end) - np.asarray(start))))
        count = max(int(math.ceil(length / self.edge_check)), 1) + 1
        samples = np.linspace(start, end, count)
        return bool(self.points_valid(samples).all())

    def height(self, xy: np.ndarray) -> float:
        """ Terrain height at a position. """
        return self.traversability.height_at(xy)


@dataclass
class RrtTree:
    """
    Goal-free RRT. nodes hold the scan candidates; parent[i] is the index of the parent node, -1 for the root.
    """
    root: Pose
    nodes: List[Pose] = field(default_factory=list)
    parent: List[int] = field(default_factory=list)
    cost: List[float] = field(default_factory=list)
    samples_used: int = 0

    def __len__(self) -> int:
        return len(self.nodes)

    def positions(self) -> np.ndarray:
        """ (N, 2) node positions. """
        return np.array([pose.xy for pose in self.nodes]).reshape(-1, 2)

    def path_to(self, index: int) -> List[Pose]:
        """
        Tree path from the root to a node.

        :param index: Node index.
        :return: Poses from the root to the node, both included.
        """
        chain = []
        while index >= 0:
            chain.append(self.nodes[index])
            index = self.parent[index]
        return [self.root] + chain[::-1]


@dataclass
class PathPlan:
    """
    Ordered waypoints from start to goal. fallback marks a tree path used because RRT* found no route.
    """
    waypoints: List[Pose]
    first_found_length: float = float("nan")
    fallback: bool = False

    @property
    def length(self) -> float:
        """ Sum of horizontal distances between consecutive waypoints. """
        return path_length(self.waypoints)

    def to_dict(self) -> dict:
        """ JSON record of the plan. """
        return {"waypoints": [pose.to_list() for pose in self.waypoints], "length": self.length,
                "first_found_length": self.first_found_length, "fallback": self.fallback}


def path_length(poses: Sequence[Pose]) -> float:
    """ Sum of horizontal distances between consecutive poses. """
    if len(poses) < 2:
        return 0.0
    xy = np.array([pose.xy for pose in poses])
    return math.fsum(np.hypot(*np.diff(xy, axis=0).T))


def _pose_at(checker: ValidityChecker, xy: np.ndarray, previous_xy: np.ndarray) -> Pose:
    offset = np.asarray(xy) - np.asarray(previous_xy)
    yaw = math.atan2(offset[1], offset[0])
    return Pose(position=(xy[0], xy[1], checker.height(xy)), yaw=yaw)


def _steer(origin: np.ndarray, target: np.ndarray, step: float) -> Optional[np.ndarray]:
    offset = target - origin
    distance = float(np.hypot(*offset))
    if distance < 1e-9:
        return None
    if distance <= step:
        return target.copy()
    return origin + offset * (step / distance)


def grow_rrt(root: Pose, traversability: TraversabilityMap, params: PlannerParams = PlannerParams()) -> RrtTree:
    """
    Grows a goal-free RRT from the robot pose: uniform samples over the elevation map extent, extension of the nearest
    node by at most step, edges accepted when every dense sample along them is valid. A node's yaw is the heading of
    the edge into it.

    :param root: Current robot pose, which must be valid.
    :param traversability: Traversability map.
    :param params: Planner parameters.
    :return: The tree; partial, with a warning, when the sample budget runs out.
    """
    checker = ValidityChecker(traversability, params.footprint_radius, params.edge_check)
    if not checker.point_valid(root.xy):
        logger.error("RRT root %s is not a valid pose", np.round(root.xy, 3).tolist())
        raise PlannerError(f"RRT root {np.round(root.xy, 3).tolist()} is not a valid pose")

    rng = np.random.default_rng(params.rng_seed)
    tree = RrtTree(root=root)
    positions = np.empty((params.n_nodes + 1, 2))
    positions[0] = root.xy
    costs = np.zeros(params.n_nodes + 1)
    budget = params.sample_budget_factor * params.n_nodes

    while len(tree) < params.n_nodes and tree.samples_used < budget:
        tree.samples_used += 1
        sample = rng.uniform(checker.lower, checker.upper)
        count = len(tree) + 1
        nearest = int(np.argmin(np.sum((positions[:count] - sample) ** 2, axis=1)))
        new = _steer(positions[nearest], sample, params.step)
        if new is None or not checker.point_valid(new) or not checker.edge_valid(positions[nearest], new):
            continue
        positions[count] = new
        costs[count] = costs[nearest] + float(np.hypot(*(new - positions[nearest])))
        tree.nodes.append(_pose_at(checker, new, positions[nearest]))
        tree.parent.append(nearest - 1)
        tree.cost.append(float(costs[count]))

    if not tree.nodes:
        logger.error("RRT placed no node in %d samples", tree.samples_used)
        raise PlannerError(f"RRT placed no scan candidate in {tree.samples_used} samples")
    if len(tree) < params.n_nodes:
        logger.warning("RRT sample budget exhausted: %d of %d nodes placed", len(tree), params.n_nodes)
    logger.info("RRT grown with %d nodes from %d samples", len(tree), tree.samples_used)
    return tree


def select_nbv(candidates: Sequence[ScanCandidate]) -> ScanCandidate:
    """
    Candidate with the highest utility; ties go to the shortest tree path from the root, then the lowest node index.

    :param candidates: Evaluated candidates.
    :return: The next best view.
    """
    if not candidates:
        raise PlannerError("cannot select a next best view from an empty candidate set")
    return min(candidates, key=lambda c: (-c.utility, c.path_distance, c.node_index))


def check_termination(u_best: float, u_thres: float) -> bool:
    """
    The episode ends when the best utility falls strictly below the threshold.

    :param u_best: Utility of the selected candidate.
    :param u_thres: Threshold.
    :return: True when exploration should stop.
    """
    return u_best < u_thres


class RrtStarPlanner:
    """
    This module defines the RrtStarPlanner class, which replans a route between two valid poses with RRT*, keeping
    the cheapest route found so far, then shortens it by greedy shortcutting.
    """

    def __init__(self, traversability: TraversabilityMap, params: PlannerParams):
        """
        Constructor for the RrtStarPlanner class.

        :param traversability: Traversability map.
        :param params: Planner parameters.
        """
        self.logger = logging.getLogger(__name__)
        self.params = params
        self.checker = ValidityChecker(traversability, params.footprint_radius, params.edge_check)
        area = float(np.prod(self.checker.upper - self.checker.lower))
        # rewiring radius constant above the asymptotic optimality bound for the plane
        self.gamma = 2.0 * math.sqrt(1.5) * math.sqrt(area / math.pi) * 1.1
        self.first_found = math.inf

    def __radius(self, count: int) -> float:
        if count < 2:
            return self.params.step
        return min(self.gamma * math.sqrt(math.log(count) / count), self.params.step)

    def __propagate(self, index: int, delta: float, costs: np.ndarray, children: Dict[int, Set[int]]):
        pending = [index]
        while pending:
            node = pending.pop()
            costs[node] += delta
            pending.extend(children[node])

    def search(self, start: np.ndarray, goal: np.ndarray) -> Optional[List[np.ndarray]]:
        """
        Runs the RRT* iterations.

        :param start: Start (x, y).
        :param goal: Goal (x, y).
        :return: Positions from start to goal of the cheapest route, or None.
        """
        params = self.params
        rng = np.random.default_rng(params.rng_seed + 1)
        capacity = params.rrt_star_iterations + 1
        positions = np.empty((capacity, 2))
        positions[0] = start
        costs = np.zeros(capacity)
        parents = np.full(capacity, -1, dtype=np.int64)
        children: Dict[int, Set[int]] = {0: set()}
        count = 1
        best_node, best_cost = -1, math.inf
        self.first_found = math.inf
        to_goal = float(np.hypot(*(goal - start)))
        if to_goal <= params.goal_tolerance and self.checker.edge_valid(start, goal):
            best_node, best_cost = 0, to_goal
            self.first_found = to_goal

        for _ in range(params.rrt_star_iterations):
            if rng.random() < params.goal_bias:
                sample = goal.copy()
            else:
                sample = rng.uniform(self.checker.lower, self.checker.upper)
            gaps = np.sqrt(np.sum((positions[:count] - sample) ** 2, axis=1))
            nearest = int(np.argmin(gaps))
            new = _steer(positions[nearest], sample, params.step)
            if new is None or not self.checker.point_valid(new):
                continue

            distances = np.sqrt(np.sum((positions[:count] - new) ** 2, axis=1))
            radius = self.__radius(count)
            near = [int(i) for i in np.nonzero(distances <= max(radius, 1e-9))[0]]
            if nearest not in near:
                near.append(nearest)
            edge_ok = {i: self.checker.edge_valid(positions[i], new) for i in near}
            feasible = [i for i in near if edge_ok[i]]
            if not feasible:
                continue
            parent = min(feasible, key=lambda i: (costs[i] + distances[i], i))

            node = count
            count += 1
            positions[node] = new
            costs[node] = costs[parent] + distances[parent]
            parents[node] = parent
            children[node] = set()
            children[parent].add(node)

            for i in feasible:
                if i == parent:
                    continue
                candidate_cost = costs[node] + distances[i]
                if candidate_cost < costs[i] - 1e-12:
                    children[int(parents[i])].discard(i)
                    parents[i] = node
                    children[node].add(i)
                    self.__propagate(i, candidate_cost - costs[i], costs, children)

            # rewiring may have shortened routes through earlier goal nodes
            reaching = np.nonzero(np.sqrt(np.sum((positions[:count] - goal) ** 2, axis=1)) <= params.goal_tolerance)[0]
            for i in reaching:
                total = costs[i] + float(np.hypot(*(goal - positions[i])))
                if total < best_cost - 1e-12 and self.checker.edge_valid(positions[i], goal):
                    best_node, best_cost = int(i), total
                    if not math.isfinite(self.first_found):
                        self.first_found = total
                        self.logger.debug("RRT* first route after %d nodes, length %.3f", count, total)

        if best_node < 0:
            return None
        route = [goal]
        node = best_node
        while node >= 0:
            route.append(positions[node])
            node = int(parents[node])
        route = route[::-1]
        if np.hypot(*(route[-2] - route[-1])) < 1e-9:
            route.pop(-2)
        return route

    def shortcut(self, route: List[np.ndarray]) -> List[np.ndarray]:
        """
        Greedy shortcutting: from every kept point jump to the farthest later point reachable by a valid edge, then
        resample so consecutive points are at most step apart.

        :param route: Positions from start to goal.
        :return: Shortened route.
        """
        kept = [route[0]]
        i = 0
        while i < len(route) - 1:
            j = len(route) - 1
            while j > i + 1 and not self.checker.edge_valid(route[i], route[j]):
                j -= 1
            kept.append(route[j])
            i = j
        resampled = [kept[0]]
        for a, b in zip(kept[:-1], kept[1:]):
            pieces = max(int(math.ceil(float(np.hypot(*(b - a))) / self.params.step - 1e-9)), 1)
            for k in range(1, pieces + 1):
                resampled.append(a + (b - a) * (k / pieces))
        return resampled

    def plan(self, start: Pose, goal: Pose, fallback: Optional[List[Pose]] = None) -> PathPlan:
        """
        Plans from start to goal.

        :param start: Current robot pose.
        :param goal: Selected candidate pose.
        :param fallback: Tree path used when no route is found.
        :return: The path plan.
        """
        if float(np.hypot(*(goal.xy - start.xy))) < 1e-9:
            return PathPlan(waypoints=[start], first_found_length=0.0)

        route = self.search(start.xy, goal.xy)
        if route is None:
            if fallback is None:
                self.logger.error("RRT* found no route to %s and no fallback is available",
                                  np.round(goal.xy, 3).tolist())
                raise PlannerError(f"no route to {np.round(goal.xy, 3).tolist()}")
            self.logger.warning("RRT* found no route in %d iterations, using the RRT tree path",
                                self.params.rrt_star_iterations)
            return PathPlan(waypoints=list(fallback), first_found_length=path_length(fallback), fallback=True)

        smoothed = self.shortcut(route)
        if not self.checker.points_valid(np.array(smoothed)).all():
            smoothed = route
        waypoints = [start]
        for previous, current in zip(smoothed[:-1], smoothed[1:]):
            waypoints.append(_pose_at(self.checker, current, previous))
        plan = PathPlan(waypoints=waypoints, first_found_length=self.first_found)
        self.logger.info("RRT* route to %s: %d waypoints, length %.3f m (first found %.3f m)",
                         np.round(goal.xy, 3).tolist(), len(waypoints), plan.length, self.first_found)
        return plan


def replan_rrt_star(start: Pose, goal: Pose, traversability: TraversabilityMap,
                    params: PlannerParams = PlannerParams(), fallback: Optional[List[Pose]] = None) -> PathPlan:
    """
    Replans the route to the next best view with RRT*, optimising travel distance.

    :param start: Current robot pose.
    :param goal: Selected candidate pose.
    :param traversability: Traversability map.
    :param params: Planner parameters.
    :param fallback: RRT tree path to the goal, used when RRT* finds no route.
    :return: The path plan.
    """
    return RrtStarPlanner(traversability, params).plan(start, goal, fallback)

from .costs_utility import (PositionCostParams, ScanCandidate, TraversalCostParams, VisitedRegistry, position_cost,
                            traversal_cost, utility)
from .rrt import PathPlan, PlannerParams, RrtTree, check_termination, grow_rrt, replan_rrt_star, select_nbv

"""A* over the composed costmap with per-cell movability surcharges.

Edge cost into a neighbor = step length in cells (1 or sqrt(2)) plus the
neighbor's movable surcharge, so crossing a movable object's cells pays its
class cost per cell entered. Fatal cells are untraversable and diagonal moves
may not cut between two fatal orthogonal neighbors.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .costmap import LayeredCostmap
from .world import FATAL, GridIndex, Pose2D

SQRT2 = math.sqrt(2.0)
BASE = 1.0

_NEIGHBORS = (
    (1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
    (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2),
)


class PlannerError(Exception):
    pass


class StartBlocked(PlannerError):
    pass


class NoPath(PlannerError):
    pass


class BrokenChain(PlannerError):
    pass


@dataclass(frozen=True)
class PlannedPath:
    waypoints: Tuple[Tuple[float, float], ...]  # world xy at cell centers
    cells: Tuple[GridIndex, ...]
    total_cost: float
    crossed_objects: Tuple[int, ...]  # first-contact order, each id once

    def __len__(self) -> int:
        return len(self.waypoints)


def _grid_arrays(cmap: LayeredCostmap):
    cost = cmap.composed  # triggers composition if dirty
    extra = cmap.movable_extra()
    oid = cmap.composed_id
    return cost, extra, oid


def plan_astar(cmap: LayeredCostmap, start: Tuple[float, float],
               goal: Tuple[float, float],
               expansion_log: Optional[List[float]] = None) -> PlannedPath:
    """Optimal 8-connected A*; ties broken by lower f, lower h, then row-major
    cell order, which makes the returned path deterministic."""
    cost, extra, oid = _grid_arrays(cmap)
    h_cells, w_cells = cost.shape

    start_cell = cmap.world_to_cell(*start)
    goal_cell = cmap.world_to_cell(*goal)
    if not cmap.in_bounds(start_cell):
        raise StartBlocked(f"start {start} outside the map")
    if not cmap.in_bounds(goal_cell):
        raise NoPath(f"goal {goal} outside the map")
    if cost[start_cell.row, start_cell.col] >= FATAL:
        raise StartBlocked(f"start cell {start_cell} is fatal")
    if cost[goal_cell.row, goal_cell.col] >= FATAL:
        raise NoPath(f"goal cell {goal_cell} is fatal")

    def heuristic(col: int, row: int) -> float:
        return BASE * math.hypot(col - goal_cell.col, row - goal_cell.row)

    g: Dict[Tuple[int, int], float] = {(start_cell.col, start_cell.row): 0.0}
    parent: Dict[Tuple[int, int], Tuple[int, int]] = {}
    h0 = heuristic(start_cell.col, start_cell.row)
    open_heap = [(h0, h0, start_cell.row, start_cell.col)]
    closed = set()

    while open_heap:
        f, h, row, col = heapq.heappop(open_heap)
        node = (col, row)
        if node in closed:
            continue
        closed.add(node)
        if expansion_log is not None:
            expansion_log.append(f)
        if node == (goal_cell.col, goal_cell.row):
            return _extract(cmap, parent, g, start_cell, goal_cell, extra, oid)
        for dc, dr, step in _NEIGHBORS:
            nc, nr = col + dc, row + dr
            if not (0 <= nc < w_cells and 0 <= nr < h_cells):
                continue
            if cost[nr, nc] >= FATAL:
                continue
            if dc != 0 and dr != 0:
                # no corner cutting between two fatal orthogonal neighbors
                if cost[row, nc] >= FATAL and cost[nr, col] >= FATAL:
                    continue
            edge = step * BASE + float(extra[nr, nc])
            tentative = g[node] + edge
            nkey = (nc, nr)
            if nkey not in g or tentative < g[nkey]:
                g[nkey] = tentative
                parent[nkey] = node
                nh = heuristic(nc, nr)
                heapq.heappush(open_heap, (tentative + nh, nh, nr, nc))

    raise NoPath(f"goal cell {goal_cell} unreachable")


def _extract(cmap, parent, g, start_cell, goal_cell, extra, oid) -> PlannedPath:
    chain = [(goal_cell.col, goal_cell.row)]
    while chain[-1] != (start_cell.col, start_cell.row):
        chain.append(parent[chain[-1]])
    chain.reverse()
    cells = tuple(GridIndex(c, r) for c, r in chain)
    waypoints = tuple(cmap.cell_center(cell) for cell in cells)
    crossed: List[int] = []
    for cell in cells:
        o = int(oid[cell.row, cell.col])
        if o >= 0 and extra[cell.row, cell.col] > 0 and o not in crossed:
            crossed.append(o)
    return PlannedPath(waypoints, cells, g[(goal_cell.col, goal_cell.row)],
                       tuple(crossed))


def path_cost(cmap: LayeredCostmap, path: PlannedPath) -> float:
    """Recompute the edge-cost sum of a path under the planner cost model."""
    cost, extra, _ = _grid_arrays(cmap)
    total = 0.0
    for prev, cur in zip(path.cells, path.cells[1:]):
        dc, dr = cur.col - prev.col, cur.row - prev.row
        if max(abs(dc), abs(dr)) != 1:
            raise BrokenChain(f"waypoints {prev} -> {cur} are not 8-neighbors")
        step = SQRT2 if dc != 0 and dr != 0 else 1.0
        total += step * BASE + float(extra[cur.row, cur.col])
    return total


def objects_ahead(cmap: LayeredCostmap, path: PlannedPath,
                  robot_pose: Pose2D) -> List[Tuple[int, int]]:
    """Movable objects whose cells the path enters at or after the waypoint
    nearest the robot, as (object id, first waypoint index) in path order."""
    if len(path) == 0:
        return []
    _, extra, oid = _grid_arrays(cmap)
    dists = [math.hypot(x - robot_pose.x, y - robot_pose.y)
             for x, y in path.waypoints]
    start_idx = min(range(len(dists)), key=dists.__getitem__)
    out: List[Tuple[int, int]] = []
    seen = set()
    for idx in range(start_idx, len(path)):
        cell = path.cells[idx]
        o = int(oid[cell.row, cell.col])
        if o >= 0 and o not in seen and extra[cell.row, cell.col] > 0:
            out.append((o, idx))
            seen.add(o)
    return out


def first_blocking_object(cmap: LayeredCostmap, path: PlannedPath,
                          robot_pose: Pose2D) -> Optional[Tuple[int, int]]:
    """First movable object the path enters at or after the waypoint nearest
    the robot; returns (object id, waypoint index) or None."""
    ahead = objects_ahead(cmap, path, robot_pose)
    return ahead[0] if ahead else None

"""Pure-pursuit path following plus the push state machine.

The controller owns the robot mode. It follows the planned path at cruise
speed, drops to push speed on contact with the movable object blocking the
path, requests periodic replans while pushing, and trips when the simulated
motor current stays above the limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Set

from .costmap import LayeredCostmap
from .planner import PlannedPath, first_blocking_object, objects_ahead
from .world import ObjectInstance, Pose2D, RobotParams, normalize_angle

GRAVITY = 9.81

MODE_FOLLOW = "FOLLOW"
MODE_ROTATE = "ROTATE"
MODE_PUSH = "PUSH"
MODE_REPLAN_WAIT = "REPLAN_WAIT"
MODE_DONE = "DONE"
MODE_STUCK = "STUCK"

EVENT_NONE = "none"
EVENT_REPLAN_REQUESTED = "replan_requested"
EVENT_CURRENT_LIMIT = "current_limit_exceeded"
EVENT_GOAL_REACHED = "goal_reached"
EVENT_STUCK = "stuck"


class ControlError(Exception):
    pass


@dataclass
class RobotState:
    pose: Pose2D
    v: float = 0.0
    omega: float = 0.0
    current: float = 0.0
    mode: str = MODE_FOLLOW


@dataclass(frozen=True)
class VelocityCommand:
    v: float
    omega: float

    def __post_init__(self):
        if self.v < 0:
            raise ValueError("commanded speed must be non-negative")


@dataclass(frozen=True)
class ControlEvent:
    kind: str = EVENT_NONE
    object_id: Optional[int] = None


STOP = VelocityCommand(0.0, 0.0)


@dataclass(frozen=True)
class ControllerConfig:
    lookahead: float = 0.5
    heading_threshold: float = math.radians(60.0)
    replan_period_ticks: int = 20  # 1 s at dt = 0.05
    limit_debounce: int = 5
    goal_tolerance: float = 0.3


@dataclass
class WorldView:
    """Snapshot the simulation hands the controller each tick."""
    costmap: LayeredCostmap
    objects: Dict[int, ObjectInstance]
    contacts: Set[int] = field(default_factory=set)
    contact_normals: Dict[int, tuple] = field(default_factory=dict)
    blocked_pushes: Set[int] = field(default_factory=set)
    tripped: Set[int] = field(default_factory=set)


def push_required_force(obj: ObjectInstance, g: float = GRAVITY) -> float:
    """Quasi-static sliding threshold F = mu * m * g."""
    return obj.friction_mu * obj.mass * g


def motor_current(f_push: float, params: RobotParams) -> float:
    """Linear proxy for wheel current under a push load."""
    if f_push < 0:
        raise ValueError("push force must be non-negative")
    return params.current_idle + params.current_per_newton * f_push


def pure_pursuit_step(state: RobotState, path: PlannedPath,
                      params: RobotParams, lookahead: float,
                      heading_threshold: float = math.radians(60.0),
                      speed: Optional[float] = None) -> VelocityCommand:
    """One pure-pursuit step toward the lookahead point on the path.

    Rotates in place when the target bearing exceeds the heading threshold,
    otherwise steers with curvature 2*y / L^2 at the requested speed.
    """
    if len(path) == 0:
        raise ControlError("cannot follow an empty path")
    if speed is None:
        speed = params.cruise_speed

    px, py, theta = state.pose.x, state.pose.y, state.pose.theta
    dists = [math.hypot(x - px, y - py) for x, y in path.waypoints]
    nearest = min(range(len(dists)), key=dists.__getitem__)

    target = path.waypoints[-1]
    arc = 0.0
    for i in range(nearest + 1, len(path)):
        x0, y0 = path.waypoints[i - 1]
        x1, y1 = path.waypoints[i]
        arc += math.hypot(x1 - x0, y1 - y0)
        if arc >= lookahead:
            target = path.waypoints[i]
            break

    dx, dy = target[0] - px, target[1] - py
    c, s = math.cos(theta), math.sin(theta)
    x_l = c * dx + s * dy
    y_l = -s * dx + c * dy
    dist = math.hypot(x_l, y_l)
    if dist < 1e-9:
        return STOP

    bearing = math.atan2(y_l, x_l)
    if abs(bearing) > heading_threshold:
        return VelocityCommand(0.0, math.copysign(params.max_angular, bearing))

    kappa = 2.0 * y_l / (dist * dist)
    v = min(speed, params.cruise_speed)
    omega = max(-params.max_angular, min(params.max_angular, v * kappa))
    return VelocityCommand(v, omega)


class Controller:
    """Tick-driven state machine; single-threaded, owns the mutable state."""

    def __init__(self, params: RobotParams, goal, cfg: ControllerConfig = ControllerConfig()):
        self.params = params
        self.cfg = cfg
        self.goal = (float(goal[0]), float(goal[1]))
        self.push_object_id: Optional[int] = None
        self.push_ticks = 0
        self.debounce = 0

    def _at_goal(self, pose: Pose2D) -> bool:
        return math.hypot(pose.x - self.goal[0],
                          pose.y - self.goal[1]) <= self.cfg.goal_tolerance

    def tick(self, state: RobotState, path: Optional[PlannedPath],
             view: WorldView):
        """Advance one tick; returns (VelocityCommand, ControlEvent) and
        updates state.mode / state.current in place."""
        state.current = self.params.current_idle

        if state.mode in (MODE_DONE, MODE_STUCK):
            return STOP, ControlEvent()

        if self._at_goal(state.pose):
            state.mode = MODE_DONE
            return STOP, ControlEvent(EVENT_GOAL_REACHED)

        if path is None or len(path) == 0:
            state.mode = MODE_STUCK
            return STOP, ControlEvent(EVENT_STUCK)

        ahead_ids = [oid for oid, _ in objects_ahead(view.costmap, path,
                                                     state.pose)]

        if state.mode == MODE_REPLAN_WAIT:
            # replanned path arrived; resume unless it still runs into the
            # same tripped object
            if self.push_object_id not in ahead_ids:
                state.mode = MODE_FOLLOW
                self.push_object_id = None
            else:
                return STOP, ControlEvent()

        if state.mode == MODE_PUSH:
            if self.push_object_id not in ahead_ids:
                # path opened enough: replan no longer enters this object
                state.mode = MODE_FOLLOW
                self.push_object_id = None
        if state.mode in (MODE_FOLLOW, MODE_ROTATE):
            for oid in ahead_ids:
                if (oid in view.contacts and oid not in view.tripped
                        and self._aligned(state.pose, view, oid)):
                    state.mode = MODE_PUSH
                    self.push_object_id = oid
                    self.push_ticks = 0
                    self.debounce = 0
                    break

        if state.mode == MODE_PUSH:
            return self._push_tick(state, path, view)

        cmd = pure_pursuit_step(state, path, self.params, self.cfg.lookahead,
                                self.cfg.heading_threshold)
        state.mode = MODE_ROTATE if cmd.v == 0.0 and cmd.omega != 0.0 else MODE_FOLLOW
        return cmd, ControlEvent()

    @staticmethod
    def _aligned(pose: Pose2D, view: WorldView, oid: int,
                 cos_limit: float = 0.7) -> bool:
        """True when the contact normal points roughly along the heading, so
        driving forward actually pushes the object instead of grazing it."""
        normal = view.contact_normals.get(oid)
        if normal is None:
            return False
        return (normal[0] * math.cos(pose.theta)
                + normal[1] * math.sin(pose.theta)) > cos_limit

    def _push_tick(self, state: RobotState, path: PlannedPath, view: WorldView):
        self.push_ticks += 1
        oid = self.push_object_id
        event = ControlEvent()

        if oid in view.contacts:
            obj = view.objects[oid]
            force = push_required_force(obj)
            current = motor_current(force, self.params)
            if oid in view.blocked_pushes:
                # object jammed against something: wheels stall, current spikes
                current = max(current, 1.5 * self.params.current_limit)
            state.current = current
            if current > self.params.current_limit:
                self.debounce += 1
            else:
                self.debounce = 0
            if self.debounce >= self.cfg.limit_debounce:
                state.mode = MODE_REPLAN_WAIT
                return STOP, ControlEvent(EVENT_CURRENT_LIMIT, oid)
        else:
            self.debounce = 0

        if self.push_ticks % self.cfg.replan_period_ticks == 0:
            event = ControlEvent(EVENT_REPLAN_REQUESTED, oid)

        cmd = pure_pursuit_step(state, path, self.params, self.cfg.lookahead,
                                self.cfg.heading_threshold,
                                speed=self.params.push_speed)
        return cmd, event

"""Shared geometric and semantic primitives: poses, grid indices, object classes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Tuple

TWO_PI = 2.0 * math.pi

# Cost sentinel for cells the planner must never enter.
FATAL = 255


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    r = math.remainder(theta, TWO_PI)
    if r <= -math.pi:
        r += TWO_PI
    return r


@dataclass(frozen=True)
class Pose2D:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def normalized(self) -> "Pose2D":
        return Pose2D(self.x, self.y, normalize_angle(self.theta))


def compose(parent: Pose2D, child: Pose2D) -> Pose2D:
    """Rigid-body composition parent ∘ child, theta normalized."""
    c, s = math.cos(parent.theta), math.sin(parent.theta)
    return Pose2D(
        parent.x + c * child.x - s * child.y,
        parent.y + s * child.x + c * child.y,
        normalize_angle(parent.theta + child.theta),
    )


def inverse(pose: Pose2D) -> Pose2D:
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    return Pose2D(
        -(c * pose.x + s * pose.y),
        -(-s * pose.x + c * pose.y),
        normalize_angle(-pose.theta),
    )


def transform_point(pose: Pose2D, x: float, y: float) -> Tuple[float, float]:
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    return (pose.x + c * x - s * y, pose.y + s * x + c * y)


class GridIndex(NamedTuple):
    col: int
    row: int


CLASS_NAMES = ("box_cardboard", "trash_can", "food_trolley", "vase_glass", "unknown")

# Per-class defaults: (movable, move_cost per traversed cell). The paper-facing
# classes with no published numeric costs; these are configuration defaults.
DEFAULT_CLASS_TABLE = {
    "box_cardboard": (True, 10),
    "trash_can": (True, 25),
    "food_trolley": (True, 40),
    "vase_glass": (False, FATAL),
    "unknown": (False, FATAL),
}


@dataclass(frozen=True)
class ObjectClass:
    name: str
    movable: bool
    move_cost: int

    def __post_init__(self):
        if self.name not in CLASS_NAMES:
            raise ValueError(f"unknown object class name: {self.name!r}")
        if self.move_cost < 0:
            raise ValueError("move_cost must be non-negative")
        if self.name in ("vase_glass", "unknown") and self.movable:
            raise ValueError(f"class {self.name} must be unmovable")
        if not self.movable and self.move_cost != FATAL:
            raise ValueError("unmovable classes carry the fatal cost sentinel")
        if self.movable and not (0 < self.move_cost < FATAL):
            raise ValueError("movable move_cost must be in (0, 255)")


def default_class(name: str) -> ObjectClass:
    movable, cost = DEFAULT_CLASS_TABLE[name]
    return ObjectClass(name, movable, cost)


def polygon_area(vertices) -> float:
    """Signed shoelace area; positive for CCW vertex order."""
    a = 0.0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        a += x0 * y1 - x1 * y0
    return 0.5 * a


def _is_convex_ccw(vertices) -> bool:
    n = len(vertices)
    for i in range(n):
        ax, ay = vertices[i]
        bx, by = vertices[(i + 1) % n]
        cx, cy = vertices[(i + 2) % n]
        cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if cross < -1e-12:
            return False
    return True


@dataclass(frozen=True)
class ObjectInstance:
    id: int
    obj_class: ObjectClass
    footprint: Tuple[Tuple[float, float], ...]  # convex CCW polygon, object frame
    pose: Pose2D
    mass: float
    friction_mu: float

    def __post_init__(self):
        if len(self.footprint) < 3:
            raise ValueError("footprint needs at least 3 vertices")
        if polygon_area(self.footprint) <= 0:
            raise ValueError("footprint must be counter-clockwise")
        if not _is_convex_ccw(self.footprint):
            raise ValueError("footprint must be convex")
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if not (0 < self.friction_mu <= 2.0):
            raise ValueError("friction_mu must be in (0, 2]")


def footprint_world(obj: ObjectInstance) -> Tuple[Tuple[float, float], ...]:
    """Object footprint transformed into the world frame (CCW preserved)."""
    return tuple(transform_point(obj.pose, vx, vy) for vx, vy in obj.footprint)


@dataclass(frozen=True)
class RobotParams:
    radius: float = 0.2
    cruise_speed: float = 0.5
    push_speed: float = 0.15
    max_angular: float = 1.5
    wheel_base: float = 0.3
    current_idle: float = 0.5
    current_per_newton: float = 0.5
    current_limit: float = 5.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.push_speed > self.cruise_speed:
            raise ValueError("push_speed must not exceed cruise_speed")
        if self.current_limit <= self.current_idle:
            raise ValueError("current_limit must exceed current_idle")

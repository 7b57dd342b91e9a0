"""Deterministic discrete-time world: kinematics, contacts, scenario files,
the perception/replan/control loop, and report emission."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from shapely.geometry import Point, Polygon
from shapely.ops import nearest_points

from . import control, render
from .control import (Controller, ControllerConfig, ControlEvent, RobotState,
                      VelocityCommand, motor_current, push_required_force)
from .costmap import LayeredCostmap
from .perception import (CameraExtrinsics, CameraIntrinsics, cloud_to_cells,
                         cloud_to_robot_frame, cloud_to_world_frame,
                         depth_to_cloud, sor_filter)
from .planner import (NoPath, PlannedPath, StartBlocked, first_blocking_object,
                      plan_astar)
from .world import (FATAL, GridIndex, ObjectClass, ObjectInstance, Pose2D,
                    RobotParams, DEFAULT_CLASS_TABLE, default_class,
                    footprint_world, normalize_angle)

SCENARIO_FORMAT = 1
PENETRATION_TOL = 1e-6
CONTACT_EPS = 0.02


class ScenarioError(Exception):
    """Scenario file failed validation; .problems lists every bad field."""

    def __init__(self, problems: List[str]):
        self.problems = problems
        super().__init__("invalid scenario: " + "; ".join(problems))


# -- kinematics ---------------------------------------------------------------

def step_kinematics(pose: Pose2D, cmd: VelocityCommand, dt: float) -> Pose2D:
    """Unicycle step with exact constant-twist integration, so constant
    (v, omega) segments track the closed-form arc to machine precision."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    v, w = cmd.v, cmd.omega
    if abs(w) < 1e-12:
        return Pose2D(pose.x + v * math.cos(pose.theta) * dt,
                      pose.y + v * math.sin(pose.theta) * dt,
                      pose.theta)
    t0 = pose.theta
    t1 = t0 + w * dt
    return Pose2D(pose.x + v / w * (math.sin(t1) - math.sin(t0)),
                  pose.y - v / w * (math.cos(t1) - math.cos(t0)),
                  normalize_angle(t1))


# -- rasterization ------------------------------------------------------------

def rasterize_polygon(poly: Sequence[Tuple[float, float]], resolution: float,
                      origin: Tuple[float, float],
                      width: int, height: int) -> Set[GridIndex]:
    """Cells whose center lies inside a convex CCW polygon, clipped to grid."""
    pts = np.asarray(poly, dtype=float)
    c0 = int(math.floor((pts[:, 0].min() - origin[0]) / resolution))
    c1 = int(math.floor((pts[:, 0].max() - origin[0]) / resolution))
    r0 = int(math.floor((pts[:, 1].min() - origin[1]) / resolution))
    r1 = int(math.floor((pts[:, 1].max() - origin[1]) / resolution))
    c0, c1 = max(c0, 0), min(c1, width - 1)
    r0, r1 = max(r0, 0), min(r1, height - 1)
    if c0 > c1 or r0 > r1:
        return set()
    cols = np.arange(c0, c1 + 1)
    rows = np.arange(r0, r1 + 1)
    cx = origin[0] + (cols + 0.5) * resolution
    cy = origin[1] + (rows + 0.5) * resolution
    gx, gy = np.meshgrid(cx, cy)
    inside = np.ones(gx.shape, dtype=bool)
    n = len(pts)
    for i in range(n):
        ax, ay = pts[i]
        bx, by = pts[(i + 1) % n]
        inside &= (bx - ax) * (gy - ay) - (by - ay) * (gx - ax) >= 0
    rr, cc = np.nonzero(inside)
    return {GridIndex(int(cols[c]), int(rows[r])) for r, c in zip(rr, cc)}


# -- scenario ----------------------------------------------------------------

@dataclass(frozen=True)
class MapSpec:
    width_m: float
    height_m: float
    resolution: float
    static_polygons: Tuple[Tuple[Tuple[float, float], ...], ...]


@dataclass(frozen=True)
class SimParams:
    dt_s: float = 0.05
    max_ticks: int = 4000
    perception_period_ticks: int = 4
    seed: int = 0  # reserved; the pipeline is noise-free


@dataclass(frozen=True)
class Scenario:
    map: MapSpec
    robot: RobotParams
    start: Pose2D
    goal: Tuple[float, float]
    goal_tolerance: float
    objects: Tuple[ObjectInstance, ...]
    sim: SimParams
    classes: Dict[str, ObjectClass]


@dataclass
class PushRecord:
    object_id: int
    push_distance_m: float = 0.0
    max_current_a: float = 0.0
    limit_tripped: bool = False


@dataclass
class SimulationReport:
    success: bool
    ticks: int
    sim_time_s: float
    path_length_m: float
    replans: int
    pushes: List[PushRecord]
    final_pose: Pose2D
    outcome: str = "done"  # done | stuck | max_ticks (not serialized)
    safety_violations: int = 0  # not serialized

    def to_json_dict(self) -> dict:
        return {
            "success": self.success,
            "ticks": self.ticks,
            "sim_time_s": round(self.sim_time_s, 6),
            "path_length_m": round(self.path_length_m, 6),
            "replans": self.replans,
            "pushes": [
                {
                    "object_id": p.object_id,
                    "push_distance_m": round(p.push_distance_m, 6),
                    "max_current_a": round(p.max_current_a, 6),
                    "limit_tripped": p.limit_tripped,
                }
                for p in self.pushes
            ],
            "final_pose": {
                "x": round(self.final_pose.x, 6),
                "y": round(self.final_pose.y, 6),
                "theta": round(self.final_pose.theta, 6),
            },
        }


def _expect_keys(problems, obj, where, required, optional=()):
    if not isinstance(obj, dict):
        problems.append(f"{where}: expected an object")
        return False
    for key in obj:
        if key not in required and key not in optional:
            problems.append(f"{where}: unknown field {key!r}")
    ok = True
    for key in required:
        if key not in obj:
            problems.append(f"{where}: missing field {key!r}")
            ok = False
    return ok


def _number(problems, obj, where, key, positive=False):
    v = obj.get(key)
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        problems.append(f"{where}.{key}: expected a number")
        return None
    if positive and v <= 0:
        problems.append(f"{where}.{key}: must be positive")
        return None
    return float(v)


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    return parse_scenario(doc)


def parse_scenario(doc: dict) -> Scenario:
    problems: List[str] = []
    _expect_keys(problems, doc, "scenario",
                 ("format", "map", "robot", "goal", "objects", "sim"),
                 optional=("classes",))
    if problems:
        raise ScenarioError(problems)
    if doc["format"] != SCENARIO_FORMAT:
        raise ScenarioError([f"format: expected {SCENARIO_FORMAT}, got {doc['format']!r}"])

    # classes: defaults plus optional overrides
    classes = {name: default_class(name) for name in DEFAULT_CLASS_TABLE}
    for name, spec in (doc.get("classes") or {}).items():
        if name not in DEFAULT_CLASS_TABLE:
            problems.append(f"classes.{name}: unknown class name")
            continue
        if _expect_keys(problems, spec, f"classes.{name}", ("movable", "move_cost")):
            try:
                classes[name] = ObjectClass(name, bool(spec["movable"]),
                                            int(spec["move_cost"]))
            except ValueError as e:
                problems.append(f"classes.{name}: {e}")

    m = doc["map"]
    map_spec = None
    if _expect_keys(problems, m, "map",
                    ("width_m", "height_m", "resolution", "static_polygons")):
        w = _number(problems, m, "map", "width_m", positive=True)
        h = _number(problems, m, "map", "height_m", positive=True)
        res = _number(problems, m, "map", "resolution", positive=True)
        polys = []
        if not isinstance(m["static_polygons"], list):
            problems.append("map.static_polygons: expected a list")
        else:
            for i, poly in enumerate(m["static_polygons"]):
                try:
                    pts = tuple((float(x), float(y)) for x, y in poly)
                    if len(pts) < 3:
                        raise ValueError("needs at least 3 vertices")
                    polys.append(pts)
                except (TypeError, ValueError) as e:
                    problems.append(f"map.static_polygons[{i}]: {e}")
        if w and h and res:
            map_spec = MapSpec(w, h, res, tuple(polys))

    r = doc["robot"]
    robot = None
    start = None
    robot_fields = ("radius", "cruise_speed", "push_speed", "max_angular",
                    "wheel_base", "current_idle", "current_per_newton",
                    "current_limit", "start")
    if _expect_keys(problems, r, "robot", robot_fields):
        try:
            robot = RobotParams(**{k: float(r[k]) for k in robot_fields[:-1]})
        except (TypeError, ValueError) as e:
            problems.append(f"robot: {e}")
        if _expect_keys(problems, r.get("start"), "robot.start", ("x", "y", "theta")):
            start = Pose2D(float(r["start"]["x"]), float(r["start"]["y"]),
                           normalize_angle(float(r["start"]["theta"])))

    g = doc["goal"]
    goal = None
    goal_tol = None
    if _expect_keys(problems, g, "goal", ("x", "y", "tolerance_m")):
        gx = _number(problems, g, "goal", "x")
        gy = _number(problems, g, "goal", "y")
        goal_tol = _number(problems, g, "goal", "tolerance_m", positive=True)
        if gx is not None and gy is not None:
            goal = (gx, gy)

    objects: List[ObjectInstance] = []
    seen_ids = set()
    if not isinstance(doc["objects"], list):
        problems.append("objects: expected a list")
    else:
        for i, spec in enumerate(doc["objects"]):
            where = f"objects[{i}]"
            if not _expect_keys(problems, spec, where,
                                ("id", "class", "footprint", "pose", "mass",
                                 "friction_mu")):
                continue
            try:
                oid = int(spec["id"])
                if oid in seen_ids:
                    problems.append(f"{where}.id: duplicate id {oid}")
                    continue
                if oid <= 0:
                    problems.append(f"{where}.id: must be a positive integer")
                    continue
                seen_ids.add(oid)
                cname = spec["class"]
                if cname not in classes:
                    problems.append(f"{where}.class: unknown class {cname!r}")
                    continue
                pose = spec["pose"]
                obj = ObjectInstance(
                    id=oid,
                    obj_class=classes[cname],
                    footprint=tuple((float(x), float(y))
                                    for x, y in spec["footprint"]),
                    pose=Pose2D(float(pose["x"]), float(pose["y"]),
                                normalize_angle(float(pose["theta"]))),
                    mass=float(spec["mass"]),
                    friction_mu=float(spec["friction_mu"]),
                )
                objects.append(obj)
            except (TypeError, KeyError, ValueError) as e:
                problems.append(f"{where}: {e}")

    sim_doc = doc["sim"]
    sim = None
    if _expect_keys(problems, sim_doc, "sim",
                    ("dt_s", "max_ticks", "perception_period_ticks", "seed")):
        dt = _number(problems, sim_doc, "sim", "dt_s", positive=True)
        if dt is not None:
            sim = SimParams(dt, int(sim_doc["max_ticks"]),
                            int(sim_doc["perception_period_ticks"]),
                            int(sim_doc["seed"]))

    if problems or map_spec is None or robot is None or start is None \
            or goal is None or sim is None:
        raise ScenarioError(problems or ["incomplete scenario"])

    def inside(x, y):
        return 0 <= x <= map_spec.width_m and 0 <= y <= map_spec.height_m

    if not inside(start.x, start.y):
        problems.append("robot.start: outside the map")
    if not inside(goal[0], goal[1]):
        problems.append("goal: outside the map")
    if problems:
        raise ScenarioError(problems)

    return Scenario(map_spec, robot, start, goal, goal_tol,
                    tuple(objects), sim, classes)


# -- contact resolution -------------------------------------------------------

@dataclass
class ContactResult:
    pose: Pose2D
    displacements: Dict[int, Tuple[float, float]]
    contacts: Set[int]
    normals: Dict[int, Tuple[float, float]]  # unit robot-to-object direction
    blocked: Set[int]


def resolve_contacts(old_pose: Pose2D, proposed: Pose2D, radius: float,
                     objects: Dict[int, ObjectInstance],
                     static_polys: Sequence[Polygon],
                     pushable: Set[int]) -> ContactResult:
    """Quasi-static contact resolution for one small motion step.

    Pushable movable objects translate by the robot motion component along
    the contact normal; a displaced object that would overlap anything else
    stays put and is flagged blocked. The robot never penetrates static
    geometry or non-pushable objects (penetrating motion is cancelled by
    sliding the disc out along the contact normal).
    """
    dx = proposed.x - old_pose.x
    dy = proposed.y - old_pose.y
    pos = np.array([proposed.x, proposed.y])
    old = np.array([old_pose.x, old_pose.y])

    shapes = {oid: Polygon(footprint_world(obj))
              for oid, obj in objects.items()}

    displacements: Dict[int, Tuple[float, float]] = {}
    blocked: Set[int] = set()

    # push pass: objects already in contact translate along the contact normal
    for oid in sorted(objects):
        if oid not in pushable:
            continue
        poly = shapes[oid]
        d_old = poly.distance(Point(old))
        d_new = poly.distance(Point(pos))
        if d_old > radius + CONTACT_EPS and d_new > radius:
            continue
        near = nearest_points(poly, Point(old))[0]
        nx, ny = near.x - old[0], near.y - old[1]
        norm = math.hypot(nx, ny)
        if norm < 1e-12:
            continue
        nx, ny = nx / norm, ny / norm
        mag = dx * nx + dy * ny
        if mag <= 0:
            continue
        moved = _translate(poly, mag * nx, mag * ny)
        clear = True
        # touching is fine; only a real overlap blocks the push
        for other_id, other in shapes.items():
            if other_id != oid and moved.intersection(other).area > 1e-9:
                clear = False
                break
        if clear:
            for wall in static_polys:
                if moved.intersection(wall).area > 1e-9:
                    clear = False
                    break
        if clear:
            shapes[oid] = moved
            displacements[oid] = (mag * nx, mag * ny)
        else:
            blocked.add(oid)

    # penetration pass: slide the robot disc out of everything solid
    obstacles = list(static_polys) + [shapes[oid] for oid in sorted(shapes)]
    for _ in range(12):
        worst_pen = 0.0
        worst_push = None
        for poly in obstacles:
            d = poly.distance(Point(pos))
            pen = radius - d
            if pen <= PENETRATION_TOL:
                continue
            if d < 1e-12:
                worst_push = None
                worst_pen = math.inf
                break
            near = nearest_points(poly, Point(pos))[0]
            ux, uy = pos[0] - near.x, pos[1] - near.y
            un = math.hypot(ux, uy)
            if pen > worst_pen:
                worst_pen = pen
                worst_push = (ux / un * (pen + PENETRATION_TOL),
                              uy / un * (pen + PENETRATION_TOL))
        if worst_push is None:
            if math.isinf(worst_pen):
                pos = old.copy()  # degenerate: revert the whole step
            break
        pos = pos + np.array(worst_push)

    contacts = set()
    normals: Dict[int, Tuple[float, float]] = {}
    final = Point(pos)
    for oid, poly in shapes.items():
        if poly.distance(final) > radius + CONTACT_EPS:
            continue
        contacts.add(oid)
        near = nearest_points(poly, final)[0]
        nx, ny = near.x - pos[0], near.y - pos[1]
        norm = math.hypot(nx, ny)
        if norm > 1e-12:
            normals[oid] = (nx / norm, ny / norm)
    return ContactResult(Pose2D(float(pos[0]), float(pos[1]), proposed.theta),
                         displacements, contacts, normals, blocked)


def _translate(poly: Polygon, dx: float, dy: float) -> Polygon:
    xs, ys = poly.exterior.coords.xy
    return Polygon([(x + dx, y + dy) for x, y in zip(xs[:-1], ys[:-1])])


# -- simulation ---------------------------------------------------------------

PERCEPTION_ORACLE = "oracle"
PERCEPTION_RENDERED = "rendered"

DEFAULT_INTRINSICS = CameraIntrinsics(fx=260.0, fy=260.0, cx=159.5, cy=119.5,
                                      width=320, height=240)
DEFAULT_EXTRINSICS = CameraExtrinsics(mount_height=0.75,
                                      tilt=math.radians(30.0))


class Simulation:
    """Owns the mutable world for one scenario run."""

    def __init__(self, scenario: Scenario,
                 perception_mode: str = PERCEPTION_ORACLE,
                 intrinsics: CameraIntrinsics = DEFAULT_INTRINSICS,
                 extrinsics: CameraExtrinsics = DEFAULT_EXTRINSICS,
                 max_ticks: Optional[int] = None):
        if perception_mode not in (PERCEPTION_ORACLE, PERCEPTION_RENDERED):
            raise ValueError(f"unknown perception mode {perception_mode!r}")
        self.scenario = scenario
        self.perception_mode = perception_mode
        self.max_ticks = max_ticks or scenario.sim.max_ticks
        self.params = scenario.robot
        self.dt = scenario.sim.dt_s

        m = scenario.map
        self.cmap = LayeredCostmap(
            width=int(round(m.width_m / m.resolution)),
            height=int(round(m.height_m / m.resolution)),
            resolution=m.resolution,
            inflation_radius=self.params.radius + 0.05,
        )
        self.static_cells = set()
        for poly in m.static_polygons:
            self.static_cells |= rasterize_polygon(
                poly, m.resolution, (0.0, 0.0), self.cmap.width, self.cmap.height)
        self.cmap.set_static(self.static_cells)
        self.static_shapes = [Polygon(p) for p in m.static_polygons]

        self.objects: Dict[int, ObjectInstance] = {o.id: o for o in scenario.objects}
        self.tripped: Set[int] = set()
        self.state = RobotState(pose=scenario.start)

        cfg = ControllerConfig(
            replan_period_ticks=max(1, int(round(1.0 / self.dt))),
            goal_tolerance=scenario.goal_tolerance,
        )
        self.controller = Controller(self.params, scenario.goal, cfg)

        if perception_mode == PERCEPTION_RENDERED:
            self.extrinsics = extrinsics
            self.renderer = render.DepthRenderer(intrinsics, extrinsics)
        else:
            self.renderer = None

        self.path: Optional[PlannedPath] = None
        self.contacts: Set[int] = set()
        self.contact_normals: Dict[int, Tuple[float, float]] = {}
        self.blocked: Set[int] = set()
        self.plan_calls = 0
        self.push_records: Dict[int, PushRecord] = {}
        self.path_length = 0.0
        self.safety_violations = 0
        self.csv_rows: List[str] = []

    # perception ------------------------------------------------------------

    def _perceive(self) -> Dict[int, Set[GridIndex]]:
        if self.perception_mode == PERCEPTION_ORACLE:
            out = {}
            for oid, obj in self.objects.items():
                out[oid] = rasterize_polygon(
                    footprint_world(obj), self.cmap.resolution, (0.0, 0.0),
                    self.cmap.width, self.cmap.height)
            return out
        depth, mask = self.renderer.render(
            self.state.pose, list(self.objects.values()),
            self.scenario.map.static_polygons)
        cloud = depth_to_cloud(depth, mask, self.renderer.intr)
        cloud = cloud_to_robot_frame(cloud, self.extrinsics)
        cloud = sor_filter(cloud)
        cloud = cloud_to_world_frame(cloud, self.state.pose)
        cells = cloud_to_cells(cloud, self.cmap.resolution)
        out: Dict[int, Set[GridIndex]] = {}
        for cell, oid in cells.items():
            if self.cmap.in_bounds(cell):
                out.setdefault(oid, set()).add(cell)
        return out

    def _refresh_costmap(self):
        for oid, cells in sorted(self._perceive().items()):
            if cells or self.perception_mode == PERCEPTION_ORACLE:
                self.cmap.upsert_object(oid, self.objects[oid].obj_class, cells)
        self.cmap.inflate_and_compose()

    # planning --------------------------------------------------------------

    def _plan(self) -> Optional[PlannedPath]:
        start = (self.state.pose.x, self.state.pose.y)
        try:
            path = plan_astar(self.cmap, start, self.scenario.goal)
        except StartBlocked:
            alt = self._nearest_free_cell(start)
            if alt is None:
                return None
            try:
                path = plan_astar(self.cmap, alt, self.scenario.goal)
            except (StartBlocked, NoPath):
                return None
        except NoPath:
            return None
        self.plan_calls += 1
        return path

    def _nearest_free_cell(self, start) -> Optional[Tuple[float, float]]:
        cell = self.cmap.world_to_cell(*start)
        cost = self.cmap.composed
        best = None
        reach = int(math.ceil((self.params.radius + 0.15) / self.cmap.resolution))
        for dr in range(-reach, reach + 1):
            for dc in range(-reach, reach + 1):
                r, c = cell.row + dr, cell.col + dc
                if not (0 <= r < self.cmap.height and 0 <= c < self.cmap.width):
                    continue
                if cost[r, c] >= FATAL:
                    continue
                d = math.hypot(dr, dc)
                key = (d, r, c)
                if best is None or key < best[0]:
                    best = (key, GridIndex(c, r))
        if best is None:
            return None
        return self.cmap.cell_center(best[1])

    def _path_invalidated(self) -> bool:
        if self.path is None:
            return False
        cost = self.cmap.composed
        return any(cost[cell.row, cell.col] >= FATAL for cell in self.path.cells)

    # main loop -------------------------------------------------------------

    def run(self, out_dir: Optional[str] = None, svg_every: int = 0,
            quiet: bool = True) -> SimulationReport:
        dt = self.dt
        outcome = "max_ticks"
        ticks_run = self.max_ticks
        need_plan = True
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)

        for tick in range(self.max_ticks):
            if tick % self.scenario.sim.perception_period_ticks == 0:
                self._refresh_costmap()
                if self._path_invalidated():
                    need_plan = True

            if need_plan:
                self.path = self._plan()
                need_plan = False

            view = control.WorldView(self.cmap, self.objects, self.contacts,
                                     self.contact_normals, self.blocked,
                                     self.tripped)
            cmd, event = self.controller.tick(self.state, self.path, view)

            if event.kind == control.EVENT_CURRENT_LIMIT:
                oid = event.object_id
                self.tripped.add(oid)
                rec = self.push_records.setdefault(oid, PushRecord(oid))
                rec.limit_tripped = True
                self.cmap.mark_object_unmovable(oid)
                self.cmap.inflate_and_compose()
                need_plan = True
            elif event.kind == control.EVENT_REPLAN_REQUESTED:
                need_plan = True

            pushable = {oid for oid, obj in self.objects.items()
                        if obj.obj_class.movable and oid not in self.tripped
                        and motor_current(push_required_force(obj), self.params)
                        <= self.params.current_limit}

            proposed = step_kinematics(self.state.pose, cmd, dt)
            result = resolve_contacts(self.state.pose, proposed,
                                      self.params.radius, self.objects,
                                      self.static_shapes, pushable)
            for oid, (ddx, ddy) in result.displacements.items():
                obj = self.objects[oid]
                self.objects[oid] = ObjectInstance(
                    obj.id, obj.obj_class, obj.footprint,
                    Pose2D(obj.pose.x + ddx, obj.pose.y + ddy, obj.pose.theta),
                    obj.mass, obj.friction_mu)
                if self.state.mode == control.MODE_PUSH and oid in result.contacts:
                    rec = self.push_records.setdefault(oid, PushRecord(oid))
                    rec.push_distance_m += math.hypot(ddx, ddy)

            if (self.state.mode == control.MODE_PUSH
                    and self.controller.push_object_id in result.contacts):
                rec = self.push_records.setdefault(
                    self.controller.push_object_id,
                    PushRecord(self.controller.push_object_id))
                rec.max_current_a = max(rec.max_current_a, self.state.current)

            step_len = math.hypot(result.pose.x - self.state.pose.x,
                                  result.pose.y - self.state.pose.y)
            self.path_length += step_len
            self.state.pose = result.pose
            self.state.v = cmd.v
            self.state.omega = cmd.omega
            self.contacts = result.contacts
            self.contact_normals = result.normals
            self.blocked = result.blocked

            self._check_safety()
            self._log_row(tick, cmd, event)

            if out_dir and svg_every and tick % svg_every == 0:
                render.svg_frame(
                    os.path.join(out_dir, f"frame_{tick:06d}.svg"),
                    self.scenario.map.width_m, self.scenario.map.height_m,
                    self.cmap, self.objects, self.state.pose,
                    self.params.radius, self.scenario.goal, self.path)

            if event.kind == control.EVENT_GOAL_REACHED:
                outcome, ticks_run = "done", tick + 1
                break
            if event.kind == control.EVENT_STUCK:
                outcome, ticks_run = "stuck", tick + 1
                break

        report = SimulationReport(
            success=(outcome == "done"),
            ticks=ticks_run,
            sim_time_s=ticks_run * dt,
            path_length_m=self.path_length,
            replans=max(0, self.plan_calls - 1),
            pushes=list(self.push_records.values()),  # first-push order
            final_pose=self.state.pose,
            outcome=outcome,
            safety_violations=self.safety_violations,
        )
        if out_dir:
            self._write_outputs(out_dir, report)
        if not quiet:
            print(f"outcome={outcome} ticks={ticks_run} "
                  f"pushes={len(report.pushes)} replans={report.replans}")
        return report

    def _check_safety(self):
        p = Point(self.state.pose.x, self.state.pose.y)
        for wall in self.static_shapes:
            if wall.distance(p) < self.params.radius - PENETRATION_TOL:
                self.safety_violations += 1
                return
        for oid, obj in self.objects.items():
            if obj.obj_class.movable and oid not in self.tripped:
                continue
            if Polygon(footprint_world(obj)).distance(p) < \
                    self.params.radius - PENETRATION_TOL:
                self.safety_violations += 1
                return

    def _log_row(self, tick: int, cmd: VelocityCommand, event: ControlEvent):
        p = self.state.pose
        oid = "" if event.object_id is None else str(event.object_id)
        ev = "" if event.kind == control.EVENT_NONE else event.kind
        self.csv_rows.append(
            f"{tick},{tick * self.dt:.6f},{p.x:.6f},{p.y:.6f},{p.theta:.6f},"
            f"{cmd.v:.6f},{cmd.omega:.6f},{self.state.mode},"
            f"{self.state.current:.6f},{ev},{oid}")

    def _write_outputs(self, out_dir: str, report: SimulationReport):
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "trajectory.csv"), "w",
                  encoding="utf-8", newline="\n") as f:
            f.write("tick,t,x,y,theta,v,omega,mode,current,event,object_id\n")
            f.write("\n".join(self.csv_rows))
            f.write("\n")
        with open(os.path.join(out_dir, "report.json"), "w",
                  encoding="utf-8", newline="\n") as f:
            json.dump(report.to_json_dict(), f, indent=2)
            f.write("\n")


def run_scenario(scenario: Scenario,
                 perception_mode: str = PERCEPTION_ORACLE,
                 out_dir: Optional[str] = None, svg_every: int = 0,
                 max_ticks: Optional[int] = None,
                 quiet: bool = True) -> SimulationReport:
    sim = Simulation(scenario, perception_mode=perception_mode,
                     max_ticks=max_ticks)
    return sim.run(out_dir=out_dir, svg_every=svg_every, quiet=quiet)

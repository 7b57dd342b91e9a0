"""Synthetic sensing and debug output.

DepthRenderer ray-casts extruded 2D polygons into a z-buffered depth image
with a parallel id mask, which feeds the perception chain in rendered mode.
Also holds the PGM fixture container for depth/mask images and the SVG frame
writer used by the CLI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .perception import (CameraExtrinsics, CameraIntrinsics, DepthImage,
                         SegmentationMask, camera_axes_in_robot)
from .world import FATAL, ObjectInstance, Pose2D, footprint_world

DEPTH_SCALE = 0.001  # meters per PGM count (millimeter depth)

STATIC_WALL_HEIGHT = 1.2
OBJECT_HEIGHT = 0.4


@dataclass
class _Face:
    label: int  # 0 for static geometry (occludes, emits no points)


@dataclass
class _WallFace(_Face):
    a: np.ndarray  # (2,) base edge start
    b: np.ndarray  # (2,) base edge end
    height: float


@dataclass
class _TopFace(_Face):
    polygon: np.ndarray  # (n, 2) CCW
    height: float


class DepthRenderer:
    """Z-buffer renderer over vertical prisms built from world polygons."""

    def __init__(self, intr: CameraIntrinsics, extr: CameraExtrinsics,
                 object_height: float = OBJECT_HEIGHT,
                 wall_height: float = STATIC_WALL_HEIGHT,
                 max_range: float = 10.0):
        self.intr = intr
        self.extr = extr
        self.object_height = object_height
        self.wall_height = wall_height
        self.max_range = max_range
        us, vs = np.meshgrid(np.arange(intr.width), np.arange(intr.height))
        # camera-frame ray directions with unit forward component, so the
        # ray parameter equals the depth value directly
        self._dirs_cam = np.stack([
            (us - intr.cx) / intr.fx,
            (vs - intr.cy) / intr.fy,
            np.ones_like(us, dtype=float),
        ], axis=-1)

    @staticmethod
    def _faces_for_polygon(poly: Sequence[Tuple[float, float]], height: float,
                           label: int) -> List[_Face]:
        pts = np.asarray(poly, dtype=float)
        faces: List[_Face] = [_TopFace(label, pts, height)]
        n = len(pts)
        for i in range(n):
            faces.append(_WallFace(label, pts[i], pts[(i + 1) % n], height))
        return faces

    def render(self, robot_pose: Pose2D, objects: Sequence[ObjectInstance],
               static_polygons: Sequence[Sequence[Tuple[float, float]]]
               ) -> Tuple[DepthImage, SegmentationMask]:
        faces: List[_Face] = []
        for poly in static_polygons:
            faces.extend(self._faces_for_polygon(poly, self.wall_height, 0))
        for obj in objects:
            faces.extend(self._faces_for_polygon(
                footprint_world(obj), self.object_height, obj.id))

        axes = camera_axes_in_robot(self.extr)  # camera axes in robot frame
        yaw = robot_pose.theta + self.extr.pose_in_robot.theta
        cy, sy = math.cos(yaw), math.sin(yaw)
        rot_yaw = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
        cam_to_world = rot_yaw @ axes.T
        ox, oy = robot_pose.x, robot_pose.y
        offx, offy = self.extr.pose_in_robot.x, self.extr.pose_in_robot.y
        c, s = math.cos(robot_pose.theta), math.sin(robot_pose.theta)
        origin = np.array([ox + c * offx - s * offy,
                           oy + s * offx + c * offy,
                           self.extr.mount_height])

        dirs = self._dirs_cam @ cam_to_world.T  # (h, w, 3) world-frame rays
        depth = np.full(dirs.shape[:2], np.inf)
        labels = np.zeros(dirs.shape[:2], dtype=np.int64)

        for face in faces:
            if isinstance(face, _WallFace):
                t, hit = self._intersect_wall(origin, dirs, face)
            else:
                t, hit = self._intersect_top(origin, dirs, face)
            closer = hit & (t < depth)
            depth[closer] = t[closer]
            labels[closer] = face.label

        valid = np.isfinite(depth) & (depth <= self.max_range)
        out_depth = np.where(valid, depth, 0.0)
        out_labels = np.where(valid, labels, 0)
        return (DepthImage(self.intr.width, self.intr.height, out_depth),
                SegmentationMask(self.intr.width, self.intr.height, out_labels))

    @staticmethod
    def _intersect_wall(origin, dirs, face: _WallFace):
        e = face.b - face.a
        n = np.array([e[1], -e[0], 0.0])
        norm = np.linalg.norm(n)
        if norm < 1e-12:
            shape = dirs.shape[:2]
            return np.full(shape, np.inf), np.zeros(shape, dtype=bool)
        n /= norm
        denom = dirs @ n
        num = (np.array([face.a[0], face.a[1], 0.0]) - origin) @ n
        with np.errstate(divide="ignore", invalid="ignore"):
            t = num / denom
        q = origin[None, None, :] + t[..., None] * dirs
        ee = float(e @ e)
        sparam = ((q[..., 0] - face.a[0]) * e[0] +
                  (q[..., 1] - face.a[1]) * e[1]) / ee
        hit = (np.abs(denom) > 1e-12) & (t > 1e-6)
        hit &= (sparam >= 0.0) & (sparam <= 1.0)
        hit &= (q[..., 2] >= 0.0) & (q[..., 2] <= face.height)
        return np.where(hit, t, np.inf), hit

    @staticmethod
    def _intersect_top(origin, dirs, face: _TopFace):
        dz = dirs[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (face.height - origin[2]) / dz
        q = origin[None, None, :] + t[..., None] * dirs
        hit = (np.abs(dz) > 1e-12) & (t > 1e-6)
        inside = np.ones(dirs.shape[:2], dtype=bool)
        pts = face.polygon
        n = len(pts)
        for i in range(n):
            ax, ay = pts[i]
            bx, by = pts[(i + 1) % n]
            cross = (bx - ax) * (q[..., 1] - ay) - (by - ay) * (q[..., 0] - ax)
            inside &= cross >= -1e-12  # CCW polygon: inside is left of edges
        hit &= inside
        return np.where(hit, t, np.inf), hit


# -- PGM fixture container ---------------------------------------------------

def save_depth_pgm(depth: DepthImage, path, scale: float = DEPTH_SCALE) -> None:
    """16-bit binary PGM; counts are depth/scale, 0 = invalid."""
    counts = np.clip(np.round(depth.depth / scale), 0, 65535).astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P5\n# scale {scale}\n{depth.width} {depth.height}\n65535\n"
                .encode("ascii"))
        f.write(counts.tobytes())


def load_depth_pgm(path) -> DepthImage:
    with open(path, "rb") as f:
        data = f.read()
    width, height, scale, payload = _parse_pgm16(data)
    counts = np.frombuffer(payload, dtype=">u2").reshape(height, width)
    return DepthImage(width, height, counts.astype(float) * scale)


def save_mask_pgm(mask: SegmentationMask, path) -> None:
    """16-bit binary PGM of raw object ids, 0 = background."""
    counts = mask.labels.astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P5\n{mask.width} {mask.height}\n65535\n".encode("ascii"))
        f.write(counts.tobytes())


def load_mask_pgm(path) -> SegmentationMask:
    with open(path, "rb") as f:
        data = f.read()
    width, height, _, payload = _parse_pgm16(data)
    counts = np.frombuffer(payload, dtype=">u2").reshape(height, width)
    return SegmentationMask(width, height, counts.astype(np.int64))


def _parse_pgm16(data: bytes):
    pos = 0
    tokens = []
    scale = DEPTH_SCALE
    while len(tokens) < 4:
        if data[pos:pos + 1] == b"#":
            end = data.index(b"\n", pos)
            comment = data[pos + 1:end].split()
            if len(comment) == 2 and comment[0] == b"scale":
                scale = float(comment[1])
            pos = end + 1
            continue
        if data[pos:pos + 1].isspace():
            pos += 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != b"P5" or tokens[3] != b"65535":
        raise ValueError("expected a 16-bit binary PGM")
    width, height = int(tokens[1]), int(tokens[2])
    payload = data[pos + 1:pos + 1 + width * height * 2]
    if len(payload) != width * height * 2:
        raise ValueError("truncated PGM payload")
    return width, height, scale, payload


# -- SVG frames --------------------------------------------------------------

def svg_frame(path, width_m: float, height_m: float, cmap,
              objects: Dict[int, ObjectInstance], robot_pose: Pose2D,
              robot_radius: float, goal: Tuple[float, float],
              plan=None, scale_px: float = 80.0) -> None:
    """One debug frame: composed-cost heat, objects, plan, robot, goal."""
    w = width_m * scale_px
    h = height_m * scale_px

    def sx(x):
        return x * scale_px

    def sy(y):
        return h - y * scale_px  # flip so +y is up

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" '
        f'height="{h:.0f}" viewBox="0 0 {w:.1f} {h:.1f}">',
        f'<rect width="{w:.1f}" height="{h:.1f}" fill="white"/>',
    ]

    cost = cmap.composed
    res = cmap.resolution
    cell_px = res * scale_px
    rows, cols = np.nonzero(cost > 0)
    for r, c in zip(rows.tolist(), cols.tolist()):
        v = int(cost[r, c])
        color = "#303030" if v >= FATAL else f"rgb(255,{max(0, 230 - 4 * v)},120)"
        x = cmap.origin[0] + c * res
        y = cmap.origin[1] + (r + 1) * res
        parts.append(f'<rect x="{sx(x):.1f}" y="{sy(y):.1f}" '
                     f'width="{cell_px:.1f}" height="{cell_px:.1f}" '
                     f'fill="{color}"/>')

    for obj in objects.values():
        pts = " ".join(f"{sx(x):.1f},{sy(y):.1f}"
                       for x, y in footprint_world(obj))
        fill = "#c08040" if obj.obj_class.movable else "#8040c0"
        parts.append(f'<polygon points="{pts}" fill="{fill}" '
                     f'fill-opacity="0.8" stroke="black"/>')

    if plan is not None and len(plan) > 1:
        pts = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in plan.waypoints)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="blue" '
                     f'stroke-width="2"/>')

    gx, gy = goal
    parts.append(f'<circle cx="{sx(gx):.1f}" cy="{sy(gy):.1f}" r="6" '
                 f'fill="red"/>')
    rx, ry = robot_pose.x, robot_pose.y
    hx = rx + robot_radius * math.cos(robot_pose.theta)
    hy = ry + robot_radius * math.sin(robot_pose.theta)
    parts.append(f'<circle cx="{sx(rx):.1f}" cy="{sy(ry):.1f}" '
                 f'r="{robot_radius * scale_px:.1f}" fill="green" '
                 f'fill-opacity="0.7" stroke="black"/>')
    parts.append(f'<line x1="{sx(rx):.1f}" y1="{sy(ry):.1f}" '
                 f'x2="{sx(hx):.1f}" y2="{sy(hy):.1f}" stroke="black" '
                 f'stroke-width="2"/>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(parts))

"""Depth + segmentation mask to labeled 2D grid cells.

Pipeline: pinhole back-projection -> camera-to-robot frame transform ->
statistical outlier removal -> z-band grid projection with per-cell voting.
All steps are deterministic pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .world import GridIndex, Pose2D


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


@dataclass(frozen=True)
class CameraExtrinsics:
    mount_height: float = 0.6
    tilt: float = math.radians(30.0)  # downward-positive pitch
    pose_in_robot: Pose2D = Pose2D()

    def __post_init__(self):
        if abs(self.tilt) >= math.pi / 2:
            raise ValueError("|tilt| must be below 90 degrees")


@dataclass(frozen=True)
class DepthImage:
    width: int
    height: int
    depth: np.ndarray  # (height, width) float, meters, 0.0 = invalid

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=float)
        if d.shape != (self.height, self.width):
            raise ValueError("depth array shape must be (height, width)")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ValueError("depth values must be finite and non-negative")
        object.__setattr__(self, "depth", d)


@dataclass(frozen=True)
class SegmentationMask:
    width: int
    height: int
    labels: np.ndarray  # (height, width) int, 0 = background

    def __post_init__(self):
        l = np.asarray(self.labels, dtype=np.int64)
        if l.shape != (self.height, self.width):
            raise ValueError("label array shape must be (height, width)")
        object.__setattr__(self, "labels", l)


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray  # (n, 3) float
    labels: np.ndarray  # (n,) int

    def __post_init__(self):
        p = np.asarray(self.points, dtype=float).reshape(-1, 3)
        l = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(p) != len(l):
            raise ValueError("points and labels must be parallel")
        if not np.all(np.isfinite(p)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "labels", l)

    def __len__(self) -> int:
        return len(self.points)


def empty_cloud() -> PointCloud:
    return PointCloud(np.zeros((0, 3)), np.zeros(0, dtype=np.int64))


def depth_to_cloud(depth: DepthImage, mask: SegmentationMask,
                   intr: CameraIntrinsics) -> PointCloud:
    """Back-project labeled valid depth pixels into the camera frame.

    Emits ((u-cx)*z/fx, (v-cy)*z/fy, z) for every pixel with z > 0 and a
    nonzero label, in row-major pixel order.
    """
    if (depth.width, depth.height) != (intr.width, intr.height):
        raise ValueError("depth image dimensions do not match intrinsics")
    if (mask.width, mask.height) != (depth.width, depth.height):
        raise ValueError("mask dimensions do not match depth image")
    valid = (depth.depth > 0) & (mask.labels != 0)
    vs, us = np.nonzero(valid)
    z = depth.depth[vs, us]
    x = (us - intr.cx) * z / intr.fx
    y = (vs - intr.cy) * z / intr.fy
    return PointCloud(np.column_stack([x, y, z]), mask.labels[vs, us])


def camera_axes_in_robot(extr: CameraExtrinsics) -> np.ndarray:
    """Rows are the camera x (right), y (down), z (forward) axes expressed in
    the robot frame (x forward, y left, z up), before the planar offset."""
    t = extr.tilt
    cam_x = np.array([0.0, -1.0, 0.0])
    cam_y = np.array([-math.sin(t), 0.0, -math.cos(t)])
    cam_z = np.array([math.cos(t), 0.0, -math.sin(t)])
    return np.vstack([cam_x, cam_y, cam_z])


def cloud_to_robot_frame(cloud: PointCloud, extr: CameraExtrinsics) -> PointCloud:
    """Rotate by the mount tilt and translate by the mount height/offset so
    that z measures height above the floor."""
    if len(cloud) == 0:
        return cloud
    axes = camera_axes_in_robot(extr)
    pts = cloud.points @ axes  # row-vector form of axes^T @ p
    pts[:, 2] += extr.mount_height
    off = extr.pose_in_robot
    c, s = math.cos(off.theta), math.sin(off.theta)
    xr = off.x + c * pts[:, 0] - s * pts[:, 1]
    yr = off.y + s * pts[:, 0] + c * pts[:, 1]
    return PointCloud(np.column_stack([xr, yr, pts[:, 2]]), cloud.labels.copy())


def cloud_to_world_frame(cloud: PointCloud, robot_pose: Pose2D) -> PointCloud:
    if len(cloud) == 0:
        return cloud
    c, s = math.cos(robot_pose.theta), math.sin(robot_pose.theta)
    xw = robot_pose.x + c * cloud.points[:, 0] - s * cloud.points[:, 1]
    yw = robot_pose.y + s * cloud.points[:, 0] + c * cloud.points[:, 1]
    return PointCloud(np.column_stack([xw, yw, cloud.points[:, 2]]),
                      cloud.labels.copy())


def sor_filter(cloud: PointCloud, k: int = 10, alpha: float = 2.5) -> PointCloud:
    """Statistical outlier removal.

    Keeps points whose mean distance to their k nearest neighbors is at most
    mu + alpha*sigma of the per-point mean-distance distribution. Clouds with
    at most k points pass through unchanged.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    n = len(cloud)
    if n <= k:
        return cloud
    tree = cKDTree(cloud.points)
    dists, _ = tree.query(cloud.points, k=k + 1)
    mean_d = dists[:, 1:].mean(axis=1)  # drop self-distance
    mu = mean_d.mean()
    sigma = mean_d.std()
    keep = mean_d <= mu + alpha * sigma
    return PointCloud(cloud.points[keep], cloud.labels[keep])


def cloud_to_cells(cloud: PointCloud, resolution: float,
                   origin: Tuple[float, float] = (0.0, 0.0),
                   z_band: Tuple[float, float] = (0.02, 1.5),
                   min_hits: int = 3) -> Dict[GridIndex, int]:
    """Project a labeled world-frame cloud onto grid cells.

    A cell is emitted only when at least min_hits points of one id land in it;
    on collisions the id with the most hits wins, ties broken by smaller id.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    if len(cloud) == 0:
        return {}
    z = cloud.points[:, 2]
    band = (z >= z_band[0]) & (z <= z_band[1])
    if not np.any(band):
        return {}
    xs = cloud.points[band, 0]
    ys = cloud.points[band, 1]
    ids = cloud.labels[band]
    cols = np.floor((xs - origin[0]) / resolution).astype(np.int64)
    rows = np.floor((ys - origin[1]) / resolution).astype(np.int64)

    counts: Dict[Tuple[int, int, int], int] = {}
    for c, r, i in zip(cols.tolist(), rows.tolist(), ids.tolist()):
        key = (c, r, i)
        counts[key] = counts.get(key, 0) + 1

    best: Dict[GridIndex, Tuple[int, int]] = {}  # cell -> (hits, id)
    for (c, r, i), hits in counts.items():
        if hits < min_hits:
            continue
        cell = GridIndex(c, r)
        prev = best.get(cell)
        if prev is None or hits > prev[0] or (hits == prev[0] and i < prev[1]):
            best[cell] = (hits, i)
    return {cell: i for cell, (_, i) in best.items()}

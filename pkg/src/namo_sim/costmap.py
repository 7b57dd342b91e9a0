"""Layered 2D costmap: static/fatal layer, per-object movable layer, inflation.

Cell sources:
  free             nothing known
  static           fatal geometry (walls, unclassified occupancy)
  movable_object   cells of a classified movable obstacle, 0 < cost < 255
  unmovable_object cells of a classified unmovable obstacle, fatal
  inflation        cells filled only by spreading a neighbor outward

Inflation spreads fatal sources as fatal and movable sources with their own
cost and object id (nearest source wins, ties to the lower id); the composed
cost at a cell is the max over everything that reached it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Set, Tuple

import numpy as np

from .world import FATAL, GridIndex, ObjectClass

SOURCE_FREE = "free"
SOURCE_STATIC = "static"
SOURCE_MOVABLE = "movable_object"
SOURCE_UNMOVABLE = "unmovable_object"
SOURCE_INFLATION = "inflation"

_NO_ID = -1
_BIG_ID = np.iinfo(np.int64).max


class CostmapError(Exception):
    pass


class OutOfBounds(CostmapError):
    pass


class UnknownObject(CostmapError):
    pass


@dataclass(frozen=True)
class CostCell:
    cost: int
    object_id: Optional[int]
    source: str


def _shift(arr: np.ndarray, dr: int, dc: int, fill) -> np.ndarray:
    """Shift a 2D array by (dr, dc) without wraparound."""
    out = np.full_like(arr, fill)
    h, w = arr.shape
    r0, r1 = max(dr, 0), min(h + dr, h)
    c0, c1 = max(dc, 0), min(w + dc, w)
    if r0 < r1 and c0 < c1:
        out[r0:r1, c0:c1] = arr[r0 - dr:r1 - dr, c0 - dc:c1 - dc]
    return out


def disk_offsets(radius_cells: float) -> List[Tuple[int, int, float]]:
    """All (dr, dc, euclidean distance) with distance <= radius, sorted by
    (distance, dr, dc) so nearest-source updates are processed in order."""
    r = int(math.floor(radius_cells + 1e-9))
    out = []
    for dr in range(-r, r + 1):
        for dc in range(-r, r + 1):
            d = math.hypot(dr, dc)
            if d <= radius_cells + 1e-9:
                out.append((dr, dc, d))
    out.sort(key=lambda t: (t[2], t[0], t[1]))
    return out


class LayeredCostmap:
    """Mutable grid owned by the simulation thread; arrays are row-major with
    row = y index, col = x index."""

    def __init__(self, width: int, height: int, resolution: float,
                 origin: Tuple[float, float] = (0.0, 0.0),
                 inflation_radius: float = 0.25):
        if width <= 0 or height <= 0 or resolution <= 0:
            raise ValueError("grid dimensions and resolution must be positive")
        if inflation_radius < 0:
            raise ValueError("inflation_radius must be non-negative")
        self.width = width
        self.height = height
        self.resolution = resolution
        self.origin = (float(origin[0]), float(origin[1]))
        self.inflation_radius = inflation_radius

        shape = (height, width)
        self.static_mask = np.zeros(shape, dtype=bool)
        self.obj_cost = np.zeros(shape, dtype=np.int64)
        self.obj_id = np.full(shape, _NO_ID, dtype=np.int64)
        self.obj_movable = np.zeros(shape, dtype=bool)

        self.composed_cost = np.zeros(shape, dtype=np.int64)
        self.composed_id = np.full(shape, _NO_ID, dtype=np.int64)

        self._objects: Dict[int, Tuple[ObjectClass, Set[GridIndex]]] = {}
        self._unmovable_overrides: Set[int] = set()
        self._dirty = True

    # -- queries -------------------------------------------------------------

    def in_bounds(self, cell: GridIndex) -> bool:
        return 0 <= cell.col < self.width and 0 <= cell.row < self.height

    def world_to_cell(self, x: float, y: float) -> GridIndex:
        return GridIndex(
            int(math.floor((x - self.origin[0]) / self.resolution)),
            int(math.floor((y - self.origin[1]) / self.resolution)),
        )

    def cell_center(self, cell: GridIndex) -> Tuple[float, float]:
        return (
            self.origin[0] + (cell.col + 0.5) * self.resolution,
            self.origin[1] + (cell.row + 0.5) * self.resolution,
        )

    def object_class(self, obj_id: int) -> ObjectClass:
        if obj_id not in self._objects:
            raise UnknownObject(f"object id {obj_id} not in costmap")
        return self._objects[obj_id][0]

    def is_marked_unmovable(self, obj_id: int) -> bool:
        return obj_id in self._unmovable_overrides

    def cell_at(self, x: float, y: float) -> Tuple[CostCell, GridIndex]:
        cell = self.world_to_cell(x, y)
        if not self.in_bounds(cell):
            raise OutOfBounds(f"point ({x}, {y}) outside the costmap")
        self._ensure_composed()
        return self._composed_cell(cell), cell

    def _composed_cell(self, cell: GridIndex) -> CostCell:
        cost = int(self.composed_cost[cell.row, cell.col])
        oid = int(self.composed_id[cell.row, cell.col])
        if self.static_mask[cell.row, cell.col]:
            source = SOURCE_STATIC
        elif self.obj_id[cell.row, cell.col] != _NO_ID:
            source = (SOURCE_MOVABLE
                      if self.obj_movable[cell.row, cell.col]
                      else SOURCE_UNMOVABLE)
        elif cost > 0:
            source = SOURCE_INFLATION
        else:
            source = SOURCE_FREE
        return CostCell(cost, oid if oid != _NO_ID else None, source)

    # -- mutation ------------------------------------------------------------

    def _check_cells(self, cells: Iterable[GridIndex]) -> List[GridIndex]:
        out = []
        for cell in cells:
            cell = GridIndex(int(cell[0]), int(cell[1]))
            if not self.in_bounds(cell):
                raise OutOfBounds(f"cell {cell} outside {self.width}x{self.height} grid")
            out.append(cell)
        return out

    def set_static(self, cells: Iterable[GridIndex]) -> None:
        for cell in self._check_cells(cells):
            self.static_mask[cell.row, cell.col] = True
        self._dirty = True

    def upsert_object(self, obj_id: int, obj_class: ObjectClass,
                      cells: Iterable[GridIndex]) -> None:
        """Replace the cell set of an object; previous cells are freed."""
        checked = self._check_cells(cells)
        self._objects[obj_id] = (obj_class, set(checked))
        self._dirty = True

    def mark_object_unmovable(self, obj_id: int) -> None:
        """Fatalize an object's cells; the override sticks across re-upserts."""
        if obj_id not in self._objects:
            raise UnknownObject(f"object id {obj_id} not in costmap")
        if obj_id in self._unmovable_overrides:
            return
        self._unmovable_overrides.add(obj_id)
        self._dirty = True

    # -- inflation + composition --------------------------------------------

    def _rebuild_object_layer(self) -> None:
        """Rebuild the raw object arrays from the registry. Iterating ids in
        sorted order with a fatal-beats-cost, lower-id-wins rule makes the
        layer independent of upsert order on overlapping cells."""
        self.obj_id.fill(_NO_ID)
        self.obj_cost.fill(0)
        self.obj_movable.fill(False)
        for oid in sorted(self._objects):
            obj_class, cells = self._objects[oid]
            movable = obj_class.movable and oid not in self._unmovable_overrides
            cost = obj_class.move_cost if movable else FATAL
            for cell in cells:
                prev = self.obj_cost[cell.row, cell.col]
                if cost > prev:
                    self.obj_id[cell.row, cell.col] = oid
                    self.obj_cost[cell.row, cell.col] = cost
                    self.obj_movable[cell.row, cell.col] = movable

    def inflate_and_compose(self) -> None:
        self._rebuild_object_layer()
        radius_cells = self.inflation_radius / self.resolution
        offsets = disk_offsets(radius_cells)

        fatal_src = self.static_mask | (
            (self.obj_id != _NO_ID) & ~self.obj_movable)
        mov_src = self.obj_movable

        fatal_any = np.zeros_like(fatal_src)
        src_id = np.where(mov_src, self.obj_id, _BIG_ID)
        src_cost = np.where(mov_src, self.obj_cost, 0)

        best_dist = np.full(fatal_src.shape, np.inf)
        best_id = np.full(fatal_src.shape, _BIG_ID, dtype=np.int64)
        best_cost = np.zeros(fatal_src.shape, dtype=np.int64)

        for dr, dc, d in offsets:
            fatal_any |= _shift(fatal_src, dr, dc, False)
            sid = _shift(src_id, dr, dc, _BIG_ID)
            valid = sid != _BIG_ID
            if not valid.any():
                continue
            upd = valid & ((d < best_dist) | ((d == best_dist) & (sid < best_id)))
            if upd.any():
                scost = _shift(src_cost, dr, dc, 0)
                best_dist[upd] = d
                best_id[upd] = sid[upd]
                best_cost[upd] = scost[upd]

        composed = np.where(fatal_any, FATAL, best_cost)
        composed_id = np.where(
            ~fatal_any & (best_id != _BIG_ID), best_id, _NO_ID)
        # raw unmovable-object cells keep their id for bookkeeping
        raw_unmov = (self.obj_id != _NO_ID) & ~self.obj_movable
        composed_id = np.where(raw_unmov, self.obj_id, composed_id)

        self.composed_cost = composed
        self.composed_id = composed_id
        self._dirty = False

    def _ensure_composed(self) -> None:
        if self._dirty:
            self.inflate_and_compose()

    @property
    def composed(self) -> np.ndarray:
        self._ensure_composed()
        return self.composed_cost

    def movable_extra(self) -> np.ndarray:
        """Per-cell planner surcharge: composed cost where a movable object
        (or its inflation) claims the cell, zero elsewhere."""
        self._ensure_composed()
        claimed = (self.composed_id != _NO_ID) & (self.composed_cost < FATAL)
        return np.where(claimed, self.composed_cost, 0)

    # -- debug dumps ---------------------------------------------------------

    def dump_pgm(self, path) -> None:
        """Composed layer as a binary 8-bit PGM (cost maps straight to gray)."""
        self._ensure_composed()
        data = self.composed_cost.astype(np.uint8)
        with open(path, "wb") as f:
            f.write(f"P5\n{self.width} {self.height}\n255\n".encode("ascii"))
            f.write(data.tobytes())

    def dump_object_table(self, path) -> None:
        """Sidecar text table: one line per object, id then sorted cells."""
        with open(path, "w", encoding="utf-8") as f:
            for oid in sorted(self._objects):
                cells = sorted(self._objects[oid][1], key=lambda c: (c.row, c.col))
                cell_txt = " ".join(f"{c.col},{c.row}" for c in cells)
                f.write(f"{oid}: {cell_txt}\n")

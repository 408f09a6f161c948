"""Planar shapes: offsets, Hausdorff distance, support functions, areas.

Shapes are thin wrappers over shapely geometries. Droplets extracted from a
lattice may be disconnected, so a :class:`PlanarShape` can hold several parts;
limit shapes are always a single convex polygon.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import shapely
import shapely.affinity
from shapely.ops import polylabel
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection
from shapely.geometry import MultiPolygon, Polygon
from shapely.geometry.polygon import orient

ARC_TOL = 1e-4


class PlanarShape:
    """A closed planar region; counterclockwise, possibly empty."""

    def __init__(self, geometry=None):
        if geometry is None or geometry.is_empty:
            geometry = Polygon()
        elif isinstance(geometry, Polygon):
            geometry = orient(geometry, 1.0)
        elif isinstance(geometry, MultiPolygon):
            geometry = MultiPolygon([orient(g, 1.0) for g in geometry.geoms])
        else:
            polys = [g for g in getattr(geometry, "geoms", [geometry]) if isinstance(g, Polygon)]
            geometry = PlanarShape(MultiPolygon(polys) if len(polys) > 1 else (polys[0] if polys else None)).geometry
        self.geometry = geometry

    @classmethod
    def from_vertices(cls, vertices) -> "PlanarShape":
        v = np.asarray(vertices, dtype=float).reshape(-1, 2)
        if len(v) < 3:
            return cls()
        return cls(Polygon(v))

    @classmethod
    def empty(cls) -> "PlanarShape":
        return cls()

    @property
    def is_empty(self) -> bool:
        return self.geometry.is_empty or self.geometry.area == 0.0

    @property
    def parts(self) -> list[Polygon]:
        if self.geometry.is_empty:
            return []
        if isinstance(self.geometry, MultiPolygon):
            return list(self.geometry.geoms)
        return [self.geometry]

    @property
    def vertices(self) -> np.ndarray:
        """Exterior vertices (no repeated closing point) of the largest part."""
        parts = self.parts
        if not parts:
            return np.zeros((0, 2))
        big = max(parts, key=lambda g: g.area)
        return np.asarray(big.exterior.coords)[:-1]

    @property
    def convex(self) -> bool:
        if len(self.parts) != 1 or self.parts[0].interiors:
            return False
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        scale = max(1.0, float(np.abs(v).max())) ** 2
        return bool(np.all(cross >= -1e-12 * scale))

    @property
    def area(self) -> float:
        return float(self.geometry.area)

    def scaled(self, factor: float) -> "PlanarShape":
        if self.is_empty:
            return PlanarShape()
        return PlanarShape(shapely.affinity.scale(self.geometry, factor, factor, origin=(0, 0)))

    def translated(self, vector) -> "PlanarShape":
        if self.is_empty:
            return PlanarShape()
        return PlanarShape(shapely.affinity.translate(self.geometry, float(vector[0]), float(vector[1])))

    def contains_points(self, xy) -> np.ndarray:
        """Closed-region membership for an (n, 2) array of points."""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        if self.is_empty:
            return np.zeros(len(xy), dtype=bool)
        return shapely.intersects_xy(self.geometry, xy[:, 0], xy[:, 1])

    def __repr__(self) -> str:
        return f"PlanarShape(parts={len(self.parts)}, area={self.area:.6g})"


@dataclass
class SupportFunction:
    """Support numbers h(theta_i) on the uniform grid theta_i = 2 pi i / N."""

    values: np.ndarray
    from_hull: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    @property
    def N(self) -> int:
        return len(self.values)

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.N) / self.N

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.N

    def second_difference(self) -> np.ndarray:
        h = self.values
        return (np.roll(h, -1) - 2.0 * h + np.roll(h, 1)) / self.dtheta**2

    def radius_of_curvature(self) -> np.ndarray:
        """h + h'' with periodic second differences."""
        return self.values + self.second_difference()

    def is_convex(self, tol: float = 1e-9) -> bool:
        return bool(np.all(self.radius_of_curvature() >= -tol))

    def area(self) -> float:
        """(1/2) sum h (h + h'') dtheta."""
        return float(0.5 * np.sum(self.values * self.radius_of_curvature()) * self.dtheta)

    @classmethod
    def from_function(cls, func, N: int) -> "SupportFunction":
        theta = 2.0 * np.pi * np.arange(N) / N
        return cls(np.asarray(func(theta), dtype=float))


def square_support(theta):
    """Support function of [-1, 1]^2."""
    return np.abs(np.cos(theta)) + np.abs(np.sin(theta))


def disk_shape(radius: float = 1.0, center=(0.0, 0.0), n: int = 4096) -> PlanarShape:
    th = 2.0 * np.pi * np.arange(n) / n
    return PlanarShape.from_vertices(np.c_[center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)])


def box_shape(x0: float, y0: float, x1: float, y1: float) -> PlanarShape:
    return PlanarShape(shapely.box(x0, y0, x1, y1))


def _quad_segs(radius: float, tol: float) -> int:
    if radius <= tol:
        return 1
    step = math.acos(1.0 - tol / radius)
    return max(1, math.ceil((math.pi / 2) / step))


def offset_shape(s: PlanarShape, delta: float, arc_tol: float = ARC_TOL) -> PlanarShape:
    """Outer (delta > 0) or inner (delta < 0) delta-neighbourhood.

    Minkowski sum with, or erosion by, the closed disk of radius |delta|.
    Round joins are polygonized with sagitta at most ``arc_tol``; an inner
    offset beyond the inradius gives the empty shape.
    """
    if s.is_empty:
        return PlanarShape()
    if delta == 0:
        return PlanarShape(s.geometry)
    segs = _quad_segs(abs(delta), arc_tol)
    return PlanarShape(s.geometry.buffer(delta, quad_segs=segs, join_style="round"))


def _boundary_samples(s: PlanarShape, spacing: float | None) -> np.ndarray:
    rings = []
    for part in s.parts:
        rings.append(part.exterior)
        rings.extend(part.interiors)
    pts = []
    for ring in rings:
        if spacing is not None:
            ring = shapely.segmentize(ring, spacing)
        pts.append(np.asarray(ring.coords))
    return np.concatenate(pts) if pts else np.zeros((0, 2))


def directed_hausdorff(a: PlanarShape, b: PlanarShape, tol: float = ARC_TOL) -> float:
    """sup over points of region a of the distance to region b.

    The sup is attained on the boundary of a or, when b has holes, at the
    deepest point of a hole. When b is convex the distance is convex along
    each edge of a, so vertices suffice; otherwise edges are subdivided at
    ``tol`` (error at most tol / 2).
    """
    spacing = None if b.convex else tol
    pts = _boundary_samples(a, spacing)
    # holes of b lying inside a: the deepest point of each hole is a candidate
    extra = [polylabel(Polygon(ring), tolerance=tol).coords[0]
             for part in b.parts for ring in part.interiors]
    if extra:
        extra = np.asarray(extra)
        extra = extra[a.contains_points(extra)]
        pts = np.vstack([pts, extra])
    d = distance_to_region(pts, b)
    return float(np.max(d)) if len(d) else 0.0


def _edges(s: PlanarShape) -> np.ndarray:
    segs = []
    for part in s.parts:
        for ring in [part.exterior, *part.interiors]:
            xy = np.asarray(ring.coords)
            segs.append(np.stack([xy[:-1], xy[1:]], axis=1))
    return np.concatenate(segs)


def distance_to_region(xy, s: PlanarShape) -> np.ndarray:
    """Euclidean distance from each point to the closed region (0 inside)."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    out = np.zeros(len(xy))
    outside = ~s.contains_points(xy)
    if not outside.any():
        return out
    tree = shapely.STRtree(shapely.linestrings(_edges(s)))
    _, dist = tree.query_nearest(shapely.points(xy[outside]), return_distance=True, all_matches=False)
    out[outside] = dist
    return out


def hausdorff_distance(a: PlanarShape, b: PlanarShape, tol: float = ARC_TOL) -> float:
    """Symmetric Hausdorff distance between two closed regions."""
    if a.is_empty and b.is_empty:
        return 0.0
    if a.is_empty or b.is_empty:
        return math.inf
    return max(directed_hausdorff(a, b, tol), directed_hausdorff(b, a, tol))


def support_function_of(s: PlanarShape, N: int) -> SupportFunction:
    """h(theta_i) = max over vertices of x . v(theta_i); hull for non-convex input."""
    if s.is_empty:
        raise ValueError("support function of an empty shape")
    convex = s.convex
    geom = s.geometry if convex else s.geometry.convex_hull
    v = np.asarray(PlanarShape(geom).vertices)
    th = 2.0 * np.pi * np.arange(N) / N
    dirs = np.c_[np.cos(th), np.sin(th)]
    vals = np.empty(N)
    for lo in range(0, N, 1024):
        vals[lo : lo + 1024] = (dirs[lo : lo + 1024] @ v.T).max(axis=1)
    return SupportFunction(vals, from_hull=not convex)


def halfplane_intersection(normals, offsets) -> PlanarShape:
    """Polygon {x : n_k . x <= c_k for all k}; empty when infeasible or degenerate."""
    normals = np.asarray(normals, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    norms = np.linalg.norm(normals, axis=1)
    # Chebyshev centre: maximise r subject to n.x + r |n| <= c
    res = linprog(
        c=[0.0, 0.0, -1.0],
        A_ub=np.c_[normals, norms],
        b_ub=offsets,
        bounds=[(None, None), (None, None), (0.0, None)],
        method="highs",
    )
    if res.status != 0 or res.x[2] <= 1e-12:
        return PlanarShape()
    centre = res.x[:2]
    hs = HalfspaceIntersection(np.c_[normals, -offsets], centre)
    pts = hs.intersections
    hull = ConvexHull(pts)
    return PlanarShape.from_vertices(pts[hull.vertices])


def shape_from_support(h: SupportFunction) -> PlanarShape:
    th = h.angles
    return halfplane_intersection(np.c_[np.cos(th), np.sin(th)], h.values)


def area_of(s: PlanarShape) -> float:
    """Shoelace area (holes subtracted)."""
    total = 0.0
    for part in s.parts:
        for k, ring in enumerate([part.exterior, *part.interiors]):
            xy = np.asarray(ring.coords)
            a = 0.5 * abs(np.dot(xy[:-1, 0], xy[1:, 1]) - np.dot(xy[1:, 0], xy[:-1, 1]))
            total += a if k == 0 else -a
    return float(total)


@dataclass(frozen=True)
class SandwichVerdict:
    inner_ok: bool
    outer_ok: bool
    inner_margin: float
    outer_margin: float

    @property
    def ok(self) -> bool:
        return self.inner_ok and self.outer_ok


def sandwich_check(inner: PlanarShape, observed: PlanarShape, outer: PlanarShape,
                   tol: float = 1e-9) -> SandwichVerdict:
    """Check inner <= observed <= outer; margins are directed Hausdorff excesses."""
    m_in = 0.0 if inner.is_empty else (math.inf if observed.is_empty else directed_hausdorff(inner, observed))
    m_out = 0.0 if observed.is_empty else (math.inf if outer.is_empty else directed_hausdorff(observed, outer))
    return SandwichVerdict(m_in <= tol, m_out <= tol, m_in, m_out)


def write_polygon_csv(s: PlanarShape, path=None) -> str:
    """x,y per vertex row; parts separated by a blank line."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y"])
    for k, part in enumerate(s.parts):
        if k:
            buf.write("\n")
        for x, y in np.asarray(part.exterior.coords)[:-1]:
            w.writerow([repr(float(x)), repr(float(y))])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_polygon_csv(path_or_text) -> PlanarShape:
    text = str(path_or_text)
    if "\n" not in text and Path(text).exists():
        text = Path(text).read_text()
    parts, cur = [], []
    for line in text.splitlines()[1:]:
        line = line.strip()
        if not line:
            if cur:
                parts.append(cur)
            cur = []
            continue
        x, y = line.split(",")
        cur.append((float(x), float(y)))
    if cur:
        parts.append(cur)
    polys = [Polygon(p) for p in parts if len(p) >= 3]
    if not polys:
        return PlanarShape()
    return PlanarShape(polys[0] if len(polys) == 1 else MultiPolygon(polys))

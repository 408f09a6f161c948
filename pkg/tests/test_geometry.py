import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.spatial import ConvexHull

from isingdroplet.geometry import (
    PlanarShape, SupportFunction, area_of, box_shape, directed_hausdorff, disk_shape,
    distance_to_region, halfplane_intersection, hausdorff_distance, offset_shape,
    read_polygon_csv, sandwich_check, shape_from_support, support_function_of,
    write_polygon_csv,
)

SQ = box_shape(-1, -1, 1, 1)


def random_convex(seed, n=12, scale=1.0):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, 2)) * scale
    hull = ConvexHull(pts)
    return PlanarShape.from_vertices(pts[hull.vertices])


def test_orientation_and_convex_flag():
    s = PlanarShape.from_vertices([(0, 0), (0, 1), (1, 1), (1, 0)])  # clockwise input
    v = s.vertices
    signed = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
    assert signed > 0
    assert s.convex
    l_shape = PlanarShape.from_vertices([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
    assert not l_shape.convex


def test_offset_square_erosion():
    inner = offset_shape(SQ, -0.25)
    assert hausdorff_distance(inner, box_shape(-0.75, -0.75, 0.75, 0.75)) < 1e-12


def test_offset_disk_dilation():
    out = offset_shape(disk_shape(1.0), 0.5)
    r = np.hypot(*out.vertices.T)
    assert np.all(np.abs(r - 1.5) < 2e-4)


def test_inner_offset_past_inradius_is_empty():
    assert offset_shape(SQ, -1.5).is_empty


@given(st.integers(0, 10**6), st.floats(0.01, 0.3))
def test_opening_is_contained(seed, delta):
    s = random_convex(seed)
    opened = offset_shape(offset_shape(s, -delta), delta)
    assert opened.is_empty or directed_hausdorff(opened, s) < 1e-3


@given(st.integers(0, 10**6), st.floats(-0.2, 0.2), st.floats(0.0, 0.2))
def test_offset_monotone(seed, d1, gap):
    s = random_convex(seed)
    a, b = offset_shape(s, d1), offset_shape(s, d1 + gap)
    assert a.is_empty or directed_hausdorff(a, b) < 1e-3


def test_hausdorff_basic():
    assert hausdorff_distance(SQ, SQ) == 0.0
    assert hausdorff_distance(disk_shape(1), disk_shape(2)) == pytest.approx(1.0, abs=1e-6)
    v = np.array([0.3, -0.4])
    assert hausdorff_distance(SQ, SQ.translated(v)) == pytest.approx(0.5, abs=1e-12)
    assert hausdorff_distance(PlanarShape(), PlanarShape()) == 0.0
    assert hausdorff_distance(SQ, PlanarShape()) == math.inf


def test_hausdorff_sees_holes():
    ring = PlanarShape(SQ.geometry.difference(box_shape(-0.5, -0.5, 0.5, 0.5).geometry))
    assert hausdorff_distance(SQ, ring) == pytest.approx(0.5, abs=1e-3)


@given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6))
def test_hausdorff_metric_axioms(s1, s2, s3):
    a, b, c = random_convex(s1), random_convex(s2), random_convex(s3)
    dab, dba = hausdorff_distance(a, b), hausdorff_distance(b, a)
    assert dab == pytest.approx(dba, abs=1e-12)
    assert dab <= hausdorff_distance(a, c) + hausdorff_distance(c, b) + 1e-9


def test_distance_to_region_zero_inside():
    d = distance_to_region([[0, 0], [2, 0], [2, 2]], SQ)
    assert d[0] == 0.0 and d[1] == pytest.approx(1.0) and d[2] == pytest.approx(math.sqrt(2))


def test_support_function_of_square():
    h = support_function_of(SQ, 8)
    assert h.values[0] == pytest.approx(1.0)
    assert h.values[1] == pytest.approx(math.sqrt(2))
    th = h.angles
    assert np.allclose(h.values, np.abs(np.cos(th)) + np.abs(np.sin(th)))


def test_support_function_of_disk():
    c = np.array([0.2, -0.1])
    h = support_function_of(disk_shape(0.5, c, n=8192), 64)
    th = h.angles
    assert np.allclose(h.values, 0.5 + c[0] * np.cos(th) + c[1] * np.sin(th), atol=1e-6)


def test_support_of_nonconvex_flags_hull():
    l_shape = PlanarShape.from_vertices([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
    assert support_function_of(l_shape, 16).from_hull


@given(st.integers(0, 10**6))
def test_support_round_trip(seed):
    s = random_convex(seed)
    N = 512
    back = shape_from_support(support_function_of(s, N))
    diam = max(np.ptp(s.vertices[:, 0]), np.ptp(s.vertices[:, 1])) * math.sqrt(2)
    assert hausdorff_distance(s, back) <= 2 * math.pi * diam / N


@given(st.integers(0, 10**6))
def test_round_trip_contraction_stable(seed):
    s = random_convex(seed)
    once = shape_from_support(support_function_of(s, 64))
    twice = shape_from_support(support_function_of(once, 64))
    assert hausdorff_distance(once, twice) <= hausdorff_distance(s, once) + 1e-9


def test_halfplane_intersection_empty():
    normals = [(1, 0), (-1, 0)]
    assert halfplane_intersection(np.array(normals + [(0, 1), (0, -1)]), [-1, -1, 1, 1]).is_empty


def test_area():
    assert area_of(SQ) == 4.0
    assert area_of(disk_shape(1.0, n=4096)) == pytest.approx(math.pi, abs=1e-5)


@given(st.integers(0, 10**6), st.floats(0.1, 5.0))
def test_area_scaling(seed, lam):
    s = random_convex(seed)
    assert area_of(s.scaled(lam)) == pytest.approx(lam**2 * area_of(s), rel=1e-9)


def test_support_area_matches_polygon():
    h = SupportFunction.from_function(lambda th: np.full_like(th, 0.8), 2048)
    assert h.area() == pytest.approx(math.pi * 0.64, rel=1e-3)


def test_sandwich():
    d = 0.1
    v = sandwich_check(offset_shape(SQ, -d), SQ, offset_shape(SQ, d))
    assert v.ok
    moved = SQ.translated((2 * d, 0))
    v = sandwich_check(offset_shape(SQ, -d), moved, offset_shape(SQ, d))
    assert not v.ok and max(v.inner_margin, v.outer_margin) > 0


def test_polygon_csv_round_trip(tmp_path):
    s = PlanarShape(SQ.geometry.union(box_shape(2, 2, 3, 3).geometry))
    path = tmp_path / "p.csv"
    write_polygon_csv(s, path)
    back = read_polygon_csv(path)
    assert len(back.parts) == 2
    assert hausdorff_distance(s, back) == 0.0

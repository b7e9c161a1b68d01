import math

import numpy as np
import numpy.testing as npt
import pytest

import conemin.spherical as sph
from oracles import great_circle_samples, latitude_circle_samples, lhuilier_excess

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def random_cap_point(rng, center, cap_radius):
    """Uniform-ish point within angular distance cap_radius of center."""
    while True:
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        t = v - (v @ center) * center
        nt = np.linalg.norm(t)
        if nt > 1e-6:
            break
    ang = cap_radius * rng.uniform(0.05, 1.0)
    return math.cos(ang) * center + math.sin(ang) * (t / nt)


# ---------------------------------------------------------------- arc length

def test_arc_length_quarter_circle():
    assert sph.arc_length(E1, E2) == pytest.approx(math.pi / 2, abs=1e-15)


def test_arc_length_same_point_is_zero():
    assert sph.arc_length(E3, E3) == 0.0


def test_arc_length_antipodal_raises():
    with pytest.raises(ValueError, match="antipodal"):
        sph.arc_length(E1, -E1)


def test_arc_length_rejects_non_unit():
    with pytest.raises(ValueError, match="unit"):
        sph.arc_length(2.0 * E1, E2)


def test_arc_length_small_angle_accuracy():
    ang = 1e-8
    q = np.array([math.cos(ang), math.sin(ang), 0.0])
    # acos of a clipped dot loses relative accuracy at tiny angles, but the
    # absolute error stays below 1e-8 which is all downstream code needs
    assert sph.arc_length(E1, q) == pytest.approx(ang, abs=1e-8)


# ------------------------------------------------------------------- angles

def test_interior_angle_octant_corner():
    assert sph.interior_angle(E3, E1, E2) == pytest.approx(math.pi / 2, abs=1e-15)


def test_interior_angle_tiny_angle_atan2_accuracy():
    # two directions 1e-7 apart as seen from the vertex; arccos of the dot
    # would lose half the digits, atan2 must keep full relative accuracy
    eps = 1e-7
    u = np.array([1.0, 0.0, 0.0])
    w = np.array([math.cos(eps), math.sin(eps), 0.0])
    got = sph.interior_angle(E3, u, w)
    assert got == pytest.approx(eps, rel=1e-9)


def test_interior_angle_degenerate_neighbor_raises():
    with pytest.raises(ValueError, match="angle undefined"):
        sph.interior_angle(E3, E3, E1)
    with pytest.raises(ValueError, match="angle undefined"):
        sph.interior_angle(E3, -E3, E1)


# --------------------------------------------------------------------- arcs

def test_arc_endpoint_interpolation():
    arc = sph.GeodesicArc(E1, E2)
    npt.assert_allclose(arc.point(0.0), E1, atol=1e-15)
    npt.assert_allclose(arc.point(1.0), E2, atol=1e-15)
    mid = arc.point(0.5)
    npt.assert_allclose(mid, np.array([1.0, 1.0, 0.0]) / math.sqrt(2), atol=1e-15)


def test_arc_samples_uniform_spacing():
    arc = sph.GeodesicArc(E1, np.array([0.0, 0.6, 0.8]))
    pts = arc.samples(17)
    assert pts.shape == (17, 3)
    gaps = [sph.arc_length(pts[i], pts[i + 1]) for i in range(16)]
    npt.assert_allclose(gaps, arc.length / 16, rtol=1e-12)


def test_arc_rejects_equal_and_antipodal():
    with pytest.raises(ValueError):
        sph.GeodesicArc(E1, E1)
    with pytest.raises(ValueError):
        sph.GeodesicArc(E1, -E1)


def test_equator_pole():
    npt.assert_allclose(sph.equator_pole(sph.GeodesicArc(E1, E2)), E3, atol=1e-15)


# ----------------------------------------------------------------- polygons

def test_octant_triangle_excess():
    tri = sph.GeodesicPolygon((E1, E2, E3))
    npt.assert_allclose(tri.interior_angles(), [math.pi / 2] * 3, atol=1e-15)
    assert sph.spherical_excess(tri) == pytest.approx(math.pi / 2, abs=1e-14)


def test_excess_orientation_invariant():
    tri_ccw = sph.GeodesicPolygon((E1, E2, E3))
    tri_cw = sph.GeodesicPolygon((E3, E2, E1))
    assert sph.spherical_excess(tri_ccw) == pytest.approx(
        sph.spherical_excess(tri_cw), abs=1e-14)


def test_random_triangle_excess_matches_side_length_oracle():
    rng = np.random.default_rng(20240311)
    for _ in range(50):
        center = rng.normal(size=3)
        center /= np.linalg.norm(center)
        pts = [random_cap_point(rng, center, 0.6) for _ in range(3)]
        if min(np.linalg.norm(pts[i] - pts[(i + 1) % 3]) for i in range(3)) < 1e-3:
            continue
        tri = sph.GeodesicPolygon(tuple(pts))
        a = sph.arc_length(pts[0], pts[1])
        b = sph.arc_length(pts[1], pts[2])
        c = sph.arc_length(pts[2], pts[0])
        assert sph.spherical_excess(tri) == pytest.approx(
            lhuilier_excess(a, b, c), rel=1e-9, abs=1e-12)


def test_polygon_rejects_fewer_than_three_vertices():
    with pytest.raises(ValueError, match="at least 3"):
        sph.GeodesicPolygon((E1, E2))


def test_polygon_rejects_coincident_vertices():
    with pytest.raises(ValueError, match="coincident"):
        sph.GeodesicPolygon((E1, E2, E1, E3))


def test_polygon_rejects_ring_outside_hemisphere():
    # a ring girdling the sphere fits in no open hemisphere; the zigzag in
    # x3 keeps every vertex pair away from the antipodal degeneracy
    ring = tuple(sph.unit(np.array(v)) for v in
                 ((1, 0, 0.1), (0, 1, -0.1), (-1, 0, 0.1), (0, -1, -0.1)))
    with pytest.raises(ValueError, match="hemisphere"):
        sph.GeodesicPolygon(ring)


def test_polygon_rejects_bowtie():
    # swapping two vertices of a convex quadrilateral makes the edges cross
    quad = [sph.unit(np.array(v)) for v in
            ((1.0, -0.3, 1.0), (1.0, 0.3, 1.0), (-0.3, 1.0, 1.0), (0.3, 1.0, 1.0))]
    sph.GeodesicPolygon((quad[0], quad[1], quad[3], quad[2]))
    with pytest.raises(ValueError, match="cross"):
        sph.GeodesicPolygon(tuple(quad))


def test_polygon_rejects_vertex_on_edge():
    mid = sph.GeodesicArc(E1, E2).point(0.5)
    with pytest.raises(ValueError, match="cross"):
        sph.GeodesicPolygon((E1, E2, mid, E3))


def test_polygon_allows_straight_through_vertex():
    mid = sph.GeodesicArc(E1, E2).point(0.5)
    poly = sph.GeodesicPolygon((E1, mid, E2, E3))
    assert sph.spherical_excess(poly) == pytest.approx(math.pi / 2, abs=1e-12)


def test_thin_triangle_excess_small_but_positive():
    q = sph.unit(np.array([1.0, 1.0, 1e-3]))
    tri = sph.GeodesicPolygon((E1, E2, q))
    ex = sph.spherical_excess(tri)
    assert 0.0 < ex <= 1e-3


def test_random_convex_quadrilateral_angle_sum_exceeds_two_pi():
    # interior_angle folds reflex angles below pi, so the angle-sum identity
    # sum = 2*pi + area is only probed on convex draws
    rng = np.random.default_rng(90125)
    made = 0
    while made < 50:
        center = rng.normal(size=3)
        center /= np.linalg.norm(center)
        pts = [random_cap_point(rng, center, 0.55) for _ in range(4)]
        # sort by azimuth around the cap center so the loop is simple
        t1 = np.cross(center, [0.0, 0.0, 1.0] if abs(center[2]) < 0.9 else [1.0, 0.0, 0.0])
        t1 /= np.linalg.norm(t1)
        t2 = np.cross(center, t1)
        ang = [math.atan2(float(p @ t2), float(p @ t1)) for p in pts]
        quad = tuple(pts[i] for i in np.argsort(ang))
        if min(np.linalg.norm(quad[i] - quad[(i + 1) % 4]) for i in range(4)) < 1e-2:
            continue
        sides = [float(np.cross(quad[i], quad[(i + 1) % 4]) @ quad[(i + 2) % 4])
                 for i in range(4)]
        sides += [float(np.cross(quad[i], quad[(i + 1) % 4]) @ quad[(i + 3) % 4])
                  for i in range(4)]
        if min(sides) < 1e-6 and max(sides) > -1e-6:
            continue  # not strictly convex in one orientation
        try:
            poly = sph.GeodesicPolygon(quad)
        except ValueError:
            continue  # nearly collinear draw
        made += 1
        assert sum(poly.interior_angles()) > 2.0 * math.pi


# ---------------------------------------------------------------- meridians

def test_meridian_structure():
    m = sph.meridian(E3, np.array([0.0, 0.6, 0.8]))
    npt.assert_allclose(m.pole, E3, atol=1e-15)
    npt.assert_allclose(m.equator_point, E2, atol=1e-12)
    assert m.length == pytest.approx(math.pi, abs=1e-12)
    assert m.first.length == pytest.approx(math.pi / 2, abs=1e-12)


def test_meridian_through_pole_raises():
    with pytest.raises(ValueError, match="pole"):
        sph.meridian(E3, -E3)


def test_meets_orthogonally():
    assert sph.meets_orthogonally(E1, E2)
    assert not sph.meets_orthogonally(E1, np.array([1.0, 1.0, 0.0]))
    assert sph.meets_orthogonally(E1, np.array([1e-8, 1.0, 0.0]), tol=1e-6)


# ---------------------------------------------------- geodesic residual

def test_residual_zero_on_great_circles():
    for axis, phase in ((E3, 0.0), (np.array([1.0, 2.0, 2.0]) / 3.0, 0.7)):
        pts = great_circle_samples(400, axis=axis, phase=phase)
        assert sph.geodesic_residual(pts) < 1e-9


def test_residual_great_circle_arc_segment():
    arc = sph.GeodesicArc(E1, np.array([0.0, 0.6, 0.8]))
    assert sph.geodesic_residual(arc.samples(200)) < 1e-9


def test_residual_latitude_circle_value():
    # circle at height z on the unit sphere has geodesic curvature
    # z / sqrt(1 - z^2); at z = 1/2 that is 1/sqrt(3) = 0.5773...
    pts = latitude_circle_samples(0.5, 4000)
    got = sph.geodesic_residual(pts)
    assert got == pytest.approx(1.0 / math.sqrt(3.0), rel=1e-5)
    assert got > 0.3


def test_residual_latitude_circle_second_order_convergence():
    target = 1.0 / math.sqrt(3.0)
    errs = [abs(sph.geodesic_residual(latitude_circle_samples(0.5, n)) - target)
            for n in (500, 1000, 2000)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)
    assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.05)


def test_residual_rejects_short_and_nonuniform_input():
    with pytest.raises(ValueError, match="at least 5"):
        sph.geodesic_residual(great_circle_samples(400)[:4])
    pts = great_circle_samples(100)
    bad = np.vstack([pts[:50], pts[51::2]])
    with pytest.raises(ValueError, match="uniform"):
        sph.geodesic_residual(bad)


# ------------------------------------------------------------ two-arc audit

def make_audit_config(theta, phi_p, phi_q):
    """Base quarter-ish arc on the equator plus a second plane built from
    one chosen point on each bounding meridian."""
    p1 = E1
    q1 = np.array([math.cos(theta), math.sin(theta), 0.0])
    pole = sph.unit(np.cross(p1, q1))
    nu_p = sph.unit(np.cross(p1, pole))
    nu_q = sph.unit(np.cross(q1, pole))
    x_p = math.cos(phi_p) * pole + math.sin(phi_p) * p1
    x_q = math.cos(phi_q) * pole + math.sin(phi_q) * q1
    n2 = sph.unit(np.cross(x_p, x_q))
    return p1, q1, nu_p, nu_q, n2, x_p, x_q


def test_two_arc_audit_symmetric_frozen_values():
    p1, q1, nu_p, nu_q, n2, x_p, x_q = make_audit_config(
        math.pi / 2, math.pi / 4, math.pi / 4)
    rep = sph.two_arc_audit(p1, q1, nu_p, nu_q, n2)
    assert rep.alpha1 == pytest.approx(math.pi / 2, abs=1e-12)
    assert rep.beta1 == pytest.approx(math.pi / 2, abs=1e-12)
    # top angles are arccos(-1/sqrt(3)) each; excess is their sum minus pi
    top = math.acos(-1.0 / math.sqrt(3.0))
    assert rep.alpha2t == pytest.approx(top, abs=1e-12)
    assert rep.beta2t == pytest.approx(top, abs=1e-12)
    assert rep.excess == pytest.approx(1.230959417340775, abs=1e-12)
    assert rep.angle_sum == pytest.approx(rep.excess + 2.0 * math.pi, abs=1e-14)
    assert rep.infeasibility_witness


def test_two_arc_audit_crossings_recover_generators():
    # the second plane was built through x_p and x_q, so the meridian
    # crossings the audit finds must be exactly those generator points
    p1, q1, nu_p, nu_q, n2, x_p, x_q = make_audit_config(1.1, 0.4, 1.0)
    pole = sph.unit(np.cross(p1, q1))
    got_p = sph._meridian_plane_crossing(p1, pole, n2)
    got_q = sph._meridian_plane_crossing(q1, pole, n2)
    npt.assert_allclose(got_p, x_p, atol=1e-12)
    npt.assert_allclose(got_q, x_q, atol=1e-12)


def test_two_arc_audit_random_configs_always_witness():
    rng = np.random.default_rng(7121)
    for _ in range(100):
        theta = rng.uniform(0.2, math.pi - 0.2)
        phi_p = rng.uniform(0.1, math.pi / 2 - 0.05)
        phi_q = rng.uniform(0.1, math.pi / 2 - 0.05)
        p1, q1, nu_p, nu_q, n2, _, _ = make_audit_config(theta, phi_p, phi_q)
        rep = sph.two_arc_audit(p1, q1, nu_p, nu_q, n2)
        assert rep.infeasibility_witness
        assert rep.excess > 1e-9
        assert rep.alpha1 == pytest.approx(math.pi / 2, abs=1e-9)
        assert rep.beta1 == pytest.approx(math.pi / 2, abs=1e-9)
        assert rep.angle_sum == pytest.approx(rep.excess + 2 * math.pi, abs=1e-12)


def test_two_arc_audit_excess_splits_across_diagonal():
    rng = np.random.default_rng(3310)
    for _ in range(20):
        theta = rng.uniform(0.3, 2.5)
        p1, q1, nu_p, nu_q, n2, _, _ = make_audit_config(
            theta, rng.uniform(0.15, 1.4), rng.uniform(0.15, 1.4))
        rep = sph.two_arc_audit(p1, q1, nu_p, nu_q, n2)
        pole = sph.unit(np.cross(p1, q1))
        p2t = sph._meridian_plane_crossing(p1, pole, n2)
        q2t = sph._meridian_plane_crossing(q1, pole, n2)
        half1 = sph.spherical_excess(sph.GeodesicPolygon((p1, p2t, q1)))
        half2 = sph.spherical_excess(sph.GeodesicPolygon((p2t, q2t, q1)))
        assert rep.excess == pytest.approx(half1 + half2, abs=1e-10)


def test_two_arc_audit_rejects_non_orthogonal_contact():
    p1, q1, _, nu_q, n2, _, _ = make_audit_config(math.pi / 2, 0.5, 0.5)
    tilted = sph.unit(np.array([0.0, -1.0, 0.3]))
    with pytest.raises(ValueError, match="orthogonally"):
        sph.two_arc_audit(p1, q1, tilted, nu_q, n2)


def test_two_arc_audit_rejects_plane_meeting_base_arc():
    p1, q1, nu_p, nu_q, _, _, _ = make_audit_config(math.pi / 2, 0.5, 0.5)
    crossing = sph.unit(np.array([1.0, -1.0, 0.2]))  # separates p1 from q1
    with pytest.raises(ValueError, match="meets the closed base arc"):
        sph.two_arc_audit(p1, q1, nu_p, nu_q, crossing)
    touching = sph.unit(np.cross(p1, E3))  # contains the endpoint p1
    with pytest.raises(ValueError, match="meets the closed base arc"):
        sph.two_arc_audit(p1, q1, nu_p, nu_q, touching)


def test_two_arc_audit_rejects_plane_through_meridian_pole():
    p1, q1, nu_p, nu_q, _, _, _ = make_audit_config(math.pi / 2, 0.5, 0.5)
    # plane containing the base-circle pole e3, but with both endpoint signs
    # positive so the disjointness precheck passes
    n2 = sph.unit(np.array([1.0, 1.0, 0.0]))
    with pytest.raises(ValueError, match="pole"):
        sph.two_arc_audit(p1, q1, nu_p, nu_q, n2)

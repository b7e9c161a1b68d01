"""Geometric audits of a triangulated surface near a cone vertex.

monotonicity_ratio and density_ratio_bounds report the scaled area
p(r) = area(mesh inside B_r)/r^2; conical_deviation integrates
|x . normal|/|x|^3 over a ball annulus; boundary_angle_audit measures the
contact angle along the free boundary; vertex_distance is the exact
distance from the origin to the surface.

Ball clipping happens in each triangle's own plane, where the ball cuts a
disk centered at the foot of the perpendicular from the origin.  For the
area ratio the circular edge is replaced by an inscribed 16-segment
polyline; for the deviation integral the leftover crossing pieces after two
refinement rounds are clipped exactly, circular segments included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import PolyhedralCone
from .mesh import TriMesh, VertexClass

ARC_SEGMENTS = 16
DEVIATION_CHUNK = 262144
FACET_TOL = 1e-7


def _point_triangle_distances(a: np.ndarray, b: np.ndarray,
                              c: np.ndarray) -> np.ndarray:
    """Exact distance from the origin to each triangle (a[i], b[i], c[i]).

    Minimum over seven closed-form candidates: three vertices, three edges
    with clamped projection, and the plane point when its barycentric
    coordinates land inside.  Degenerate triangles fall back to the
    vertex/edge candidates, which are exact for them.
    """

    def edge(p, q):
        d = q - p
        dd = np.einsum("ij,ij->i", d, d)
        t = np.where(dd > 0, -np.einsum("ij,ij->i", p, d) / np.where(dd > 0, dd, 1.0), 0.0)
        t = np.clip(t, 0.0, 1.0)
        return np.linalg.norm(p + t[:, None] * d, axis=1)

    cands = [
        np.linalg.norm(a, axis=1),
        np.linalg.norm(b, axis=1),
        np.linalg.norm(c, axis=1),
        edge(a, b), edge(a, c), edge(b, c),
    ]
    ab, ac = b - a, c - a
    n = np.cross(ab, ac)
    nn = np.einsum("ij,ij->i", n, n)
    ok = nn > 0
    nhat = n / np.sqrt(np.where(ok, nn, 1.0))[:, None]
    off = np.einsum("ij,ij->i", a, nhat)
    foot = off[:, None] * nhat - a
    g11 = np.einsum("ij,ij->i", ab, ab)
    g12 = np.einsum("ij,ij->i", ab, ac)
    g22 = np.einsum("ij,ij->i", ac, ac)
    det = g11 * g22 - g12 * g12
    ok &= det > 0
    det = np.where(ok, det, 1.0)
    r1 = np.einsum("ij,ij->i", foot, ab)
    r2 = np.einsum("ij,ij->i", foot, ac)
    al = (g22 * r1 - g12 * r2) / det
    be = (g11 * r2 - g12 * r1) / det
    inside = ok & (al >= 0) & (be >= 0) & (al + be <= 1)
    cands.append(np.where(inside, np.abs(off), np.inf))
    return np.min(np.stack(cands), axis=0)


def vertex_distance(mesh: TriMesh) -> float:
    """Exact distance from the origin to the nearest surface point."""
    a, b, c = mesh.triangle_corners()
    return float(np.min(_point_triangle_distances(a, b, c)))


def _clip_chain(pts2: np.ndarray, s: float):
    """Boundary chain of (convex CCW polygon) ∩ (disk radius s at origin).

    Returns None when the polygon is entirely inside the disk, "disk" when
    the disk is entirely inside the polygon, [] when disjoint, else a list
    of ((entry, exit), exits_on_circle) per retained edge piece, in order.
    """
    norms = np.linalg.norm(pts2, axis=1)
    if np.all(norms <= s):
        return None
    k = len(pts2)
    pieces = []
    for i in range(k):
        p, q = pts2[i], pts2[(i + 1) % k]
        d = q - p
        aa = float(d @ d)
        if aa <= 0:
            continue
        bb = 2.0 * float(p @ d)
        cc = float(p @ p) - s * s
        disc = bb * bb - 4.0 * aa * cc
        if disc <= 0:
            continue
        sq = math.sqrt(disc)
        t0 = (-bb - sq) / (2.0 * aa)
        t1 = (-bb + sq) / (2.0 * aa)
        lo, hi = max(t0, 0.0), min(t1, 1.0)
        if hi - lo <= 1e-14:
            continue
        pieces.append((p + lo * d, p + hi * d))
    if pieces:
        # an arc joins a piece to the next whenever they do not share an
        # endpoint; exits exactly at a polygon vertex are covered by this
        # rule where a mid-edge test would miss them
        tol = 1e-9 * (s + float(norms.max()))
        m = len(pieces)
        return [((entry, exit_),
                 bool(np.linalg.norm(pieces[(i + 1) % m][0] - exit_) > tol))
                for i, (entry, exit_) in enumerate(pieces)]
    # no edge piece survives: disk and polygon interiors are nested or apart
    e1 = pts2[np.arange(k)]
    e2 = pts2[(np.arange(k) + 1) % k]
    cross = (e2[:, 0] - e1[:, 0]) * (-e1[:, 1]) - (e2[:, 1] - e1[:, 1]) * (-e1[:, 0])
    return "disk" if np.all(cross >= 0) else []


def _polygon_area_centroid(pts):
    x = np.asarray([p[0] for p in pts])
    y = np.asarray([p[1] for p in pts])
    x2, y2 = np.roll(x, -1), np.roll(y, -1)
    w = x * y2 - x2 * y
    area = 0.5 * float(np.sum(w))
    if abs(area) <= 1e-300:
        return 0.0, np.zeros(2)
    cx = float(np.sum((x + x2) * w)) / (6.0 * area)
    cy = float(np.sum((y + y2) * w)) / (6.0 * area)
    return area, np.array([cx, cy])


def _clip_area_polyline(pts2: np.ndarray, s: float) -> float:
    """Area of polygon ∩ disk with arcs replaced by inscribed polylines."""
    chain = _clip_chain(pts2, s)
    if chain is None:
        area, _ = _polygon_area_centroid(list(pts2))
        return abs(area)
    if chain == "disk":
        return math.pi * s * s
    if not chain:
        return 0.0
    pts = []
    m = len(chain)
    for i, ((entry, exit_), on_circle) in enumerate(chain):
        pts.append(entry)
        pts.append(exit_)
        if on_circle:
            nxt = chain[(i + 1) % m][0][0]
            phi0 = math.atan2(exit_[1], exit_[0])
            phi1 = math.atan2(nxt[1], nxt[0])
            dphi = (phi1 - phi0) % (2.0 * math.pi)
            for j in range(1, ARC_SEGMENTS):
                ang = phi0 + dphi * j / ARC_SEGMENTS
                pts.append(np.array([s * math.cos(ang), s * math.sin(ang)]))
    area, _ = _polygon_area_centroid(pts)
    return abs(area)


def _clip_area_centroid_exact(pts2: np.ndarray, s: float):
    """Exact area and centroid of polygon ∩ disk, circular segments included."""
    chain = _clip_chain(pts2, s)
    if chain is None:
        area, cen = _polygon_area_centroid(list(pts2))
        return abs(area), cen
    if chain == "disk":
        return math.pi * s * s, np.zeros(2)
    if not chain:
        return 0.0, np.zeros(2)
    pts = []
    arcs = []
    m = len(chain)
    for i, ((entry, exit_), on_circle) in enumerate(chain):
        pts.append(entry)
        pts.append(exit_)
        if on_circle:
            nxt = chain[(i + 1) % m][0][0]
            phi0 = math.atan2(exit_[1], exit_[0])
            phi1 = math.atan2(nxt[1], nxt[0])
            arcs.append((phi0, (phi1 - phi0) % (2.0 * math.pi)))
    area, cen = _polygon_area_centroid(pts)
    total = abs(area)
    moment = total * cen
    for phi0, dphi in arcs:
        seg = 0.5 * s * s * (dphi - math.sin(dphi))
        if seg <= 1e-300:
            continue
        mid = phi0 + 0.5 * dphi
        dist = 4.0 * s * math.sin(0.5 * dphi) ** 3 / (3.0 * (dphi - math.sin(dphi)))
        cseg = dist * np.array([math.cos(mid), math.sin(mid)])
        total += seg
        moment = moment + seg * cseg
    if total <= 0:
        return 0.0, np.zeros(2)
    return total, moment / total


def _inplane(a, b, c, nhat):
    """2D chart of a triangle in its plane, origin at the perpendicular foot."""
    off = float(a @ nhat)
    foot = off * nhat
    eu = b - a
    eu = eu / np.linalg.norm(eu)
    ev = np.cross(nhat, eu)
    pts = np.stack([a, b, c]) - foot
    pts2 = np.stack([pts @ eu, pts @ ev], axis=1)
    ar = _polygon_area_centroid(list(pts2))[0]
    if ar < 0:
        pts2 = pts2[::-1]
    return pts2, off, foot, eu, ev


def monotonicity_ratio(mesh: TriMesh, radii) -> list:
    """Table of (r, p(r)) with p(r) = area(mesh ∩ B_r) / r²."""
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    if any(r2 <= r1 for r1, r2 in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    if mesh.clamp_radius is not None and radii and radii[-1] > mesh.clamp_radius + 1e-9:
        raise ValueError("radii must not exceed the clamp radius")
    a, b, c = mesh.triangle_corners()
    d_min = _point_triangle_distances(a, b, c)
    d_max = np.max(np.stack([np.linalg.norm(a, axis=1),
                             np.linalg.norm(b, axis=1),
                             np.linalg.norm(c, axis=1)]), axis=0)
    n = np.cross(b - a, c - a)
    areas = 0.5 * np.linalg.norm(n, axis=1)
    nhat = n / np.where(areas > 0, 2.0 * areas, 1.0)[:, None]
    table = []
    for r in radii:
        inside = d_max <= r
        total = float(np.sum(areas[inside]))
        for i in np.nonzero(~inside & (d_min < r) & (areas > 0))[0]:
            pts2, off, _, _, _ = _inplane(a[i], b[i], c[i], nhat[i])
            if r * r <= off * off:
                continue
            total += _clip_area_polyline(pts2, math.sqrt(r * r - off * off))
        table.append((r, total / (r * r)))
    return table


def density_ratio_bounds(mesh: TriMesh, radii):
    """(min, max) of p(r) over the sampled radii."""
    radii = list(radii)
    if not radii:
        raise ValueError("radii must be nonempty")
    ps = [p for _, p in monotonicity_ratio(mesh, radii)]
    return (min(ps), max(ps))


def _subdivide(a, b, c):
    """4-way midpoint split; returns corner arrays 4x longer."""
    mab, mac, mbc = 0.5 * (a + b), 0.5 * (a + c), 0.5 * (b + c)
    na = np.concatenate([a, mab, mac, mab])
    nb = np.concatenate([mab, b, mbc, mbc])
    nc = np.concatenate([mac, mbc, c, mac])
    return na, nb, nc


def _annulus_piece(a, b, c, nhat, rho, r):
    """Exact centroid-rule contribution of one triangle to the
    |x.n|/|x|^3 integral over B_r minus B_rho."""
    pts2, off, foot, eu, ev = _inplane(a, b, c, nhat)
    if r * r <= off * off:
        return 0.0
    s_r = math.sqrt(r * r - off * off)
    area_r, cen_r = _clip_area_centroid_exact(pts2, s_r)
    if rho * rho > off * off:
        s_rho = math.sqrt(rho * rho - off * off)
        area_rho, cen_rho = _clip_area_centroid_exact(pts2, s_rho)
    else:
        area_rho, cen_rho = 0.0, np.zeros(2)
    area = area_r - area_rho
    if area <= 1e-300:
        return 0.0
    cen2 = (area_r * cen_r - area_rho * cen_rho) / area
    cen3 = foot + cen2[0] * eu + cen2[1] * ev
    return area * abs(off) / float(np.linalg.norm(cen3)) ** 3


def conical_deviation(mesh: TriMesh, rho: float, r: float) -> float:
    """∫ |x·ν|/|x|³ over mesh ∩ (B_r ∖ B_ρ) by centroid quadrature.

    Triangles crossing either sphere are refined 4-way twice; pieces still
    crossing after that are clipped exactly in their plane.
    """
    rho, r = float(rho), float(r)
    if not 0 < rho < r:
        raise ValueError("need 0 < rho < r")
    total = 0.0
    ta, tb, tc = mesh.triangle_corners()
    for lo in range(0, mesh.n_triangles, DEVIATION_CHUNK):
        a = ta[lo:lo + DEVIATION_CHUNK]
        b = tb[lo:lo + DEVIATION_CHUNK]
        c = tc[lo:lo + DEVIATION_CHUNK]
        for level in range(3):
            d_min = _point_triangle_distances(a, b, c)
            d_max = np.max(np.stack([np.linalg.norm(a, axis=1),
                                     np.linalg.norm(b, axis=1),
                                     np.linalg.norm(c, axis=1)]), axis=0)
            n = np.cross(b - a, c - a)
            areas = 0.5 * np.linalg.norm(n, axis=1)
            nhat = n / np.where(areas > 0, 2.0 * areas, 1.0)[:, None]
            inside = (d_min >= rho) & (d_max <= r)
            if np.any(inside):
                cen = (a[inside] + b[inside] + c[inside]) / 3.0
                offs = np.abs(np.einsum("ij,ij->i", a[inside], nhat[inside]))
                cn = np.linalg.norm(cen, axis=1)
                total += float(np.sum(areas[inside] * offs / cn ** 3))
            crossing = ~inside & (d_min < r) & (d_max > rho) & (areas > 0)
            if not np.any(crossing):
                break
            if level < 2:
                a, b, c = _subdivide(a[crossing], b[crossing], c[crossing])
            else:
                for i in np.nonzero(crossing)[0]:
                    total += _annulus_piece(a[i], b[i], c[i], nhat[i], rho, r)
    return total


@dataclass(frozen=True)
class BoundaryAngleStats:
    """Contact angles (degrees) between boundary triangles and cone facets.

    records holds one (facet index, edge midpoint norm, angle) per audited
    boundary edge, for downstream filtering.
    """
    count: int
    min_deg: float
    mean_deg: float
    max_deg: float
    records: tuple


def boundary_angle_audit(mesh: TriMesh, cone: PolyhedralCone,
                         min_norm: float = 0.0) -> BoundaryAngleStats:
    """Audit the angle between the surface and each facet it touches.

    A boundary edge is attributed to a facet when both endpoints carry the
    same free-boundary facet tag, or failing that when both lie on the facet
    plane; edges on no facet (clamp arc, interior holes) are skipped.
    Angles are oriented: arccos of (triangle normal . facet normal), so 90°
    means orthogonal contact.  Only edges with midpoint norm > min_norm are
    reported.
    """
    t = mesh.triangles
    m = t.shape[0]
    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    owner = np.tile(np.arange(m), 3)
    key = np.minimum(edges[:, 0], edges[:, 1]) * mesh.n_vertices \
        + np.maximum(edges[:, 0], edges[:, 1])
    _, inv, counts = np.unique(key, return_inverse=True, return_counts=True)
    bmask = counts[inv] == 1
    bedges, bowner = edges[bmask], owner[bmask]

    normals = cone.normals
    v = mesh.vertices
    a, b, c = (v[t[:, i]] for i in range(3))
    tn = np.cross(b - a, c - a)
    tl = np.linalg.norm(tn, axis=1)
    tn = tn / np.where(tl > 0, tl, 1.0)[:, None]

    def declared(idx):
        if mesh.vertex_class[idx] in (VertexClass.FREE_BOUNDARY,
                                      VertexClass.EDGE_PINNED):
            return {f for f in (mesh.facet[idx], mesh.facet2[idx]) if f >= 0}
        return set()

    records = []
    for (i, j), tri in zip(bedges, bowner):
        common = declared(i) & declared(j)
        if common:
            k = min(common)
        else:
            ri = np.abs(normals @ v[i])
            rj = np.abs(normals @ v[j])
            resid = np.maximum(ri, rj)
            k = int(np.argmin(resid))
            if resid[k] > FACET_TOL * max(1.0, float(np.linalg.norm(v[i]))):
                continue
        mid = 0.5 * (v[i] + v[j])
        midnorm = float(np.linalg.norm(mid))
        if midnorm <= min_norm:
            continue
        ang = math.degrees(math.acos(float(np.clip(tn[tri] @ normals[k], -1.0, 1.0))))
        records.append((k, midnorm, ang))
    if not records:
        raise ValueError("mesh has no free-boundary edges on cone facets")
    angs = np.array([rec[2] for rec in records])
    return BoundaryAngleStats(
        count=len(records),
        min_deg=float(np.min(angs)),
        mean_deg=float(np.mean(angs)),
        max_deg=float(np.max(angs)),
        records=tuple(records),
    )

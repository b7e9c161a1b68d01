"""Polyhedral cone primitives in R^3.

Cones are finite intersections of homogeneous half-spaces {x : n . x <= 0}
with unit normals and apex at the origin.  Points and directions are plain
numpy arrays of shape (3,).  The module provides the constructions needed by
the rest of the toolkit: wedges and their spines, rectangular pyramids
C = {x3 >= max(a|x1|, b|x2|)}, horizontal cross-sections, tangent cones of
half-space regions, and the largest pyramid enclosing a given cone on one
side of the plane {x1 = 0}.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

UNIT_TOL = 1e-12          # |normal| must be 1 within this
DEDUP_TOL = 1e-10         # normals with dot > 1 - DEDUP_TOL are duplicates
RANK_TOL = 1e-9           # relative SVD threshold for the vertex test
ACTIVE_TOL = 1e-9         # default activity tolerance for tangent cones


def as_vec3(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    return v


def unit(x) -> np.ndarray:
    """Normalize to unit length; error on (near-)zero input."""
    v = as_vec3(x)
    n = float(np.linalg.norm(v))
    if n <= 1e-14:
        raise ValueError("cannot normalize a zero vector")
    return v / n


class Enclosure(enum.Enum):
    """Marker for a one-sided pyramid enclosure with no binding ray."""

    UNBOUNDED = "unbounded"


UNBOUNDED = Enclosure.UNBOUNDED


@dataclass(frozen=True)
class HalfSpace:
    """Closed half-space {x : normal . x <= offset} with a unit normal."""

    normal: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        n = as_vec3(self.normal)
        if abs(float(np.linalg.norm(n)) - 1.0) > UNIT_TOL:
            raise ValueError("half-space normal must be unit length within 1e-12")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @classmethod
    def from_raw(cls, normal, offset: float = 0.0) -> "HalfSpace":
        """Build from an unnormalized normal, rescaling the offset to match."""
        n = as_vec3(normal)
        length = float(np.linalg.norm(n))
        if length <= 1e-14:
            raise ValueError("half-space normal must be nonzero")
        return cls(n / length, float(offset) / length)

    def signed_distance(self, p) -> float:
        return float(self.normal @ as_vec3(p)) - self.offset

    def contains(self, p, tol: float = 1e-12) -> bool:
        return self.signed_distance(p) <= tol


def _interior_slack(normals: np.ndarray) -> float:
    """Best slack t of {n_i . x <= -t, |x|_inf <= 1}; positive iff the cone
    has nonempty interior."""
    m = normals.shape[0]
    if m == 0:
        return 1.0
    c = np.array([0.0, 0.0, 0.0, -1.0])
    a_ub = np.hstack([normals, np.ones((m, 1))])
    b_ub = np.zeros(m)
    res = linprog(c, A_ub=a_ub, b_ub=b_ub,
                  bounds=[(-1, 1)] * 3 + [(0, 1)], method="highs")
    if not res.success:
        return -1.0
    return float(res.x[3])


class PolyhedralCone:
    """Intersection of homogeneous half-spaces, apex at the origin.

    Near-duplicate half-spaces (normal dot product within 1e-10 of 1) are
    dropped at construction.  An empty half-space list is the whole-space
    marker produced by :func:`tangent_cone` at interior points; most
    operations reject it.
    """

    def __init__(self, halfspaces):
        kept: list[HalfSpace] = []
        for h in halfspaces:
            if not isinstance(h, HalfSpace):
                h = HalfSpace(unit(h))
            if abs(h.offset) > UNIT_TOL:
                raise ValueError("cone half-spaces must pass through the origin")
            if all(float(h.normal @ k.normal) < 1.0 - DEDUP_TOL for k in kept):
                kept.append(HalfSpace(h.normal, 0.0))
        self.halfspaces: tuple[HalfSpace, ...] = tuple(kept)
        if kept and _interior_slack(self.normals) <= 1e-9:
            raise ValueError("cone has empty interior")

    @property
    def normals(self) -> np.ndarray:
        if not self.halfspaces:
            return np.zeros((0, 3))
        return np.array([h.normal for h in self.halfspaces])

    @property
    def is_whole_space(self) -> bool:
        return len(self.halfspaces) == 0

    def __repr__(self):
        return f"PolyhedralCone({len(self.halfspaces)} half-spaces)"


def contains(cone: PolyhedralCone, p, tol: float = 1e-12) -> bool:
    """Membership predicate; pure, never raises on geometric input."""
    p = as_vec3(p)
    if cone.is_whole_space:
        return True
    return bool(np.all(cone.normals @ p <= tol))


def is_vertex(cone: PolyhedralCone, tol: float = RANK_TOL) -> bool:
    """True iff the cone's normal matrix has full rank 3 (SVD, relative
    threshold), i.e. the apex is a genuine corner."""
    if cone.is_whole_space:
        raise ValueError("vertex test undefined for the whole space")
    s = np.linalg.svd(cone.normals, compute_uv=False)
    return int(np.sum(s > tol * s[0])) == 3


def tangent_cone(halfspaces, x0, tol: float = ACTIVE_TOL) -> PolyhedralCone:
    """Cone of active constraints of a half-space region at a boundary point,
    translated so the apex is the origin.

    Returns the whole-space marker (no half-spaces) when x0 is strictly
    interior; raises when x0 violates any half-space beyond tol.
    """
    x0 = as_vec3(x0)
    active = []
    for h in halfspaces:
        r = h.signed_distance(x0)
        if r > tol:
            raise ValueError(
                f"point violates a half-space by {r:.3e} (tol {tol:.1e})")
        if r >= -tol:
            active.append(HalfSpace(h.normal, 0.0))
    return PolyhedralCone(active)


@dataclass(frozen=True)
class Wedge:
    """Intersection of two half-spaces whose boundary planes meet along a
    line (the spine); basepoint lies on the spine."""

    h1: HalfSpace
    h2: HalfSpace
    basepoint: np.ndarray = (0.0, 0.0, 0.0)

    def __post_init__(self):
        p = as_vec3(self.basepoint)
        object.__setattr__(self, "basepoint", p)
        if float(np.linalg.norm(np.cross(self.h1.normal, self.h2.normal))) <= 1e-9:
            raise ValueError("wedge faces are parallel: no spine")
        for h in (self.h1, self.h2):
            if abs(h.signed_distance(p)) > 1e-9:
                raise ValueError("basepoint must lie on both wedge faces")

    def to_cone(self) -> PolyhedralCone:
        if float(np.linalg.norm(self.basepoint)) > UNIT_TOL:
            raise ValueError("only wedges based at the origin form cones here")
        return PolyhedralCone([self.h1, self.h2])


def spine(w: Wedge) -> tuple[np.ndarray, np.ndarray]:
    """(point, unit direction) of the wedge's spine line."""
    d = np.cross(w.h1.normal, w.h2.normal)
    n = float(np.linalg.norm(d))
    if n <= 1e-9:
        raise ValueError("wedge faces are parallel: no spine")
    return w.basepoint.copy(), d / n


def wedge_above(slope: float, axis: int, basepoint=(0.0, 0.0, 0.0)) -> Wedge:
    """The wedge {x3 >= slope * |x_axis|} for axis in {0, 1}."""
    if slope <= 1e-12:
        raise ValueError("wedge slope must be > 0")
    e = np.zeros(3)
    e[axis] = 1.0
    e3 = np.array([0.0, 0.0, 1.0])
    h1 = HalfSpace.from_raw(slope * e - e3, 0.0)
    h2 = HalfSpace.from_raw(-slope * e - e3, 0.0)
    return Wedge(h1, h2, basepoint)


@dataclass(frozen=True)
class Pyramid:
    """Rectangular pyramid cone {x : x3 >= max(a|x1|, b|x2|)}."""

    a: float
    b: float

    def __post_init__(self):
        if self.a <= 1e-12 or self.b <= 1e-12:
            raise ValueError("pyramid slopes a, b must be > 0")

    def wedges(self) -> tuple[Wedge, Wedge]:
        """The two wedges whose intersection is the pyramid; their spines
        (x2-axis and x1-axis) are orthogonal and meet at the origin."""
        return wedge_above(self.a, 0), wedge_above(self.b, 1)

    def to_cone(self) -> PolyhedralCone:
        return pyramid_to_cone(self.a, self.b)


def pyramid_to_cone(a: float, b: float) -> PolyhedralCone:
    """Half-space form of the pyramid: normals, in order,
    (+a,0,-1), (-a,0,-1), (0,+b,-1), (0,-b,-1), each normalized."""
    p = Pyramid(a, b)
    return PolyhedralCone([
        HalfSpace.from_raw([p.a, 0.0, -1.0]),
        HalfSpace.from_raw([-p.a, 0.0, -1.0]),
        HalfSpace.from_raw([0.0, p.b, -1.0]),
        HalfSpace.from_raw([0.0, -p.b, -1.0]),
    ])


def _clip_halfplane(poly: list[np.ndarray], a: float, b: float, c: float):
    """Sutherland-Hodgman clip of a polygon against {a x + b y <= c}."""
    out: list[np.ndarray] = []
    k = len(poly)
    for i in range(k):
        p, q = poly[i], poly[(i + 1) % k]
        fp = a * p[0] + b * p[1] - c
        fq = a * q[0] + b * q[1] - c
        if fp <= 0.0:
            out.append(p)
        if (fp < 0.0 < fq) or (fq < 0.0 < fp):
            t = fp / (fp - fq)
            out.append(p + t * (q - p))
    return out


def _dedup_ring(poly: list[np.ndarray], tol: float):
    out: list[np.ndarray] = []
    for p in poly:
        if not out or np.linalg.norm(p - out[-1]) > tol:
            out.append(p)
    if len(out) > 1 and np.linalg.norm(out[0] - out[-1]) <= tol:
        out.pop()
    return out


def cross_section(cone: PolyhedralCone, height: float) -> np.ndarray:
    """Polygon {x3 = height} ∩ cone as an (k, 3) array, ordered
    counterclockwise seen from +x3.

    Requires a vertex cone (bounded section); raises when the plane misses
    the cone (empty section).
    """
    if height <= 0.0:
        raise ValueError("section height must be > 0")
    if not is_vertex(cone):
        raise ValueError("cross-section requires a vertex cone")
    normals = cone.normals
    length = 8.0 * height
    for _ in range(60):
        square = [np.array(p) for p in
                  [(-length, -length), (length, -length),
                   (length, length), (-length, length)]]
        poly = square
        for n in normals:
            poly = _clip_halfplane(poly, n[0], n[1], -n[2] * height)
            if not poly:
                break
        poly = _dedup_ring(poly, 1e-12 * length) if poly else []
        if len(poly) < 3:
            raise ValueError("empty cross-section at this height")
        if max(float(np.abs(p).max()) for p in poly) < length * (1 - 1e-9):
            pts = np.array([[p[0], p[1], height] for p in poly])
            return pts
        length *= 2.0
    raise ValueError("cross-section is unbounded")


def pyramid_enclosure(cone: PolyhedralCone, b: float, side: int):
    """Largest a > 0 with cone ∩ {side*x1 >= 0} ⊂ pyramid(a, b) ∩ {side*x1 >= 0},
    for a vertex cone contained in the wedge {x3 >= b|x2|}.

    Returns the UNBOUNDED marker when the cone has nothing on the requested
    side (every a works).
    """
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    if b <= 1e-12:
        raise ValueError("wedge slope b must be > 0")
    if not is_vertex(cone):
        raise ValueError("pyramid enclosure requires a vertex cone")
    sec = cross_section(cone, 1.0)
    if np.any(b * np.abs(sec[:, 1]) > sec[:, 2] + 1e-9):
        raise ValueError("cone is not contained in the wedge {x3 >= b|x2|}")
    reach = float(np.max(side * sec[:, 0]))
    if reach <= 1e-12:
        return UNBOUNDED
    return 1.0 / reach


def cone_to_dict(cone: PolyhedralCone) -> dict:
    """JSON-ready half-space list {normal, offset}."""
    return {
        "halfspaces": [
            {"normal": [float(c) for c in h.normal], "offset": float(h.offset)}
            for h in cone.halfspaces
        ]
    }


def cone_from_dict(data: dict) -> PolyhedralCone:
    """Inverse of cone_to_dict; also accepts {"pyramid": {"a":..., "b":...}}."""
    if "pyramid" in data:
        p = data["pyramid"]
        return pyramid_to_cone(float(p["a"]), float(p["b"]))
    if "halfspaces" in data:
        return PolyhedralCone([
            HalfSpace.from_raw(h["normal"], float(h.get("offset", 0.0)))
            for h in data["halfspaces"]
        ])
    raise ValueError("cone must be given as 'pyramid' or 'halfspaces'")


def rotation_to_z(direction) -> np.ndarray:
    """Rotation matrix taking the given direction to +e3 (helper for tests
    and scenario setup)."""
    d = unit(direction)
    e3 = np.array([0.0, 0.0, 1.0])
    v = np.cross(d, e3)
    s = float(np.linalg.norm(v))
    c = float(d @ e3)
    if s <= 1e-14:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx * ((1 - c) / (s * s))


def rotate_cone(cone: PolyhedralCone, rot: np.ndarray) -> PolyhedralCone:
    """Apply a rotation matrix to every half-space normal."""
    return PolyhedralCone([HalfSpace(unit(rot @ h.normal)) for h in cone.halfspaces])

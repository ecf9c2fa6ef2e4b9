"""Holonomy of closed loops on S^2: how far a parallel-transported frame turns.

The octant loop e1 -> e2 -> e3 -> e1 along great-circle quarter arcs bounds
one eighth of the unit sphere (area pi/2, Gaussian curvature 1), so the
frame comes back rotated by pi/2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .connection import ConnectionRule
from .frames import Frame, orthogonal_from_frames, standard_frame, transport_frame
from .manifolds import GeometryError, Point, Sphere
from .paths import RolledPath
from .rolling import horizontal_lift

OCTANT_VERTICES = np.eye(3)


@dataclass
class HolonomyResult:
    angle: float
    rotation: np.ndarray
    expected: float
    method: str
    points_per_leg: int | None = None

    @property
    def error(self) -> float:
        return abs(abs(self.angle) - abs(self.expected))

    def to_dict(self):
        return {"angle": self.angle, "expected": self.expected, "error": self.error,
                "rotation": self.rotation.tolist(), "method": self.method,
                "points_per_leg": self.points_per_leg}


def rotation_angle(b) -> float:
    """Angle of a 2x2 rotation matrix, in (-pi, pi]."""
    b = np.asarray(b, dtype=float)
    if b.shape != (2, 2):
        raise GeometryError("holonomy angle is defined for 2x2 rotations")
    return float(np.arctan2(b[1, 0], b[0, 0]))


def _sphere_loop_check(vertices):
    v = np.asarray(vertices, dtype=float)
    if v.ndim != 2 or v.shape[1] != 3 or len(v) < 3:
        raise GeometryError("need at least three vertices on S^2")
    if np.any(np.abs(np.linalg.norm(v, axis=1) - 1.0) > 1e-12):
        raise GeometryError("vertices must lie on the unit sphere")
    return v


def exact_loop_holonomy(vertices=OCTANT_VERTICES, u0: Frame | None = None):
    """Transport a frame along exact geodesic legs v_0 -> v_1 -> ... -> v_0."""
    v = _sphere_loop_check(vertices)
    m = Sphere(2)
    u0 = standard_frame(m.point(v[0])) if u0 is None else u0
    u = u0
    for k in range(len(v)):
        x, y = u.base.coords, v[(k + 1) % len(v)]
        u = transport_frame(u, m.tangent(x, m.log(x, y)))
    u = Frame(u0.base, u.columns)   # same point up to rounding
    return u0, u


def discretized_loop(vertices=OCTANT_VERTICES, points_per_leg: int = 1000) -> RolledPath:
    """The geodesic polygon sampled with ``points_per_leg`` steps per leg, unit time per leg."""
    v = _sphere_loop_check(vertices)
    m = Sphere(2)
    pts = [v[0]]
    for k in range(len(v)):
        x, y = v[k], v[(k + 1) % len(v)]
        w = m.log(x, y)
        s = np.arange(1, points_per_leg + 1) / points_per_leg
        pts.extend(m.exp(x, s[:, None] * w))
    pts = np.array(pts)
    pts[-1] = v[0]
    times = np.arange(len(pts)) / points_per_leg
    return RolledPath(m, times, pts)


def loop_holonomy(vertices=OCTANT_VERTICES, points_per_leg: int | None = None,
                  rule: ConnectionRule | None = None, expected: float = np.pi / 2) -> HolonomyResult:
    """Holonomy rotation of the loop; exact legs when ``points_per_leg`` is None."""
    if points_per_leg is None:
        u0, u1 = exact_loop_holonomy(vertices)
        method = "exact"
    else:
        X = discretized_loop(vertices, points_per_leg)
        u0 = standard_frame(Point(X.points[0], X.manifold))
        lifted = horizontal_lift(X, u0, rule)
        u1 = Frame(u0.base, lifted.frames[-1])
        method = "discretized" + (f"/{rule.label}" if rule is not None else "")
    b = orthogonal_from_frames(u0, u1).entries
    return HolonomyResult(rotation_angle(b), b, expected, method, points_per_leg)


def latitude_circle(colatitude: float, steps: int = 1000) -> RolledPath:
    """The circle at polar angle ``colatitude``, traversed once, sampled with ``steps`` steps."""
    if not 0 < colatitude < np.pi:
        raise GeometryError("colatitude must lie in (0, pi)")
    phi = 2 * np.pi * np.arange(steps + 1) / steps
    s, c = np.sin(colatitude), np.cos(colatitude)
    pts = np.stack([s * np.cos(phi), s * np.sin(phi), np.full_like(phi, c)], axis=1)
    pts[-1] = pts[0]
    return RolledPath(Sphere(2), np.arange(steps + 1) / steps, pts)


def latitude_holonomy(colatitude: float, steps: int = 1000, rule: ConnectionRule | None = None) -> HolonomyResult:
    """Numerical holonomy of a latitude circle; the enclosed cap has area 2 pi (1 - cos colatitude)."""
    X = latitude_circle(colatitude, steps)
    u0 = standard_frame(Point(X.points[0], X.manifold))
    u1 = Frame(u0.base, horizontal_lift(X, u0, rule).frames[-1])
    b = orthogonal_from_frames(u0, u1).entries
    cap = 2 * np.pi * (1 - np.cos(colatitude))
    expected = float(np.arctan2(np.sin(cap), np.cos(cap)))
    return HolonomyResult(rotation_angle(b), b, expected, "latitude", steps)

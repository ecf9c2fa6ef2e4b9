"""Closed-form Riemannian geometry for flat space and the unit sphere.

Points and tangent vectors live in ambient coordinates. Every array-level
method broadcasts over leading axes, so the same code serves a single path
and a batch of Monte Carlo paths.

>>> S2 = Sphere(2)
>>> x = S2.point([0.0, 0.0, 1.0])
>>> y = exp_map(Tangent(x, [np.pi / 2, 0.0, 0.0]))
>>> np.round(y.coords, 12)
array([ 1.,  0., -0.])
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

POINT_TOL = 1e-12
SERIES_CUTOFF = 1e-4
ANTIPODAL_TOL = 1e-12


class GeometryError(ValueError):
    """Inputs that do not fit the manifold (wrong shape, off-manifold, mismatched base)."""


class CutLocusPolicy(enum.Enum):
    """Deterministic choice of minimal geodesic when a point is in the cut locus.

    ``FIRST_BASIS`` projects e_1 onto the tangent space and normalizes,
    falling back to e_2, e_3, ... when the projection is shorter than 1e-8.
    """

    FIRST_BASIS = "first-basis"


def _dot(a, b):
    return np.add.reduce(a * b, axis=-1)


def _norm(a):
    return np.sqrt(_dot(a, a))


def sinc(t):
    """sin(t)/t with the removable singularity handled by its Taylor series."""
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:   # single-chain fast path, same formulas
        t2 = t * t
        return 1.0 - t2 / 6.0 + t2 * t2 / 120.0 if abs(t) < SERIES_CUTOFF else np.sin(t) / t
    small = np.abs(t) < SERIES_CUTOFF
    safe = np.where(small, 1.0, t)
    t2 = t * t
    return np.where(small, 1.0 - t2 / 6.0 + t2 * t2 / 120.0, np.sin(safe) / safe)


def cosc(t):
    """(1 - cos t)/t**2, computed as sinc(t/2)**2 / 2 to avoid cancellation."""
    s = sinc(0.5 * np.asarray(t, dtype=float))
    return 0.5 * s * s


@dataclass(frozen=True)
class Manifold:
    """Base class; subclasses provide the closed-form maps."""

    dim: int

    def __post_init__(self):
        if int(self.dim) < 1:
            raise GeometryError(f"dimension must be >= 1, got {self.dim}")

    is_flat = False

    @property
    def ambient_dim(self) -> int:
        raise NotImplementedError

    @property
    def name(self) -> str:
        raise NotImplementedError

    # array level -----------------------------------------------------------
    def exp(self, x, v):
        raise NotImplementedError

    def log(self, x, y, policy=CutLocusPolicy.FIRST_BASIS):
        raise NotImplementedError

    def transport(self, x, v, w):
        """Parallel transport of ``w`` (shape (..., n)) along t -> exp_x(t v), t in [0, 1]."""
        raise NotImplementedError

    def transport_columns(self, x, v, cols):
        """Transport every column of ``cols`` (shape (..., n, k)) along exp_x(t v)."""
        raise NotImplementedError

    def project_tangent(self, x, w):
        raise NotImplementedError

    def constraint_defect(self, x):
        raise NotImplementedError

    def normalize(self, raw):
        raise NotImplementedError

    def weingarten(self, x, a):
        """Matrix of the bilinear form (v, w) -> <a, II(v, w)> on T_xM."""
        raise NotImplementedError

    def inner(self, x, v, w):
        return _dot(v, w)

    def dist(self, x, y):
        return _norm(self.log(x, y))

    def geodesic_velocity(self, x, v):
        """Velocity at time 1 of t -> exp_x(t v)."""
        return self.transport(x, v, v)

    def tangent_basis(self, x):
        """An orthonormal basis of T_xM as the columns of an (n, dim) array."""
        x = np.asarray(x, dtype=float)
        n = self.ambient_dim
        cols = []
        for k in range(n):
            e = np.zeros(n)
            e[k] = 1.0
            w = self.project_tangent(x, e)
            for q in cols:
                w = w - np.dot(q, w) * q
            r = np.linalg.norm(w)
            if r > 1e-8:
                cols.append(w / r)
            if len(cols) == self.dim:
                break
        return np.column_stack(cols)

    def random_point(self, rng):
        raise NotImplementedError

    def random_tangent(self, x, rng, scale=1.0):
        x = np.asarray(x, dtype=float)
        return scale * self.project_tangent(x, rng.standard_normal(x.shape))

    # typed helpers ---------------------------------------------------------
    def point(self, coords) -> "Point":
        return Point(np.asarray(coords, dtype=float), self)

    def tangent(self, x, vec) -> "Tangent":
        if not isinstance(x, Point):
            x = self.point(x)
        return Tangent(x, np.asarray(vec, dtype=float))


@dataclass(frozen=True)
class Flat(Manifold):
    """Euclidean space R^dim; exp is addition and transport is the identity."""

    is_flat = True

    @property
    def ambient_dim(self):
        return self.dim

    @property
    def name(self):
        return f"flat:{self.dim}"

    def exp(self, x, v):
        return np.asarray(x, dtype=float) + v

    def log(self, x, y, policy=CutLocusPolicy.FIRST_BASIS):
        return np.asarray(y, dtype=float) - x

    def transport(self, x, v, w):
        return np.array(w, dtype=float)

    def transport_columns(self, x, v, cols):
        return np.array(cols, dtype=float)

    def project_tangent(self, x, w):
        return np.asarray(w, dtype=float)

    def constraint_defect(self, x):
        return np.zeros(np.shape(x)[:-1])

    def normalize(self, raw):
        return np.asarray(raw, dtype=float).copy()

    def weingarten(self, x, a):
        return np.zeros(np.shape(x)[:-1] + (self.dim, self.dim))

    def random_point(self, rng):
        return rng.standard_normal(self.dim)


@dataclass(frozen=True)
class Sphere(Manifold):
    """Unit sphere S^dim embedded in R^(dim+1)."""

    @property
    def ambient_dim(self):
        return self.dim + 1

    @property
    def name(self):
        return f"sphere:{self.dim}"

    def exp(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        th = _norm(v)
        y = np.cos(th)[..., None] * x + sinc(th)[..., None] * v
        return y / _norm(y)[..., None]

    def log(self, x, y, policy=CutLocusPolicy.FIRST_BASIS):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        c = np.clip(_dot(x, y), -1.0, 1.0)
        w = y - c[..., None] * x
        s = _norm(w)
        th = np.arctan2(s, c)
        v = w / sinc(th)[..., None]
        v = v - _dot(v, x)[..., None] * x
        cut = (s < ANTIPODAL_TOL) & (c < 0)
        if np.any(cut):
            v = np.array(v)
            xb = np.broadcast_to(x, v.shape)
            cutb = np.broadcast_to(cut, v.shape[:-1])
            for idx in np.ndindex(cutb.shape):
                if cutb[idx]:
                    v[idx] = np.pi * self.cut_direction(xb[idx], policy)
        return v

    def cut_direction(self, x, policy=CutLocusPolicy.FIRST_BASIS):
        """Unit tangent at ``x`` used to reach the antipode."""
        if policy is not CutLocusPolicy.FIRST_BASIS:
            raise GeometryError(f"unknown cut-locus policy {policy!r}")
        x = np.asarray(x, dtype=float)
        for k in range(x.shape[-1]):
            p = -x[k] * x
            p[k] += 1.0
            r = np.linalg.norm(p)
            if r >= 1e-8:
                return p / r
        raise GeometryError("no tangent direction found")  # pragma: no cover

    def _transport_coefficient(self, x, v):
        th = _norm(v)
        return -cosc(th)[..., None] * v - sinc(th)[..., None] * x

    def transport(self, x, v, w):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        w = np.asarray(w, dtype=float)
        a = self._transport_coefficient(x, v)
        return w + _dot(w, v)[..., None] * a

    def transport_columns(self, x, v, cols):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        cols = np.asarray(cols, dtype=float)
        a = self._transport_coefficient(x, v)
        # explicit component sums keep batched results identical to unbatched ones
        p = np.add.reduce(cols * v[..., :, None], axis=-2)
        return cols + a[..., :, None] * p[..., None, :]

    def project_tangent(self, x, w):
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        return w - _dot(w, x)[..., None] * x

    def constraint_defect(self, x):
        return np.abs(_norm(np.asarray(x, dtype=float)) - 1.0)

    def normalize(self, raw):
        raw = np.asarray(raw, dtype=float)
        r = _norm(raw)
        if np.any(r < 0.5):
            raise GeometryError("cannot project a vector of norm < 0.5 onto the sphere")
        return raw / r[..., None]

    def weingarten(self, x, a):
        x = np.asarray(x, dtype=float)
        k = -_dot(np.asarray(a, dtype=float), x)
        return k[..., None, None] * np.eye(self.ambient_dim)

    def random_point(self, rng):
        z = rng.standard_normal(self.ambient_dim)
        return z / np.linalg.norm(z)


def parse_manifold(text: str) -> Manifold:
    """Parse ``"flat:d"`` or ``"sphere:d"``."""
    kind, _, dim = str(text).partition(":")
    try:
        d = int(dim)
    except ValueError:
        raise GeometryError(f"bad manifold {text!r}; expected flat:d or sphere:d") from None
    kind = kind.strip().lower()
    if kind == "flat":
        return Flat(d)
    if kind == "sphere":
        return Sphere(d)
    raise GeometryError(f"unknown manifold kind {kind!r}")


@dataclass(frozen=True, eq=False)
class Point:
    coords: np.ndarray
    manifold: Manifold

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        if c.shape != (self.manifold.ambient_dim,):
            raise GeometryError(
                f"{self.manifold.name} point needs {self.manifold.ambient_dim} coordinates, got {c.shape}")
        if self.manifold.constraint_defect(c) > POINT_TOL:
            raise GeometryError(f"point {c} is off {self.manifold.name}")


@dataclass(frozen=True, eq=False)
class Tangent:
    base: Point
    vec: np.ndarray = field()

    def __post_init__(self):
        v = np.array(self.vec, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "vec", v)
        m = self.base.manifold
        if v.shape != (m.ambient_dim,):
            raise GeometryError(f"tangent needs {m.ambient_dim} components, got {v.shape}")
        normal = np.linalg.norm(v - m.project_tangent(self.base.coords, v))
        if normal > POINT_TOL * max(1.0, np.linalg.norm(v)):
            raise GeometryError(f"vector {v} is not tangent at {self.base.coords}")

    @property
    def manifold(self):
        return self.base.manifold

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vec))


def _same_manifold(x: Point, y: Point):
    if x.manifold != y.manifold:
        raise GeometryError(f"manifold mismatch: {x.manifold.name} vs {y.manifold.name}")


def _same_base(v: Tangent, w: Tangent):
    _same_manifold(v.base, w.base)
    if not np.array_equal(v.base.coords, w.base.coords):
        raise GeometryError("tangent vectors have different base points")


def exp_map(v: Tangent) -> Point:
    m = v.manifold
    return Point(m.exp(v.base.coords, v.vec), m)


def log_map(x: Point, y: Point, tiebreak: CutLocusPolicy = CutLocusPolicy.FIRST_BASIS) -> Tangent:
    """Initial velocity of a minimal geodesic from x to y (length = distance)."""
    _same_manifold(x, y)
    return Tangent(x, x.manifold.log(x.coords, y.coords, tiebreak))


def parallel_transport(v: Tangent, w: Tangent) -> Tangent:
    """Transport ``w`` along the geodesic with initial velocity ``v``."""
    _same_base(v, w)
    m = v.manifold
    end = Point(m.exp(v.base.coords, v.vec), m)
    moved = m.transport(v.base.coords, v.vec, w.vec)
    return Tangent(end, m.project_tangent(end.coords, moved))


def metric(v: Tangent, w: Tangent) -> float:
    _same_base(v, w)
    return float(v.manifold.inner(v.base.coords, v.vec, w.vec))


def distance(x: Point, y: Point) -> float:
    _same_manifold(x, y)
    return float(x.manifold.dist(x.coords, y.coords))


def project_to_manifold(raw, m: Manifold) -> Point:
    return Point(m.normalize(raw), m)

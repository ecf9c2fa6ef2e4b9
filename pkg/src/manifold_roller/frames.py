"""Orthonormal frames u: R^d -> T_xM, stored as d tangent columns.

Horizontality is never represented by a connection form. A frame only ever
moves by parallel transport along geodesics, which is exactly a horizontal
geodesic of the frame bundle with its natural metric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .checks import CheckReport
from .manifolds import GeometryError, Manifold, Point, Tangent

ORTHO_TOL = 1e-10


def orthonormality_defect(cols) -> np.ndarray:
    """max |u^T u - I| entrywise, batched over leading axes."""
    cols = np.asarray(cols, dtype=float)
    d = cols.shape[-1]
    gram = np.add.reduce(cols[..., :, :, None] * cols[..., :, None, :], axis=-3)
    return np.max(np.abs(gram - np.eye(d)), axis=(-2, -1))


def tangency_defect(manifold: Manifold, x, cols) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    normal = np.asarray(cols) - manifold.project_tangent(x[..., None, :], np.swapaxes(cols, -1, -2)).swapaxes(-1, -2)
    return np.max(np.abs(normal), axis=(-2, -1))


def reorthonormalize(manifold: Manifold, x, cols) -> np.ndarray:
    """Project columns onto T_xM, then modified Gram-Schmidt (batched)."""
    x = np.asarray(x, dtype=float)
    q = manifold.project_tangent(x[..., None, :], np.swapaxes(cols, -1, -2))
    q = np.array(q)
    d = q.shape[-2]
    for k in range(d):
        for j in range(k):
            q[..., k, :] -= np.add.reduce(q[..., j, :] * q[..., k, :], axis=-1)[..., None] * q[..., j, :]
        q[..., k, :] /= np.sqrt(np.add.reduce(q[..., k, :] * q[..., k, :], axis=-1))[..., None]
    return np.swapaxes(q, -1, -2)


def transport_columns(manifold: Manifold, x, v, cols, reorthonormalize_result=True):
    """Move a (batched) frame along exp_x(t v); returns (new base, new columns)."""
    y = manifold.exp(x, v)
    moved = manifold.transport_columns(x, v, cols)
    if reorthonormalize_result and not manifold.is_flat:
        moved = reorthonormalize(manifold, y, moved)
    return y, moved


@dataclass(frozen=True, eq=False)
class OrthogonalMatrix:
    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GeometryError(f"orthogonal matrix must be square, got {a.shape}")
        if orthonormality_defect(a) > ORTHO_TOL:
            raise GeometryError("matrix is not orthogonal")

    def __matmul__(self, other: "OrthogonalMatrix") -> "OrthogonalMatrix":
        return OrthogonalMatrix(self.entries @ other.entries)

    @property
    def inverse(self) -> "OrthogonalMatrix":
        return OrthogonalMatrix(self.entries.T)

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d))

    @classmethod
    def rotation(cls, d, angle, i=0, j=1):
        a = np.eye(d)
        c, s = np.cos(angle), np.sin(angle)
        a[i, i], a[i, j], a[j, i], a[j, j] = c, -s, s, c
        return cls(a)

    @classmethod
    def random(cls, d, rng):
        q, r = np.linalg.qr(rng.standard_normal((d, d)))
        return cls(q * np.sign(np.diag(r)))


@dataclass(frozen=True, eq=False)
class Frame:
    base: Point
    columns: np.ndarray

    def __post_init__(self):
        cols = np.array(self.columns, dtype=float)
        cols.setflags(write=False)
        object.__setattr__(self, "columns", cols)
        m = self.base.manifold
        if cols.shape != (m.ambient_dim, m.dim):
            raise GeometryError(f"frame on {m.name} needs shape {(m.ambient_dim, m.dim)}, got {cols.shape}")
        if orthonormality_defect(cols) > ORTHO_TOL:
            raise GeometryError("frame columns are not orthonormal")
        if tangency_defect(m, self.base.coords, cols) > ORTHO_TOL:
            raise GeometryError("frame columns are not tangent at the base point")

    @property
    def manifold(self) -> Manifold:
        return self.base.manifold

    @property
    def dim(self) -> int:
        return self.columns.shape[1]

    def column(self, k) -> Tangent:
        return Tangent(self.base, self.columns[:, k])


def standard_frame(x: Point) -> Frame:
    """Frame built by Gram-Schmidt on the projected ambient basis e_1, e_2, ..."""
    return Frame(x, x.manifold.tangent_basis(x.coords))


def frame_apply(u: Frame, w) -> Tangent:
    """u(w) = sum_k w^k u e_k."""
    w = np.asarray(w, dtype=float)
    if w.shape != (u.dim,):
        raise GeometryError(f"expected {u.dim} coefficients, got {w.shape}")
    return Tangent(u.base, u.columns @ w)


def frame_inverse(u: Frame, v: Tangent) -> np.ndarray:
    """Coordinates of v in the frame: w^k = <u e_k, v>."""
    if v.base.manifold != u.manifold or not np.array_equal(v.base.coords, u.base.coords):
        raise GeometryError("tangent vector is not based at the frame's base point")
    return u.columns.T @ v.vec


def right_action(u: Frame, a: OrthogonalMatrix) -> Frame:
    """(u a) e_k = sum_j a[j, k] u e_j."""
    a = a.entries if isinstance(a, OrthogonalMatrix) else np.asarray(a, dtype=float)
    if a.shape != (u.dim, u.dim):
        raise GeometryError(f"need a {u.dim}x{u.dim} matrix, got {a.shape}")
    return Frame(u.base, u.columns @ a)


def transport_frame(u: Frame, v: Tangent) -> Frame:
    """Parallel-transport every column of u along t -> exp(t v), t in [0, 1]."""
    if v.base.manifold != u.manifold or not np.array_equal(v.base.coords, u.base.coords):
        raise GeometryError("velocity is not based at the frame's base point")
    m = u.manifold
    y, cols = transport_columns(m, u.base.coords, v.vec, u.columns)
    return Frame(Point(y, m), cols)


def orthogonal_from_frames(u: Frame, v: Frame) -> OrthogonalMatrix:
    """The b in O(d) with u b = v, for frames over the same point.

    Solved column-wise through frame_inverse and then projected back to O(d)
    by Gram-Schmidt to absorb rounding.
    """
    if not np.array_equal(u.base.coords, v.base.coords):
        raise GeometryError("frames are over different points")
    b = u.columns.T @ v.columns
    q = np.array(b)
    for k in range(q.shape[1]):
        for j in range(k):
            q[:, k] -= np.dot(q[:, j], q[:, k]) * q[:, j]
        q[:, k] /= np.linalg.norm(q[:, k])
    return OrthogonalMatrix(q)


def frame_distance(u: Frame, v: Frame) -> float:
    """Max-abs difference of bases and columns; a plain numerical comparison."""
    return float(max(np.max(np.abs(u.base.coords - v.base.coords)),
                     np.max(np.abs(u.columns - v.columns))))


def equivariance_check(u: Frame, v: Tangent, a: OrthogonalMatrix, tol=1e-10) -> CheckReport:
    """transport_frame(u a, v) against transport_frame(u, v) a."""
    left = transport_frame(right_action(u, a), v)
    right = right_action(transport_frame(u, v), a)
    err = frame_distance(left, right)
    return CheckReport("right-action equivariance of frame transport", err <= tol, err, tol,
                       [] if err <= tol else [f"frames differ by {err:.3e}"])

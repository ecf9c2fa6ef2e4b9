"""Ito and Stratonovich integrals of 1-forms and quadratic variation along rolled paths.

Covectors are carried as ambient vectors through the metric: the pairing of
a covector ``a`` at x with a tangent ``v`` is the ambient dot product. The
covariant derivative of a 1-form is an (n, n) matrix ``B`` with
(nabla_v alpha)(w) = v^T B w.

Sums are always left-point: the integrand is evaluated at X_{t_i} for the
interval (t_i, t_{i+1}) and at X_{t-} for a jump at t. The continuous
increment over an interval is gamma(X_{t_i}, X_{t_{i+1}-}), so no interval
ever straddles a jump; jumps contribute <phi_{t-}, Delta X_t> in full.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .checks import CheckReport
from .connection import ConnectionRule, default_rule
from .manifolds import Flat, Manifold, Sphere
from .paths import DriverPath, PathError, RolledPath

FD_STEP = 1e-5


@dataclass(frozen=True)
class ScalarField:
    """Smooth function on the ambient space with ambient gradient and Hessian (vectorized)."""

    value: Callable
    gradient: Callable
    hessian: Callable | None = None


def coordinate_function(k: int, ambient_dim: int) -> ScalarField:
    e = np.zeros(ambient_dim)
    e[k] = 1.0
    return ScalarField(lambda x: np.asarray(x)[..., k],
                       lambda x: np.broadcast_to(e, np.shape(x)),
                       lambda x: np.zeros(np.shape(x) + (ambient_dim,)))


@dataclass(frozen=True)
class OneFormProcess:
    """Covector process above a path.

    ``evaluator(index, points)`` returns ambient covectors at the given
    points; it is called with arrays when ``vectorized`` is true. ``field``
    (point -> covector) enables the finite-difference covariant derivative,
    ``covariant`` (point -> (n, n) matrix) supplies it exactly.
    """

    evaluator: Callable
    covariant: Callable | None = None
    field: Callable | None = None
    vectorized: bool = False

    @classmethod
    def from_field(cls, field, covariant=None, vectorized=True):
        return cls(lambda i, x: field(x), covariant, field, vectorized)

    def __call__(self, index, points):
        points = np.asarray(points, dtype=float)
        index = np.asarray(index)
        if self.vectorized:
            return np.broadcast_to(self.evaluator(index, points), points.shape)
        if points.ndim == 1:
            return np.asarray(self.evaluator(int(index), points), dtype=float)
        return np.array([self.evaluator(int(i), p) for i, p in zip(index, points)], dtype=float).reshape(points.shape)


@dataclass(frozen=True)
class TwoTensorProcess:
    """Bilinear-form process: ``evaluator(index, points)`` gives (n, n) ambient matrices."""

    evaluator: Callable
    vectorized: bool = False

    def __call__(self, index, points):
        points = np.asarray(points, dtype=float)
        n = points.shape[-1]
        if self.vectorized:
            return np.broadcast_to(self.evaluator(np.asarray(index), points), points.shape[:-1] + (n, n))
        return np.array([self.evaluator(int(i), p) for i, p in zip(np.atleast_1d(index), np.atleast_2d(points))],
                        dtype=float).reshape(points.shape[:-1] + (n, n))


def exact_form(manifold: Manifold, f: ScalarField) -> OneFormProcess:
    """df, with nabla df(v, w) = Hess f(v, w) + <grad f, II(v, w)>."""

    def covariant(x):
        x = np.asarray(x, dtype=float)
        hess = f.hessian(x) if f.hessian is not None else _fd_jacobian(manifold, f.gradient, x)
        return hess + manifold.weingarten(x, f.gradient(x))

    return OneFormProcess.from_field(f.gradient, covariant)


def coordinate_form(manifold: Manifold, k: int) -> OneFormProcess:
    """The 1-form dx^k of the k-th ambient coordinate, restricted to M."""
    return exact_form(manifold, coordinate_function(k, manifold.ambient_dim))


def metric_tensor(manifold: Manifold) -> TwoTensorProcess:
    eye = np.eye(manifold.ambient_dim)
    return TwoTensorProcess(lambda i, x: np.broadcast_to(eye, np.shape(x)[:-1] + eye.shape), True)


def tensor_product(phi: OneFormProcess, psi: OneFormProcess) -> TwoTensorProcess:
    """(phi x psi)(v, w) = phi(v) psi(w)."""
    return TwoTensorProcess(lambda i, x: phi(i, x)[..., :, None] * psi(i, x)[..., None, :], True)


def sum_forms(*forms: OneFormProcess) -> OneFormProcess:
    def ev(i, x):
        return sum(f(i, x) for f in forms)
    cov = None
    if all(f.covariant is not None for f in forms):
        def cov(x):
            return sum(f.covariant(x) for f in forms)
    fld = None
    if all(f.field is not None for f in forms):
        def fld(x):
            return sum(f.field(x) for f in forms)
    return OneFormProcess(ev, cov, fld, True)


def scale_form(f: ScalarField, alpha: OneFormProcess) -> OneFormProcess:
    """f alpha, with nabla(f alpha) = df (x) alpha + f nabla alpha."""
    if alpha.field is None:
        raise ValueError("scaling needs a 1-form given as a field")

    def fld(x):
        return f.value(x)[..., None] * alpha.field(x)

    cov = None
    if alpha.covariant is not None:
        def cov(x):
            x = np.asarray(x, dtype=float)
            return (f.gradient(x)[..., :, None] * alpha.field(x)[..., None, :]
                    + f.value(x)[..., None, None] * alpha.covariant(x))
    return OneFormProcess.from_field(fld, cov)


def _fd_jacobian(manifold: Manifold, fld, x, step=FD_STEP):
    """M[..., :, j] = D fld(x)[P e_j] by central differences along exp_x(+-step P e_j)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        b = manifold.project_tangent(x, np.broadcast_to(e, x.shape))
        plus = np.asarray(fld(manifold.exp(x, step * b)), dtype=float)
        minus = np.asarray(fld(manifold.exp(x, -step * b)), dtype=float)
        cols.append((plus - minus) / (2 * step))
    return np.stack(cols, axis=-1)


def fd_covariant(manifold: Manifold, alpha: OneFormProcess):
    """Covariant derivative of a field-given 1-form by finite differences.

    (nabla_v alpha)(w) = <D A(x)[v], w> + <A(x), II(v, w)>, where A is the
    ambient field; on the unit sphere the second term is -<A, x><v, w>.
    """
    if alpha.field is None:
        raise ValueError("finite-difference covariant derivative needs alpha.field")

    def cov(x):
        x = np.asarray(x, dtype=float)
        jac = _fd_jacobian(manifold, alpha.field, x)
        return np.swapaxes(jac, -1, -2) + manifold.weingarten(x, alpha.field(x))

    return cov


def _covariant(manifold, alpha: OneFormProcess, fallback: bool):
    if alpha.covariant is not None:
        return alpha.covariant
    if not fallback:
        raise ValueError("Stratonovich integral needs nabla alpha (or enable the finite-difference fallback)")
    return fd_covariant(manifold, alpha)


def _segments(X: RolledPath, rule: ConnectionRule):
    m = X.manifold
    rule.check_manifold(m)
    left = X.left_points()
    gam = rule(m, X.points[:-1], left[1:])
    return left, gam


def _pair(a, b):
    return np.sum(a * b, axis=-1)


def _bilinear(B, v, w):
    return np.sum(v * np.sum(B * w[..., None, :], axis=-1), axis=-1)


JUMP_READINGS = ("designated", "rule")


def jump_vectors(X: RolledPath, rule: ConnectionRule, jumps: str = "designated") -> np.ndarray:
    """Jump tangents at X_-: the designated Delta X, or the rule's eta(X_-, X)."""
    if jumps == "designated":
        return X.jump_vec
    if jumps == "rule":
        return rule(X.manifold, X.jump_pre, X.points[X.jump_index])
    raise ValueError(f"jump reading must be one of {JUMP_READINGS}, got {jumps!r}")


def ito_increments(phi: OneFormProcess, X: RolledPath, rule: ConnectionRule | None = None,
                   jumps: str = "designated"):
    """Per-interval continuous increments and per-jump terms of int phi_- dX.

    ``jumps="rule"`` reads each jump through the connection rule, phi_-(eta(X_-, X)),
    which is the integral used to define eta-martingales.
    """
    rule = default_rule(X.manifold) if rule is None else rule
    _, gam = _segments(X, rule)
    idx = np.arange(X.n_steps)
    cont = _pair(phi(idx, X.points[:-1]), gam)
    if not len(X.jump_index):
        return cont, np.zeros(0)
    return cont, _pair(phi(X.jump_index, X.jump_pre), jump_vectors(X, rule, jumps))


def _scalar_path(X: RolledPath, cont, jumps) -> DriverPath:
    return DriverPath(X.times, np.asarray(cont)[:, None], X.jump_index, np.asarray(jumps)[:, None])


def ito_integral(phi: OneFormProcess, X: RolledPath, rule: ConnectionRule | None = None,
                 jumps: str = "designated") -> DriverPath:
    """Cumulative Ito integral as a real cadlag path (a one-dimensional DriverPath)."""
    return _scalar_path(X, *ito_increments(phi, X, rule, jumps))


@dataclass(frozen=True)
class QuadraticVariation:
    times: np.ndarray
    continuous_increments: np.ndarray
    jump_index: np.ndarray
    jump_terms: np.ndarray

    def _cum(self, cont, jumps):
        out = np.zeros(len(self.times))
        out[1:] = np.cumsum(cont)
        if len(self.jump_index):
            add = np.zeros(len(self.times))
            add[self.jump_index] = jumps
            out += np.cumsum(add)
        return out

    @property
    def continuous(self):
        return self._cum(self.continuous_increments, np.zeros(len(self.jump_index)))

    @property
    def jump(self):
        return self._cum(np.zeros(len(self.continuous_increments)), self.jump_terms)

    @property
    def full(self):
        return self._cum(self.continuous_increments, self.jump_terms)

    @property
    def total(self) -> float:
        return math.fsum(self.continuous_increments) + math.fsum(self.jump_terms)


def quadratic_variation(b: TwoTensorProcess, X: RolledPath, rule: ConnectionRule | None = None) -> QuadraticVariation:
    """int b_- d[X, X]: sum of b(gamma_i, gamma_i) plus sum of b(Delta X, Delta X) over jumps."""
    rule = default_rule(X.manifold) if rule is None else rule
    _, gam = _segments(X, rule)
    idx = np.arange(X.n_steps)
    cont = _bilinear(b(idx, X.points[:-1]), gam, gam)
    if len(X.jump_index):
        jumps = _bilinear(b(X.jump_index, X.jump_pre), X.jump_vec, X.jump_vec)
    else:
        jumps = np.zeros(0)
    return QuadraticVariation(X.times, cont, X.jump_index, jumps)


def stratonovich_increments(alpha: OneFormProcess, X: RolledPath, rule=None, fd_fallback=True):
    rule = default_rule(X.manifold) if rule is None else rule
    cov = _covariant(X.manifold, alpha, fd_fallback)
    cont, jumps = ito_increments(alpha, X, rule)
    _, gam = _segments(X, rule)
    correction = _bilinear(np.asarray(cov(X.points[:-1])), gam, gam)
    return cont + 0.5 * correction, jumps


def stratonovich_integral(alpha: OneFormProcess, X: RolledPath, rule: ConnectionRule | None = None,
                          fd_fallback: bool = True) -> DriverPath:
    """int alpha o dX = int alpha(X_-) dX + 1/2 int nabla alpha(X_-) d[X, X]^c."""
    return _scalar_path(X, *stratonovich_increments(alpha, X, rule, fd_fallback))


def midpoint_sum(alpha: OneFormProcess, X: RolledPath) -> float:
    """Geodesic-midpoint Riemann sum of alpha over the continuous part plus the jump pairings.

    Each interval contributes <alpha(m), c'(1/2)> for the minimal geodesic c
    from X_{t_i} to X_{t_{i+1}-} and its midpoint m. Used as an independent
    Stratonovich cross-check.
    """
    m = X.manifold
    left = X.left_points()
    v = m.log(X.points[:-1], left[1:])
    mid = m.exp(X.points[:-1], 0.5 * v)
    vel = m.transport(X.points[:-1], 0.5 * v, v)
    idx = np.arange(X.n_steps)
    cont = _pair(alpha(idx, mid), vel)
    jumps = _pair(alpha(X.jump_index, X.jump_pre), X.jump_vec) if len(X.jump_index) else np.zeros(0)
    return math.fsum(cont) + math.fsum(jumps)


def scalar_stratonovich(Y: DriverPath, Z: DriverPath) -> float:
    """int Y_- o dZ = int Y_- dZ + 1/2 [Y, Z]^c for real cadlag paths on one grid."""
    if not np.array_equal(Y.times, Z.times):
        raise PathError("paths live on different grids")
    y = Y.right_values[:, 0]
    yl = Y.values[:, 0]
    dz = Z.increments[:, 0]
    dy = Y.increments[:, 0]
    jz = Z.jump_array()[:, 0]
    return (math.fsum(y[:-1] * dz) + 0.5 * math.fsum(dy * dz) + math.fsum(yl * jz))


def scalar_path_of(f: ScalarField, X: RolledPath) -> DriverPath:
    """f(X) - f(X_0) as a cadlag real path."""
    left = X.left_points()
    vals = f.value(X.points)
    lvals = f.value(left)
    cont = lvals[1:] - vals[:-1]
    jumps = vals[X.jump_index] - lvals[X.jump_index]
    return _scalar_path(X, cont, jumps)


def terminal(p: DriverPath) -> float:
    """Terminal value of a one-dimensional path, summed with compensation."""
    return math.fsum(p.increments[:, 0]) + math.fsum(p.jump_size[:, 0])


def partition(X: RolledPath, keep_every: int = 2) -> RolledPath:
    """Coarser partition of the same path: every ``keep_every``-th grid point plus all jump times."""
    keep = np.zeros(len(X.times), dtype=bool)
    keep[::keep_every] = True
    keep[-1] = True
    keep[X.jump_index] = True
    kept = np.nonzero(keep)[0]
    new_jump = np.searchsorted(kept, X.jump_index)
    frames = None if X.frames is None else X.frames[kept]
    return RolledPath(X.manifold, X.times[kept], X.points[kept], new_jump, X.jump_pre, X.jump_vec,
                      frames, X.frame_jump_pre, X.jump_dw, dict(X.metadata))


def rule_independence_check(phi: OneFormProcess, paths, rules, min_ratio: float = 1.5) -> CheckReport:
    """Ito integrals under different rules agree to first order.

    For each pair of rules, the terminal difference is measured on each path
    at its own grid (h/2) and on the coarse partition (h). With several paths
    the root mean square is used. Passes when every pairwise difference
    shrinks by ``min_ratio`` or is at rounding level, and jump terms agree
    exactly.
    """
    if isinstance(paths, RolledPath):
        paths = [paths]
    rules = list(rules)
    if len(rules) < 2:
        raise ValueError("need at least two rules")
    violations, details = [], {}
    worst = 0.0
    for a in range(len(rules)):
        for b in range(a + 1, len(rules)):
            ra, rb = rules[a], rules[b]
            fine, coarse = [], []
            for X in paths:
                ca, ja = ito_increments(phi, X, ra)
                cb, jb = ito_increments(phi, X, rb)
                if not np.array_equal(ja, jb):
                    violations.append(f"jump terms differ between {ra.label} and {rb.label}")
                fine.append(math.fsum(ca) - math.fsum(cb))
                Xc = partition(X)
                ca, _ = ito_increments(phi, Xc, ra)
                cb, _ = ito_increments(phi, Xc, rb)
                coarse.append(math.fsum(ca) - math.fsum(cb))
            rms_f = math.sqrt(math.fsum(np.square(fine)) / len(fine))
            rms_c = math.sqrt(math.fsum(np.square(coarse)) / len(coarse))
            ratio = rms_c / rms_f if rms_f > 0 else math.inf
            key = f"{ra.label}-{rb.label}"
            details[key] = {"coarse": rms_c, "fine": rms_f, "ratio": ratio}
            worst = max(worst, rms_f)
            if rms_c > 1e-13 and ratio < min_ratio:
                violations.append(f"{key}: difference shrank only by {ratio:.3f}")
    return CheckReport("connection-rule independence of Ito integrals", not violations, worst, None,
                       violations, details)


def product_rule_check(f: ScalarField, alpha: OneFormProcess, X: RolledPath, rule=None,
                       tol: float = 1e-2, fd_fallback=True) -> CheckReport:
    """int f alpha o dX against int f(X_-) o d(int alpha o dX) at the terminal time."""
    m = X.manifold
    if alpha.field is None:
        raise ValueError("product rule check needs alpha given as a field")
    cov = _covariant(m, alpha, fd_fallback)
    full = OneFormProcess.from_field(alpha.field, cov)
    lhs = terminal(stratonovich_integral(scale_form(f, full), X, rule))
    Z = stratonovich_integral(full, X, rule)
    Y = scalar_path_of(f, X)
    y0 = float(f.value(X.points[0]))
    rhs = scalar_stratonovich(Y, Z) + y0 * terminal(Z)
    err = abs(lhs - rhs)
    return CheckReport("product rule for Stratonovich integrals", err <= tol, err, tol,
                       [] if err <= tol else [f"lhs {lhs:.6e} vs rhs {rhs:.6e}"], {"lhs": lhs, "rhs": rhs})


@dataclass(frozen=True)
class Chart:
    """Coordinate patch: ``coords(x) -> (..., d)``, ``basis(x) -> (..., n, d)`` columns d/dx^i."""

    coords: Callable
    basis: Callable
    contains: Callable


def identity_chart(manifold: Flat) -> Chart:
    eye = np.eye(manifold.dim)
    return Chart(lambda x: np.asarray(x, dtype=float),
                 lambda x: np.broadcast_to(eye, np.shape(x)[:-1] + eye.shape),
                 lambda x: np.ones(np.shape(x)[:-1], dtype=bool))


def hemisphere_chart(manifold: Sphere, axis: int = -1) -> Chart:
    """Graph chart over {x_axis > 0}: coordinates are the remaining ambient components."""
    n = manifold.ambient_dim
    axis = axis % n
    others = [k for k in range(n) if k != axis]

    def basis(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (n, n - 1))
        for i, k in enumerate(others):
            out[..., k, i] = 1.0
            out[..., axis, i] = -x[..., k] / x[..., axis]
        return out

    return Chart(lambda x: np.asarray(x, dtype=float)[..., others], basis,
                 lambda x: np.asarray(x, dtype=float)[..., axis] > 0)


def coordinate_stratonovich(alpha: OneFormProcess, X: RolledPath, chart: Chart) -> float:
    """Sum over coordinates of the real Stratonovich integrals int alpha_i(X_-) o dX^i.

    Jumps enter through <alpha(X_-), Delta X>, the chart's jump correction
    having been folded in.
    """
    left = X.left_points()
    idx = np.arange(len(X.times))
    comps_right = np.sum(chart.basis(X.points) * alpha(idx, X.points)[..., :, None], axis=-2)
    comps_left = np.sum(chart.basis(left) * alpha(idx, left)[..., :, None], axis=-2)
    xr = chart.coords(X.points)
    xl = chart.coords(left)
    dx = xl[1:] - xr[:-1]
    da = comps_left[1:] - comps_right[:-1]
    total = math.fsum((comps_right[:-1] * dx).ravel()) + 0.5 * math.fsum((da * dx).ravel())
    if len(X.jump_index):
        total += math.fsum(_pair(alpha(X.jump_index, X.jump_pre), X.jump_vec))
    return total


def coordinate_patch_check(alpha: OneFormProcess, X: RolledPath, chart: Chart, rule=None,
                           tol: float = 1e-2, fd_fallback=True) -> CheckReport:
    """Manifold Stratonovich integral against the component-wise chart computation."""
    left = X.left_points()
    if not (np.all(chart.contains(X.points)) and np.all(chart.contains(left))):
        raise PathError("path leaves the coordinate patch")
    manifold_value = terminal(stratonovich_integral(alpha, X, rule, fd_fallback))
    chart_value = coordinate_stratonovich(alpha, X, chart)
    err = abs(manifold_value - chart_value)
    return CheckReport("coordinate-patch identity", err <= tol, err, tol,
                       [] if err <= tol else [f"manifold {manifold_value:.6e} vs chart {chart_value:.6e}"],
                       {"manifold": manifold_value, "chart": chart_value})


def polarization_symmetry(phi: OneFormProcess, psi: OneFormProcess, X: RolledPath, rule=None):
    """Cross variation from polarization, computed in both argument orders.

    Returns ``(cross(phi, psi), cross(psi, phi), direct)``, where ``direct`` is
    int phi x psi d[X, X].
    """

    def q(a):
        return quadratic_variation(tensor_product(a, a), X, rule).total

    def cross(a, b):
        return 0.5 * (q(sum_forms(a, b)) - q(a) - q(b))

    direct = quadratic_variation(tensor_product(phi, psi), X, rule).total
    return cross(phi, psi), cross(psi, phi), direct

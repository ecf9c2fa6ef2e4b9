"""Development, horizontal lift and anti-development.

Development rolls a driver W in R^d onto M: every continuous increment and
every jump is applied the same way, by moving along the geodesic with
initial velocity U(delta) and parallel-transporting the frame with it. Jumps
are therefore exact geodesic moves and satisfy exp(Delta X) = X by
construction; only the continuous part carries discretization error.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .connection import ConnectionRule, default_rule
from .frames import Frame, orthonormality_defect, reorthonormalize, tangency_defect
from .manifolds import GeometryError, Manifold, Point
from .paths import DriverPath, PathError, RolledPath, refine, validate_rolled


class Scheme(enum.Enum):
    EULER = "euler"
    HEUN = "heun"


@dataclass(frozen=True)
class SchemeConfig:
    scheme: Scheme = Scheme.EULER
    track_frame_defect: bool = False

    @classmethod
    def parse(cls, text, **kw):
        return cls(Scheme(str(text).lower()), **kw)


def frame_apply_batch(cols, w):
    """sum_k w^k cols[..., :, k]; explicit loop keeps batched bits equal to unbatched."""
    out = cols[..., :, 0] * w[..., 0, None]
    for k in range(1, cols.shape[-1]):
        out = out + cols[..., :, k] * w[..., k, None]
    return out


def frame_inverse_batch(cols, v):
    """<cols[..., :, k], v> for every k."""
    return np.add.reduce(cols * v[..., :, None], axis=-2)


def _heun_velocity(manifold, x, cols, delta):
    v0 = frame_apply_batch(cols, delta)
    y = manifold.exp(x, v0)
    moved = manifold.transport_columns(x, v0, cols)
    v_end = frame_apply_batch(moved, delta)
    back = manifold.transport(y, -manifold.geodesic_velocity(x, v0), v_end)
    return 0.5 * (v0 + manifold.project_tangent(x, back))


def roll_moves(manifold: Manifold, x0, cols0, moves, is_jump=None, cfg: SchemeConfig = SchemeConfig()):
    """Apply a sequence of driver moves; batched over any leading axes of x0.

    ``moves`` has shape (M, ..., d). Returns point history (M+1, ..., n),
    frame history (M+1, ..., n, d), applied velocities (M, ..., n) and,
    with ``cfg.track_frame_defect``, the per-move orthonormality defect
    before and after re-orthonormalization.
    """
    x = np.asarray(x0, dtype=float)
    cols = np.asarray(cols0, dtype=float)
    moves = np.asarray(moves, dtype=float)
    count = moves.shape[0]
    xs = np.empty((count + 1,) + x.shape)
    us = np.empty((count + 1,) + cols.shape)
    vs = np.empty((count,) + x.shape)
    xs[0], us[0] = x, cols
    raw = np.empty((count,) + cols.shape) if cfg.track_frame_defect else None
    heun = cfg.scheme is Scheme.HEUN
    for m in range(count):
        delta = moves[m]
        v = frame_apply_batch(cols, delta)
        if heun:
            jump = False if is_jump is None else np.asarray(is_jump[m])
            if not np.all(jump):
                v = np.where(np.asarray(jump)[..., None], v, _heun_velocity(manifold, x, cols, delta))
        y = manifold.exp(x, v)
        moved = manifold.transport_columns(x, v, cols)
        if raw is not None:
            raw[m] = moved
        if not manifold.is_flat:
            moved = reorthonormalize(manifold, y, moved)
        x, cols = y, moved
        xs[m + 1], us[m + 1], vs[m] = x, cols, v
    if raw is None:
        return xs, us, vs, None, None
    return xs, us, vs, frame_defects(manifold, xs[1:], raw), frame_defects(manifold, xs[1:], us[1:])


def frame_defects(manifold: Manifold, x, cols, block: int = 65536) -> np.ndarray:
    """Per-move max of the orthonormality and tangency defects of (M, ..., n, d) frames."""
    out = np.empty(len(cols))
    for a in range(0, len(cols), block):
        c, p = cols[a:a + block], x[a:a + block]
        d = np.maximum(orthonormality_defect(c), tangency_defect(manifold, p, c))
        out[a:a + block] = d.reshape(len(d), -1).max(axis=1) if d.ndim > 1 else d
    return out


def _check_start(manifold: Manifold, W: DriverPath, x0: Point, u0: Frame):
    if x0.manifold != manifold or u0.manifold != manifold:
        raise GeometryError("start point and frame must live on the same manifold")
    if not np.array_equal(u0.base.coords, x0.coords):
        raise GeometryError("initial frame is not based at the initial point")
    if W.dim != manifold.dim:
        raise PathError(f"driver dimension {W.dim} does not match manifold dimension {manifold.dim}")


def develop(W: DriverPath, x0: Point, u0: Frame, cfg: SchemeConfig = SchemeConfig()) -> RolledPath:
    """Roll the driver ``W`` onto the manifold starting from (x0, u0)."""
    m = x0.manifold
    _check_start(m, W, x0, u0)
    moves, is_jump, grid = W.moves()
    xs, us, vs, pre, post = roll_moves(m, x0.coords, u0.columns, moves, is_jump, cfg)
    return _assemble(m, W, xs, us, vs, is_jump, grid, cfg, pre, post)


def _assemble(m, W, xs, us, vs, is_jump, grid, cfg, pre=None, post=None):
    n_pts = len(W.times)
    points = np.empty((n_pts, m.ambient_dim))
    frames = np.empty((n_pts, m.ambient_dim, m.dim))
    points[0], frames[0] = xs[0], us[0]
    cont = ~is_jump
    points[grid[cont]] = xs[1:][cont]
    frames[grid[cont]] = us[1:][cont]
    jm = np.nonzero(is_jump)[0]
    points[grid[jm]] = xs[jm + 1]
    frames[grid[jm]] = us[jm + 1]
    meta = {"scheme": cfg.scheme.value, "manifold": m.name, "steps": W.n_steps,
            "jumps": int(len(jm)), "horizon": W.horizon}
    if pre is not None:
        meta["max_frame_defect_pre"] = float(pre.max(initial=0.0))
        meta["max_frame_defect_post"] = float(post.max(initial=0.0))
    return RolledPath(m, W.times, points, grid[jm], xs[jm], vs[jm], frames, us[jm], W.jump_size, meta)


def develop_many(drivers, x0: Point, u0: Frame, cfg: SchemeConfig = SchemeConfig()):
    """Develop several drivers at once, vectorized across paths.

    Move sequences are padded with zero moves at the end; the padding never
    touches a path's own states. Each result equals ``develop`` on the same
    driver up to floating-point rounding of the batched operations.
    """
    drivers = list(drivers)
    if not drivers:
        return []
    m = x0.manifold
    for W in drivers:
        _check_start(m, W, x0, u0)
    seqs = [W.moves() for W in drivers]
    length = max(len(s[0]) for s in seqs)
    batch = np.zeros((length, len(drivers), m.dim))
    jump_mask = np.zeros((length, len(drivers)), dtype=bool)
    for b, (mv, isj, _) in enumerate(seqs):
        batch[:len(mv), b] = mv
        jump_mask[:len(mv), b] = isj
    x0b = np.broadcast_to(x0.coords, (len(drivers), m.ambient_dim))
    u0b = np.broadcast_to(u0.columns, (len(drivers),) + u0.columns.shape)
    xs, us, vs, _, _ = roll_moves(m, x0b, u0b, batch, jump_mask, cfg)
    out = []
    for b, (W, (mv, isj, grid)) in enumerate(zip(drivers, seqs)):
        k = len(mv)
        out.append(_assemble(m, W, xs[:k + 1, b], us[:k + 1, b], vs[:k, b], isj, grid, cfg))
    return out


def _segment_frames(manifold: Manifold, rule: ConnectionRule, x, y, cols):
    """Frame carried from x to y along the rule's displacement.

    For rules whose value is a minimal geodesic this is one transport. Other
    rules (the ambient projection) stop short of y, so a closing geodesic leg
    from exp_x(gamma) to y is appended.
    """
    v = rule(manifold, x, y)
    z, cols = manifold.exp(x, v), manifold.transport_columns(x, v, cols)
    if not rule.is_minimal_geodesic:
        w = manifold.log(z, y)
        cols = manifold.transport_columns(z, w, cols)
    if manifold.is_flat:
        return cols
    return reorthonormalize(manifold, y, cols)


def horizontal_lift(X: RolledPath, u0: Frame, rule: ConnectionRule | None = None) -> RolledPath:
    """Frame path above X obtained by parallel transport only.

    Continuous intervals chain frames along the rule's displacement per grid
    step; each jump transports the pre-jump frame along its own jump geodesic
    exp(t Delta X), which handles jumps that are not minimal geodesics.
    """
    m = X.manifold
    rule = default_rule(m) if rule is None else rule
    rule.check_manifold(m)
    if not np.array_equal(u0.base.coords, X.points[0]) or u0.manifold != m:
        raise GeometryError("initial frame is not based at X_0")
    report = validate_rolled(X.strip_frames())
    if not report.passed:
        raise PathError(f"input path violates exp(Delta X) = X: {report.violations[:3]}")
    left = X.left_points()
    jumps = dict(zip(X.jump_index.tolist(), range(len(X.jump_index))))
    frames = np.empty((len(X.times), m.ambient_dim, m.dim))
    pre = np.empty((len(X.jump_index), m.ambient_dim, m.dim))
    cols = np.array(u0.columns)
    frames[0] = cols
    for i in range(X.n_steps):
        cols = _segment_frames(m, rule, X.points[i], left[i + 1], cols)
        if i + 1 in jumps:
            j = jumps[i + 1]
            pre[j] = cols
            cols = m.transport_columns(X.jump_pre[j], X.jump_vec[j], cols)
            if not m.is_flat:
                cols = reorthonormalize(m, X.points[i + 1], cols)
        frames[i + 1] = cols
    dw = frame_inverse_batch(pre, X.jump_vec) if len(pre) else np.zeros((0, m.dim))
    meta = dict(X.metadata, lift_rule=rule.label)
    return RolledPath(m, X.times, X.points, X.jump_index, X.jump_pre, X.jump_vec, frames, pre, dw, meta)


def antidevelop(X: RolledPath, rule: ConnectionRule | None = None) -> DriverPath:
    """W^i = int U_{s-} e^i dX read off through the frames.

    Continuous increments are frame coordinates of gamma(X_i, X_{i+1}-); jumps
    are frame coordinates of Delta X at the pre-jump frame.
    """
    if not X.has_frames:
        raise PathError("anti-development needs a path with frames; use horizontal_lift first")
    m = X.manifold
    rule = default_rule(m) if rule is None else rule
    rule.check_manifold(m)
    left = X.left_points()
    gam = rule(m, X.points[:-1], left[1:])
    inc = frame_inverse_batch(X.frames[:-1], gam)
    jumps = frame_inverse_batch(X.frame_jump_pre, X.jump_vec) if len(X.jump_index) else np.zeros((0, m.dim))
    return DriverPath(X.times, inc, X.jump_index, jumps)


def sup_error(a: DriverPath, b: DriverPath) -> float:
    """Sup over grid times of |a - b| (right values and left limits)."""
    if not np.array_equal(a.times, b.times):
        raise PathError("paths live on different grids")
    return float(max(np.max(np.abs(a.right_values - b.right_values)),
                     np.max(np.abs(a.values - b.values))))


@dataclass
class ConvergenceTable:
    step_sizes: list
    point_errors: list
    frame_errors: list
    orders: list = field(default_factory=list)
    jump_norms: list = field(default_factory=list)

    def rows(self):
        for k, h in enumerate(self.step_sizes):
            p = self.orders[k - 1] if k else float("nan")
            yield h, self.point_errors[k], self.frame_errors[k], p

    def to_text(self):
        lines = [f"{'h':>12} {'point err':>12} {'frame err':>12} {'order':>8}"]
        for h, e, f, p in self.rows():
            lines.append(f"{h:12.4e} {e:12.4e} {f:12.4e} {p:8.3f}")
        return "\n".join(lines)


def _max_step(times):
    return float(np.max(np.diff(times)))


def convergence_study(W, x0: Point, u0: Frame, levels: int = 4, rng=None, sigma: float = 0.0,
                      cfg: SchemeConfig = SchemeConfig()) -> ConvergenceTable:
    """Develop at step sizes h, h/2, ... and compare with the finest level.

    ``W`` is either a driver, refined ``levels`` times by midpoint insertion
    (Brownian-bridge fill of intensity ``sigma`` when ``rng`` is given), or a
    callable ``level -> DriverPath`` producing nested grids. Errors are sup
    norms over the coarsest grid; orders are log2 of successive error ratios.
    """
    if callable(W) and not isinstance(W, DriverPath):
        drivers = [W(k) for k in range(levels + 1)]
    else:
        drivers = [W]
        for _ in range(levels):
            drivers.append(refine(drivers[-1], rng, sigma))
    coarse = drivers[0].times
    paths = [develop(D, x0, u0, cfg) for D in drivers]
    ref = paths[-1]
    ref_pos = np.searchsorted(ref.times, coarse)
    if not np.array_equal(ref.times[ref_pos], coarse):
        raise PathError("levels must have nested grids")
    hs, pe, fe, norms = [], [], [], []
    for D, P in zip(drivers[:-1], paths[:-1]):
        pos = np.searchsorted(P.times, coarse)
        pe.append(float(np.max(np.abs(P.points[pos] - ref.points[ref_pos]))))
        fe.append(float(np.max(np.abs(P.frames[-1] - ref.frames[-1]))))
        hs.append(_max_step(D.times))
        norms.append(np.linalg.norm(P.jump_vec, axis=1).tolist())
    orders = [math.log2(a / b) if a > 0 and b > 0 else float("nan") for a, b in zip(pe[:-1], pe[1:])]
    return ConvergenceTable(hs, pe, fe, orders, norms)

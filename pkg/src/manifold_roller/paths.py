"""Cadlag paths with explicit jump records, and seeded generators for drivers.

A :class:`DriverPath` stores continuous increments per grid interval plus a
list of jumps at grid times; values are rebuilt by summation so the stored
increments stay exact. A :class:`RolledPath` is the manifold-side sample: right
values at each grid time, and at every jump the pre-jump point together with
the designated jump tangent (and optionally pre-jump frames).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import gamma, pi, sqrt

import numpy as np

from .checks import CheckReport
from .frames import orthonormality_defect, tangency_defect
from .manifolds import Manifold

JUMP_TOL = 1e-9


class PathError(ValueError):
    pass


@dataclass(frozen=True)
class RngConfig:
    """Seed plus stream id; identical pairs give bitwise identical draws."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RngConfig":
        """Independent stream for path ``index``; used by Monte Carlo drivers."""
        return RngConfig(self.seed, int(self.stream) * 1_000_003 + int(index) + 1)


def _as_generator(rng):
    if isinstance(rng, RngConfig):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return RngConfig(int(rng)).generator()


def uniform_grid(horizon: float, steps: int) -> np.ndarray:
    if steps < 1 or horizon <= 0:
        raise PathError("need steps >= 1 and horizon > 0")
    return np.linspace(0.0, float(horizon), int(steps) + 1)


def _freeze(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DriverPath:
    """Cadlag R^d path with W_0 = 0.

    ``increments[i]`` is the continuous change over (t_i, t_{i+1}); a jump
    record ``(jump_index[j], jump_size[j])`` means W jumps at t_{jump_index[j]}.
    """

    times: np.ndarray
    increments: np.ndarray
    jump_index: np.ndarray = None
    jump_size: np.ndarray = None

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        inc = np.array(self.increments, dtype=float)
        if inc.ndim == 1:
            inc = inc[:, None]
        d = inc.shape[1]
        idx = np.zeros(0, dtype=np.int64) if self.jump_index is None else np.array(self.jump_index, dtype=np.int64).reshape(-1)
        size = np.zeros((0, d)) if self.jump_size is None else np.array(self.jump_size, dtype=float).reshape(len(idx), d)
        if t.ndim != 1 or len(t) < 2 or np.any(np.diff(t) <= 0) or t[0] != 0.0:
            raise PathError("times must be strictly increasing and start at 0")
        if inc.shape[0] != len(t) - 1:
            raise PathError(f"need {len(t) - 1} increments, got {inc.shape[0]}")
        if len(idx) and (np.any(np.diff(idx) <= 0) or idx[0] < 1 or idx[-1] >= len(t)):
            raise PathError("jump indices must be strictly increasing and lie in 1..N")
        for name, a in (("times", t), ("increments", inc), ("jump_index", idx), ("jump_size", size)):
            object.__setattr__(self, name, _freeze(a))

    @property
    def dim(self) -> int:
        return self.increments.shape[1]

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def jump_array(self) -> np.ndarray:
        """(N+1, d) array holding the jump at each grid index (zero if none)."""
        out = np.zeros((len(self.times), self.dim))
        out[self.jump_index] = self.jump_size
        return out

    @property
    def right_values(self) -> np.ndarray:
        """W_{t_i}, accumulated in event order (jump at t_i, then increment i)."""
        out = np.empty((len(self.times), self.dim))
        jumps = self.jump_array()
        w = np.zeros(self.dim)
        for i in range(len(self.times)):
            if i:
                w = w + self.increments[i - 1]
            if self.jump_index.size and jumps[i].any():
                w = w + jumps[i]
            out[i] = w
        return out

    @property
    def values(self) -> np.ndarray:
        """Left limits W_{t_i-}."""
        return self.right_values - self.jump_array()

    def value_at(self, t: float) -> np.ndarray:
        i = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.right_values[max(i, 0)]

    def moves(self):
        """Event sequence ``(vectors, is_jump, grid_index)`` in time order.

        Grid index of a continuous move is the index of the interval's right
        end; this is the order in which development consumes the driver.
        """
        n = self.n_steps
        k = len(self.jump_index)
        vec = np.empty((n + k, self.dim))
        is_jump = np.zeros(n + k, dtype=bool)
        grid = np.empty(n + k, dtype=np.int64)
        jumps = dict(zip(self.jump_index.tolist(), self.jump_size))
        m = 0
        for i in range(n):
            vec[m], grid[m] = self.increments[i], i + 1
            m += 1
            if i + 1 in jumps:
                vec[m], grid[m], is_jump[m] = jumps[i + 1], i + 1, True
                m += 1
        return vec, is_jump, grid

    def realized_qv(self) -> float:
        return float(np.sum(self.increments ** 2) + np.sum(self.jump_size ** 2))


def zero_path(times, d) -> DriverPath:
    times = np.asarray(times, dtype=float)
    return DriverPath(times, np.zeros((len(times) - 1, d)))


def linear_path(times, velocity) -> DriverPath:
    """W_t = t * velocity, sampled on ``times``."""
    times = np.asarray(times, dtype=float)
    velocity = np.asarray(velocity, dtype=float)
    return DriverPath(times, np.diff(times)[:, None] * velocity[None, :])


def curve_path(times, curve) -> DriverPath:
    """Sample a continuous curve c with c(0) = 0 on ``times``."""
    times = np.asarray(times, dtype=float)
    pts = np.array([np.atleast_1d(curve(t)) for t in times], dtype=float)
    if np.any(pts[0] != 0):
        raise PathError("curve must start at the origin")
    return DriverPath(times, np.diff(pts, axis=0))


def gen_brownian(grid, d: int, rng, sigma: float = 1.0) -> DriverPath:
    """Gaussian increments N(0, sigma^2 dt I) on ``grid``; no jumps."""
    grid = np.asarray(grid, dtype=float)
    g = _as_generator(rng)
    dt = np.diff(grid)
    z = g.standard_normal((len(dt), d))
    return DriverPath(grid, sigma * np.sqrt(dt)[:, None] * z)


def uniform_ball_sampler(radius: float = 1.0):
    """Jump sizes uniform in the closed ball of ``radius`` (a symmetric law)."""

    def sample(g, k, d):
        z = g.standard_normal((k, d))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        r = radius * g.random(k) ** (1.0 / d)
        return z * r[:, None]

    sample.mean = lambda d: np.zeros(d)
    return sample


def half_ball_sampler(radius: float = 1.0, axis: int = 0):
    """Uniform in the half ball {x_axis >= 0}; its mean is nonzero."""
    base = uniform_ball_sampler(radius)

    def sample(g, k, d):
        j = base(g, k, d)
        j[:, axis] = np.abs(j[:, axis])
        return j

    def mean(d):
        # E|x_axis| = radius * E[R] * E|u_axis|, R = U^(1/d), u uniform on the unit sphere
        m = np.zeros(d)
        m[axis] = radius * d / (d + 1) * gamma(d / 2) / (sqrt(pi) * gamma((d + 1) / 2))
        return m

    sample.mean = mean
    return sample


def _insert_times(grid, new_times):
    merged = np.union1d(grid, new_times)
    return merged, np.searchsorted(merged, new_times)


def gen_compound_poisson(grid, d: int, rate: float, jump_sampler, rng) -> DriverPath:
    """Compound Poisson driver; jump times are inserted into the grid exactly."""
    if rate < 0:
        raise PathError("rate must be non-negative")
    grid = np.asarray(grid, dtype=float)
    g = _as_generator(rng)
    horizon = grid[-1]
    count = int(g.poisson(rate * horizon)) if rate > 0 else 0
    times = np.sort(g.uniform(0.0, horizon, size=count)) if count else np.zeros(0)
    times = times[times > 0]
    sizes = jump_sampler(g, len(times), d) if len(times) else np.zeros((0, d))
    merged, idx = _insert_times(grid, times)
    if len(idx):
        uniq, inv = np.unique(idx, return_inverse=True)
        summed = np.zeros((len(uniq), d))
        np.add.at(summed, inv, sizes)
        idx, sizes = uniq, summed
    return DriverPath(merged, np.zeros((len(merged) - 1, d)), idx, sizes)


def _regrid(p: DriverPath, new_times) -> DriverPath:
    """Express ``p`` on a finer grid containing its own; continuous part split linearly."""
    new_times = np.asarray(new_times, dtype=float)
    pos = np.searchsorted(new_times, p.times)
    if not np.array_equal(new_times[pos], p.times):
        raise PathError("new grid must contain the old one")
    inc = np.zeros((len(new_times) - 1, p.dim))
    for i in range(p.n_steps):
        a, b = pos[i], pos[i + 1]
        if b == a + 1:
            inc[a] = p.increments[i]
            continue
        frac = np.diff(new_times[a:b + 1]) / (p.times[i + 1] - p.times[i])
        parts = frac[:, None] * p.increments[i]
        parts[-1] = p.increments[i] - parts[:-1].sum(axis=0)
        inc[a:b] = parts
    return DriverPath(new_times, inc, pos[p.jump_index], p.jump_size)


def superpose(a: DriverPath, b: DriverPath) -> DriverPath:
    """Sum of two drivers on the union grid; jumps at a common time are added."""
    if a.dim != b.dim:
        raise PathError("dimension mismatch")
    if a.horizon != b.horizon:
        raise PathError("horizons differ")
    times = np.union1d(a.times, b.times)
    ra = a if np.array_equal(times, a.times) else _regrid(a, times)
    rb = b if np.array_equal(times, b.times) else _regrid(b, times)
    jumps = {}
    for idx, size in list(zip(ra.jump_index.tolist(), ra.jump_size)) + list(zip(rb.jump_index.tolist(), rb.jump_size)):
        jumps[idx] = jumps[idx] + size if idx in jumps else np.array(size)
    keys = sorted(jumps)
    return DriverPath(times, ra.increments + rb.increments, keys,
                      np.array([jumps[k] for k in keys]).reshape(len(keys), a.dim))


def compensate(p: DriverPath, drift) -> DriverPath:
    """Subtract drift * t from the continuous part."""
    drift = np.broadcast_to(np.asarray(drift, dtype=float), (p.dim,))
    return replace(p, increments=p.increments - np.diff(p.times)[:, None] * drift[None, :])


def refine(p: DriverPath, rng=None, sigma: float = 1.0) -> DriverPath:
    """Insert every interval midpoint.

    With ``rng`` the continuous part is filled by a Brownian bridge of
    intensity ``sigma``; without it the split is linear. Jumps and the
    terminal value are preserved.
    """
    g = None if rng is None else _as_generator(rng)
    t = p.times
    mid = 0.5 * (t[:-1] + t[1:])
    times = np.empty(2 * len(t) - 1)
    times[0::2], times[1::2] = t, mid
    half = 0.5 * p.increments
    if g is not None and sigma > 0:
        dt = np.diff(t)
        half = half + sigma * 0.5 * np.sqrt(dt)[:, None] * g.standard_normal(p.increments.shape)
    inc = np.empty((2 * p.n_steps, p.dim))
    inc[0::2] = half
    inc[1::2] = p.increments - half
    return DriverPath(times, inc, 2 * p.jump_index, p.jump_size)


def coarsen(p: DriverPath) -> DriverPath:
    """Drop every odd grid point that carries no jump, summing increments across it."""
    keep = np.zeros(len(p.times), dtype=bool)
    keep[0::2] = True
    keep[-1] = True
    keep[p.jump_index] = True
    kept = np.nonzero(keep)[0]
    inc = np.array([p.increments[a:b].sum(axis=0) for a, b in zip(kept[:-1], kept[1:])])
    new_index = np.searchsorted(kept, p.jump_index)
    return DriverPath(p.times[kept], inc, new_index, p.jump_size)


@dataclass(frozen=True, eq=False)
class RolledPath:
    """Sample of a Delta-semimartingale on a manifold.

    ``points[i]`` is X_{t_i} (after any jump at t_i). For the j-th jump,
    ``jump_pre[j]`` is X_{t-}, ``jump_vec[j]`` the jump tangent Delta X at
    X_{t-}. Frames, when present, follow the same convention, and
    ``jump_dw[j]`` keeps the driver coordinates of the frame jump.
    """

    manifold: Manifold
    times: np.ndarray
    points: np.ndarray
    jump_index: np.ndarray = None
    jump_pre: np.ndarray = None
    jump_vec: np.ndarray = None
    frames: np.ndarray = None
    frame_jump_pre: np.ndarray = None
    jump_dw: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.manifold.ambient_dim
        t = np.array(self.times, dtype=float)
        pts = np.array(self.points, dtype=float)
        idx = np.zeros(0, dtype=np.int64) if self.jump_index is None else np.array(self.jump_index, dtype=np.int64).reshape(-1)
        k = len(idx)
        pre = np.zeros((0, n)) if self.jump_pre is None else np.array(self.jump_pre, dtype=float).reshape(k, n)
        vec = np.zeros((0, n)) if self.jump_vec is None else np.array(self.jump_vec, dtype=float).reshape(k, n)
        if pts.shape != (len(t), n):
            raise PathError(f"points must have shape {(len(t), n)}, got {pts.shape}")
        if len(idx) and (np.any(np.diff(idx) <= 0) or idx[0] < 1 or idx[-1] >= len(t)):
            raise PathError("jump indices must be strictly increasing and lie in 1..N")
        for name, a in (("times", t), ("points", pts), ("jump_index", idx), ("jump_pre", pre), ("jump_vec", vec)):
            object.__setattr__(self, name, _freeze(a))
        if self.frames is not None:
            d = self.manifold.dim
            fr = np.array(self.frames, dtype=float).reshape(len(t), n, d)
            object.__setattr__(self, "frames", _freeze(fr))
            fpre = np.zeros((0, n, d)) if self.frame_jump_pre is None else np.array(self.frame_jump_pre, dtype=float).reshape(k, n, d)
            object.__setattr__(self, "frame_jump_pre", _freeze(fpre))
            if self.jump_dw is not None:
                object.__setattr__(self, "jump_dw", _freeze(np.array(self.jump_dw, dtype=float).reshape(k, d)))

    @property
    def has_frames(self) -> bool:
        return self.frames is not None

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    def strip_frames(self) -> "RolledPath":
        return replace(self, frames=None, frame_jump_pre=None, jump_dw=None)

    def left_points(self) -> np.ndarray:
        """X_{t_i-} at every grid time."""
        out = np.array(self.points)
        out[self.jump_index] = self.jump_pre
        return out

    def left_frames(self) -> np.ndarray:
        out = np.array(self.frames)
        out[self.jump_index] = self.frame_jump_pre
        return out

    def jump_vector_array(self) -> np.ndarray:
        out = np.zeros_like(self.points)
        out[self.jump_index] = self.jump_vec
        return out

    def is_jump(self) -> np.ndarray:
        mask = np.zeros(len(self.times), dtype=bool)
        mask[self.jump_index] = True
        return mask


def validate_rolled(p: RolledPath, tol: float = JUMP_TOL) -> CheckReport:
    """Check exp(Delta X) = post-jump point, tangency of jumps and frame integrity."""
    m = p.manifold
    violations = []
    worst = 0.0
    defect = m.constraint_defect(p.points)
    for i in np.nonzero(defect > tol)[0]:
        violations.append(("constraint", int(i), float(defect[i])))
    if len(defect):
        worst = max(worst, float(defect.max()))
    for j, i in enumerate(p.jump_index):
        landed = m.exp(p.jump_pre[j], p.jump_vec[j])
        r = float(np.max(np.abs(landed - p.points[i])))
        worst = max(worst, r)
        if r > tol:
            violations.append(("exp-jump", int(i), r))
        normal = float(np.max(np.abs(p.jump_vec[j] - m.project_tangent(p.jump_pre[j], p.jump_vec[j]))))
        if normal > tol:
            violations.append(("tangency", int(i), normal))
    if p.has_frames:
        od = orthonormality_defect(p.frames)
        td = tangency_defect(m, p.points, p.frames)
        for i in np.nonzero(np.maximum(od, td) > tol)[0]:
            violations.append(("frame", int(i), float(max(od[i], td[i]))))
        if len(p.jump_index):
            od = orthonormality_defect(p.frame_jump_pre)
            td = tangency_defect(m, p.jump_pre, p.frame_jump_pre)
            for j in np.nonzero(np.maximum(od, td) > tol)[0]:
                violations.append(("frame-pre-jump", int(p.jump_index[j]), float(max(od[j], td[j]))))
    return CheckReport("rolled path consistency", not violations, worst, tol, violations)

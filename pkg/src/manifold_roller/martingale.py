"""Martingales on the sphere built from Euclidean local martingales, and a Monte Carlo tester.

With the projection rule eta(x, y) = Pi_x(y - x), a jump of the driver of
length r lands at a point whose eta-vector has length sin(r). A driver W is
therefore turned into the process Z whose jumps are the frame coordinates of
eta(X_-, X), and X is an eta-martingale exactly when Z is a local
martingale. Going the other way, stretching each jump of Z by arcsin gives a
driver whose development is an eta-martingale.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .connection import AmbientProjection, ConnectionRule, default_rule
from .frames import Frame, standard_frame
from .integrals import ito_increments, coordinate_form
from .manifolds import Point, Sphere
from .parallel import CHUNK_SIZE, chunked_map
from .paths import (DriverPath, PathError, RngConfig, RolledPath, compensate, gen_brownian,
                    gen_compound_poisson, superpose, uniform_ball_sampler, uniform_grid)
from .rolling import SchemeConfig, develop, develop_many, frame_inverse_batch

SERIES_CUTOFF = 1e-4


def sphere_f(theta):
    """(sin t - t)/t, zero at t = 0."""
    t = np.asarray(theta, dtype=float)
    if np.any(t < 0):
        raise ValueError("sphere_f needs theta >= 0")
    small = t < SERIES_CUTOFF
    safe = np.where(small, 1.0, t)
    t2 = t * t
    out = np.where(small, -t2 / 6.0 + t2 * t2 / 120.0, (np.sin(safe) - safe) / safe)
    return float(out) if out.ndim == 0 else out


def sphere_g(theta):
    """(arcsin t - t)/t on [0, 1], zero at t = 0."""
    t = np.asarray(theta, dtype=float)
    if np.any(t < 0) or np.any(t > 1):
        raise ValueError("sphere_g is defined on [0, 1]")
    small = t < SERIES_CUTOFF
    safe = np.where(small, 1.0, t)
    t2 = t * t
    out = np.where(small, t2 / 6.0 + 3.0 * t2 * t2 / 40.0, (np.arcsin(safe) - safe) / safe)
    return float(out) if out.ndim == 0 else out


def z_to_driver(Z: DriverPath) -> DriverPath:
    """Replace every jump dZ by dZ (1 + g(|dZ|)), so its length becomes arcsin|dZ|."""
    if not len(Z.jump_index):
        return Z
    r = np.linalg.norm(Z.jump_size, axis=1)
    bad = np.nonzero(r > 1.0)[0]
    if len(bad):
        raise PathError(f"jumps larger than 1 at grid indices {Z.jump_index[bad].tolist()}")
    scale = 1.0 + sphere_g(r)
    return DriverPath(Z.times, Z.increments, Z.jump_index, Z.jump_size * np.atleast_1d(scale)[:, None])


def driver_to_z(W: DriverPath, X: RolledPath, rule: ConnectionRule | None = None) -> DriverPath:
    """Z = W + sum (U_{s-}^{-1} eta(X_{s-}, X_s) - dW_s); continuous part is kept."""
    if not X.has_frames:
        raise PathError("driver_to_z needs the frame path")
    if not (np.array_equal(W.times, X.times) and np.array_equal(W.jump_index, X.jump_index)):
        raise PathError("driver and rolled path do not share grid and jump times")
    m = X.manifold
    rule = (AmbientProjection() if isinstance(m, Sphere) else default_rule(m)) if rule is None else rule
    rule.check_manifold(m)
    if not len(W.jump_index):
        return W
    eta = rule(m, X.jump_pre, X.points[X.jump_index])
    return DriverPath(W.times, W.increments, W.jump_index, frame_inverse_batch(X.frame_jump_pre, eta))


def construct_sphere_martingale(Z: DriverPath, x0: Point, u0: Frame, cfg: SchemeConfig = SchemeConfig()) -> RolledPath:
    if not isinstance(x0.manifold, Sphere):
        raise PathError("the jump correction is specific to the sphere")
    return develop(z_to_driver(Z), x0, u0, cfg)


@dataclass
class MartingaleTestReport:
    names: list
    check_times: list
    means: np.ndarray
    std_errors: np.ndarray
    z_scores: np.ndarray
    z_threshold: float
    n_paths: int
    seed: int
    label: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.all(np.abs(self.z_scores) <= self.z_threshold))

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z_scores)))

    def terminal(self, name):
        k = self.names.index(name)
        return self.means[-1, k], self.std_errors[-1, k], self.z_scores[-1, k]

    def to_dict(self):
        return {
            "label": self.label,
            "passed": self.passed,
            "n_paths": self.n_paths,
            "seed": self.seed,
            "z_threshold": self.z_threshold,
            "check_times": list(self.check_times),
            "functionals": {
                name: {
                    "mean": self.means[:, k].tolist(),
                    "std_error": self.std_errors[:, k].tolist(),
                    "z": self.z_scores[:, k].tolist(),
                }
                for k, name in enumerate(self.names)
            },
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def table(self) -> str:
        head = f"{'functional':>14} {'t':>6} {'mean':>12} {'se':>10} {'z':>8}"
        lines = [f"martingale test {self.label} ({self.n_paths} paths, seed {self.seed}, |z| <= {self.z_threshold})", head]
        for k, name in enumerate(self.names):
            for j, t in enumerate(self.check_times):
                flag = "" if abs(self.z_scores[j, k]) <= self.z_threshold else "  <-- drift"
                lines.append(f"{name:>14} {t:6.3f} {self.means[j, k]:12.4e} {self.std_errors[j, k]:10.3e} "
                             f"{self.z_scores[j, k]:8.3f}{flag}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def values_at(times, values, check_times):
    """Cadlag lookup: the value at the last grid time <= t."""
    pos = np.searchsorted(times, np.asarray(check_times) + 1e-12 * max(1.0, times[-1]), side="right") - 1
    return values[np.clip(pos, 0, len(times) - 1)]


def martingale_test(experiment, n_paths: int, seed: int = 0, z_threshold: float = 4.0,
                    threads: int | None = None, chunk_size: int = CHUNK_SIZE) -> MartingaleTestReport:
    """Sample mean, standard error and z-score of every functional at every check time.

    ``experiment.run(indices, seed)`` returns an array (len(indices), n_check,
    n_functionals); path ``i`` must depend only on (seed, i). Paths are split
    into fixed chunks, so the result does not depend on ``threads``. Means and
    variances are accumulated with compensated summation.
    """
    if n_paths < 100:
        raise ValueError("martingale test needs at least 100 paths")
    parts = chunked_map(lambda c: experiment.run(c, seed), n_paths, threads, chunk_size)
    data = np.concatenate(parts, axis=0)
    n_check, n_fun = data.shape[1:]
    means = np.empty((n_check, n_fun))
    ses = np.empty((n_check, n_fun))
    for j in range(n_check):
        for k in range(n_fun):
            col = data[:, j, k]
            mu = math.fsum(col) / n_paths
            var = math.fsum((col - mu) ** 2) / (n_paths - 1)
            means[j, k] = mu
            ses[j, k] = math.sqrt(var / n_paths)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(ses > 0, means / np.where(ses > 0, ses, 1.0), np.where(means == 0, 0.0, np.inf))
    return MartingaleTestReport(list(experiment.names), list(experiment.check_times), means, ses, z,
                                z_threshold, n_paths, seed, getattr(experiment, "label", ""))


@dataclass
class SphereMartingaleExperiment:
    """Z = sigma * Brownian + compound Poisson (optionally compensated) on R^d.

    Each path is developed onto S^d from the north pole, with the arcsin jump
    correction when ``correct_jumps`` is set. Functionals: the components of
    Z recovered by :func:`driver_to_z`, and the Ito integrals
    int dx^k eta dX of the ambient coordinates, jumps read through eta.
    """

    dim: int = 2
    horizon: float = 1.0
    steps: int = 20
    rate: float = 2.0
    jump_law: object = field(default_factory=lambda: uniform_ball_sampler(1.0))
    sigma: float = 1.0
    compensated: bool = True
    correct_jumps: bool = True
    n_checks: int = 5
    cfg: SchemeConfig = field(default_factory=SchemeConfig)
    label: str = "sphere"

    def __post_init__(self):
        self.manifold = Sphere(self.dim)
        north = np.zeros(self.dim + 1)
        north[-1] = 1.0
        self.x0 = self.manifold.point(north)
        self.u0 = standard_frame(self.x0)
        self.rule = AmbientProjection()
        self.grid = uniform_grid(self.horizon, self.steps)
        self.check_times = [self.horizon * (k + 1) / self.n_checks for k in range(self.n_checks)]
        self.names = [f"Z{k + 1}" for k in range(self.dim)] + [f"ito_x{k + 1}" for k in range(self.dim + 1)]
        self.forms = [coordinate_form(self.manifold, k) for k in range(self.dim + 1)]

    def driver_pair(self, seed, index):
        """(Z, W) for one path; both depend only on (seed, index)."""
        g = RngConfig(seed, index).generator()
        jumps = gen_compound_poisson(self.grid, self.dim, self.rate, self.jump_law, g)
        if self.compensated:
            jumps = compensate(jumps, self.rate * np.asarray(self.jump_law.mean(self.dim)))
        Z = superpose(gen_brownian(jumps.times, self.dim, g, self.sigma), jumps)
        W = z_to_driver(Z) if self.correct_jumps else Z
        return Z, W

    def functionals(self, W: DriverPath, X: RolledPath) -> np.ndarray:
        zr = driver_to_z(W, X, self.rule).right_values
        cols = [zr]
        for form in self.forms:
            cont, jumps = ito_increments(form, X, self.rule, jumps="rule")
            inc = np.zeros(len(X.times))
            inc[1:] = cont
            inc[X.jump_index] += jumps
            cols.append(np.cumsum(inc)[:, None])
        return values_at(X.times, np.hstack(cols), self.check_times)

    def run(self, indices, seed):
        drivers = [self.driver_pair(seed, int(i))[1] for i in indices]
        rolled = develop_many(drivers, self.x0, self.u0, self.cfg)
        return np.stack([self.functionals(W, X) for W, X in zip(drivers, rolled)])


@dataclass
class FlatBrownianExperiment:
    """Brownian motion in R^d; the functionals are its components."""

    dim: int = 2
    horizon: float = 1.0
    steps: int = 10
    n_checks: int = 5
    label: str = "flat-brownian"

    def __post_init__(self):
        self.grid = uniform_grid(self.horizon, self.steps)
        self.check_times = [self.horizon * (k + 1) / self.n_checks for k in range(self.n_checks)]
        self.names = [f"W{k + 1}" for k in range(self.dim)]

    def run(self, indices, seed):
        out = []
        for i in indices:
            W = gen_brownian(self.grid, self.dim, RngConfig(seed, int(i)))
            out.append(values_at(W.times, W.right_values, self.check_times))
        return np.stack(out)

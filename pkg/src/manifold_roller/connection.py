"""Connection rules: maps (x, y) -> gamma(x, y) in T_xM.

A rule fixes which tangent vector represents the displacement from x to y.
Riemann sums of stochastic integrals are built from it, and jump
directions are read through it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .checks import CheckReport
from .manifolds import (CutLocusPolicy, Flat, GeometryError, Manifold, Point,
                        Tangent, sinc)


@dataclass(frozen=True)
class ConnectionRule:
    def __call__(self, manifold: Manifold, x, y):
        """Array-level evaluation; broadcasts over leading axes."""
        raise NotImplementedError

    def supports(self, manifold: Manifold) -> bool:
        return True

    def check_manifold(self, manifold: Manifold):
        if not self.supports(manifold):
            raise GeometryError(f"{self.label} is not defined on {manifold.name}")

    @property
    def label(self) -> str:
        raise NotImplementedError

    @property
    def is_minimal_geodesic(self) -> bool:
        """True when the rule belongs to C_g (its value reaches y along a minimal geodesic)."""
        return False


@dataclass(frozen=True)
class EuclideanDiff(ConnectionRule):
    """gamma(x, y) = y - x; only meaningful on flat space."""

    def __call__(self, manifold, x, y):
        return np.asarray(y, dtype=float) - x

    def supports(self, manifold):
        return isinstance(manifold, Flat)

    @property
    def label(self):
        return "euclid"

    @property
    def is_minimal_geodesic(self):
        return True


@dataclass(frozen=True)
class AmbientProjection(ConnectionRule):
    """gamma(x, y) = Pi_x(y - x), the tangential part of the ambient chord."""

    def __call__(self, manifold, x, y):
        x = np.asarray(x, dtype=float)
        return manifold.project_tangent(x, np.asarray(y, dtype=float) - x)

    @property
    def label(self):
        return "proj"


@dataclass(frozen=True)
class GeodesicLog(ConnectionRule):
    """gamma(x, y) = initial velocity of a minimal geodesic; ties broken by ``policy``."""

    policy: CutLocusPolicy = CutLocusPolicy.FIRST_BASIS

    def __call__(self, manifold, x, y):
        return manifold.log(x, y, self.policy)

    @property
    def label(self):
        return "geo"

    @property
    def is_minimal_geodesic(self):
        return True


RULES = {"euclid": EuclideanDiff, "proj": AmbientProjection, "geo": GeodesicLog}


def parse_rule(text: str) -> ConnectionRule:
    try:
        return RULES[str(text).strip().lower()]()
    except KeyError:
        raise GeometryError(f"unknown rule {text!r}; expected one of {sorted(RULES)}") from None


def default_rule(manifold: Manifold) -> ConnectionRule:
    return EuclideanDiff() if isinstance(manifold, Flat) else AmbientProjection()


def apply_rule(rule: ConnectionRule, x: Point, y: Point) -> Tangent:
    if x.manifold != y.manifold:
        raise GeometryError("points live on different manifolds")
    rule.check_manifold(x.manifold)
    return Tangent(x, rule(x.manifold, x.coords, y.coords))


def check_rule_axioms(rule: ConnectionRule, manifold: Manifold, samples, step=1e-6, tol=1e-5) -> CheckReport:
    """Verify tangency, gamma(x, x) = 0 and d gamma(x, .)_x = id at each sample point.

    The differential is estimated by central differences along exp_x(+-step b)
    for an orthonormal tangent basis b.
    """
    rule.check_manifold(manifold)
    violations = []
    worst = 0.0
    for i, x in enumerate(samples):
        x = np.asarray(x.coords if isinstance(x, Point) else x, dtype=float)
        g0 = rule(manifold, x, x)
        e = float(np.linalg.norm(g0))
        worst = max(worst, e)
        if e > tol:
            violations.append(f"sample {i}: |gamma(x,x)| = {e:.3e}")
        basis = manifold.tangent_basis(x)
        for j in range(basis.shape[1]):
            b = basis[:, j]
            yp = manifold.exp(x, step * b)
            ym = manifold.exp(x, -step * b)
            gp = rule(manifold, x, yp)
            gm = rule(manifold, x, ym)
            normal = max(np.linalg.norm(gp - manifold.project_tangent(x, gp)),
                         np.linalg.norm(gm - manifold.project_tangent(x, gm)))
            worst = max(worst, normal)
            if normal > tol:
                violations.append(f"sample {i}: gamma(x,y) leaves T_xM by {normal:.3e}")
            deriv = (gp - gm) / (2 * step)
            e = float(np.linalg.norm(deriv - b))
            worst = max(worst, e)
            if e > tol:
                violations.append(f"sample {i}, direction {j}: |d gamma - id| = {e:.3e}")
    return CheckReport(f"rule axioms ({rule.label} on {manifold.name})", not violations,
                       worst, tol, violations)


def projection_vs_geodesic_angle(jump_norm: float) -> float:
    """Factor sin(t)/t relating the projection rule's jump vector to the geodesic one.

    On the sphere, a jump along a geodesic of length t from x lands at y with
    Pi_x(y - x) = sin(t)/t * (geodesic jump vector).
    """
    if not 0.0 <= jump_norm < np.pi:
        raise ValueError(f"jump norm must lie in [0, pi), got {jump_norm}")
    return float(sinc(jump_norm))

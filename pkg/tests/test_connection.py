import numpy as np
import pytest

from manifold_roller import (AmbientProjection, EuclideanDiff, Flat, GeodesicLog, GeometryError, Sphere,
                             apply_rule, check_rule_axioms, default_rule, parse_rule,
                             projection_vs_geodesic_angle)


def sample_points(m, k=6, seed=0):
    g = np.random.default_rng(seed)
    return [m.random_point(g) for _ in range(k)]


@pytest.mark.parametrize("rule", [AmbientProjection(), GeodesicLog()])
def test_rules_satisfy_axioms_on_sphere(rule):
    for m in (Sphere(2), Sphere(3)):
        rep = check_rule_axioms(rule, m, sample_points(m))
        assert rep.passed, rep.violations


@pytest.mark.parametrize("rule", [EuclideanDiff(), AmbientProjection(), GeodesicLog()])
def test_rules_on_flat_space_are_the_difference(rule):
    m = Flat(3)
    x, y = np.array([1.0, -2.0, 0.5]), np.array([0.0, 4.0, 1.5])
    np.testing.assert_allclose(rule(m, x, y), y - x, atol=1e-15)
    assert check_rule_axioms(rule, m, sample_points(m)).passed


def test_euclidean_difference_is_refused_on_sphere():
    with pytest.raises(GeometryError):
        EuclideanDiff().check_manifold(Sphere(2))


def test_projection_is_shortened_geodesic_vector():
    m = Sphere(2)
    x = np.array([0.0, 0.0, 1.0])
    for th in (1e-6, 0.3, 1.0, 2.5):
        y = np.array([np.sin(th), 0.0, np.cos(th)])
        geo = GeodesicLog()(m, x, y)
        proj = AmbientProjection()(m, x, y)
        np.testing.assert_allclose(geo, [th, 0, 0], atol=1e-13)
        np.testing.assert_allclose(proj, projection_vs_geodesic_angle(th) * geo, atol=1e-15)
        assert abs(proj[0] - np.sin(th)) < 1e-15


def test_angle_factor_domain():
    assert projection_vs_geodesic_angle(0.0) == 1.0
    with pytest.raises(ValueError):
        projection_vs_geodesic_angle(np.pi)


def test_projection_rule_collapses_at_antipode_while_log_does_not():
    m = Sphere(2)
    x = np.array([0.0, 0.0, 1.0])
    assert np.linalg.norm(AmbientProjection()(m, x, -x)) < 1e-15
    assert abs(np.linalg.norm(GeodesicLog()(m, x, -x)) - np.pi) < 1e-12


def test_parse_and_default_rules():
    assert isinstance(parse_rule("proj"), AmbientProjection)
    assert isinstance(parse_rule("GEO"), GeodesicLog)
    assert isinstance(default_rule(Flat(2)), EuclideanDiff)
    assert isinstance(default_rule(Sphere(2)), AmbientProjection)
    assert GeodesicLog().is_minimal_geodesic and not AmbientProjection().is_minimal_geodesic
    with pytest.raises(GeometryError):
        parse_rule("spline")


def test_apply_rule_returns_tangent_at_first_point():
    m = Sphere(2)
    x, y = m.point([0.0, 0.0, 1.0]), m.point([0.6, 0.0, 0.8])
    t = apply_rule(GeodesicLog(), x, y)
    assert t.base is x
    assert abs(np.linalg.norm(t.vec) - np.arccos(0.8)) < 1e-15

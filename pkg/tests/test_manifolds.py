import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from manifold_roller import (CutLocusPolicy, Flat, GeometryError, Point, Sphere, Tangent, distance, exp_map,
                             log_map, metric, parallel_transport, parse_manifold, project_to_manifold)
from manifold_roller.manifolds import cosc, sinc

angles = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


def test_sinc_and_cosc_series_match_closed_form_near_cutoff():
    t = np.array([0.0, 1e-8, 0.99e-4, 1.01e-4, 0.3])
    np.testing.assert_allclose(sinc(t), np.where(t == 0, 1.0, np.sin(t) / np.where(t == 0, 1, t)), rtol=1e-15)
    # cosc(t) = (1 - cos t)/t^2
    ref = (1 - np.cos(0.3)) / 0.09
    assert abs(cosc(0.3) - ref) < 1e-14
    assert abs(cosc(1e-5) - (0.5 - 1e-10 / 24)) < 1e-16
    assert abs(cosc(0.99e-4) - cosc(1.01e-4)) < 1e-9


def test_sphere_exp_moves_along_great_circle():
    m = Sphere(2)
    x = np.array([0.0, 0.0, 1.0])
    v = np.array([np.pi / 2, 0.0, 0.0])
    np.testing.assert_allclose(m.exp(x, v), [1.0, 0.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(m.exp(x, 2 * v), [0.0, 0.0, -1.0], atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(1e-9, 3.0))
def test_log_inverts_exp_inside_injectivity_radius(seed, r):
    g = np.random.default_rng(seed)
    for m in (Sphere(2), Sphere(3)):
        x = m.random_point(g)
        v = m.random_tangent(x, g)
        v *= r / np.linalg.norm(v)
        y = m.exp(x, v)
        np.testing.assert_allclose(m.log(x, y), v, atol=2e-9 * max(1, 1 / (np.pi - r)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_transport_is_an_isometry_and_keeps_tangency(seed):
    g = np.random.default_rng(seed)
    m = Sphere(2)
    x = m.random_point(g)
    v = 2.5 * m.random_tangent(x, g)
    a, b = m.random_tangent(x, g), m.random_tangent(x, g)
    y = m.exp(x, v)
    ta, tb = m.transport(x, v, a), m.transport(x, v, b)
    assert abs(np.dot(ta, tb) - np.dot(a, b)) < 1e-12
    assert abs(np.dot(ta, y)) < 1e-12


def test_transport_of_velocity_is_geodesic_velocity():
    # d/dt exp_x(t v) at t = 1 is -|v| sin|v| x + cos|v| v
    m = Sphere(2)
    x = np.array([1.0, 0.0, 0.0])
    v = np.array([0.0, 0.7, 0.2])
    th = np.linalg.norm(v)
    expected = -th * np.sin(th) * x + np.cos(th) * v
    np.testing.assert_allclose(m.transport(x, v, v), expected, atol=1e-15)
    np.testing.assert_allclose(m.geodesic_velocity(x, v), expected, atol=1e-15)


def test_antipodal_log_uses_first_basis_tie_break():
    m = Sphere(2)
    x = np.array([0.0, 0.0, 1.0])
    v = m.log(x, -x)
    np.testing.assert_allclose(v, [np.pi, 0.0, 0.0], atol=1e-12)
    # e_1 is normal at +-e_1, so the fallback is e_2
    w = m.log(np.array([1.0, 0.0, 0.0]), np.array([-1.0, 0.0, 0.0]))
    np.testing.assert_allclose(w, [0.0, np.pi, 0.0], atol=1e-12)
    assert m.cut_direction(x, CutLocusPolicy.FIRST_BASIS) @ x == 0


def test_flat_geometry_is_linear():
    m = Flat(3)
    x, v = np.array([1.0, 2.0, 3.0]), np.array([-0.5, 0.25, 4.0])
    assert np.array_equal(m.exp(x, v), x + v)
    assert np.array_equal(m.log(x, x + v), (x + v) - x)
    assert np.array_equal(m.transport(x, v, v), v)
    assert np.all(m.weingarten(x, v) == 0)


def test_weingarten_form_on_sphere():
    m = Sphere(2)
    x = np.array([0.0, 0.6, 0.8])
    a = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(m.weingarten(x, a), -(a @ x) * np.eye(3))


def test_typed_wrappers_and_validation():
    m = Sphere(2)
    x = m.point([0.0, 0.0, 1.0])
    v = m.tangent(x.coords, [0.3, 0.4, 0.0])
    y = exp_map(v)
    assert isinstance(y, Point)
    np.testing.assert_allclose(log_map(x, y).vec, v.vec, atol=1e-15)
    assert abs(distance(x, y) - 0.5) < 1e-15
    assert abs(metric(v, v) - 0.25) < 1e-15
    w = parallel_transport(v, v)
    assert abs(np.linalg.norm(w.vec) - 0.5) < 1e-15
    with pytest.raises(GeometryError):
        m.point([0.0, 0.0, 1.1])
    with pytest.raises(GeometryError):
        Tangent(x, [0.0, 0.0, 1.0])
    p = project_to_manifold([0.0, 0.0, 2.0], m)
    assert np.array_equal(p.coords, [0.0, 0.0, 1.0])


@pytest.mark.parametrize("text,kind,dim", [("flat:3", Flat, 3), ("sphere:2", Sphere, 2), (" Sphere:4 ", Sphere, 4)])
def test_parse_manifold(text, kind, dim):
    m = parse_manifold(text)
    assert isinstance(m, kind) and m.dim == dim


@pytest.mark.parametrize("text", ["torus:2", "sphere", "flat:0", "sphere:x"])
def test_parse_manifold_rejects(text):
    with pytest.raises((GeometryError, ValueError)):
        parse_manifold(text)


def test_batched_exp_matches_single_calls():
    m = Sphere(3)
    g = np.random.default_rng(1)
    x = np.stack([m.random_point(g) for _ in range(5)])
    v = np.stack([m.random_tangent(p, g) for p in x])
    batch = m.exp(x, v)
    for k in range(5):
        np.testing.assert_allclose(batch[k], m.exp(x[k], v[k]), atol=1e-15)

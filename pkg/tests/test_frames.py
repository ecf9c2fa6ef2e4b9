import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from manifold_roller import (Frame, GeometryError, OrthogonalMatrix, Sphere, equivariance_check, frame_apply,
                             frame_inverse, orthogonal_from_frames, right_action, standard_frame, transport_frame)
from manifold_roller.frames import orthonormality_defect, reorthonormalize


def test_standard_frame_is_orthonormal_and_tangent():
    m = Sphere(3)
    x = m.point([0.5, 0.5, 0.5, 0.5])
    u = standard_frame(x)
    assert orthonormality_defect(u.columns) < 1e-15
    assert np.max(np.abs(x.coords @ u.columns)) < 1e-15


def test_frame_rejects_bad_columns():
    m = Sphere(2)
    x = m.point([0.0, 0.0, 1.0])
    with pytest.raises(GeometryError):
        Frame(x, [[1.0, 0.0], [0.0, 1.0], [0.0, 0.1]])
    with pytest.raises(GeometryError):
        Frame(x, [[1.0, 1.0], [0.0, 0.0], [0.0, 0.0]])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_frame_inverse_undoes_frame_apply(seed):
    g = np.random.default_rng(seed)
    m = Sphere(2)
    x = m.point(m.random_point(g))
    u = right_action(standard_frame(x), OrthogonalMatrix.random(2, g))
    w = g.standard_normal(2)
    np.testing.assert_allclose(frame_inverse(u, frame_apply(u, w)), w, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 3.0))
def test_transport_commutes_with_right_action(seed, r):
    g = np.random.default_rng(seed)
    m = Sphere(2)
    x = m.point(m.random_point(g))
    v = m.random_tangent(x.coords, g)
    v = m.tangent(x.coords, r * v / np.linalg.norm(v))
    rep = equivariance_check(standard_frame(x), v, OrthogonalMatrix.random(2, g))
    assert rep.passed, rep.line()


def test_octant_transport_rotates_frame_a_quarter_turn():
    # hand calculation: the loop bounds area pi/2, so u_end = u0 [[0, -1], [1, 0]]
    m = Sphere(2)
    u0 = standard_frame(m.point([1.0, 0.0, 0.0]))
    u = u0
    for y in ([0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]):
        x = u.base.coords
        u = transport_frame(u, m.tangent(x, m.log(x, np.array(y))))
    np.testing.assert_allclose(u.columns, u0.columns @ np.array([[0.0, -1.0], [1.0, 0.0]]), atol=1e-14)


def test_orthogonal_from_frames_recovers_group_element():
    g = np.random.default_rng(3)
    m = Sphere(3)
    u = standard_frame(m.point(m.random_point(g)))
    a = OrthogonalMatrix.random(3, g)
    b = orthogonal_from_frames(u, right_action(u, a))
    np.testing.assert_allclose(b.entries, a.entries, atol=1e-14)
    np.testing.assert_allclose((a @ a.inverse).entries, np.eye(3), atol=1e-15)


def test_reorthonormalize_repairs_perturbed_batch():
    g = np.random.default_rng(0)
    m = Sphere(2)
    x = np.stack([m.random_point(g) for _ in range(4)])
    cols = np.stack([m.tangent_basis(p) for p in x]) + 1e-6 * g.standard_normal((4, 3, 2))
    fixed = reorthonormalize(m, x, cols)
    assert np.all(orthonormality_defect(fixed) < 1e-15)
    assert np.max(np.abs(np.einsum("bi,bij->bj", x, fixed))) < 1e-15


def test_rotation_matrix_validation():
    r = OrthogonalMatrix.rotation(2, np.pi / 3)
    assert abs(r.entries[1, 0] - np.sin(np.pi / 3)) < 1e-16
    with pytest.raises(GeometryError):
        OrthogonalMatrix([[1.0, 0.1], [0.0, 1.0]])

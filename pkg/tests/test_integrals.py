import math

import numpy as np
import pytest

from manifold_roller import (AmbientProjection, Flat, GeodesicLog, OneFormProcess, RngConfig, ScalarField,
                             Sphere, TwoTensorProcess, coordinate_form, coordinate_patch_check, develop,
                             exact_form, gen_brownian, gen_compound_poisson, hemisphere_chart, ito_integral,
                             metric_tensor, polarization_symmetry, product_rule_check, quadratic_variation,
                             rule_independence_check, standard_frame, stratonovich_integral, superpose,
                             uniform_ball_sampler, uniform_grid)
from manifold_roller.integrals import (coordinate_function, fd_covariant, ito_increments, midpoint_sum,
                                       terminal)

from conftest import north

S2 = Sphere(2)
RULES = [AmbientProjection(), GeodesicLog()]


def s2_path(steps, seed=1, sigma=0.5, rate=3.0, radius=0.5):
    p = gen_compound_poisson(uniform_grid(1.0, steps), 2, rate, uniform_ball_sampler(radius), RngConfig(seed, 1))
    W = superpose(gen_brownian(p.times, 2, RngConfig(seed, 2), sigma), p)
    x0 = north(S2)
    return develop(W, x0, standard_frame(x0))


def rotation_field(x):
    x = np.asarray(x)
    return np.stack([x[..., 1], -x[..., 0], x[..., 0] * x[..., 2]], axis=-1)


def quadratic_function():
    # f = x0 x2 + x1^2
    def value(x):
        return x[..., 0] * x[..., 2] + x[..., 1] ** 2

    def grad(x):
        return np.stack([x[..., 2], 2 * x[..., 1], x[..., 0]], axis=-1)

    def hess(x):
        h = np.array([[0.0, 0.0, 1.0], [0.0, 2.0, 0.0], [1.0, 0.0, 0.0]])
        return np.broadcast_to(h, np.shape(x) + (3,))

    return ScalarField(value, grad, hess)


def ito_formula_residual(X, rule, k=2):
    """Ito integral of dx^k against f(X_T) - f(X_0) - 1/2 int Hess d[X,X]^c - jump corrections."""
    dz = coordinate_form(S2, k)
    ito = terminal(ito_integral(dz, X, rule))
    hess = quadratic_variation(TwoTensorProcess(lambda i, x: dz.covariant(x), True), X, rule).continuous[-1]
    jumps = math.fsum(X.points[i][k] - X.jump_pre[j][k] - X.jump_vec[j][k] for j, i in enumerate(X.jump_index))
    return ito - (X.points[-1][k] - X.points[0][k] - 0.5 * hess - jumps)


@pytest.mark.parametrize("rule", RULES)
def test_ito_formula_holds_to_first_order(rule):
    res = [abs(ito_formula_residual(s2_path(n), rule)) for n in (100, 400, 1600)]
    for n, r in zip((100, 400, 1600), res):
        assert r < 0.5 / n
    assert res[-1] < res[0]


@pytest.mark.parametrize("rule", RULES)
def test_stratonovich_integral_of_exact_form_telescopes(rule):
    X = s2_path(800)
    st = terminal(stratonovich_integral(coordinate_form(S2, 2), X, rule))
    jumps = math.fsum(X.points[i][2] - X.jump_pre[j][2] - X.jump_vec[j][2] for j, i in enumerate(X.jump_index))
    assert abs(st - (X.points[-1][2] - X.points[0][2] - jumps)) < 1e-3


def test_finite_difference_covariant_matches_exact_on_tangent_vectors():
    g = np.random.default_rng(0)
    f = quadratic_function()
    exact = exact_form(S2, f)
    fd = fd_covariant(S2, OneFormProcess.from_field(f.gradient))
    for _ in range(5):
        x = S2.random_point(g)
        v, w = S2.random_tangent(x, g), S2.random_tangent(x, g)
        assert abs(v @ exact.covariant(x) @ w - v @ fd(x) @ w) < 1e-8


def test_stratonovich_fd_fallback_agrees_with_exact_covariant():
    X = s2_path(300)
    f = quadratic_function()
    a = terminal(stratonovich_integral(exact_form(S2, f), X))
    b = terminal(stratonovich_integral(OneFormProcess.from_field(f.gradient), X))
    assert abs(a - b) < 1e-8


def test_missing_covariant_without_fallback_raises():
    X = s2_path(20)
    with pytest.raises(ValueError):
        stratonovich_integral(OneFormProcess.from_field(rotation_field), X, fd_fallback=False)


def test_midpoint_sum_converges_to_stratonovich_integral():
    alpha = OneFormProcess.from_field(rotation_field)
    diffs = []
    for n in (100, 400, 1600):
        X = s2_path(n)
        diffs.append(abs(midpoint_sum(alpha, X) - terminal(stratonovich_integral(alpha, X))))
    assert diffs[-1] < 1e-4 and diffs[-1] < diffs[0] / 4


def test_product_rule_within_first_order():
    alpha = OneFormProcess.from_field(rotation_field)
    for n in (200, 800):
        X = s2_path(n, seed=3)
        for f in (coordinate_function(2, 3), coordinate_function(0, 3)):
            rep = product_rule_check(f, alpha, X, tol=1.0 / n)
            assert rep.passed, rep.line()


def test_coordinate_patch_identity_in_upper_hemisphere():
    alpha = OneFormProcess.from_field(rotation_field)
    for n in (200, 800):
        X = s2_path(n, seed=2, sigma=0.2, rate=2.0, radius=0.3)
        rep = coordinate_patch_check(alpha, X, hemisphere_chart(S2), tol=1.0 / n)
        assert rep.passed, rep.line()


def test_polarization_is_symmetric():
    X = s2_path(500)
    phi = coordinate_form(S2, 0)
    psi = OneFormProcess.from_field(rotation_field)
    a, b, direct = polarization_symmetry(phi, psi, X)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))
    assert abs(a - direct) <= 1e-12 * max(1.0, abs(a))


def test_flat_quadratic_variation_is_realized_variation():
    m = Flat(2)
    x0 = m.point([0.0, 0.0])
    p = gen_compound_poisson(uniform_grid(1.0, 200), 2, 4.0, uniform_ball_sampler(), RngConfig(0))
    W = superpose(gen_brownian(p.times, 2, RngConfig(1)), p)
    X = develop(W, x0, standard_frame(x0))
    qv = quadratic_variation(metric_tensor(m), X)
    assert abs(qv.total - W.realized_qv()) < 1e-12


def test_sphere_quadratic_variation_matches_driver():
    X = s2_path(1000, sigma=1.0)
    W_qv = float(np.sum(X.jump_dw ** 2))
    qv = quadratic_variation(metric_tensor(S2), X)
    assert abs(qv.jump[-1] - W_qv) < 1e-12
    assert qv.full[-1] == pytest.approx(qv.total, abs=1e-12)


def test_rule_independence_on_several_paths():
    paths = [s2_path(400, seed=s) for s in range(6)]
    rep = rule_independence_check(coordinate_form(S2, 0), paths, RULES)
    assert rep.passed, rep.violations


def test_rule_reading_of_jumps():
    X = s2_path(100, rate=5.0, radius=1.0)
    phi = coordinate_form(S2, 1)
    _, designated = ito_increments(phi, X, AmbientProjection())
    _, read = ito_increments(phi, X, AmbientProjection(), jumps="rule")
    eta = AmbientProjection()(S2, X.jump_pre, X.points[X.jump_index])
    np.testing.assert_allclose(designated, X.jump_vec[:, 1], atol=1e-15)
    np.testing.assert_allclose(read, eta[:, 1], atol=1e-15)
    with pytest.raises(ValueError):
        ito_increments(phi, X, jumps="chord")


def test_pointwise_evaluator_matches_vectorized():
    X = s2_path(50)
    vec = OneFormProcess.from_field(rotation_field)
    loop = OneFormProcess(lambda i, x: rotation_field(x))
    assert terminal(ito_integral(vec, X)) == pytest.approx(terminal(ito_integral(loop, X)), abs=1e-14)

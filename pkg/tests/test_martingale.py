import json

import numpy as np
import pytest

from manifold_roller import (DriverPath, Flat, PathError, Sphere, develop, driver_to_z, half_ball_sampler,
                             martingale_test, sphere_f, sphere_g, standard_frame, z_to_driver)
from manifold_roller.martingale import FlatBrownianExperiment, SphereMartingaleExperiment, values_at

from conftest import mixed_driver, north


def test_transform_values_by_hand():
    assert abs(sphere_f(np.pi / 2) - (2 / np.pi - 1)) < 1e-12
    assert abs(sphere_g(1.0) - (np.pi / 2 - 1)) < 1e-12
    assert sphere_f(0.0) == 0.0 and sphere_g(0.0) == 0.0


def test_transform_series_branch_is_continuous():
    for fn in (sphere_f, sphere_g):
        lo, hi = fn(0.999e-4), fn(1.001e-4)
        assert abs(lo - hi) < 1e-11
    assert abs(sphere_f(1e-3) - (np.sin(1e-3) - 1e-3) / 1e-3) < 1e-15


def test_g_undoes_f():
    # (1 + f)(arcsin r) * arcsin r = r, i.e. sin(arcsin r) = r
    r = np.linspace(0.01, 1.0, 50)
    th = r * (1 + sphere_g(r))
    np.testing.assert_allclose(th * (1 + sphere_f(th)), r, atol=1e-15)


def test_transform_domains():
    with pytest.raises(ValueError):
        sphere_g(1.01)
    with pytest.raises(ValueError):
        sphere_f(-0.1)


def test_z_to_driver_rejects_large_jumps():
    Z = DriverPath([0.0, 1.0], [[0.0, 0.0]], [1], [[1.2, 0.0]])
    with pytest.raises(PathError):
        z_to_driver(Z)


def test_quarter_circle_jump_recovers_unit_z_jump():
    m = Sphere(2)
    x0 = north(m)
    W = DriverPath([0.0, 1.0], [[0.0, 0.0]], [1], [[np.pi / 2, 0.0]])
    X = develop(W, x0, standard_frame(x0))
    Z = driver_to_z(W, X)
    np.testing.assert_allclose(Z.jump_size, [[1.0, 0.0]], atol=1e-15)


def test_round_trip_through_development():
    m = Sphere(2)
    x0 = north(m)
    Z = mixed_driver(2, 200, seed=6, rate=8.0, radius=1.0)
    W = z_to_driver(Z)
    X = develop(W, x0, standard_frame(x0))
    back = driver_to_z(W, X)
    assert np.max(np.abs(back.jump_size - Z.jump_size)) < 1e-9
    assert np.array_equal(back.increments, Z.increments)
    # the projection vector of each jump has length sin|dW|
    eta = np.linalg.norm(back.jump_size, axis=1)
    np.testing.assert_allclose(eta, np.sin(np.linalg.norm(W.jump_size, axis=1)), atol=1e-12)


def test_flat_driver_to_z_is_identity():
    m = Flat(2)
    x0 = m.point([0.0, 0.0])
    W = mixed_driver(2, 50, seed=1)
    X = develop(W, x0, standard_frame(x0))
    np.testing.assert_allclose(driver_to_z(W, X).jump_size, W.jump_size, atol=1e-15)


def test_values_at_is_right_continuous():
    t = np.array([0.0, 0.5, 1.0])
    v = np.array([[0.0], [1.0], [2.0]])
    np.testing.assert_array_equal(values_at(t, v, [0.25, 0.5, 1.0])[:, 0], [0.0, 1.0, 2.0])


def test_flat_brownian_passes_and_report_formats():
    rep = martingale_test(FlatBrownianExperiment(), 2000, seed=3, threads=1)
    assert rep.passed
    d = json.loads(rep.to_json())
    assert set(d["functionals"]) == {"W1", "W2"}
    assert len(d["check_times"]) == 5
    assert rep.table().splitlines()[-1] == "PASS"


def test_small_sphere_experiment_positive_and_negative():
    ok = martingale_test(SphereMartingaleExperiment(steps=10), 2000, seed=4, threads=1)
    assert ok.passed, ok.table()
    bad = martingale_test(SphereMartingaleExperiment(steps=10, jump_law=half_ball_sampler(1.0), compensated=False),
                          2000, seed=4, threads=1)
    assert not bad.passed
    assert bad.terminal("Z1")[2] > 10


def test_result_does_not_depend_on_thread_count():
    exp = SphereMartingaleExperiment(steps=5)
    a = martingale_test(exp, 600, seed=2, threads=1, chunk_size=128)
    b = martingale_test(exp, 600, seed=2, threads=3, chunk_size=128)
    assert np.array_equal(a.means, b.means) and np.array_equal(a.std_errors, b.std_errors)


def test_too_few_paths_rejected():
    with pytest.raises(ValueError):
        martingale_test(FlatBrownianExperiment(), 10)

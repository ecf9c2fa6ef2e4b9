import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from manifold_roller import (DriverPath, PathError, RngConfig, RolledPath, Sphere, coarsen, compensate,
                             gen_brownian, gen_compound_poisson, half_ball_sampler, refine, superpose,
                             uniform_ball_sampler, uniform_grid, validate_rolled)
from manifold_roller.paths import linear_path, zero_path

from conftest import mixed_driver


def test_same_seed_and_stream_give_identical_draws():
    a = RngConfig(7, 3).generator().standard_normal(5)
    b = RngConfig(7, 3).generator().standard_normal(5)
    c = RngConfig(7, 4).generator().standard_normal(5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    assert RngConfig(7).child(0) != RngConfig(7).child(1)


def test_driver_values_and_left_limits():
    W = DriverPath([0.0, 0.5, 1.0], [[1.0], [2.0]], [1], [[10.0]])
    np.testing.assert_array_equal(W.right_values[:, 0], [0.0, 11.0, 13.0])
    np.testing.assert_array_equal(W.values[:, 0], [0.0, 1.0, 13.0])
    assert W.value_at(0.7)[0] == 11.0
    vec, is_jump, grid = W.moves()
    np.testing.assert_array_equal(vec[:, 0], [1.0, 10.0, 2.0])
    np.testing.assert_array_equal(is_jump, [False, True, False])
    assert W.realized_qv() == 105.0


@pytest.mark.parametrize("kwargs", [
    dict(times=[0.0, 1.0, 0.5], increments=[[0.0], [0.0]]),
    dict(times=[0.1, 1.0], increments=[[0.0]]),
    dict(times=[0.0, 1.0], increments=[[0.0], [1.0]]),
    dict(times=[0.0, 1.0], increments=[[0.0]], jump_index=[0], jump_size=[[1.0]]),
])
def test_driver_validation(kwargs):
    with pytest.raises(PathError):
        DriverPath(**kwargs)


def test_compound_poisson_inserts_jump_times_exactly():
    grid = uniform_grid(1.0, 10)
    p = gen_compound_poisson(grid, 2, 20.0, uniform_ball_sampler(0.5), RngConfig(1).generator())
    assert set(grid).issubset(set(p.times))
    assert len(p.times) == 11 + len(p.jump_index)
    assert np.all(np.linalg.norm(p.jump_size, axis=1) <= 0.5)
    assert np.all(p.increments == 0)


def test_poisson_count_has_rate_times_horizon_mean():
    counts = [len(gen_compound_poisson(uniform_grid(2.0, 4), 1, 3.0, uniform_ball_sampler(), RngConfig(s))
                  .jump_index) for s in range(2000)]
    assert abs(np.mean(counts) - 6.0) < 4 * np.sqrt(6.0 / 2000)


@pytest.mark.parametrize("d", [1, 2, 3, 5])
def test_half_ball_mean_matches_sampling(d):
    law = half_ball_sampler(0.8)
    x = law(np.random.default_rng(d), 200_000, d)
    np.testing.assert_allclose(x.mean(axis=0), law.mean(d), atol=5e-3)
    assert np.all(uniform_ball_sampler().mean(d) == 0)


def test_half_ball_mean_in_two_dimensions_by_hand():
    # E|x_1| over the unit disc half: (2/3) * (2/pi)
    assert abs(half_ball_sampler(1.0).mean(2)[0] - 4 / (3 * np.pi)) < 1e-15


def test_superpose_adds_values_on_union_grid():
    a = linear_path(uniform_grid(1.0, 4), [1.0, 0.0])
    b = DriverPath([0.0, 0.3, 1.0], [[0.0, 1.0], [0.0, 2.0]], [1], [[0.5, 0.5]])
    s = superpose(a, b)
    assert len(s.times) == 6
    # a(0.3) = (0.3, 0) by linear interpolation, b(0.3) = (0.5, 1.5) after its jump
    np.testing.assert_allclose(s.value_at(0.3), [0.8, 1.5], atol=1e-15)
    np.testing.assert_allclose(s.right_values[-1], [1.0 + 0.5, 3.0 + 0.5], atol=1e-15)


def test_compensate_subtracts_linear_drift():
    W = compensate(zero_path(uniform_grid(2.0, 4), 2), [1.0, -2.0])
    np.testing.assert_allclose(W.right_values[-1], [-2.0, 4.0])


def test_refine_preserves_jumps_and_terminal_value():
    W = mixed_driver(2, 50, seed=3)
    R = refine(W, RngConfig(9).generator(), 1.0)
    assert len(R.times) == 2 * len(W.times) - 1
    np.testing.assert_array_equal(R.jump_size, W.jump_size)
    np.testing.assert_array_equal(R.times[R.jump_index], W.times[W.jump_index])
    np.testing.assert_allclose(R.right_values[-1], W.right_values[-1], atol=1e-14)
    C = coarsen(R)
    np.testing.assert_array_equal(C.times, W.times)
    np.testing.assert_allclose(C.right_values, W.right_values, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4))
def test_brownian_increments_scale_with_step(seed, d):
    W = gen_brownian(uniform_grid(1.0, 400), d, RngConfig(seed), sigma=2.0)
    assert W.increments.shape == (400, d)
    # realized QV of sigma B on [0, 1] concentrates at sigma^2 d
    assert abs(W.realized_qv() - 4.0 * d) < 4.0 * d * 0.5


def test_validate_rolled_flags_inconsistent_jump():
    m = Sphere(2)
    pts = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    good = RolledPath(m, [0.0, 1.0], pts, [1], [[0.0, 0.0, 1.0]], [[np.pi / 2, 0.0, 0.0]])
    assert validate_rolled(good).passed
    bad = RolledPath(m, [0.0, 1.0], pts, [1], [[0.0, 0.0, 1.0]], [[np.pi / 2 + 1e-6, 0.0, 0.0]])
    rep = validate_rolled(bad)
    assert not rep.passed and rep.violations[0][:2] == ("exp-jump", 1)

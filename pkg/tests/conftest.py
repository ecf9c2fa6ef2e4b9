import numpy as np
import pytest

from manifold_roller import (Flat, RngConfig, Sphere, gen_brownian, gen_compound_poisson, standard_frame,
                             superpose, uniform_ball_sampler, uniform_grid)

# (criterion number, line) pairs filled by test_acceptance.py
ACCEPTANCE = []


def north(m):
    x = np.zeros(m.ambient_dim)
    x[-1] = 1.0
    return m.point(x)


def mixed_driver(d, steps, seed, horizon=1.0, sigma=0.5, rate=5.0, radius=1.0):
    """Brownian plus compound Poisson with jumps in the ball of ``radius``."""
    g = RngConfig(seed).generator()
    p = gen_compound_poisson(uniform_grid(horizon, steps), d, rate, uniform_ball_sampler(radius), g)
    return superpose(gen_brownian(p.times, d, g, sigma), p)


@pytest.fixture
def s2():
    return Sphere(2)


@pytest.fixture
def r3():
    return Flat(3)


@pytest.fixture
def s2_start(s2):
    x0 = north(s2)
    return x0, standard_frame(x0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)

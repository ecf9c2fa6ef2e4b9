"""Build a martingale on S^2 from a Euclidean one, and check it by Monte Carlo.

Z is Brownian motion plus compensated compound Poisson jumps inside the
unit ball. Each jump of Z is stretched from length r to arcsin(r) before the
path is developed, so that the projection rule maps it back to Z exactly.
The martingale test then finds no drift. Two controls with one-sided jumps
(drawn from the half ball z_1 >= 0) do drift: one without the compensator,
and one that is compensated but skips the arcsin stretch, so every jump
comes back shortened to sin(r) and the compensator overshoots.
"""
from manifold_roller import SphereMartingaleExperiment, half_ball_sampler, martingale_test

N = 10_000
cases = [
    SphereMartingaleExperiment(label="compensated, with jump correction"),
    SphereMartingaleExperiment(jump_law=half_ball_sampler(1.0), compensated=False,
                               label="one-sided jumps, no compensator"),
    SphereMartingaleExperiment(jump_law=half_ball_sampler(1.0), correct_jumps=False,
                               label="one-sided compensated jumps, no arcsin stretch"),
]
for exp in cases:
    rep = martingale_test(exp, N, seed=1)
    print(rep.table())
    print()

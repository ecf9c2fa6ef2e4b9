"""A frame carried around a closed loop on S^2 comes back rotated.

The rotation angle equals the enclosed area (the Gaussian curvature is 1).
The octant loop through the three coordinate axes encloses pi/2; a circle of
latitude at polar angle a encloses 2 pi (1 - cos a).
"""
import numpy as np

from manifold_roller.holonomy import latitude_holonomy, loop_holonomy

res = loop_holonomy()
print(f"octant, exact legs:        angle {res.angle:.15f}   expected {np.pi / 2:.15f}")
res = loop_holonomy(points_per_leg=1000)
print(f"octant, 1000 steps a leg:  angle {res.angle:.15f}")

print("\nlatitude circles (the error is second order in the step)")
for a in (0.3, 1.0, 2.0):
    for steps in (100, 1000):
        res = latitude_holonomy(a, steps)
        print(f"  colatitude {a:.1f}, {steps:5d} steps: |angle| {abs(res.angle):.8f} "
              f"expected {abs(res.expected):.8f} error {res.error:.1e}")

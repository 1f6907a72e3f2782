"""Composition with a Lipschitz function need not be continuous in W^{1,p}.

The pyramid function is the distance to a square grid that refines towards
the line x = 2.  Comb curves u_i run vertically through the middle of the
i-th column and converge to u(x) = (2, x) in W^{1,p}, yet phi o u_i keeps
a derivative of absolute value one while phi o u vanishes.
"""
import numpy as np

from lipdensity.constructions.pyramid import (PyramidSpec, comb_curve, compose,
                                              composition_experiment, pyramid_field)
from lipdensity.grid import BoxDomain, lipschitz_estimate

# The distance field on the strip [0, 2] x [0, 1], 128 nodes per unit.
domain = BoxDomain((0.0, 0.0), (2.0, 1.0), (257, 129))
phi = pyramid_field(PyramidSpec(imax=7), domain)
print(f"pyramid: max value {phi.values.max():.3f}, Lipschitz estimate {lipschitz_estimate(phi):.4f}")

# One comb curve and its composition: a sawtooth with slopes +1 and -1.
ui, u = comb_curve(4, 256)
f = compose(PyramidSpec(6), ui).values[:, 0]
slopes = np.unique(np.round(np.diff(f) * 256, 9))
print(f"slopes of phi o u_4: {slopes}")

# The table: the curves converge, their compositions do not.
print("  i  |u_i - u|_1,2  |phi(u_i) - phi(u)|_1,2  |d/dx phi(u_i)|_2")
for row in composition_experiment(2.0, range(4, 11), 2048):
    print(f"{row['i']:>3} {row['curve_gap_w1p']:>14.3e} {row['composition_gap_w1p']:>24.4f}"
          f" {row['derivative_lp']:>18.6f}")

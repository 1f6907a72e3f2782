"""A sawtooth that keeps its length.

The wrinkle function is the distance to slabs spaced 2^{-(m+10)} apart.
Its graph over a line is a sawtooth of slope one, so its length stays
sqrt(2) however fine the teeth, while the flat line has length 1.  The
shear that lifts the flat face onto this graph is bi-Lipschitz with a
constant independent of m.
"""
import math

import numpy as np

from lipdensity.constructions.wrinkles import (WrinkleSpec, bilipschitz_estimate, flat_length,
                                               sample_box, sawtooth_length, shear_map,
                                               wrinkle_domain, wrinkle_field)
from lipdensity.grid import lipschitz_estimate, polyline_length, trace_line

for m in (6, 7, 8):
    print(f"m = {m}: sawtooth length {sawtooth_length(m, 8):.12f} (sqrt 2 = {math.sqrt(2):.12f}),"
          f" flat length {flat_length()}")

spec = WrinkleSpec(6)
field = wrinkle_field(spec, wrinkle_domain(spec, teeth=4, samples_per_tooth=16))
line = trace_line(field, 0, [spec.z_center])
print(f"\nwrinkle field Lipschitz estimate {lipschitz_estimate(field):.6f};"
      f" trace over 4 teeth has length {polyline_length(line):.6e}"
      f" = {polyline_length(line) / (4 * spec.spacing):.6f} x width")

rng = np.random.default_rng(0)
for m in (6, 7, 8):
    s = WrinkleSpec(m)
    lo, hi = bilipschitz_estimate(s, 20000, rng)
    pts = sample_box(s, 1000, rng, teeth_window=4)
    back = shear_map(s, shear_map(s, pts, fix_boundary=True), inverse=True, fix_boundary=True)
    print(f"m = {m}: distortion in [{lo:.3f}, {hi:.3f}], inverse residual {np.abs(back - pts).max():.1e}")

"""From a singular circle-valued map to Lipschitz maps into the circle.

Steps: the maximal function of |grad u| picks the good set E_t, a Whitney
ball cover fills its complement, a partition of unity averages u over the
balls, and radial projection puts the values back on the circle.
"""
import numpy as np

from lipdensity import (GoodSetMask, SphereTarget, approximation_sweep, dyadic_radii,
                        gradient_magnitude, maximal_function, partition_of_unity, truncate,
                        whitney_cover)
from lipdensity.constructions.capacity import circle_loglog_field
from lipdensity.grid import BoxDomain

domain = BoxDomain.cube(2, 256, -0.5, 0.5, periodic=True)
u = circle_loglog_field(domain)  # angle log|log r| winds infinitely often at the origin
radii = dyadic_radii(domain)
M = maximal_function(gradient_magnitude(u), radii)

# Whitney cover at one threshold, with its checked properties.
good = GoodSetMask.from_maximal(M, 8.0)
cover = whitney_cover(good)
pu = partition_of_unity(cover)
print(f"t = 8: {len(cover)} balls over {cover.stats['complement_nodes']} bad nodes, "
      f"overlap {cover.stats['overlap']} (a priori bound {cover.stats['overlap_bound']}), "
      f"partition error {pu.sum_error():.1e}")

# u_t agrees with u bit for bit on the good set.
res = truncate(u, 8.0, maximal=M)
print("u_t == u on E_t:", np.array_equal(res.u_t.values[good.mask], u.values[good.mask]))

# The sweep: the quantities that control the approximation as t grows.
print(f"{'t':>5} {'t^2 |u != u_t|':>15} {'Lip(u_t)/t':>11} {'sup dist':>9} {'|p(u_t) - u|_1,2':>17}")
for row in approximation_sweep(u, SphereTarget(2), [2, 4, 8, 16, 32], radii):
    print(f"{row['t']:>5.0f} {row['t^n*disagreement']:>15.4f} {row['lip/t']:>11.3f}"
          f" {row['sup_dist']:>9.4f} {row['retract_error_w1n']:>17.4f}")

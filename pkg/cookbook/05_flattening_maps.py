"""Two flattening homeomorphisms.

eta is a radial profile that is the identity beyond 1 and whose
derivatives vanish at 0 faster than 2^{n^2} grows.  Phi* pushes the graph
of a bump profile lambda down onto the hyperplane while fixing everything
outside a thin band, with vertical speed at least 1/2.
"""
import numpy as np

from lipdensity.constructions.flattening import FlatteningSpec, flattening_report, partition_sum
from lipdensity.constructions.phi_star import PhiStarSpec, region_checks, xi, xi_closed_form

spec = FlatteningSpec()
t = np.linspace(1e-3, 4.0, 100)
print(f"dyadic partition error {np.abs(partition_sum(t) - 1).max():.1e}")
print(f"eta(2) = {spec.eta(2.0)[0]}, shift a = {spec.shift:.6f}")
for row in flattening_report(spec):
    print(f"  level {row['level']:2d}: 2^{row['N_log2']:.0f} * sup |eta^(l)|, l <= {row['max_order']}:"
          f" {row['decay']:.3e}")

star = PhiStarSpec()
for row in region_checks(star, 10000, 0):
    print(f"{row['check']:>14}: " + ", ".join(f"{k} {v:.3g}" for k, v in row.items()
                                              if k not in ("check",)))
xp = np.array([[0.03], [0.07]])
xv = np.array([0.01, -0.02])
print("quadrature", xi(star, xp, xv), "closed form", xi_closed_form(star, xp, xv))

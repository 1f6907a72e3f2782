"""Cheap tall bumps: the n-energy of truncated log|log r| profiles.

The energy of the band s <= log|log r| <= s + tau depends only on s and
tau, never on where the band sits, so whole families of bumps with radii
2^{-k^2} can be summed exactly without a grid.  A coarser radius law makes
the same construction visible on a grid.
"""
import math

from lipdensity.constructions.capacity import (BumpFamily, family_domain, gamma_energy,
                                               gamma_field, loglog_truncation_energy,
                                               packing_lower_bound_log2, pi_m_table)

for s in (2.0, 3.0, 4.0):
    exact = 2 * math.pi * (math.exp(-s) - math.exp(-(s + 1)))
    print(f"s = {s}: energy {loglog_truncation_energy(2, s, 1.0):.6e}, closed form {exact:.6e}")

# The full family with radii 2^{-k^2}, summed in log form.
res = gamma_energy(BumpFamily(n=2, k0=6, kmax=12))
print(f"\ntotal energy {res['total']:.4e} against the bound {res['bound']:.4e}")
for row in res["ledger"]:
    print(f"  k = {row['k']:2d}: level s = {row['level']:7.2f}, 2^{row['count_log2']:.0f} bumps,"
          f" per-bump energy 2^{row['bump_energy_log2']:.1f} <= budget 2^{row['budget_log2']:.0f}")

# A gridded family and the projections that flatten its deepest layers.
fam = BumpFamily(n=2, k0=6, kmax=8, radius_law="shift:4", level_rule="plateau")
domain = family_domain(fam, nodes_per_bump=8)
gamma = gamma_field(fam, domain)
print(f"\ngridded gamma on {domain.shape}: max height {gamma.values.max():.5f}")
for row in pi_m_table(fam, domain, range(5, 9)):
    print(f"  m = {row['m']}: |f - pi_m f|_1,2 = {row['gap_w1n']:.4e} (bound {row['bound']:.4e})")

# Why no Lipschitz map can cover the graph: the packing bound diverges.
print("\nlog2 packing lower bound, n = 2, L = 1:",
      [round(packing_lower_bound_log2(2, k, 1.0)) for k in range(6, 13)])

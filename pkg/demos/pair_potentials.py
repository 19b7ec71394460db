"""Microscopic pair potentials behind the mean-field couplings.

Builds the smeared dipole-dipole potential, checks its positive-type
property on a lattice, extracts the short-range coupling that feeds the
contact term, and runs the random-configuration probe for classical
many-body stability.  Ends with the long-range stabilizer construction.
"""

import numpy as np

from dipgp.grids import BoxGrid
from dipgp.potentials import (
    classical_stability_probe,
    combine_potentials,
    dipole_pair_potential,
    gaussian_pair_potential,
    short_range_strength,
    stabilizer_pair_potential,
    stabilizer_psi_hat,
    w_dip,
    w_dip_hat,
    wtilde_dip_hat,
)

# -- the smeared dipolar potential: finite at the origin, dipolar tail

pot = dipole_pair_potential(d=1.0)
print("smeared dipolar potential, d = 1")
print(f"  value at origin      {w_dip(np.zeros(3)):.9f}  (2/e = {2.0 / np.e:.9f})")
for r in (2.0, 5.0, 50.0):
    x = np.array([0.0, 0.0, r])
    print(f"  on axis at r = {r:4.1f}  {w_dip(x):+.3e}   tail -2/r^3 = {-2.0 / r**3:+.3e}")
print(f"  dipolar coupling d^2 = {pot.dipolar_coupling}")

# -- positive type: Fourier transform nonnegative on a real lattice

grid = BoxGrid(64, 16.0)
kx, ky, kz = grid.kmeshes
kv = np.stack([kx, ky, kz], axis=-1)
print(f"\nlattice minima of the transforms on 64^3, L = 16:")
print(f"  w_dip_hat    min {w_dip_hat(kv).min():.3e}")
print(f"  wtilde_hat   min {wtilde_dip_hat(kv).min():.3e}")

# -- short-range strength: the contact coupling the potential generates

print("\nshort-range strength against (4 pi / 3) d^2:")
for d in (0.5, 1.0, 2.0):
    s = short_range_strength(dipole_pair_potential(d=d))
    print(f"  d = {d:3.1f}   {s:.8f}   target {4.0 * np.pi / 3.0 * d * d:.8f}")

comp = combine_potentials(dipole_pair_potential(d=1.0),
                          gaussian_pair_potential(mass=1.0, width=1.0))
print(f"  dipolar + unit gaussian: {short_range_strength(comp):.8f}"
      f"   target {4.0 * np.pi / 3.0 + 1.0:.8f}")

# -- classical stability: N-particle energies bounded below by -N w(0)/2

probe = classical_stability_probe(pot, n_particles=16, n_trials=2000, seed=0)
bound = -16.0 * probe.w_at_origin / 2.0
print(f"\nclassical probe, {probe.n_configurations} configurations of 16 particles:")
for fam, val in sorted(probe.family_minima.items(), key=lambda kv: kv[1]):
    print(f"  {fam:12s} min {val:+.6f}")
print(f"  overall min {probe.min_total:+.6f}  >=  bound {bound:+.6f}")

# -- stabilizer: positive-type envelope that dominates 1/r^3 at infinity

print("\nstabilizer transform vs its guaranteed floor:")
rng = np.random.default_rng(3)
p = rng.normal(scale=4.0, size=(2000, 3))
p2 = np.sum(p * p, axis=-1)
for amp, rate in ((1.0, 2.0), (0.7, 3.0)):
    ph = stabilizer_psi_hat(p, amplitude=amp, rate=rate)
    floor = 0.75 * rate**2 * amp / (p2 + rate**2) ** 2
    sp = stabilizer_pair_potential(amplitude=amp, rate=rate)
    print(f"  amplitude {amp}, rate {rate}: worst margin "
          f"{(ph - floor).min():.2e}, dipolar coupling {sp.dipolar_coupling}")

"""From pair potentials to the mean-field functional.

The N-body Hartree energy with a momentum-rescaled potential converges
to the GP functional whose couplings are the potential's short-range
strength and dipole strength.  This script shows the rescaling, the
admissible range of scaling exponents, the N^{-beta} decay of the
interaction gap on a fixed density, and a full solver-level study.
"""

import numpy as np

from dipgp.energy import InteractionSpec, hartree_gp_gap
from dipgp.grids import BoxGrid, gaussian_field, normalize
from dipgp.minimize import convergence_study, default_init
from dipgp.potentials import (
    HartreeScaling,
    combine_potentials,
    dipole_pair_potential,
    gaussian_pair_potential,
    harmonic_trap,
    quartic_trap,
    scale_potential,
    short_range_strength,
)

pot = combine_potentials(dipole_pair_potential(d=1.0),
                         gaussian_pair_potential(mass=1.0, width=1.0))
print("potential: smeared dipole (d = 1) plus unit gaussian")
print(f"  short-range strength {short_range_strength(pot):.6f}")
print(f"  dipolar coupling     {pot.dipolar_coupling:.6f}")

# -- momentum rescaling: hat w_N(k) = hat w(k / N^beta)

scaling = HartreeScaling(beta=0.5, N=16)
scaled = scale_potential(pot, scaling)
k = np.array([[4.0, 0.0, 0.0]])
print(f"\nN = {scaling.N}, beta = {scaling.beta}, momentum scale "
      f"N^beta = {scaling.momentum_scale:.1f}")
print(f"  hat w at |k| = 4:          {pot.eval_fourier(k)[0]:.6f}")
print(f"  rescaled hat w at |k| = 4: {scaled.eval_fourier(k)[0]:.6f}")
print(f"  original at |k| = 1:       {pot.eval_fourier(k / 4.0)[0]:.6f}")

# Admissible exponents depend on how fast the trap grows.
for trap, s in ((harmonic_trap(), 2.0), (quartic_trap(), 4.0)):
    thr = HartreeScaling.beta_threshold(s)
    print(f"  trap growth power {s:.0f}: beta must stay below {thr:.6f}")

# -- gap decay on a frozen density

grid = BoxGrid(96, 8.0)
u = normalize(gaussian_field(grid, (0.5, 0.5, 0.5)))
spec = InteractionSpec(4.0 * np.pi / 3.0 + 1.0, 1.0)
n_list = (16, 64, 256, 1024)
print("\ninteraction gap on a fixed gaussian, beta = 1/4:")
gaps = []
for n in n_list:
    g = hartree_gp_gap(u, pot, HartreeScaling(beta=0.25, N=n), spec)
    gaps.append(g)
    print(f"  N = {n:5d}   gap {g:.6e}")
slope = float(np.polyfit(np.log(n_list), np.log(gaps), 1)[0])
print(f"  fitted slope {slope:+.4f}   expected about {-0.25:+.4f}")

# -- solver-level study: minimize both functionals and compare

study = convergence_study(BoxGrid(32, 12.0), harmonic_trap(), pot,
                          beta=0.25, n_list=(16, 64, 256))
print(f"\nground-state study, matched couplings a = {study.matched_a:.6f}, "
      f"b = {study.matched_b:.6f}")
print(f"  GP energy {study.gp_energy:.9f}")
for row in study.rows:
    print(f"  N = {row.n_particles:4d}   Hartree {row.energy.total:.9f}   "
          f"gap {row.gap:.3e}   {row.verdict}")
print(f"  fitted rate {study.fitted_rate:+.4f}")

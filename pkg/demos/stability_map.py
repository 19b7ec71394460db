"""Map of the (a, b) coupling plane.

Classifies a grid of coupling pairs against the dipolar multiplier range
and prints an ASCII chart: '#' stable, '.' collapse-prone.  Then takes
one collapse-prone pair and runs the squeezing probe to exhibit the
unbounded energy directly.
"""

import numpy as np

from dipgp.energy import InteractionSpec, classify
from dipgp.kernels import dipolar_symbol, khat_extrema
from dipgp.minimize import ProbeParams, instability_probe
from dipgp.grids import BoxGrid
from dipgp.potentials import harmonic_trap

extrema = khat_extrema(dipolar_symbol())
print(f"multiplier range: [{extrema[0]:.6f}, {extrema[1]:.6f}]")
print("stability boundary for b > 0 is a = 4 pi b / 3\n")

a_values = np.linspace(-1.0, 6.0, 29)
b_values = np.linspace(1.4, 0.0, 15)
print("      a from %.1f to %.1f" % (a_values[0], a_values[-1]))
for b in b_values:
    row = "".join(
        "#" if classify(a, b, extrema) == "Stable" else "."
        for a in a_values
    )
    print(f"b={b:4.1f}  {row}")

# -- one point on the wrong side of the line

spec = InteractionSpec(1.0, 1.0)
print(f"\nprobing a = {spec.a}, b = {spec.b}: {spec.classification()}")
print(f"stability margin {spec.stability_margin():+.4f}")

params = ProbeParams(base_width=2.4e-3, lam_list=(1.0, 2.0 ** (1.0 / 3.0)),
                     ell_list=(1.0, 2.0))
res = instability_probe(harmonic_trap((1.0, 1.0, 1.0)), spec, params,
                        grid=BoxGrid(64, 0.03))
print(f"negative interaction form found at squeeze factor {res.lam_chosen:.4f}")
print("energies of the cigar family as it narrows:")
for ell, e in zip(res.ell_values, res.totals):
    print(f"  ell = {ell:3.0f}   E = {e:+.4e}")
print(f"fitted growth exponent {res.fitted_exponent:.3f}  (cubic collapse)")

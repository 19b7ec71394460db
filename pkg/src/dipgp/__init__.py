"""Spectral toolbox for dipolar mean-field ground states.

The package computes ground states of the Gross-Pitaevskii energy with a
contact term and an anisotropic degree-zero interaction kernel, decides
which coupling pairs (a, b) keep the energy bounded below, constructs the
microscopic pair potentials whose scaling limit produces those couplings,
and measures how fast the scaled Hartree energy approaches its local limit.

Layout:
    kernels     angular weights, their Fourier multipliers, quadratures
    grids       periodic box, fields, transforms, multiplier application
    potentials  pair potentials, traps, scaling, classical stability scan
    energy      GP / Hartree functionals, gradients, classification
    minimize    constrained descent, collapse probe, convergence study
    cli         TOML-driven batch runner (`dipgp run|validate|version`)
"""

__version__ = "0.1.0"

from .energy import (
    EnergyBreakdown,
    GPProblem,
    HartreeProblem,
    InteractionSpec,
    chemical_potential,
    classify,
    elgl_residual,
    gp_energy,
    gp_gradient,
    hartree_energy,
    hartree_gp_gap,
    interaction_form,
)
from .errors import DipGPError
from .grids import (
    BoxGrid,
    Field,
    MultiplierGrid,
    convolve_multiplier,
    field_from_function,
    gaussian_field,
    load_field,
    multiplier_from_function,
    multiplier_from_symbol,
    normalize,
    save_field,
)
from .kernels import (
    AngularSymbol,
    angular_symbol,
    check_cancellation,
    dipolar_symbol,
    fibonacci_sphere,
    khat_closed_dipolar,
    khat_extrema,
    khat_on_directions,
    khat_quadrature,
    khat_truncated,
)
from .minimize import (
    ProbeParams,
    ProbeResult,
    SolverConfig,
    SolverRun,
    convergence_study,
    default_init,
    ground_state,
    hartree_ground_state,
    instability_probe,
    write_history_csv,
)
from .potentials import (
    HartreeScaling,
    PairPotential,
    TrapSpec,
    antiparallel_pair_potential,
    classical_stability_probe,
    combine_potentials,
    dipole_pair_potential,
    gaussian_pair_potential,
    harmonic_trap,
    quartic_trap,
    scale_potential,
    short_range_strength,
    smeared_coulomb,
    stabilizer_pair_potential,
    stabilizer_psi,
    stabilizer_psi_hat,
    w_dip,
    w_dip_hat,
    wtilde_dip_hat,
)

__all__ = [name for name in dir() if not name.startswith("_")]

"""Gross-Pitaevskii and Hartree energy functionals and their diagnostics.

The mean-field energy of a unit-mass state u on the periodic box is

    E(u) = int |(grad + i A) u|^2 + int V |u|^2
           + (a/2) int |u|^4 + (b/2) int (K * |u|^2) |u|^2,

with K the degree-zero anisotropic kernel of an admissible angular weight.
Finiteness of the infimum is decided entirely by the multiplier range: with
m = min K_hat and M = max K_hat the interaction is stable exactly when

    b >= 0 and a >= b max(-m, 0),   or   b < 0 and a >= -b max(M, 0),

and when the inequality fails strictly the infimum is -infinity (collapse).
Borderline parameters sit on the equality within tolerance.

The Hartree functional replaces the local-plus-kernel pair by a single
convolution (1/2) int (w_N * |u|^2) |u|^2 with w_N(x) = N^{3 beta} w(N^beta x);
`hartree_gp_gap` measures the interaction-term distance between the two on a
fixed state, the quantity that contracts as N grows.

The L2 gradient of E is g = h u + a |u|^2 u + b (K * |u|^2) u with
h = -(grad + iA)^2 + V, so dE along v is 2 Re <g, v>; the multiplier of the
unit-mass constraint is mu = <u, g> and stationarity is |g - mu u| = 0.
"""

from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from . import grids
from .errors import (
    GaugeNotSupported,
    InternalConsistencyError,
    NoRealSpaceForm,
    NotNormalized,
)
from .grids import Field, MultiplierGrid
from .kernels import dipolar_symbol, khat_extrema

MASS_TOL = 1e-8
CLASSIFY_TOL = 1e-9


@dataclass
class InteractionSpec:
    """Contact coupling a, kernel coupling b, and the angular weight."""

    a: float
    b: float
    symbol: object = dc_field(default_factory=dipolar_symbol)

    def multiplier_range(self, n_directions=200, quad_order=50):
        if self.b == 0.0:
            return (0.0, 0.0)
        return khat_extrema(
            self.symbol, n_directions=n_directions, quad_order=quad_order
        )

    def stability_margin(self, n_directions=200):
        """a minus the stability threshold; sign decides the classification."""
        lo, hi = self.multiplier_range(n_directions=n_directions)
        if self.b >= 0.0:
            return self.a - self.b * max(-lo, 0.0)
        return self.a + self.b * max(hi, 0.0)

    def classification(self, tol=CLASSIFY_TOL, n_directions=200):
        return classify(
            self.a, self.b, self.multiplier_range(n_directions=n_directions), tol=tol
        )


def classify(a, b, extrema, tol=CLASSIFY_TOL):
    """'Stable', 'Borderline', or 'Unstable' from the multiplier range.

    Stable when the quadratic form a + b K_hat is nonnegative with strict
    margin, Unstable when it dips below (energy then unbounded), Borderline
    on equality within tol.  With b = 0 the form is the plain quartic term,
    nonnegative exactly when a >= 0, so equality counts as Stable there.
    """
    lo, hi = extrema
    if b == 0.0:
        return "Stable" if a >= -tol else "Unstable"
    if b > 0.0:
        margin = a - b * max(-lo, 0.0)
    else:
        margin = a + b * max(hi, 0.0)
    if margin > tol:
        return "Stable"
    if margin < -tol:
        return "Unstable"
    return "Borderline"


@dataclass
class EnergyBreakdown:
    """Energy split into its four contributions; total is their sum."""

    kinetic: float
    potential: float
    contact: float
    dipolar: float
    total: float

    def __post_init__(self):
        s = self.kinetic + self.potential + self.contact + self.dipolar
        scale = max(1.0, abs(s), abs(self.total))
        if abs(s - self.total) > 1e-12 * scale:
            raise InternalConsistencyError(
                f"energy parts sum to {s!r} but total is {self.total!r}"
            )

    @classmethod
    def from_parts(cls, kinetic, potential, contact, dipolar):
        return cls(
            kinetic=kinetic,
            potential=potential,
            contact=contact,
            dipolar=dipolar,
            total=kinetic + potential + contact + dipolar,
        )

    def as_dict(self):
        return {
            "kinetic": self.kinetic,
            "potential": self.potential,
            "contact": self.contact,
            "dipolar": self.dipolar,
            "total": self.total,
        }


class GPProblem:
    """A trap + interaction bound to one grid, with its meshes precomputed.

    The kernel multiplier is built once per problem; the per-call functions
    below wrap this class for one-off evaluations.
    """

    def __init__(self, grid, trap, interaction, kernel=None, quad_order=50):
        self.grid = grid
        self.trap = trap
        self.interaction = interaction
        x, y, z = grid.meshes
        self.V = np.asarray(trap.potential(x, y, z), dtype=float)
        self.A = None
        if trap.vector_potential is not None:
            self.A = [
                np.asarray(c, dtype=float) for c in trap.vector_potential(x, y, z)
            ]
        self.kernel = kernel
        if interaction.b != 0.0 and kernel is None:
            self.kernel = grids.multiplier_from_symbol(
                grid, interaction.symbol, quad_order=quad_order
            )
        if self.kernel is not None and self.kernel.grid != grid:
            raise grids.GridMismatch("kernel multiplier lives on a different grid")

    # -- pieces ----------------------------------------------------------

    def _covariant_derivatives(self, u):
        parts = self.grid.gradient_values(u.values)
        if self.A is not None:
            parts = [p + 1j * a * u.values for p, a in zip(parts, self.A)]
        return parts

    def kernel_potential(self, rho):
        """(K * rho) as a real array, for a real density array rho."""
        if self.kernel is None:
            return np.zeros_like(rho)
        conv = self.grid.idft_values(
            self.kernel.values * self.grid.dft_values(rho.astype(np.complex128))
        )
        return conv.real

    def energy_breakdown(self, u, check_mass=True):
        h3 = self.grid.h**3
        rho = u.density()
        if check_mass:
            mass = float(rho.sum() * h3)
            if abs(mass - 1.0) > MASS_TOL:
                raise NotNormalized(f"state has mass {mass!r}, expected 1")
        if self.A is None:
            # Parseval form of int |grad u|^2, one transform instead of six
            coeffs = np.fft.fftn(np.fft.ifftshift(u.values))
            kinetic = float(
                np.sum(self.grid.k2_values * (coeffs.real**2 + coeffs.imag**2))
                * h3**2
                / self.grid.L_box**3
            )
        else:
            derivs = self._covariant_derivatives(u)
            kinetic = float(sum(np.sum(np.abs(p) ** 2) for p in derivs) * h3)
        potential = float(np.sum(self.V * rho) * h3)
        a, b = self.interaction.a, self.interaction.b
        contact = 0.5 * a * float(np.sum(rho * rho) * h3)
        dipolar = 0.0
        if b != 0.0:
            dipolar = 0.5 * b * float(np.sum(self.kernel_potential(rho) * rho) * h3)
        return EnergyBreakdown.from_parts(kinetic, potential, contact, dipolar)

    def gradient(self, u):
        """L2 gradient g = h u + a |u|^2 u + b (K * |u|^2) u as a Field."""
        rho = u.density()
        if self.A is None:
            kin = np.fft.fftshift(
                np.fft.ifftn(
                    self.grid.k2_values * np.fft.fftn(np.fft.ifftshift(u.values))
                )
            )
        else:
            # -(grad + iA).(grad + iA) u assembled axis by axis
            derivs = self._covariant_derivatives(u)
            kin = np.zeros_like(u.values)
            for ax, w in enumerate(derivs):
                dw = self.grid.derivative_values(w, ax)
                if self.A is not None:
                    dw = dw + 1j * self.A[ax] * w
                kin -= dw
        g = kin + self.V * u.values + self.interaction.a * rho * u.values
        if self.interaction.b != 0.0:
            g = g + self.interaction.b * self.kernel_potential(rho) * u.values
        return Field(self.grid, g)

    def chemical_potential(self, u, g=None):
        if g is None:
            g = self.gradient(u)
        inner = np.vdot(u.values, g.values) * self.grid.h**3
        if abs(inner.imag) > 1e-10 * max(1.0, abs(inner.real)):
            raise InternalConsistencyError(
                f"<u, g> = {inner!r} should be real for this functional"
            )
        return float(inner.real)

    def residual(self, u, g=None):
        """L2 norm of g - mu u, the stationarity defect."""
        if g is None:
            g = self.gradient(u)
        mu = self.chemical_potential(u, g=g)
        diff = g.values - mu * u.values
        return float(np.sqrt(np.sum(np.abs(diff) ** 2) * self.grid.h**3))


def _problem(u, trap, spec, kernel):
    return GPProblem(u.grid, trap, spec, kernel=kernel)


def gp_energy(u, trap, spec, kernel=None):
    """EnergyBreakdown of a unit-mass state (NotNormalized otherwise)."""
    return _problem(u, trap, spec, kernel).energy_breakdown(u)


def gp_gradient(u, trap, spec, kernel=None):
    """L2 gradient of the energy; dE along v equals 2 Re <gradient, v>."""
    return _problem(u, trap, spec, kernel).gradient(u)


def chemical_potential(u, trap, spec, kernel=None):
    """mu = <u, g>: equals total energy plus half the interaction doubled."""
    return _problem(u, trap, spec, kernel).chemical_potential(u)


def elgl_residual(u, trap, spec, kernel=None):
    """Stationarity defect |g - mu u| for gauge-free problems only."""
    if trap.vector_potential is not None:
        raise GaugeNotSupported(
            "the stationarity diagnostic is defined without a vector potential"
        )
    return _problem(u, trap, spec, kernel).residual(u)


def interaction_form(rho, spec, kernel):
    """Full quadratic form a int rho^2 + b int (K * rho) rho (not halved)."""
    h3 = rho.grid.h**3
    dens = rho.values.real
    val = spec.a * float(np.sum(dens * dens) * h3)
    if spec.b != 0.0:
        conv = rho.grid.idft_values(
            kernel.values * rho.grid.dft_values(dens.astype(np.complex128))
        ).real
        val += spec.b * float(np.sum(conv * dens) * h3)
    return val


class HartreeProblem:
    """Trap + scaled pair interaction bound to one grid.

    The interaction is applied through the transform of the scaled potential
    sampled on the wavevector lattice; if only pointwise values exist, the
    multiplier falls back to the grid transform of the sampled potential.
    """

    def __init__(self, grid, trap, pot, scaling):
        from .potentials import scale_potential

        self.grid = grid
        self.trap = trap
        self.pot = pot
        self.scaling = scaling
        scaled = scale_potential(pot, scaling)
        if scaled.eval_fourier is not None:
            self.multiplier = grids.multiplier_from_function(
                grid, scaled.eval_fourier, label="w_N"
            )
        else:
            sampled = grids.field_from_function(
                grid, lambda x, y, z: scaled.eval_real(np.stack([x, y, z], axis=-1))
            )
            self.multiplier = MultiplierGrid(
                grid, grid.dft_values(sampled.values).real, label="w_N (sampled)"
            )
        x, y, z = grid.meshes
        self.V = np.asarray(trap.potential(x, y, z), dtype=float)
        self.A = None
        if trap.vector_potential is not None:
            self.A = [
                np.asarray(c, dtype=float) for c in trap.vector_potential(x, y, z)
            ]

    def mean_field(self, rho):
        conv = self.grid.idft_values(
            self.multiplier.values * self.grid.dft_values(rho.astype(np.complex128))
        )
        return conv.real

    def interaction_energy(self, u):
        rho = u.density()
        return 0.5 * float(np.sum(self.mean_field(rho) * rho) * self.grid.h**3)

    def energy_breakdown(self, u, check_mass=True):
        h3 = self.grid.h**3
        rho = u.density()
        if check_mass:
            mass = float(rho.sum() * h3)
            if abs(mass - 1.0) > MASS_TOL:
                raise NotNormalized(f"state has mass {mass!r}, expected 1")
        if self.A is None:
            coeffs = np.fft.fftn(np.fft.ifftshift(u.values))
            kinetic = float(
                np.sum(self.grid.k2_values * (coeffs.real**2 + coeffs.imag**2))
                * h3**2
                / self.grid.L_box**3
            )
        else:
            parts = self.grid.gradient_values(u.values)
            parts = [p + 1j * a * u.values for p, a in zip(parts, self.A)]
            kinetic = float(sum(np.sum(np.abs(p) ** 2) for p in parts) * h3)
        potential = float(np.sum(self.V * rho) * h3)
        interaction = 0.5 * float(np.sum(self.mean_field(rho) * rho) * h3)
        # single convolution term: recorded in the contact column
        return EnergyBreakdown.from_parts(kinetic, potential, interaction, 0.0)

    def gradient(self, u):
        rho = u.density()
        if self.A is None:
            kin = np.fft.fftshift(
                np.fft.ifftn(
                    self.grid.k2_values * np.fft.fftn(np.fft.ifftshift(u.values))
                )
            )
        else:
            parts = self.grid.gradient_values(u.values)
            parts = [p + 1j * a * u.values for p, a in zip(parts, self.A)]
            kin = np.zeros_like(u.values)
            for ax, w in enumerate(parts):
                dw = self.grid.derivative_values(w, ax)
                dw = dw + 1j * self.A[ax] * w
                kin -= dw
        g = kin + self.V * u.values + self.mean_field(rho) * u.values
        return Field(self.grid, g)

    def chemical_potential(self, u, g=None):
        if g is None:
            g = self.gradient(u)
        inner = np.vdot(u.values, g.values) * self.grid.h**3
        if abs(inner.imag) > 1e-10 * max(1.0, abs(inner.real)):
            raise InternalConsistencyError(
                f"<u, g> = {inner!r} should be real for this functional"
            )
        return float(inner.real)

    def residual(self, u, g=None):
        if g is None:
            g = self.gradient(u)
        mu = self.chemical_potential(u, g=g)
        diff = g.values - mu * u.values
        return float(np.sqrt(np.sum(np.abs(diff) ** 2) * self.grid.h**3))


def hartree_energy(u, trap, pot, scaling):
    """EnergyBreakdown with the pair term (1/2) int (w_N * |u|^2) |u|^2."""
    return HartreeProblem(u.grid, trap, pot, scaling).energy_breakdown(u)


def hartree_gp_gap(u, pot, scaling, spec, kernel=None):
    """|interaction_H(u) - interaction_GP(u)| on a fixed state u.

    interaction_H is the scaled-convolution term, interaction_GP the matched
    contact-plus-kernel pair; for dipole-type potentials the gap contracts
    as N grows at fixed beta.
    """
    grid = u.grid
    if kernel is None and spec.b != 0.0:
        kernel = grids.multiplier_from_symbol(grid, spec.symbol)
    rho = u.density()
    h3 = grid.h**3

    from .potentials import scale_potential

    scaled = scale_potential(pot, scaling)
    if scaled.eval_fourier is None:
        raise NoRealSpaceForm(
            f"{pot.description}: transform needed for the interaction gap"
        )
    wN = grids.multiplier_from_function(grid, scaled.eval_fourier, label="w_N")
    rho_c = rho.astype(np.complex128)
    conv_h = grid.idft_values(wN.values * grid.dft_values(rho_c)).real
    inter_h = 0.5 * float(np.sum(conv_h * rho) * h3)

    inter_gp = 0.5 * spec.a * float(np.sum(rho * rho) * h3)
    if spec.b != 0.0:
        conv_k = grid.idft_values(kernel.values * grid.dft_values(rho_c)).real
        inter_gp += 0.5 * spec.b * float(np.sum(conv_k * rho) * h3)
    return abs(inter_h - inter_gp)

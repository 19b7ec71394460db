"""Constrained minimization on the L2 unit sphere, and its two companions.

`ground_state` runs a normalized gradient flow: descend along the projected
L2 gradient, renormalize, accept only energy-decreasing steps.  The step is
seeded by a Barzilai-Borwein estimate and halved until the energy drops, so
the recorded history is monotone by construction.

`instability_probe` demonstrates collapse for parameter pairs where the
interaction form can go negative: squeeze a Gaussian until the quadratic
form a int rho^2 + b int (K * rho) rho turns negative, then dilate the
squeezed state toward the origin.  Kinetic energy grows like ell^2 but the
interaction drops like -ell^3, so the energies run away to -infinity; the
probe returns the sequence and the fitted power.

`hartree_ground_state` and `convergence_study` repeat the flow with the
scaled pair interaction (1/2) int (w_N * rho) rho and track how its minimum
approaches the local-plus-kernel limit as N grows.
"""

import csv
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .energy import EnergyBreakdown, GPProblem, HartreeProblem, InteractionSpec
from .errors import (
    AtLeastThreePoints,
    NumericalBreakdown,
    RefusedStable,
    RefusedUnstable,
    ResolutionExceeded,
)
from .grids import Field, gaussian_field, normalize
from .potentials import short_range_strength

MONOTONE_TOL = 1e-12
COLLAPSE_FACTOR = 1e3
MAX_HALVINGS = 30
STEP_CLAMP = (1e-8, 10.0)


@dataclass
class SolverConfig:
    max_iters: int = 2000
    step_init: float = 0.05
    energy_tol: float = 1e-10
    residual_tol: float = 1e-6
    step_rule: str = "adaptive-BB-with-safeguard"
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not (self.step_init > 0):
            raise ValueError(f"step_init must be positive, got {self.step_init}")
        if not (self.energy_tol > 0 and self.residual_tol > 0):
            raise ValueError("energy_tol and residual_tol must be positive")
        if self.step_rule not in ("fixed", "adaptive-BB-with-safeguard"):
            raise ValueError(f"unknown step_rule {self.step_rule!r}")


@dataclass
class SolverRun:
    final_state: Field
    energy_history: list
    iterations: int
    verdict: str
    mu: float
    residual: float
    step_history: list = dc_field(default_factory=list)
    residual_history: list = dc_field(default_factory=list)
    exploratory: bool = False

    @property
    def final_energy(self):
        return self.energy_history[-1]


def default_init(grid, trap, seed=None, noise=0.0):
    """Normalized Gaussian matched to the trap's quadratic growth at 0.

    Each width is 1/sqrt(omega_eff) from a second difference of V along the
    axis, clipped to the resolvable band [2h, L/8]; optional seeded complex
    noise breaks symmetry for uniqueness experiments.
    """
    x, y, z = grid.meshes
    v0 = float(trap.potential(np.zeros(1), np.zeros(1), np.zeros(1))[0])
    widths = []
    for ax in range(3):
        step = np.zeros(1)
        args = [step, step, step]
        probe = np.full(1, 4.0 * grid.h)
        args[ax] = probe
        vp = float(trap.potential(*args)[0])
        args[ax] = -probe
        vm = float(trap.potential(*args)[0])
        curv = (vp + vm - 2.0 * v0) / (4.0 * grid.h) ** 2  # ~ d2V/dx2
        omega = np.sqrt(max(curv / 2.0, 1e-12))
        widths.append(float(np.clip(omega**-0.5, 2.0 * grid.h, grid.L_box / 8.0)))
    u = gaussian_field(grid, tuple(widths))
    if noise > 0.0:
        rng = np.random.default_rng(seed)
        bump = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        u = Field(grid, u.values * (1.0 + noise * bump))
    return normalize(u)


def _descend(problem, init, cfg):
    """Monotone projected-gradient loop shared by the GP and Hartree paths."""
    grid = problem.grid
    h3 = grid.h**3
    u = normalize(init)
    eb = problem.energy_breakdown(u)
    if not np.isfinite(eb.total):
        raise NumericalBreakdown(f"initial energy is {eb.total!r}")
    collapse_floor = -COLLAPSE_FACTOR * (abs(eb.total) + 1.0)

    g = problem.gradient(u)
    mu = problem.chemical_potential(u, g=g)
    r = Field(grid, g.values - mu * u.values)
    res = float(np.sqrt(np.sum(np.abs(r.values) ** 2) * h3))

    history = [eb]
    steps = [0.0]
    residuals = [res]
    tau = cfg.step_init
    prev_u = None
    prev_r = None
    verdict = "MaxIters"
    iterations = 0

    for it in range(1, cfg.max_iters + 1):
        if cfg.step_rule == "adaptive-BB-with-safeguard" and prev_u is not None:
            du = u.values - prev_u
            dr = r.values - prev_r
            denom = float(np.real(np.vdot(du, dr)) * h3)
            if denom > 0.0:
                tau = float(np.real(np.vdot(du, du)) * h3) / denom
            tau = float(np.clip(tau, *STEP_CLAMP))
        elif cfg.step_rule == "fixed":
            tau = cfg.step_init

        accepted = None
        trial_tau = tau
        for _ in range(MAX_HALVINGS + 1):
            cand = normalize(Field(grid, u.values - trial_tau * r.values))
            eb_new = problem.energy_breakdown(cand)
            if not np.isfinite(eb_new.total):
                raise NumericalBreakdown(
                    f"energy became {eb_new.total!r} at iteration {it}"
                )
            if eb_new.total <= eb.total + MONOTONE_TOL * (1.0 + abs(eb.total)):
                accepted = (cand, eb_new, trial_tau)
                break
            trial_tau *= 0.5
        if accepted is None:
            raise NumericalBreakdown(
                f"no energy decrease after {MAX_HALVINGS} step halvings "
                f"(iteration {it}, step {tau!r})"
            )

        prev_u, prev_r = u.values, r.values
        u, eb_prev, eb = accepted[0], eb, accepted[1]
        tau = accepted[2]
        g = problem.gradient(u)
        mu = problem.chemical_potential(u, g=g)
        r = Field(grid, g.values - mu * u.values)
        res = float(np.sqrt(np.sum(np.abs(r.values) ** 2) * h3))
        history.append(eb)
        steps.append(tau)
        residuals.append(res)
        iterations = it

        if eb.total < collapse_floor:
            verdict = "DivergedToCollapse"
            break
        rel_drop = (eb_prev.total - eb.total) / max(1.0, abs(eb.total))
        if rel_drop < cfg.energy_tol and res < cfg.residual_tol:
            verdict = "Converged"
            break

    return SolverRun(
        final_state=u,
        energy_history=history,
        iterations=iterations,
        verdict=verdict,
        mu=mu,
        residual=res,
        step_history=steps,
        residual_history=residuals,
    )


def ground_state(init, trap, spec, cfg=None, kernel=None):
    """Minimize the GP energy from `init`; Unstable parameters are refused."""
    cfg = cfg or SolverConfig()
    cls = spec.classification()
    if cls == "Unstable":
        raise RefusedUnstable(
            f"(a, b) = ({spec.a}, {spec.b}) is Unstable; the energy has no "
            "minimum (use instability_probe to exhibit the collapse)"
        )
    problem = GPProblem(init.grid, trap, spec, kernel=kernel)
    return _descend(problem, init, cfg)


# -- collapse demonstration ----------------------------------------------


@dataclass
class ProbeParams:
    """Geometry of the squeeze-then-dilate trial family.

    base_width: isotropic width before squeezing.  lam_list: candidate
    squeeze factors; widths become (w/lam, w/lam, w lam^2), mass-preserving.
    ell_list: dilation factors applied to the squeezed state.  min_points:
    fewest grid points per thinnest width still accepted as resolved.
    """

    base_width: float = 1.0
    lam_list: tuple = (1.0, 2.0, 4.0, 8.0)
    ell_list: tuple = (1.0, 2.0, 4.0)
    min_points: float = 2.0
    taper: bool = True


@dataclass
class ProbeResult:
    lam_values: list
    form_values: list
    lam_chosen: float
    ell_values: list
    energies: list  # EnergyBreakdown per dilation
    fitted_exponent: Optional[float]
    squeezed_state: Optional[Field] = None

    @property
    def totals(self):
        return [eb.total for eb in self.energies]


def _squeezed_state(grid, widths, taper):
    """Unit-mass Gaussian with the given widths, optionally smoothly cut off.

    The taper multiplies by cos^2 between 2.5 and 3.4 scaled radii, making
    the state compactly supported well inside the box.
    """
    u = gaussian_field(grid, widths)
    if taper:
        x, y, z = grid.meshes
        xi = np.sqrt(
            (x / widths[0]) ** 2 + (y / widths[1]) ** 2 + (z / widths[2]) ** 2
        )
        lo, hi = 2.5, 3.4
        ramp = np.clip((xi - lo) / (hi - lo), 0.0, 1.0)
        u = Field(grid, u.values * np.cos(0.5 * np.pi * ramp) ** 2)
    return normalize(u)


def _squeeze_widths(base, lam, orientation):
    thin = base / lam
    long_ = base * lam * lam
    if orientation == "prolate":
        return (thin, thin, long_)
    return (long_, long_, thin)


def instability_probe(trap, spec, params=None, grid=None, kernel=None):
    """Exhibit collapse for an Unstable spec: squeeze, then dilate.

    Stage 1 walks lam_list until the interaction quadratic form of the
    squeezed Gaussian is negative.  Stage 2 dilates that state by each ell,
    evaluating the full energy; the sequence must decrease like -ell^3.
    Stable or Borderline parameters are refused; a thinnest width under
    min_points grid spacings raises ResolutionExceeded carrying the largest
    still-resolved value.
    """
    from . import grids
    from .energy import interaction_form

    params = params or ProbeParams()
    if grid is None:
        raise ValueError("instability_probe needs an explicit grid")
    cls = spec.classification()
    if cls != "Unstable":
        raise RefusedStable(
            f"(a, b) = ({spec.a}, {spec.b}) is {cls}; the probe needs an "
            "Unstable pair"
        )
    if kernel is None and spec.b != 0.0:
        kernel = grids.multiplier_from_symbol(grid, spec.symbol)

    # squeeze along the axis when transverse wavevectors are the bad ones
    from .kernels import khat_on_directions

    axis = np.asarray(spec.symbol.axis, dtype=float)
    perp = np.array([1.0, 0.0, 0.0])
    if abs(np.dot(perp, axis)) > 0.9:
        perp = np.array([0.0, 1.0, 0.0])
    perp = perp - np.dot(perp, axis) * axis
    perp /= np.linalg.norm(perp)
    vals = khat_on_directions(spec.symbol, np.stack([axis, perp]))
    bad_is_axial = spec.a + spec.b * vals[0] < spec.a + spec.b * vals[1]
    orientation = "oblate" if bad_is_axial else "prolate"

    def check_resolution(lam, ell):
        thin = params.base_width / (lam * ell)
        return thin >= params.min_points * grid.h

    lam_values, form_values = [], []
    lam_chosen = None
    state = None
    for lam in params.lam_list:
        if not check_resolution(lam, 1.0):
            largest = max([l for l in params.lam_list if check_resolution(l, 1.0)],
                          default=None)
            raise ResolutionExceeded(
                f"squeeze {lam} leaves the thin width under "
                f"{params.min_points} grid spacings",
                largest_valid=largest,
            )
        u = _squeezed_state(
            grid, _squeeze_widths(params.base_width, lam, orientation), params.taper
        )
        q = interaction_form(Field(grid, u.density().astype(np.complex128)), spec, kernel)
        lam_values.append(lam)
        form_values.append(q)
        if q < 0.0:
            lam_chosen = lam
            state = u
            break
    if lam_chosen is None:
        raise NumericalBreakdown(
            "interaction form stayed nonnegative over the whole squeeze list; "
            "widen lam_list"
        )

    # The squeezed state is analytic (Gaussian times taper in scaled radius),
    # so its dilation by ell is the same profile with widths divided by ell;
    # rebuilding it keeps full smoothness and the ell^{3/2} factor drops out
    # under normalization.
    base_widths = _squeeze_widths(params.base_width, lam_chosen, orientation)
    ell_values, energies = [], []
    problem = GPProblem(grid, trap, spec, kernel=kernel)
    for ell in params.ell_list:
        if not check_resolution(lam_chosen, ell):
            largest = max(
                [e for e in params.ell_list if check_resolution(lam_chosen, e)],
                default=None,
            )
            raise ResolutionExceeded(
                f"dilation {ell} leaves the thin width under "
                f"{params.min_points} grid spacings",
                largest_valid=largest,
            )
        scaled = _squeezed_state(
            grid, tuple(w / ell for w in base_widths), params.taper
        )
        energies.append(problem.energy_breakdown(scaled))
        ell_values.append(ell)

    exponent = None
    neg = [(l, -eb.total) for l, eb in zip(ell_values, energies) if eb.total < 0.0]
    if len(neg) >= 2:
        lx = np.log([p[0] for p in neg])
        ly = np.log([p[1] for p in neg])
        exponent = float(np.polyfit(lx, ly, 1)[0])

    return ProbeResult(
        lam_values=lam_values,
        form_values=form_values,
        lam_chosen=lam_chosen,
        ell_values=ell_values,
        energies=energies,
        fitted_exponent=exponent,
        squeezed_state=state,
    )


def write_history_csv(run, path):
    """Per-iteration CSV: iter,total,kinetic,potential,contact,dipolar,step,residual."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(
            ["iter", "total", "kinetic", "potential", "contact", "dipolar", "step", "residual"]
        )
        for i, eb in enumerate(run.energy_history):
            wr.writerow(
                [
                    i,
                    f"{eb.total:.17g}",
                    f"{eb.kinetic:.17g}",
                    f"{eb.potential:.17g}",
                    f"{eb.contact:.17g}",
                    f"{eb.dipolar:.17g}",
                    f"{run.step_history[i]:.17g}",
                    f"{run.residual_history[i]:.17g}",
                ]
            )


# -- Hartree side --------------------------------------------------------


def hartree_ground_state(init, trap, pot, scaling, cfg=None):
    """Same descent with the scaled pair interaction.

    If the scaled transform dips below zero on the wavevector lattice the
    energy may be unbounded; the run proceeds but is flagged exploratory,
    and a collapse verdict is possible.
    """
    cfg = cfg or SolverConfig()
    problem = HartreeProblem(init.grid, trap, pot, scaling)
    wmin = float(problem.multiplier.values.min())
    scale = float(np.abs(problem.multiplier.values).max())
    run = _descend(problem, init, cfg)
    if wmin < -1e-12 * max(1.0, scale):
        run.exploratory = True
    return run


@dataclass
class StudyRow:
    n_particles: int
    energy: EnergyBreakdown
    gap: float
    verdict: str


@dataclass
class StudyResult:
    rows: list
    gp_energy: float
    fitted_rate: Optional[float]
    matched_a: float
    matched_b: float
    final_run: Optional[SolverRun] = None


def convergence_study(grid, trap, pot, beta, n_list, cfg=None, init=None):
    """Hartree minima against the matched local-plus-kernel limit.

    The limiting couplings are read off the potential: b from its dipolar
    tail, a from its short-range strength.  Requires at least three N values
    in ascending order; the rate is the log-log slope of |gap| against N.
    """
    from .potentials import HartreeScaling

    cfg = cfg or SolverConfig()
    n_list = list(n_list)
    if len(n_list) < 3:
        raise AtLeastThreePoints(
            f"need at least three particle numbers, got {len(n_list)}"
        )
    if sorted(n_list) != n_list:
        raise ValueError("particle numbers must be ascending")

    b = pot.dipolar_coupling
    a = short_range_strength(pot)
    spec = InteractionSpec(a, b)
    if init is None:
        init = default_init(grid, trap)
    gp_run = ground_state(init, trap, spec, cfg)
    e_gp = gp_run.final_energy.total

    rows = []
    last_run = None
    for n in n_list:
        scaling = HartreeScaling(beta=beta, N=n)
        run = hartree_ground_state(init, trap, pot, scaling, cfg)
        last_run = run
        e_h = run.final_energy.total
        rows.append(
            StudyRow(
                n_particles=n,
                energy=run.final_energy,
                gap=e_h - e_gp,
                verdict=run.verdict,
            )
        )

    gaps = np.array([abs(r.gap) for r in rows])
    rate = None
    if np.all(gaps > 0.0):
        rate = float(np.polyfit(np.log(np.asarray(n_list, float)), np.log(gaps), 1)[0])
    return StudyResult(
        rows=rows,
        gp_energy=e_gp,
        fitted_rate=rate,
        matched_a=a,
        matched_b=b,
        final_run=last_run,
    )

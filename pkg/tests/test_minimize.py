"""Projected-descent solver, instability probe, and the scaling study.

Frozen numbers in this file were produced by the library itself on the
stated grids and then pinned, so they are regression values, not
independent references; the independent checks are the analytic
oscillator and the Gaussian variational bound.
"""

import numpy as np
import pytest

from dipgp.energy import InteractionSpec
from dipgp.errors import (
    AtLeastThreePoints,
    NumericalBreakdown,
    RefusedStable,
    RefusedUnstable,
    ResolutionExceeded,
)
from dipgp.grids import BoxGrid
from dipgp.minimize import (
    ProbeParams,
    SolverConfig,
    convergence_study,
    default_init,
    ground_state,
    hartree_ground_state,
    instability_probe,
    write_history_csv,
)
from dipgp.potentials import (
    HartreeScaling,
    PairPotential,
    combine_potentials,
    dipole_pair_potential,
    gaussian_pair_potential,
    harmonic_trap,
)

TRAP = harmonic_trap((1.0, 1.0, 1.0))
LAM0 = 2.0 ** (1.0 / 3.0)


def _grid32():
    return BoxGrid(32, 10.0)


def test_oscillator_ground_state():
    g = _grid32()
    run = ground_state(default_init(g, TRAP), TRAP, InteractionSpec(0.0, 0.0))
    assert run.verdict == "Converged"
    assert run.energy_history[-1].total == pytest.approx(3.0, abs=1e-6)
    assert run.mu == pytest.approx(3.0, abs=1e-6)
    assert run.residual <= 1e-6
    # histories carry the initial point: iteration 0 with zero step
    assert len(run.energy_history) == run.iterations + 1
    assert len(run.step_history) == run.iterations + 1
    assert run.step_history[0] == 0.0
    totals = [eb.total for eb in run.energy_history]
    assert all(b <= a + 1e-12 * (1.0 + abs(a)) for a, b in zip(totals, totals[1:]))


def test_defocusing_contact_bounds():
    # a > 0 raises the energy; the Gaussian trial state gives the upper
    # bound E <= 3 + (a/2)(2 pi)^{-3/2} which the minimizer must beat
    g = _grid32()
    run = ground_state(default_init(g, TRAP), TRAP, InteractionSpec(10.0, 0.0))
    e = run.energy_history[-1].total
    assert run.verdict == "Converged"
    assert 3.0 < e <= 3.0 + 5.0 * (2.0 * np.pi) ** -1.5
    assert e == pytest.approx(3.281773020843413, abs=1e-6)
    assert run.mu > e


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(step_rule="nonsense")
    with pytest.raises(ValueError):
        SolverConfig(max_iters=0)
    with pytest.raises(ValueError):
        SolverConfig(energy_tol=-1.0)


def test_refused_unstable():
    g = _grid32()
    with pytest.raises(RefusedUnstable):
        ground_state(default_init(g, TRAP), TRAP, InteractionSpec(1.0, 1.0))


def test_probe_refuses_stable_spec():
    with pytest.raises(RefusedStable):
        instability_probe(TRAP, InteractionSpec(1.0, 0.1), grid=_grid32())


def test_default_init_deterministic_noise():
    g = _grid32()
    a = default_init(g, TRAP, seed=11, noise=0.2)
    b = default_init(g, TRAP, seed=11, noise=0.2)
    c = default_init(g, TRAP, seed=12, noise=0.2)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert float(np.sum(a.density()) * g.h**3) == pytest.approx(1.0, rel=1e-12)


def test_default_init_width_tracks_trap_curvature():
    g = BoxGrid(64, 10.0)
    rho = default_init(g, harmonic_trap((1.0, 1.0, 4.0))).density()
    X, _, Z = g.meshes
    h3 = g.h**3
    x2 = float(np.sum(X**2 * rho) * h3)
    z2 = float(np.sum(Z**2 * rho) * h3)
    # widths go like omega^{-1/2}: second moments scale like 1/omega
    assert z2 / x2 == pytest.approx(0.25, rel=1e-3)
    # on a coarse grid the width floor (two cells) takes over
    gc = BoxGrid(32, 10.0)
    rho_c = default_init(gc, harmonic_trap((1.0, 1.0, 4.0))).density()
    Xc, _, Zc = gc.meshes
    x2c = float(np.sum(Xc**2 * rho_c) * gc.h**3)
    z2c = float(np.sum(Zc**2 * rho_c) * gc.h**3)
    assert z2c / x2c == pytest.approx((2.0 * gc.h) ** 2, rel=1e-3)


# Probe on a tight box: the squeeze makes the quadratic form negative at
# the second aspect step and the dilation energies fall on the expected
# cubic trend.  Values pinned from this configuration.
PROBE_GRID = (64, 0.03)
PROBE_PARAMS = dict(base_width=2.4e-3, lam_list=(1.0, LAM0), ell_list=(1.0, 2.0))


def test_instability_probe_two_stage():
    g = BoxGrid(*PROBE_GRID)
    res = instability_probe(
        TRAP, InteractionSpec(1.0, 1.0), ProbeParams(**PROBE_PARAMS), grid=g
    )
    assert res.lam_values == [1.0, LAM0]
    assert res.form_values[0] > 0.0  # isotropic state: contact dominates
    assert res.form_values[1] < 0.0
    assert res.lam_chosen == pytest.approx(LAM0, rel=1e-12)
    totals = res.totals
    assert len(totals) == 2
    assert totals[0] < 0.0 and totals[1] < totals[0]
    assert res.fitted_exponent == pytest.approx(3.1023897142248416, abs=1e-4)
    assert 2.5 <= res.fitted_exponent <= 3.2
    mass = float(np.sum(res.squeezed_state.density()) * g.h**3)
    assert mass == pytest.approx(1.0, rel=1e-9)


def test_probe_resolution_guard():
    g = BoxGrid(*PROBE_GRID)
    params = ProbeParams(
        base_width=2.4e-3, lam_list=(1.0, LAM0), ell_list=(1.0, 2.0, 4.0)
    )
    with pytest.raises(ResolutionExceeded) as err:
        instability_probe(TRAP, InteractionSpec(1.0, 1.0), params, grid=g)
    assert err.value.largest_valid == 2.0


def test_probe_breaks_down_without_a_negative_form():
    params = ProbeParams(base_width=1.0, lam_list=(1.0,), ell_list=(1.0, 2.0))
    with pytest.raises(NumericalBreakdown):
        instability_probe(TRAP, InteractionSpec(0.5, -1.0), params, grid=_grid32())


def test_hartree_zero_potential_equals_bare_gp():
    g = BoxGrid(16, 8.0)
    init = default_init(g, TRAP)
    hrun = hartree_ground_state(
        init, TRAP, gaussian_pair_potential(mass=0.0, width=1.0),
        HartreeScaling(beta=0.5, N=8),
    )
    grun = ground_state(init, TRAP, InteractionSpec(0.0, 0.0))
    assert not hrun.exploratory
    assert hrun.iterations == grun.iterations
    assert [eb.total for eb in hrun.energy_history] == [
        eb.total for eb in grun.energy_history
    ]
    assert np.array_equal(hrun.final_state.values, grun.final_state.values)


def test_hartree_exploratory_flag_for_negative_transform():
    neg = PairPotential(
        dipole_strength=0.0,
        axis=np.array([0.0, 0.0, 1.0]),
        description="negative gaussian transform",
        eval_fourier=lambda k: -0.2 * np.exp(-np.sum(np.asarray(k) ** 2, axis=-1)),
    )
    g = BoxGrid(16, 8.0)
    run = hartree_ground_state(
        default_init(g, TRAP), TRAP, neg, HartreeScaling(beta=0.5, N=16)
    )
    assert run.exploratory
    assert run.verdict == "Converged"
    pos = hartree_ground_state(
        default_init(g, TRAP), TRAP, gaussian_pair_potential(mass=1.0, width=1.0),
        HartreeScaling(beta=0.5, N=16),
    )
    assert not pos.exploratory


STUDY_POT = combine_potentials(
    dipole_pair_potential(d=1.0), gaussian_pair_potential(mass=1.0, width=1.0)
)


def test_convergence_study_rate_and_matching():
    g = _grid32()
    study = convergence_study(g, TRAP, STUDY_POT, 0.25, (16, 64, 256))
    assert study.matched_a == pytest.approx(4.0 * np.pi / 3.0 + 1.0, abs=1e-4)
    assert study.matched_b == pytest.approx(1.0)
    assert [r.verdict for r in study.rows] == ["Converged"] * 3
    assert study.gp_energy == pytest.approx(3.1519843219028814, abs=1e-6)
    sizes = [abs(r.gap) for r in study.rows]
    assert sizes[0] > sizes[1] > sizes[2]
    assert study.fitted_rate == pytest.approx(-0.3708563317999455, abs=5e-3)


def test_convergence_study_guards():
    g = BoxGrid(16, 8.0)
    with pytest.raises(AtLeastThreePoints):
        convergence_study(g, TRAP, STUDY_POT, 0.25, (16, 64))
    with pytest.raises(ValueError):
        convergence_study(g, TRAP, STUDY_POT, 0.25, (64, 16, 256))


def test_history_csv_is_byte_deterministic(tmp_path):
    g = BoxGrid(16, 8.0)
    spec = InteractionSpec(2.0, 0.2)
    paths = []
    for tag in ("one", "two"):
        run = ground_state(default_init(g, TRAP, seed=3, noise=0.1), TRAP, spec)
        path = tmp_path / f"history_{tag}.csv"
        write_history_csv(run, path)
        paths.append(path.read_bytes())
    assert paths[0] == paths[1]
    header = paths[0].decode().splitlines()[0]
    assert header == "iter,total,kinetic,potential,contact,dipolar,step,residual"
    n_lines = len(paths[0].decode().splitlines())
    assert n_lines >= 3

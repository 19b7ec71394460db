"""Batch front door: one TOML config in, tables and reports out.

Subcommands:
    dipgp run <config.toml>        execute the configured mode
    dipgp validate <config.toml>   parse + check without running
    dipgp version

Modes and their artifacts (all under output_dir, overridable through the
DIPGP_OUTPUT_DIR environment variable):

    ground_state       report.json, history.csv, field.raw/.json, slices
    hartree_study      report.json, history.csv (largest N), field dumps, slices
    instability_probe  report.json, probe_table.csv, slices of the squeezed state
    kernel_table       report.json, kernel_table.csv
    potential_audit    report.json

Exit codes: 0 success, 2 configuration problem (message names the offending
line or key), 3 numerical failure mid-run (partial artifacts are kept).

report.json always echoes the parsed config verbatim, so a report can be
re-run: feed the echoed dict back as TOML and the same numbers come out.
history.csv is byte-identical across reruns of the same config on the same
machine (iteration floats are written with repr-level precision).
"""

import argparse
import json
import os
import sys
import time
import warnings

import numpy as np

try:
    import tomllib as _toml
except ModuleNotFoundError:  # python < 3.11
    import tomli as _toml

from . import __version__
from .energy import InteractionSpec
from .errors import (
    DipGPError,
    NoLimit,
    NoRealSpaceForm,
    NumericalBreakdown,
    RefusedStable,
    RefusedUnstable,
    ResolutionExceeded,
)
from .grids import BoxGrid, save_field
from .kernels import dipolar_symbol, fibonacci_sphere, khat_closed_dipolar
from .minimize import (
    ProbeParams,
    SolverConfig,
    convergence_study,
    default_init,
    ground_state,
    instability_probe,
    write_history_csv,
)
from .potentials import (
    antiparallel_pair_potential,
    classical_stability_probe,
    combine_potentials,
    dipole_pair_potential,
    gaussian_pair_potential,
    harmonic_trap,
    quartic_trap,
    short_range_strength,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

MODES = (
    "ground_state",
    "hartree_study",
    "instability_probe",
    "kernel_table",
    "potential_audit",
)


class ConfigError(Exception):
    """Invalid configuration; message names the section.key at fault."""


def _need(table, section, key, kinds, errors):
    if key not in table:
        errors.append(f"{section}.{key}: missing")
        return None
    val = table[key]
    if not isinstance(val, kinds):
        errors.append(f"{section}.{key}: expected {kinds}, got {type(val).__name__}")
        return None
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        if not np.isfinite(val):
            errors.append(f"{section}.{key}: must be finite")
            return None
    return val


def load_config(path):
    """Parse the TOML file; syntax errors carry the parser's line/column."""
    with open(path, "rb") as fh:
        return _toml.load(fh)


def validate_config(raw):
    """Return a list of section.key-anchored problems; empty means valid."""
    errors = []
    mode = raw.get("mode")
    if mode not in MODES:
        errors.append(f"mode: must be one of {MODES}, got {mode!r}")

    grid = raw.get("grid", {})
    m = _need(grid, "grid", "M", int, errors)
    if m is not None:
        if m < 8 or (m & (m - 1)) != 0:
            errors.append(f"grid.M: must be a power of two >= 8, got {m}")
    lbox = _need(grid, "grid", "L_box", (int, float), errors)
    if lbox is not None and lbox <= 0:
        errors.append(f"grid.L_box: must be positive, got {lbox}")

    trap = raw.get("trap", {})
    ttype = trap.get("type", "harmonic")
    if ttype not in ("harmonic", "anisotropic-harmonic", "quartic"):
        errors.append(f"trap.type: unknown type {ttype!r}")
    if ttype in ("harmonic", "anisotropic-harmonic"):
        om = trap.get("omegas", [1.0, 1.0, 1.0])
        if not (isinstance(om, list) and len(om) == 3):
            errors.append("trap.omegas: expected a list of three frequencies")
        elif any((not isinstance(v, (int, float))) or v <= 0 or not np.isfinite(v)
                 for v in om):
            errors.append("trap.omegas: frequencies must be positive finite numbers")
    else:
        co = trap.get("coefficient", 1.0)
        if not isinstance(co, (int, float)) or co <= 0 or not np.isfinite(co):
            errors.append("trap.coefficient: must be a positive finite number")
    rot = trap.get("rotation", 0.0)
    if not isinstance(rot, (int, float)) or not np.isfinite(rot):
        errors.append("trap.rotation: must be a finite number")

    inter = raw.get("interaction", {})
    if mode in ("ground_state", "instability_probe", "kernel_table"):
        if mode != "kernel_table":
            _need(inter, "interaction", "a", (int, float), errors)
            _need(inter, "interaction", "b", (int, float), errors)
        sym = inter.get("symbol", "dipolar")
        if sym != "dipolar":
            errors.append(
                "interaction.symbol: only 'dipolar' is configurable here; "
                "custom angular weights are a library-level feature"
            )
        axis = inter.get("axis", [0.0, 0.0, 1.0])
        if not (isinstance(axis, list) and len(axis) == 3):
            errors.append("interaction.axis: expected a list of three components")
    if mode in ("hartree_study", "potential_audit"):
        pname = inter.get("potential")
        if pname not in ("w_dip", "wtilde_dip", "gaussian", "composite"):
            errors.append(
                "interaction.potential: must be one of w_dip, wtilde_dip, "
                f"gaussian, composite; got {pname!r}"
            )
        d = inter.get("d", 1.0)
        if not isinstance(d, (int, float)) or d <= 0 or not np.isfinite(d):
            errors.append("interaction.d: must be a positive finite number")
    if mode == "hartree_study":
        beta = _need(inter, "interaction", "beta", (int, float), errors)
        if beta is not None and not (0.0 <= beta < 1.0):
            errors.append(f"interaction.beta: must lie in [0, 1), got {beta}")
        nlist = _need(inter, "interaction", "N_list", list, errors)
        if nlist is not None:
            if len(nlist) < 3:
                errors.append("interaction.N_list: need at least three entries")
            elif sorted(nlist) != nlist:
                errors.append("interaction.N_list: must be ascending")

    solver = raw.get("solver", {})
    for key, default in (
        ("max_iters", 2000),
        ("step_init", 0.05),
        ("energy_tol", 1e-10),
        ("residual_tol", 1e-6),
    ):
        val = solver.get(key, default)
        if not isinstance(val, (int, float)) or val <= 0 or not np.isfinite(val):
            errors.append(f"solver.{key}: must be positive and finite")
    rule = solver.get("step_rule", "adaptive-BB-with-safeguard")
    if rule not in ("fixed", "adaptive-BB-with-safeguard"):
        errors.append(f"solver.step_rule: unknown rule {rule!r}")

    out = raw.get("output_dir")
    if not isinstance(out, str) or not out:
        errors.append("output_dir: missing or empty")
    return errors


# -- builders ------------------------------------------------------------


def _build_grid(raw):
    g = raw["grid"]
    return BoxGrid(g["M"], float(g["L_box"]))


def _build_trap(raw):
    t = raw.get("trap", {})
    rot = float(t.get("rotation", 0.0))
    if t.get("type", "harmonic") == "quartic":
        return quartic_trap(float(t.get("coefficient", 1.0)), rotation=rot)
    omegas = tuple(float(v) for v in t.get("omegas", [1.0, 1.0, 1.0]))
    return harmonic_trap(omegas, rotation=rot)


def _build_spec(raw):
    inter = raw["interaction"]
    axis = tuple(float(v) for v in inter.get("axis", [0.0, 0.0, 1.0]))
    return InteractionSpec(
        float(inter["a"]), float(inter["b"]), dipolar_symbol(axis)
    )


def _build_potential(raw):
    inter = raw["interaction"]
    name = inter["potential"]
    d = float(inter.get("d", 1.0))
    mass = float(inter.get("gaussian_mass", 1.0))
    width = float(inter.get("gaussian_width", 1.0))
    axis = tuple(float(v) for v in inter.get("axis", [0.0, 0.0, 1.0]))
    if name == "w_dip":
        return dipole_pair_potential(d, axis)
    if name == "wtilde_dip":
        return antiparallel_pair_potential(d, axis)
    if name == "gaussian":
        return gaussian_pair_potential(mass, width)
    return combine_potentials(
        dipole_pair_potential(d, axis), gaussian_pair_potential(mass, width)
    )


def _build_solver(raw):
    s = dict(raw.get("solver", {}))
    noise = float(s.pop("init_noise", 0.0))
    cfg = SolverConfig(
        max_iters=int(s.get("max_iters", 2000)),
        step_init=float(s.get("step_init", 0.05)),
        energy_tol=float(s.get("energy_tol", 1e-10)),
        residual_tol=float(s.get("residual_tol", 1e-6)),
        step_rule=s.get("step_rule", "adaptive-BB-with-safeguard"),
        seed=int(s.get("seed", 0)),
    )
    return cfg, noise


def _warn_rotation_guard(grid, trap):
    # smallness guard r|A| < 1/2 for the uniform-rotation gauge: warn only
    if trap.vector_potential is None:
        return
    x, y, z = grid.meshes
    a1, a2, a3 = trap.vector_potential(x, y, z)
    ra = np.sqrt(x * x + y * y + z * z) * np.sqrt(a1**2 + a2**2 + a3**2)
    peak = float(ra.max())
    if peak >= 0.5:
        warnings.warn(
            f"rotation gauge: max r|A| = {peak:.3g} >= 1/2 on this grid; "
            "smallness-based uniqueness is not guaranteed",
            RuntimeWarning,
        )


# -- artifact writers ----------------------------------------------------


def _write_pgm(path, plane):
    lo, hi = float(plane.min()), float(plane.max())
    span = hi - lo if hi > lo else 1.0
    img = np.round(255.0 * (plane - lo) / span).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def _write_slices(outdir, field):
    rho = field.density()
    m = field.grid.M
    _write_pgm(os.path.join(outdir, "slice_xz.pgm"), rho[:, m // 2, :])
    _write_pgm(os.path.join(outdir, "slice_xy.pgm"), rho[:, :, m // 2])


def _energy_record(eb, mu=None, residual=None):
    rec = eb.as_dict()
    rec["mu"] = mu
    rec["residual"] = residual
    return rec


# -- mode runners --------------------------------------------------------


def _run_ground_state(raw, outdir):
    grid = _build_grid(raw)
    trap = _build_trap(raw)
    spec = _build_spec(raw)
    cfg, noise = _build_solver(raw)
    _warn_rotation_guard(grid, trap)
    init = default_init(grid, trap, seed=cfg.seed, noise=noise)
    run = ground_state(init, trap, spec, cfg)
    write_history_csv(run, os.path.join(outdir, "history.csv"))
    save_field(run.final_state, os.path.join(outdir, "field"))
    _write_slices(outdir, run.final_state)
    totals = [eb.total for eb in run.energy_history]
    checks = [
        _check("converged", run.verdict == "Converged", f"verdict={run.verdict}"),
        _check(
            "monotone_history",
            all(
                totals[i + 1] <= totals[i] + 1e-12 * (1 + abs(totals[i]))
                for i in range(len(totals) - 1)
            ),
            f"{len(totals)} energies",
        ),
        _check(
            "residual_within_tol",
            run.residual <= cfg.residual_tol or run.verdict != "Converged",
            f"residual={run.residual:.3e}",
        ),
    ]
    results = {
        "classification": spec.classification(),
        "verdict": run.verdict,
        "iterations": run.iterations,
        "energy": _energy_record(run.final_energy, run.mu, run.residual),
    }
    return results, checks


def _run_instability_probe(raw, outdir):
    grid = _build_grid(raw)
    trap = _build_trap(raw)
    spec = _build_spec(raw)
    cls = spec.classification()
    if cls != "Unstable":
        raise ConfigError(f"spec is {cls}; probe requires Unstable")
    p = raw.get("probe", {})
    params = ProbeParams(
        base_width=float(p.get("base_width", 1.0)),
        lam_list=tuple(float(v) for v in p.get("lam_list", [1.0, 2.0, 4.0, 8.0])),
        ell_list=tuple(float(v) for v in p.get("ell_list", [1.0, 2.0, 4.0])),
        min_points=float(p.get("min_points", 2.0)),
        taper=bool(p.get("taper", True)),
    )
    res = instability_probe(trap, spec, params, grid=grid)
    with open(os.path.join(outdir, "probe_table.csv"), "w", newline="") as fh:
        fh.write("ell,total,kinetic,potential,contact,dipolar\n")
        for ell, eb in zip(res.ell_values, res.energies):
            fh.write(
                f"{ell:.17g},{eb.total:.17g},{eb.kinetic:.17g},"
                f"{eb.potential:.17g},{eb.contact:.17g},{eb.dipolar:.17g}\n"
            )
    _write_slices(outdir, res.squeezed_state)
    totals = res.totals
    checks = [
        _check("form_went_negative", res.form_values[-1] < 0.0,
               f"form={res.form_values[-1]:.3e} at lam={res.lam_chosen}"),
        _check("energies_decreasing",
               all(totals[i + 1] < totals[i] for i in range(len(totals) - 1)),
               f"totals={totals}"),
        _check("cubic_rate",
               res.fitted_exponent is not None
               and 2.5 <= res.fitted_exponent <= 3.2,
               f"exponent={res.fitted_exponent}"),
    ]
    results = {
        "classification": cls,
        "lam_values": res.lam_values,
        "form_values": res.form_values,
        "lam_chosen": res.lam_chosen,
        "ell_values": res.ell_values,
        "totals": totals,
        "fitted_exponent": res.fitted_exponent,
    }
    return results, checks


def _run_hartree_study(raw, outdir):
    grid = _build_grid(raw)
    trap = _build_trap(raw)
    pot = _build_potential(raw)
    cfg, noise = _build_solver(raw)
    inter = raw["interaction"]
    beta = float(inter["beta"])
    n_list = [int(n) for n in inter["N_list"]]
    init = default_init(grid, trap, seed=cfg.seed, noise=noise)
    study = convergence_study(grid, trap, pot, beta, n_list, cfg, init=init)
    if study.final_run is not None:
        write_history_csv(study.final_run, os.path.join(outdir, "history.csv"))
        save_field(study.final_run.final_state, os.path.join(outdir, "field"))
        _write_slices(outdir, study.final_run.final_state)
    gaps = [abs(r.gap) for r in study.rows]
    checks = [
        _check("all_converged",
               all(r.verdict == "Converged" for r in study.rows),
               ",".join(r.verdict for r in study.rows)),
        _check("gap_shrinking", gaps == sorted(gaps, reverse=True),
               f"gaps={gaps}"),
    ]
    results = {
        "matched_a": study.matched_a,
        "matched_b": study.matched_b,
        "gp_energy": study.gp_energy,
        "fitted_rate": study.fitted_rate,
        "rows": [
            {
                "N": r.n_particles,
                "energy": _energy_record(r.energy),
                "gap": r.gap,
                "verdict": r.verdict,
            }
            for r in study.rows
        ],
    }
    return results, checks


def _run_kernel_table(raw, outdir):
    grid_sec = raw.get("kernel_table", {})
    n_dirs = int(grid_sec.get("n_directions", 64))
    quad_order = int(grid_sec.get("quad_order", 50))
    inter = raw.get("interaction", {})
    axis = tuple(float(v) for v in inter.get("axis", [0.0, 0.0, 1.0]))
    symbol = dipolar_symbol(axis)
    dirs = fibonacci_sphere(n_dirs)
    # khat_on_directions would take the closed-form shortcut for the dipolar
    # weight, which is the very thing the table is checked against; go
    # through the generic quadrature instead.
    from .kernels import khat_quadrature

    quad = np.array(
        [khat_quadrature(symbol, d, quad_order=quad_order) for d in dirs]
    )
    closed = khat_closed_dipolar(dirs, axis=axis)
    diff = np.abs(quad - closed)
    with open(os.path.join(outdir, "kernel_table.csv"), "w", newline="") as fh:
        fh.write("nx,ny,nz,quadrature,closed_form,abs_diff\n")
        for v, q, c, e in zip(dirs, quad, closed, diff):
            fh.write(
                f"{v[0]:.17g},{v[1]:.17g},{v[2]:.17g},"
                f"{q:.17g},{c:.17g},{e:.17g}\n"
            )
    checks = [
        _check("quadrature_matches_closed_form", float(diff.max()) <= 1e-6,
               f"max_abs_diff={float(diff.max()):.3e}")
    ]
    results = {
        "n_directions": n_dirs,
        "quad_order": quad_order,
        "max_abs_diff": float(diff.max()),
        "multiplier_min": float(quad.min()),
        "multiplier_max": float(quad.max()),
    }
    return results, checks


def _run_potential_audit(raw, outdir):
    grid = _build_grid(raw)
    inter = raw.get("interaction", {})
    pot = _build_potential(raw)
    n_trials = int(inter.get("audit_trials", 1000))
    seed = int(raw.get("solver", {}).get("seed", 0))

    kx, ky, kz = grid.kmeshes
    kvecs = np.stack([kx, ky, kz], axis=-1)
    what = np.asarray(pot.eval_fourier(kvecs), dtype=float)
    transform_min = float(what.min())

    try:
        strength = short_range_strength(pot)
    except NoLimit:
        strength = None
    try:
        origin = pot.at_origin()
    except NoRealSpaceForm:
        origin = None

    probe = classical_stability_probe(pot, n_particles=16, n_trials=n_trials, seed=seed)
    bound = -16 * probe.w_at_origin / 2.0

    d = pot.dipole_strength
    checks = [
        _check("positive_type", transform_min >= -1e-12,
               f"min transform on lattice = {transform_min:.3e}"),
        _check("classically_stable", probe.min_total >= bound - 1e-12,
               f"min={probe.min_total:.6f} bound={bound:.6f}"),
    ]
    if d > 0 and strength is not None:
        expect = 4.0 * np.pi / 3.0 * d * d
        checks.append(
            _check("short_range_strength", abs(strength - expect) <= 1e-4,
                   f"strength={strength!r} expected={expect!r}")
        )
    results = {
        "description": pot.description,
        "dipole_strength": d,
        "dipolar_coupling": pot.dipolar_coupling,
        "short_range_strength": strength,
        "transform_min": transform_min,
        "origin_value": origin,
        "classical_probe": {
            "min_total": probe.min_total,
            "min_per_particle": probe.min_per_particle,
            "bound": bound,
            "argmin_family": probe.argmin_family,
            "n_configurations": probe.n_configurations,
        },
    }
    return results, checks


def _check(name, passed, detail=""):
    return {"name": name, "passed": bool(passed), "detail": detail}


_RUNNERS = {
    "ground_state": _run_ground_state,
    "hartree_study": _run_hartree_study,
    "instability_probe": _run_instability_probe,
    "kernel_table": _run_kernel_table,
    "potential_audit": _run_potential_audit,
}


def _resolve_outdir(raw):
    outdir = os.environ.get("DIPGP_OUTPUT_DIR") or raw["output_dir"]
    os.makedirs(outdir, exist_ok=True)
    if not os.access(outdir, os.W_OK):
        raise ConfigError(f"output_dir: {outdir!r} is not writable")
    return outdir


def _write_report(outdir, raw, mode, results, checks, t0, error=None):
    report = {
        "config": raw,
        "version": __version__,
        "mode": mode,
        "wall_time_s": time.time() - t0,
        "thread_count": os.cpu_count(),
        "results": results,
        "checks": checks,
    }
    if error is not None:
        report["error"] = error
    with open(os.path.join(outdir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, default=float)
        fh.write("\n")


def cmd_run(path):
    t0 = time.time()
    try:
        raw = load_config(path)
    except FileNotFoundError:
        print(f"error: no such config file: {path}", file=sys.stderr)
        return EXIT_CONFIG
    except _toml.TOMLDecodeError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    problems = validate_config(raw)
    if problems:
        for p in problems:
            print(f"error: {path}: {p}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        outdir = _resolve_outdir(raw)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    mode = raw["mode"]
    try:
        results, checks = _RUNNERS[mode](raw, outdir)
    except (ConfigError, RefusedUnstable, RefusedStable) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalBreakdown, ResolutionExceeded, DipGPError) as exc:
        _write_report(outdir, raw, mode, {}, [], t0,
                      error=f"{type(exc).__name__}: {exc}")
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _write_report(outdir, raw, mode, results, checks, t0)
    failed = [c["name"] for c in checks if not c["passed"]]
    status = "ok" if not failed else f"failed checks: {', '.join(failed)}"
    print(f"{mode}: {status}; report in {outdir}/report.json")
    return EXIT_OK


def cmd_validate(path):
    try:
        raw = load_config(path)
    except FileNotFoundError:
        print(f"error: no such config file: {path}", file=sys.stderr)
        return EXIT_CONFIG
    except _toml.TOMLDecodeError as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    problems = validate_config(raw)
    if problems:
        for p in problems:
            print(f"error: {path}: {p}", file=sys.stderr)
        return EXIT_CONFIG
    g = raw["grid"]
    print(
        f"config OK: mode={raw['mode']}, grid {g['M']}^3 on box {g['L_box']}, "
        f"output_dir={raw['output_dir']}"
    )
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="dipgp",
        description="dipolar mean-field toolbox: ground states, collapse "
        "probes, kernel tables, potential audits",
    )
    sub = parser.add_subparsers(dest="command")
    p_run = sub.add_parser("run", help="execute a config")
    p_run.add_argument("config")
    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("config")
    sub.add_parser("version", help="print the library version")
    args = parser.parse_args(argv)

    if args.command == "run":
        return cmd_run(args.config)
    if args.command == "validate":
        return cmd_validate(args.config)
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    parser.print_help()
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

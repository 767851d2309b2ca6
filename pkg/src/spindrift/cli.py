"""Command-line front end: configuration, pipelines, CSV export.

Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 I/O error.
"""

import functools
import os
import sys

import click
import numpy as np

from . import crystal, diffusion, dipolar, io, linewidth, oracle, particle, scaling
from .config import ConfigError, load

click.UsageError.exit_code = 1


def _fail(code, message):
    click.echo(f"spindrift: error: {message}", err=True)
    sys.exit(code)


def guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            _fail(1, str(exc))
        except FileExistsError as exc:
            _fail(3, str(exc))
        except OSError as exc:
            _fail(3, str(exc))
        except (ValueError, RuntimeError, ArithmeticError) as exc:
            _fail(2, str(exc))
    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="YAML run configuration.")
@click.option("--profile", type=click.Choice(["desk", "paper"]), default=None,
              help="Preset ensemble sizes (desk: quick, paper: full statistics).")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker processes for ensemble loops.")
@click.option("--out-dir", type=click.Path(), default=".", show_default=True)
@click.option("--force", is_flag=True, help="Overwrite existing output files.")
@click.pass_context
def main(ctx, config_path, profile, seed, threads, out_dir, force):
    """Spin-diffusion simulation toolkit for dilute-spin cubic crystals."""
    ctx.ensure_object(dict)
    try:
        cfg = load(config_path, profile=profile, seed=seed)
    except ConfigError as exc:
        _fail(1, str(exc))
    ctx.obj.update(cfg=cfg, threads=threads, out_dir=out_dir, force=force)


def _out(ctx, name):
    return os.path.join(ctx.obj["out_dir"], name)


def _structures(cfg):
    return [crystal.CubicStructure(kind, cfg.lattice_constant)
            for kind in cfg.structures]


def _cutoff_table(cfg, structure):
    return dipolar.CutoffTable(
        structure, extent=cfg.extent, ensemble_size=cfg.cutoff_ensemble,
        threshold=cfg.cutoff_threshold, seed=cfg.seed, gamma=cfg.gamma)


@main.command()
@click.pass_context
@guarded
def cutoffs(ctx):
    """Tabulate 95% coupling cut-off radii over the abundance grid."""
    cfg = ctx.obj["cfg"]
    rows = []
    for structure in _structures(cfg):
        table = _cutoff_table(cfg, structure)
        rows.extend(table.rows(cfg.abundances_percent))
    path = _out(ctx, "cutoffs.csv")
    io.write_csv(path, ["structure", "abundance_percent", "weight_kind",
                        "threshold", "radius_angstrom", "contained_fraction"],
                 rows, cfg.hash(), cfg.seed, ctx.obj["force"])
    click.echo(path)


@main.command("linewidth")
@click.pass_context
@guarded
def linewidth_cmd(ctx):
    """Powder-averaged SQ/ZQ line widths per abundance."""
    cfg = ctx.obj["cfg"]
    rows = []
    for structure in _structures(cfg):
        table = _cutoff_table(cfg, structure)
        for f_pct in cfg.abundances_percent:
            cut = table.lookup(f_pct / 100.0, "d2")
            lw = linewidth.powder_linewidths(
                structure, f_pct / 100.0, cut, n_lattices=cfg.n_lattices,
                n_orientations=cfg.n_orientations, seed=cfg.seed,
                gamma=cfg.gamma, extent=cfg.extent,
                rate_weighted=cfg.rate_weighted_targets,
                n_workers=ctx.obj["threads"])
            rows.append({
                "structure": structure.kind,
                "abundance_percent": f_pct,
                "fwhm_sq_hz": lw.fwhm_sq,
                "fwhm_zq_hz": lw.fwhm_zq,
                "std_hz": lw.std_zq,
                "n_lattices": lw.n_lattices,
                "n_orientations": lw.n_orientations,
                "seed": lw.seed,
            })
    path = _out(ctx, "linewidths.csv")
    io.write_csv(path, ["structure", "abundance_percent", "fwhm_sq_hz",
                        "fwhm_zq_hz", "std_hz", "n_lattices", "n_orientations",
                        "seed"], rows, cfg.hash(), cfg.seed, ctx.obj["force"])
    click.echo(path)


@main.command("diffusion")
@click.pass_context
@guarded
def diffusion_cmd(ctx):
    """Abundance sweep of both diffusion estimators."""
    cfg = ctx.obj["cfg"]
    all_rows = []
    for structure in _structures(cfg):
        table = _cutoff_table(cfg, structure)
        rows, errors = diffusion.abundance_sweep(
            structure, [f / 100.0 for f in cfg.abundances_percent], table,
            n_lattices=cfg.n_lattices, n_orientations=cfg.n_orientations,
            seed=cfg.seed, gamma=cfg.gamma, extent=cfg.extent,
            poisson_correction=cfg.poisson_correction,
            n_workers=ctx.obj["threads"])
        all_rows.extend(rows)
        for f, err in errors:
            click.echo(f"abundance {f * 100:g}% failed: {err}", err=True)
    if not all_rows:
        raise RuntimeError("every abundance failed")
    path = _out(ctx, "diffusion_sweep.csv")
    io.write_csv(path, ["structure", "abundance_percent", "method",
                        "D_nm2_per_s", "fwhm_zq_hz", "p0_s", "cutoff_angstrom",
                        "seed", "fwhm_sq_hz", "r_nn_angstrom", "r_nn_clamped"],
                 all_rows, cfg.hash(), cfg.seed, ctx.obj["force"])
    click.echo(path)


@main.command("scaling")
@click.argument("sweep_csvs", nargs=-1, required=True, type=click.Path(exists=True))
@click.pass_context
@guarded
def scaling_cmd(ctx, sweep_csvs):
    """Fit the width and D/p(0) power laws from diffusion sweep CSVs."""
    cfg = ctx.obj["cfg"]
    by_structure = {}
    for path in sweep_csvs:
        for row in io.read_sweep_csv(path):
            by_structure.setdefault(row["structure"], []).append(row)
    fits = {}
    for kind, rows in by_structure.items():
        lat = [r for r in rows if r["method"] == "lattice-sum"]
        zq_pts = [(r["abundance_percent"], r["fwhm_zq_hz"]) for r in lat]
        d_pts = [(r["abundance_percent"], r["D_nm2_per_s"] / r["p0_s"]) for r in lat]
        fits[kind] = (
            scaling.fit_power_law(zq_pts, "zq-width", kind, cfg.gamma,
                                  cfg.lattice_constant),
            scaling.fit_power_law(d_pts, "d-over-p0", kind, cfg.gamma,
                                  cfg.lattice_constant),
        )
    path = _out(ctx, "scaling_fits.csv")
    io.write_csv(path, ["structure", "u_zq", "u_zq_err", "m_zq", "m_zq_err",
                        "u_d", "u_d_err", "m_d", "m_d_err"],
                 scaling.fit_rows(fits), cfg.hash(), cfg.seed, ctx.obj["force"])
    click.echo(path)


@main.group("particle")
def particle_group():
    """Core-shell nanoparticle build-up/decay simulation and fitting."""


def _particle_setup(cfg):
    p = cfg.particle
    geometry = particle.ParticleGeometry(p["radius_nm"], p["shell_nm"],
                                         p["n_elements"])
    if cfg.diffusion_source == "value":
        d_val = cfg.diffusion_value
    else:
        structure = _structures(cfg)[0]
        table = _cutoff_table(cfg, structure)
        f = cfg.abundances_percent[0] / 100.0
        cut = table.lookup(f, "d2")
        lw = linewidth.powder_linewidths(
            structure, f, cut, n_lattices=cfg.n_lattices,
            n_orientations=cfg.n_orientations, seed=cfg.seed, gamma=cfg.gamma,
            extent=cfg.extent)
        if cfg.diffusion_source == "nearest-neighbor":
            r_nn, _ = crystal.nn_distance(f, structure, cfg.poisson_correction)
            d_val = diffusion.d_nearest_neighbor(lw.fwhm_zq, r_nn).value
        else:
            p0 = linewidth.p_zero(lw.fwhm_zq)
            d_val = diffusion.d_lattice_sum(
                structure, f, p0, table.lookup(f, "d2r2"),
                n_lattices=cfg.n_lattices, n_orientations=cfg.n_orientations,
                seed=cfg.seed, gamma=cfg.gamma, extent=cfg.extent).value
    return geometry, d_val


@particle_group.command("sim")
@click.option("--kind", type=click.Choice(["build-up", "decay"]), required=True)
@click.option("--t1-in", type=float, required=True, help="Core T1 in hours.")
@click.option("--t1-out", type=float, required=True, help="Shell T1 in hours.")
@click.option("--duration-h", type=float, default=24.0, show_default=True)
@click.option("--n-points", type=int, default=200, show_default=True)
@click.option("--initial", type=float, default=1.0, show_default=True,
              help="Uniform initial polarization for decays.")
@click.pass_context
@guarded
def particle_sim(ctx, kind, t1_in, t1_out, duration_h, n_points, initial):
    """Simulate one trace at fixed relaxation times."""
    cfg = ctx.obj["cfg"]
    geometry, d_val = _particle_setup(cfg)
    times = np.linspace(0.0, duration_h * particle.HOUR, n_points + 1)[1:]
    if kind == "build-up":
        trace, _ = particle.simulate_buildup(
            geometry, d_val, t1_in, t1_out, cfg.particle["p_shell"], times)
    else:
        trace = particle.simulate_decay(geometry, d_val, t1_in, t1_out,
                                        initial, times)
    path = _out(ctx, f"particle_{kind}.csv")
    io.write_trace_csv(path, trace, cfg.hash(), cfg.seed, ctx.obj["force"])
    click.echo(f"{path} (D = {d_val:.3g} nm^2/s)")


@particle_group.command("fit")
@click.argument("trace_csv", type=click.Path(exists=True))
@click.option("--kind", type=click.Choice(["build-up", "decay"]), default="decay",
              show_default=True)
@click.option("--initial", type=float, default=1.0, show_default=True)
@click.pass_context
@guarded
def particle_fit(ctx, trace_csv, kind, initial):
    """Grid-search T1_in/T1_out against an experimental trace CSV."""
    cfg = ctx.obj["cfg"]
    geometry, d_val = _particle_setup(cfg)
    trace = io.read_trace_csv(trace_csv, kind)
    g = cfg.t1_grid
    grid = particle.T1GridSpec((g["min_h"], g["max_h"]), (g["min_h"], g["max_h"]),
                               g["n"], g["refine"], g["polish"])
    fit = particle.fit_t1(trace, geometry, d_val, grid,
                          p_shell=cfg.particle["p_shell"], initial=initial)
    fit_path = _out(ctx, "t1_fit.csv")
    io.write_csv(fit_path, ["t1_in_h", "t1_out_h", "residue", "insensitive",
                            "sensitivity_ratio", "D_nm2_per_s"],
                 [{"t1_in_h": fit.t1_in, "t1_out_h": fit.t1_out,
                   "residue": fit.residue, "insensitive": fit.insensitive,
                   "sensitivity_ratio": fit.sensitivity_ratio,
                   "D_nm2_per_s": d_val}],
                 cfg.hash(), cfg.seed, ctx.obj["force"])
    surf_path = _out(ctx, "t1_residue_surface.csv")
    io.write_csv(surf_path, ["t1_in_h", "t1_out_h", "residue"],
                 ({"t1_in_h": a, "t1_out_h": b, "residue": c}
                  for a, b, c in fit.surface),
                 cfg.hash(), cfg.seed, ctx.obj["force"])
    if fit.insensitive:
        click.echo("warning: residue surface is flat to <1%; the data do not "
                   "constrain the relaxation times", err=True)
    click.echo(f"{fit_path} t1_in={fit.t1_in:.3g} h t1_out={fit.t1_out:.3g} h")


@main.command()
@click.option("--n-systems", type=int, default=200, show_default=True)
@click.pass_context
@guarded
def calibrate(ctx, n_systems):
    """Exact-diagonalization calibration of the moment constants."""
    cfg = ctx.obj["cfg"]
    record = oracle.calibrate(n_systems=n_systems, seed=cfg.seed)
    path = _out(ctx, "moment_constants.txt")
    if os.path.exists(path) and not ctx.obj["force"]:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write("# Moment-constant calibration record.\n")
        fh.write(f"version = {io.VERSION}\n")
        for key in ("seed", "n_systems", "c_sq", "c_sq_spread", "c_zq",
                    "c_zq_spread", "sq_exchange_enhancement"):
            fh.write(f"{key} = {record[key]:.17g}\n" if isinstance(record[key], float)
                     else f"{key} = {record[key]}\n")
    click.echo(f"{path} c_sq={record['c_sq']:.12g} c_zq={record['c_zq']:.12g}")


if __name__ == "__main__":
    main()

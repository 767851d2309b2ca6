"""Spin-diffusion coefficients from line widths.

Two estimators:

* nearest-neighbor: D_NN = (FWHM / 30) * r_NN^2, with the statistical
  nearest-neighbor distance of the dilute lattice;
* lattice sum: D_lat = sum_j (pi^3/2) d_ij^2 r_ij^2 p(0), the flip-flop-rate
  Taylor expansion summed over occupied sites within the d^2 r^2 cut-off.

The lattice-sum coefficient pi^3/2 = (pi/8) (2 pi)^2 evaluates the flip-flop
weight on angular-frequency couplings; it is pinned end-to-end by the silicon
benchmark chain (see tests).  Couplings stay in Hz and p(0) in s at the API.
"""

import concurrent.futures
from dataclasses import dataclass, field

import numpy as np

from . import crystal, kernels, linewidth
from .constants import ANGSTROM2_TO_NM2, GAMMA_SI29, dipolar_prefactor_hz

# angular-frequency convention of the d^2 r^2 flip-flop weight
LATTICE_SUM_COEFF = np.pi**3 / 2.0

METHODS = ("nearest-neighbor", "lattice-sum")


@dataclass(frozen=True)
class DiffusionCoefficient:
    value: float              # nm^2/s
    method: str
    structure_kind: str
    abundance: float
    p0: float | None          # s, None for the nearest-neighbor estimator
    fwhm_zq: float | None     # Hz
    cutoff_radius: float | None  # A
    seed: int | None
    n_lattices: int | None
    n_orientations: int | None
    isolated: bool = False
    per_lattice: np.ndarray | None = field(default=None, repr=False)


def flip_flop_rate(d_hz, p0):
    """W = (pi/2) d^2 p(0) in 1/s; d in Hz, p0 a SpectralDensity or s."""
    p = getattr(p0, "p0", p0)
    if p <= 0:
        raise ValueError("p0 must be positive")
    return 0.5 * np.pi * d_hz**2 * p


def d_nearest_neighbor(fwhm_dd, r_nn, structure_kind="diamond", abundance=None):
    """D_NN = (FWHM/30) r_NN^2; FWHM in Hz, r_NN in A, result in nm^2/s."""
    if fwhm_dd <= 0 or r_nn <= 0:
        raise ValueError("need positive line width and distance")
    value = fwhm_dd / 30.0 * r_nn**2 * ANGSTROM2_TO_NM2
    return DiffusionCoefficient(
        value=value, method="nearest-neighbor", structure_kind=structure_kind,
        abundance=abundance, p0=None, fwhm_zq=fwhm_dd, cutoff_radius=None,
        seed=None, n_lattices=None, n_orientations=None)


def _lattice_d_sum(args):
    structure, extent, abundance, seed, member, rc, dirs = args
    lat = crystal.occupy(structure, extent, abundance, seed, member=member)
    rel = np.delete(lat.sites, lat.central_index, axis=0)
    r = np.linalg.norm(rel, axis=1)
    sel = (r > 1e-9) & (r <= rc)
    if not sel.any():
        return member, np.zeros(len(dirs)), True
    rs = r[sel]
    unit = np.ascontiguousarray(rel[sel] / rs[:, None])
    sums = kernels.weighted_d2_sums(unit, np.ascontiguousarray(rs**-3),
                                    np.ascontiguousarray(rs**2), dirs)
    return member, sums, False


def d_lattice_sum(structure, abundance, p0, cutoff, n_lattices=100,
                  n_orientations=1597, seed=0, gamma=GAMMA_SI29, extent=15,
                  n_workers=1):
    """Ensemble- and powder-averaged lattice-sum diffusion coefficient.

    ``cutoff`` is the d^2 r^2 CouplingCutoff (or radius in A); ``p0`` the
    zero-frequency ZQ density for the same (structure, abundance).
    """
    rc = getattr(cutoff, "radius", cutoff)
    p = getattr(p0, "p0", p0)
    orients, weights, n_used = crystal.zcw_orientations(n_orientations)
    dirs = np.ascontiguousarray(crystal.orientation_directions(orients))
    jobs = [(structure, extent, abundance, seed, m, rc, dirs)
            for m in range(n_lattices)]
    if n_workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_lattice_d_sum, jobs, chunksize=1))
    else:
        results = [_lattice_d_sum(j) for j in jobs]
    sums = np.zeros((n_lattices, n_used))
    isolated = np.zeros(n_lattices, dtype=bool)
    for member, s, iso in sorted(results, key=lambda r: r[0]):
        sums[member], isolated[member] = s, iso
    pref2 = dipolar_prefactor_hz(gamma, gamma) ** 2
    per_lattice = LATTICE_SUM_COEFF * pref2 * (sums @ weights) * p * ANGSTROM2_TO_NM2
    return DiffusionCoefficient(
        value=float(per_lattice.mean()), method="lattice-sum",
        structure_kind=structure.kind, abundance=abundance, p0=p,
        fwhm_zq=None, cutoff_radius=rc, seed=seed, n_lattices=n_lattices,
        n_orientations=n_used, isolated=bool(isolated.all()),
        per_lattice=per_lattice)


def abundance_sweep(structure, abundances, cutoff_table, n_lattices=100,
                    n_orientations=1597, seed=0, gamma=GAMMA_SI29, extent=15,
                    poisson_correction=False, n_workers=1, p0_override=None):
    """Full pipeline per abundance: ZQ line -> p0 -> both D estimators.

    Returns (rows, errors): one row dict per (abundance, method); failures
    are collected per abundance without aborting the sweep.  ``p0_override``
    injects an experimentally tabulated SpectralDensity in place of the
    simulated Gaussian.
    """
    rows, errors = [], []
    for f in abundances:
        try:
            c_d2 = cutoff_table.lookup(f, "d2")
            c_d2r2 = cutoff_table.lookup(f, "d2r2")
            lw = linewidth.powder_linewidths(
                structure, f, c_d2, n_lattices=n_lattices,
                n_orientations=n_orientations, seed=seed, gamma=gamma,
                extent=extent, n_workers=n_workers)
            p0 = p0_override or linewidth.p_zero(lw.fwhm_zq)
            r_nn, clamped = crystal.nn_distance(f, structure, poisson_correction)
            d_nn = d_nearest_neighbor(lw.fwhm_zq, r_nn, structure.kind, f)
            d_lat = d_lattice_sum(
                structure, f, p0, c_d2r2, n_lattices=n_lattices,
                n_orientations=n_orientations, seed=seed, gamma=gamma,
                extent=extent, n_workers=n_workers)
            common = {
                "structure": structure.kind,
                "abundance_percent": f * 100.0,
                "fwhm_zq_hz": lw.fwhm_zq,
                "fwhm_sq_hz": lw.fwhm_sq,
                "p0_s": p0.p0,
                "seed": seed,
            }
            rows.append({**common, "method": "nearest-neighbor",
                         "D_nm2_per_s": d_nn.value,
                         "cutoff_angstrom": c_d2.radius,
                         "r_nn_angstrom": r_nn, "r_nn_clamped": clamped})
            rows.append({**common, "method": "lattice-sum",
                         "D_nm2_per_s": d_lat.value,
                         "cutoff_angstrom": c_d2r2.radius,
                         "r_nn_angstrom": "", "r_nn_clamped": ""})
        except Exception as exc:
            errors.append((f, repr(exc)))
    return rows, errors

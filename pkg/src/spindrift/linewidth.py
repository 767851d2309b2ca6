"""SQ and ZQ second moments of the three-spin model, powder averaged.

The moment formulas act on secular detunings of the central spin:

    M2_SQ = c_sq * sum_k d_ik^2
    M2_ZQ = c_zq * mean_j sum_k (d_ik - d_jk)^2

with targets j inside the d^2 cut-off radius, background spins k inside twice
the cut-off of either pair member, and the constants pinned by the
exact-diagonalization calibration (oracle module; c_sq = 1, c_zq = 1/2).
Widths assume a Gaussian line: FWHM = 2 sqrt(2 ln2 M2).
"""

import concurrent.futures
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import crystal, kernels
from .constants import GAMMA_SI29, dipolar_prefactor_hz

GAUSS_FWHM = 2.0 * np.sqrt(2.0 * np.log(2.0))
# peak height of a unit-area Gaussian times its FWHM
GAUSS_P0_FWHM = 2.0 * np.sqrt(np.log(2.0) / np.pi)


class DegenerateAbundanceError(RuntimeError):
    """Every ensemble member was an isolated spin; no line width exists."""


def load_moment_constants():
    """(c_sq, c_zq) from the packaged calibration record."""
    text = resources.files("spindrift.data").joinpath("moment_constants.txt").read_text()
    values = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if "=" in line:
            key, val = (s.strip() for s in line.split("=", 1))
            values[key] = val
    return float(values["c_sq"]), float(values["c_zq"])


C_SQ, C_ZQ = load_moment_constants()


@dataclass(frozen=True)
class MomentResult:
    """Per-(lattice, orientation) second moments in Hz^2."""

    m2_sq: np.ndarray = field(repr=False)   # (n_lattices, n_orientations)
    m2_zq: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)  # ZCW weights (n_orientations,)
    isolated: np.ndarray = field(repr=False)  # per-lattice flag

    def orientation_means(self, which="zq"):
        m = self.m2_zq if which == "zq" else self.m2_sq
        return m.mean(axis=0)

    def lattice_means(self, which="zq"):
        m = self.m2_zq if which == "zq" else self.m2_sq
        return m @ self.weights

    def grand_mean(self, which="zq"):
        return float(self.lattice_means(which).mean())


@dataclass(frozen=True)
class LineWidthResult:
    structure_kind: str
    abundance: float
    fwhm_sq: float           # Hz
    fwhm_zq: float           # Hz
    std_sq: float            # std of per-lattice widths, Hz
    std_zq: float
    n_orientations: int
    n_lattices: int
    seed: int
    moments: MomentResult = field(repr=False)


@dataclass(frozen=True)
class SpectralDensity:
    """Normalized ZQ line evaluated at zero frequency, in s (per Hz)."""

    p0: float
    source: str = "gaussian-from-fwhm"

    def __post_init__(self):
        if self.p0 <= 0:
            raise ValueError("p0 must be positive")


def fwhm_from_m2(m2):
    return GAUSS_FWHM * np.sqrt(np.maximum(m2, 0.0))


def p_zero(fwhm_hz=None, tabulated=None):
    """Zero-frequency spectral density.

    Gaussian mode: p0 = 2 sqrt(ln2/pi) / FWHM.  Tabulated mode takes
    (offset_hz, density) samples, normalizes to unit area and evaluates at
    zero offset.
    """
    if tabulated is not None:
        nu, p = (np.asarray(a, dtype=float) for a in tabulated)
        area = np.trapezoid(p, nu)
        if not np.isfinite(area) or area <= 0:
            raise ValueError("tabulated line shape is not normalizable")
        return SpectralDensity(float(np.interp(0.0, nu, p / area)), "experimental-tabulated")
    if fwhm_hz is None or fwhm_hz <= 0:
        raise ValueError("need a positive FWHM or a tabulated line")
    return SpectralDensity(GAUSS_P0_FWHM / fwhm_hz, "gaussian-from-fwhm")


def _window_geometry(sites, central_index, rc):
    """Split an occupied lattice into SQ window / target / ZQ pair arrays."""
    rel = np.delete(sites, central_index, axis=0)
    r = np.linalg.norm(rel, axis=1)
    win = r <= 2.0 * rc
    pw, rw = rel[win], r[win]
    unit_w = pw / rw[:, None]
    inv3_w = rw**-3

    t_sel = rw <= rc
    t_pos, t_r = pw[t_sel], rw[t_sel]
    i_unit, i_inv3, j_unit, j_inv3 = [], [], [], []
    offsets = [0]
    for tp in t_pos:
        rel_j = rel - tp
        r_j = np.linalg.norm(rel_j, axis=1)
        bg = ((r <= 2.0 * rc) | (r_j <= 2.0 * rc)) & (r_j > 1e-9) & (r > 1e-9)
        rb_i, rb_j = r[bg], r_j[bg]
        i_unit.append(rel[bg] / rb_i[:, None])
        i_inv3.append(rb_i**-3)
        j_unit.append(rel_j[bg] / rb_j[:, None])
        j_inv3.append(rb_j**-3)
        offsets.append(offsets[-1] + int(bg.sum()))

    def cat(parts, width=None):
        if not parts:
            return np.zeros((0, 3)) if width else np.zeros(0)
        return np.ascontiguousarray(np.concatenate(parts))

    return {
        "sq_unit": np.ascontiguousarray(unit_w),
        "sq_inv3": np.ascontiguousarray(inv3_w),
        "i_unit": cat(i_unit, 3), "i_inv3": cat(i_inv3),
        "j_unit": cat(j_unit, 3), "j_inv3": cat(j_inv3),
        "offsets": np.asarray(offsets, dtype=np.int64),
        "t_unit": np.ascontiguousarray(t_pos / np.where(t_r > 0, t_r, 1.0)[:, None])
                  if len(t_pos) else np.zeros((0, 3)),
        "t_inv3": np.ascontiguousarray(t_r**-3) if len(t_pos) else np.zeros(0),
    }


def m2_single_quantum(lattice, orientation, rc, gamma=GAMMA_SI29, c_sq=None):
    """SQ second moment (Hz^2) of the central spin for one orientation.

    Sums d_ik^2 over every occupied spin within twice the cut-off.  Returns
    (m2, isolated_flag).
    """
    geo = _window_geometry(lattice.sites, lattice.central_index, rc)
    if len(geo["sq_inv3"]) == 0:
        return 0.0, True
    dirs = np.ascontiguousarray(orientation.direction[None, :])
    s = kernels.weighted_d2_sums(geo["sq_unit"], geo["sq_inv3"],
                                 np.ones_like(geo["sq_inv3"]), dirs)[0]
    c = C_SQ if c_sq is None else c_sq
    return c * dipolar_prefactor_hz(gamma, gamma) ** 2 * s, False


def m2_zero_quantum(lattice, target_index, orientation, rc, gamma=GAMMA_SI29,
                    c_zq=None):
    """ZQ second moment (Hz^2) for the central<->target flip-flop.

    Background spins within twice the cut-off of either pair member; the
    detuning variance sum_k (d_ik - d_jk)^2 is scaled by the calibrated c_zq.
    Returns (m2, isolated_flag).
    """
    sites = lattice.sites
    rel = np.delete(sites, lattice.central_index, axis=0)
    tp = sites[target_index] - sites[lattice.central_index]
    if np.linalg.norm(tp) < 1e-12:
        raise ValueError("target must differ from the central spin")
    r = np.linalg.norm(rel, axis=1)
    rel_j = rel - tp
    r_j = np.linalg.norm(rel_j, axis=1)
    bg = ((r <= 2.0 * rc) | (r_j <= 2.0 * rc)) & (r_j > 1e-9) & (r > 1e-9)
    if not bg.any():
        return 0.0, True
    dirs = np.ascontiguousarray(orientation.direction[None, :])
    rb_i, rb_j = r[bg], r_j[bg]
    val = kernels.zq_detuning_sums(
        np.ascontiguousarray(rel[bg] / rb_i[:, None]), np.ascontiguousarray(rb_i**-3),
        np.ascontiguousarray(rel_j[bg] / rb_j[:, None]), np.ascontiguousarray(rb_j**-3),
        np.array([0, int(bg.sum())], dtype=np.int64),
        np.zeros((0, 3)), np.zeros(0), dirs, False)[0]
    c = C_ZQ if c_zq is None else c_zq
    return c * dipolar_prefactor_hz(gamma, gamma) ** 2 * val, False


def _lattice_sums(args):
    (structure, extent, abundance, seed, member, rc, dirs, rate_weighted) = args
    lat = crystal.occupy(structure, extent, abundance, seed, member=member)
    geo = _window_geometry(lat.sites, lat.central_index, rc)
    if len(geo["sq_inv3"]) == 0:
        n = len(dirs)
        return member, np.zeros(n), np.zeros(n), True
    sq = kernels.weighted_d2_sums(geo["sq_unit"], geo["sq_inv3"],
                                  np.ones_like(geo["sq_inv3"]), dirs)
    zq = kernels.zq_detuning_sums(geo["i_unit"], geo["i_inv3"],
                                  geo["j_unit"], geo["j_inv3"], geo["offsets"],
                                  geo["t_unit"], geo["t_inv3"], dirs, rate_weighted)
    return member, sq, zq, False


def powder_linewidths(structure, abundance, cutoff, n_lattices=100,
                      n_orientations=1597, seed=0, gamma=GAMMA_SI29,
                      extent=15, rate_weighted=False, n_workers=1):
    """Powder- and ensemble-averaged SQ/ZQ line widths.

    ``cutoff`` is the d^2 CouplingCutoff (or a radius in A) for this
    (structure, abundance).  The grand-averaged second moments (over lattices,
    ZCW orientations and targets) are converted to Gaussian FWHM values; the
    per-lattice width spread is reported as std.
    """
    rc = getattr(cutoff, "radius", cutoff)
    orients, weights, n_used = crystal.zcw_orientations(n_orientations)
    dirs = np.ascontiguousarray(crystal.orientation_directions(orients))
    jobs = [(structure, extent, abundance, seed, m, rc, dirs, rate_weighted)
            for m in range(n_lattices)]
    sq = np.zeros((n_lattices, n_used))
    zq = np.zeros((n_lattices, n_used))
    isolated = np.zeros(n_lattices, dtype=bool)
    if n_workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_lattice_sums, jobs, chunksize=1))
    else:
        results = [_lattice_sums(j) for j in jobs]
    for member, s, z, iso in sorted(results, key=lambda r: r[0]):
        sq[member], zq[member], isolated[member] = s, z, iso
    if isolated.all():
        raise DegenerateAbundanceError(
            f"all {n_lattices} lattices isolated at f={abundance}")
    pref2 = dipolar_prefactor_hz(gamma, gamma) ** 2
    moments = MomentResult(m2_sq=C_SQ * pref2 * sq, m2_zq=C_ZQ * pref2 * zq,
                           weights=weights, isolated=isolated)
    lat_sq = moments.lattice_means("sq")
    lat_zq = moments.lattice_means("zq")
    return LineWidthResult(
        structure_kind=structure.kind,
        abundance=abundance,
        fwhm_sq=float(fwhm_from_m2(lat_sq.mean())),
        fwhm_zq=float(fwhm_from_m2(lat_zq.mean())),
        std_sq=float(fwhm_from_m2(lat_sq).std()),
        std_zq=float(fwhm_from_m2(lat_zq).std()),
        n_orientations=n_used,
        n_lattices=n_lattices,
        seed=seed,
        moments=moments,
    )

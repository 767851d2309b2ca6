"""Secular dipolar couplings, cumulative coupling profiles and cut-off radii.

Couplings are reported in Hz (the angular-frequency expression divided by
2 pi); the moment formulas downstream are stated in Hz^2.
"""

from dataclasses import dataclass

import numpy as np

from . import crystal
from .constants import GAMMA_SI29, dipolar_prefactor_hz

WEIGHT_KINDS = ("d2", "d2r2")

# Abundance grid (percent) for which cut-off radii are tabulated; intermediate
# abundances use nearest-grid lookup.  The visible bumps this lookup produces
# in width/diffusion curves are expected and reported with results.
CUTOFF_GRID_PERCENT = (0.5, 1.0, 2.0, 4.7, 10.0, 20.0, 30.0, 50.0, 75.0, 100.0)


@dataclass(frozen=True)
class SpinSpecies:
    """Spin-1/2 species; gamma in rad/(s T), sign preserved."""

    gamma: float = GAMMA_SI29

    def __post_init__(self):
        if self.gamma == 0:
            raise ValueError("gamma must be nonzero")


@dataclass(frozen=True)
class CouplingCutoff:
    weight_kind: str
    threshold: float
    radius: float            # A
    contained_fraction: float
    abundance: float
    structure_kind: str


class BoxTooSmallError(RuntimeError):
    """Requested containment threshold is not reachable inside the box."""


class EmptyProfileError(RuntimeError):
    """Cumulative profile needs at least one spin besides the central one."""


def coupling(r_vec, direction, species_i=None, species_j=None):
    """Secular dipolar coupling d_ij in Hz for displacement r_vec (A).

    d = mu0/(4 pi) * hbar * gamma_i gamma_j / r^3 * (3 cos^2 theta - 1)/2,
    divided by 2 pi; theta is the angle to the field direction.  The sign of
    the gamma product is preserved.
    """
    species_i = species_i or SpinSpecies()
    species_j = species_j or SpinSpecies()
    r_vec = np.asarray(r_vec, dtype=float)
    r = np.linalg.norm(r_vec)
    if r == 0:
        raise ValueError("zero-length displacement has no dipolar coupling")
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    cos_t = float(r_vec @ n) / r
    pref = dipolar_prefactor_hz(species_i.gamma, species_j.gamma)
    sign = np.sign(species_i.gamma * species_j.gamma)
    return sign * pref / r**3 * (3.0 * cos_t**2 - 1.0) / 2.0


def geometric_couplings(sites, directions, gamma):
    """Couplings (Hz) from the origin to every site, for every direction.

    sites: (n, 3) A, directions: (m, 3) unit vectors.  Returns (n, m).
    """
    r = np.linalg.norm(sites, axis=1)
    unit = sites / r[:, None]
    proj = unit @ directions.T
    pref = dipolar_prefactor_hz(gamma, gamma)
    return pref * (3.0 * proj**2 - 1.0) * (0.5 / r**3)[:, None]


def cumulative_profile(lattice, weight_kind="d2", direction=(0.0, 0.0, 1.0), gamma=None):
    """Distance-sorted cumulative coupling curve for one occupied lattice.

    Returns (radii, enclosed_fraction): the fraction of the box-total d^2
    (or d^2 r^2) enclosed within each occupied-spin distance.  Normalized to
    end at exactly 1.
    """
    if weight_kind not in WEIGHT_KINDS:
        raise ValueError(f"weight_kind must be one of {WEIGHT_KINDS}")
    gamma = gamma if gamma is not None else GAMMA_SI29
    sites = np.delete(lattice.sites, lattice.central_index, axis=0)
    if len(sites) == 0:
        raise EmptyProfileError("lattice holds only the central spin")
    d = geometric_couplings(sites, np.asarray(direction, float)[None, :], gamma)[:, 0]
    r = np.linalg.norm(sites, axis=1)
    w = d**2 if weight_kind == "d2" else d**2 * r**2
    order = np.argsort(r)
    r_sorted = r[order]
    cum = np.cumsum(w[order])
    total = cum[-1]
    if total == 0:
        raise EmptyProfileError("all couplings vanish for this orientation")
    return r_sorted, cum / total


def cutoff_radius(structure, abundance, weight_kind, ensemble_size=100,
                  threshold=0.95, extent=15, seed=0, direction=(0.0, 0.0, 1.0),
                  gamma=None):
    """Radius containing >= threshold of the ensemble-mean cumulative coupling.

    Profiles use a single fixed reference orientation (field along the crystal
    z axis by default); the ensemble mean is taken over ``ensemble_size``
    Bernoulli lattices on a common radius grid.
    """
    if threshold >= 1:
        raise BoxTooSmallError("the coupling tail is open-ended, so full "
                               "containment is unreachable in a finite box")
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if ensemble_size < 1:
        raise ValueError("ensemble_size must be >= 1")
    positions = crystal.build_lattice(structure, extent)
    box = extent * structure.a
    grid = np.linspace(structure.min_site_distance * 0.99, box, 1200)
    acc = np.zeros_like(grid)
    for member in range(ensemble_size):
        lat = crystal.occupy(structure, extent, abundance, seed, member=member,
                             positions=positions)
        r_sorted, frac = cumulative_profile(lat, weight_kind, direction, gamma)
        idx = np.clip(np.searchsorted(r_sorted, grid), 1, len(r_sorted)) - 1
        acc += frac[idx]
    acc /= ensemble_size
    hit = np.flatnonzero(acc >= threshold)
    if len(hit) == 0:
        raise BoxTooSmallError(
            f"mean enclosed fraction reaches only {acc[-1]:.4f} < {threshold} "
            f"within the {box:.0f} A box")
    radius = float(grid[hit[0]])
    return CouplingCutoff(
        weight_kind=weight_kind,
        threshold=threshold,
        radius=radius,
        contained_fraction=float(acc[hit[0]]),
        abundance=abundance,
        structure_kind=structure.kind,
    )


class CutoffTable:
    """Cut-off radii cached on the abundance grid with nearest-grid lookup."""

    def __init__(self, structure, extent=15, ensemble_size=100, threshold=0.95,
                 seed=0, gamma=None):
        self.structure = structure
        self.extent = extent
        self.ensemble_size = ensemble_size
        self.threshold = threshold
        self.seed = seed
        self.gamma = gamma
        self._cache = {}

    def lookup(self, abundance, weight_kind):
        f_pct = min(CUTOFF_GRID_PERCENT, key=lambda g: abs(g - abundance * 100.0))
        key = (f_pct, weight_kind)
        if key not in self._cache:
            self._cache[key] = cutoff_radius(
                self.structure, f_pct / 100.0, weight_kind,
                ensemble_size=self.ensemble_size, threshold=self.threshold,
                extent=self.extent, seed=self.seed, gamma=self.gamma)
        return self._cache[key]

    def rows(self, abundances_percent=CUTOFF_GRID_PERCENT):
        for f_pct in abundances_percent:
            for wk in WEIGHT_KINDS:
                c = self.lookup(f_pct / 100.0, wk)
                yield {
                    "structure": self.structure.kind,
                    "abundance_percent": f_pct,
                    "weight_kind": wk,
                    "threshold": c.threshold,
                    "radius_angstrom": c.radius,
                    "contained_fraction": c.contained_fraction,
                }

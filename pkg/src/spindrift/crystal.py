"""Finite cubic lattices with random isotopic occupation.

Positions are generated cell-major, basis-minor so that site order (and with
it every seeded ensemble) is reproducible bit-for-bit across runs.
"""

from dataclasses import dataclass, field

import numpy as np

# Conventional-cell basis sites (fractional coordinates) for the four cubic
# structures.  Basis sizes 1 / 2 / 4 / 8.
_BASES = {
    "sc": [[0.0, 0.0, 0.0]],
    "bcc": [[0.0, 0.0, 0.0], [0.5, 0.5, 0.5]],
    "fcc": [[0.0, 0.0, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]],
    "diamond": [
        [0.0, 0.0, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0],
        [0.25, 0.25, 0.25], [0.25, 0.75, 0.75], [0.75, 0.25, 0.75], [0.75, 0.75, 0.25],
    ],
}

STRUCTURE_KINDS = tuple(_BASES)

# Minimum inter-site distance in units of the lattice constant: a (sc),
# a*sqrt(3)/2 (bcc), a/sqrt(2) (fcc), a*sqrt(3)/4 (diamond).
_MIN_SITE_DISTANCE = {
    "sc": 1.0,
    "bcc": np.sqrt(3.0) / 2.0,
    "fcc": 1.0 / np.sqrt(2.0),
    "diamond": np.sqrt(3.0) / 4.0,
}

# Guard against runaway memory use when building positions.
DEFAULT_SITE_BUDGET = 4_000_000


class SiteBudgetError(RuntimeError):
    """Requested extent would exceed the configured site budget."""


@dataclass(frozen=True)
class CubicStructure:
    """One of the four cubic crystal structures with lattice constant a (A)."""

    kind: str
    a: float

    def __post_init__(self):
        if self.kind not in _BASES:
            raise ValueError(f"unknown cubic structure {self.kind!r}")
        if self.a <= 0:
            raise ValueError("lattice constant must be positive")

    @property
    def basis(self):
        return np.array(_BASES[self.kind], dtype=float)

    @property
    def basis_size(self):
        return len(_BASES[self.kind])

    @property
    def min_site_distance(self):
        return _MIN_SITE_DISTANCE[self.kind] * self.a

    @property
    def site_density(self):
        """Lattice sites per A^3."""
        return self.basis_size / self.a**3


@dataclass(frozen=True)
class Orientation:
    """Magnetic-field direction in the crystal frame."""

    alpha: float
    beta: float

    @property
    def direction(self):
        sb = np.sin(self.beta)
        return np.array([sb * np.cos(self.alpha), sb * np.sin(self.alpha), np.cos(self.beta)])


@dataclass(frozen=True)
class OccupiedLattice:
    """A Bernoulli-occupied finite lattice with a forced central spin.

    ``sites`` are Cartesian positions in A relative to the central spin
    (which sits at the origin and is sites[central_index]).
    """

    structure: CubicStructure
    extent: int
    abundance: float
    seed: int
    sites: np.ndarray = field(repr=False)
    central_index: int

    @property
    def n_spins(self):
        return len(self.sites)

    def radii(self):
        return np.linalg.norm(self.sites, axis=1)


def build_lattice(structure, extent, site_budget=DEFAULT_SITE_BUDGET):
    """All lattice positions of (2*extent+1)^3 conventional cells, in A.

    The origin coincides with the corner basis site of the central cell.
    Order is cell-major (x, y, z index loops), basis-minor.
    """
    if extent < 0:
        raise ValueError("extent must be >= 0")
    n_cells = (2 * extent + 1) ** 3
    n_sites = n_cells * structure.basis_size
    if n_sites > site_budget:
        raise SiteBudgetError(
            f"extent {extent} yields {n_sites} sites, over the budget of {site_budget}"
        )
    rng = np.arange(-extent, extent + 1)
    cells = np.stack(np.meshgrid(rng, rng, rng, indexing="ij"), axis=-1).reshape(-1, 3)
    pos = (cells[:, None, :] + structure.basis[None, :, :]).reshape(-1, 3)
    return np.ascontiguousarray(pos * structure.a)


def _member_rng(seed, member):
    # Splittable per-member stream: independent of generation order, so
    # ensemble members can be produced in parallel.
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(member,)))


def occupy(structure, extent, abundance, seed, member=0, positions=None):
    """Bernoulli occupation of the lattice; the central site is always kept.

    ``member`` selects an independent substream of ``seed`` so that ensemble
    realizations are reproducible individually.
    """
    if not 0 < abundance <= 1:
        raise ValueError("abundance must be in (0, 1]")
    if positions is None:
        positions = build_lattice(structure, extent)
    rng = _member_rng(seed, member)
    keep = rng.random(len(positions)) < abundance
    central = int(np.argmin(np.einsum("ij,ij->i", positions, positions)))
    keep[central] = True
    sites = positions[keep] - positions[central]
    central_index = int(np.flatnonzero(np.flatnonzero(keep) == central)[0])
    return OccupiedLattice(
        structure=structure,
        extent=extent,
        abundance=abundance,
        seed=seed,
        sites=np.ascontiguousarray(sites),
        central_index=central_index,
    )


def nn_distance(abundance, structure, poisson_correction=False):
    """Statistical nearest-neighbor distance (f * n_basis / a^3)^(-1/3) in A.

    With ``poisson_correction`` the ~0.55 statistical-occupation factor is
    applied; the result is clamped to the structure's minimum inter-site
    distance (the corrected value is unphysical at high abundance).
    Returns (distance, clamped).
    """
    if not 0 < abundance <= 1:
        raise ValueError("abundance must be in (0, 1]")
    r = (abundance * structure.site_density) ** (-1.0 / 3.0)
    if poisson_correction:
        r *= 0.55
    if r < structure.min_site_distance:
        return structure.min_site_distance, True
    return r, False


def zcw_set_sizes(max_size=10**7):
    """Admissible orientation-set sizes (the Fibonacci sequence)."""
    sizes = [1, 2, 3]
    while sizes[-1] < max_size:
        sizes.append(sizes[-1] + sizes[-2])
    return sizes


def zcw_orientations(n):
    """Deterministic quasi-uniform (alpha, beta) set with uniform weights.

    ``n`` is snapped to the nearest admissible (Fibonacci) size. Returns
    (orientations, weights, size_used).
    """
    if n < 1:
        raise ValueError("need at least one orientation")
    sizes = zcw_set_sizes()
    size = min(sizes, key=lambda s: (abs(s - n), s))
    if size == 1:
        return [Orientation(0.0, 0.0)], np.array([1.0]), 1
    # golden-ratio stride over the full sphere: alpha quasi-uniform on
    # [0, 2pi), cos(beta) uniform on [-1, 1)
    idx = sizes.index(size)
    g = sizes[idx - 2] if idx >= 2 else 1
    j = np.arange(size)
    alpha = 2.0 * np.pi * np.mod(j * g / size, 1.0)
    cos_beta = 2.0 * np.mod(j / size, 1.0) - 1.0
    beta = np.arccos(np.clip(cos_beta, -1.0, 1.0))
    weights = np.full(size, 1.0 / size)
    orientations = [Orientation(float(a), float(b)) for a, b in zip(alpha, beta)]
    return orientations, weights, size


def orientation_directions(orientations):
    """(n, 3) array of field unit vectors."""
    return np.array([o.direction for o in orientations])

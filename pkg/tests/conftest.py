import numpy as np
import pytest

from spindrift import crystal, dipolar


@pytest.fixture(scope="session")
def silicon():
    return crystal.CubicStructure("diamond", 5.431)


@pytest.fixture(scope="session")
def si_cutoffs(silicon):
    """Desk-scale cut-off table for silicon, shared across the suite."""
    return dipolar.CutoffTable(silicon, extent=15, ensemble_size=100, seed=2025)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20250810)


def two_spin_lattice(structure, displacement):
    """Minimal OccupiedLattice: central spin plus one neighbor."""
    sites = np.array([[0.0, 0.0, 0.0], list(displacement)])
    return crystal.OccupiedLattice(structure=structure, extent=0, abundance=1.0,
                                   seed=0, sites=sites, central_index=0)

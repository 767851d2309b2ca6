import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spindrift import crystal
from spindrift.crystal import CubicStructure, SiteBudgetError


def test_basis_sizes():
    for kind, n in [("sc", 1), ("bcc", 2), ("fcc", 4), ("diamond", 8)]:
        s = CubicStructure(kind, 1.0)
        assert s.basis_size == n
        assert np.all(s.basis >= 0) and np.all(s.basis < 1)


def test_build_counts():
    assert len(crystal.build_lattice(CubicStructure("sc", 1.0), 0)) == 1
    assert len(crystal.build_lattice(CubicStructure("fcc", 1.0), 1)) == 3**3 * 4
    # full production box: 61^3 cells with 8 sites per cell
    pos = crystal.build_lattice(CubicStructure("diamond", 5.43), 30)
    assert len(pos) == 61**3 * 8


def test_build_budget():
    with pytest.raises(SiteBudgetError):
        crystal.build_lattice(CubicStructure("diamond", 5.43), 60)
    with pytest.raises(ValueError):
        crystal.build_lattice(CubicStructure("sc", 1.0), -1)


@pytest.mark.parametrize("kind,expected", [
    ("sc", 1.0),
    ("bcc", np.sqrt(3) / 2),
    ("fcc", 1 / np.sqrt(2)),
    ("diamond", np.sqrt(3) / 4),
])
def test_coordination_minima_brute_force(kind, expected):
    pos = crystal.build_lattice(CubicStructure(kind, 1.0), 1)
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    d[d < 1e-12] = np.inf
    assert d.min() == pytest.approx(expected, rel=1e-12)
    assert CubicStructure(kind, 1.0).min_site_distance == pytest.approx(expected)


def test_occupy_deterministic(silicon):
    a = crystal.occupy(silicon, 4, 0.047, seed=42, member=3)
    b = crystal.occupy(silicon, 4, 0.047, seed=42, member=3)
    assert np.array_equal(a.sites, b.sites)
    c = crystal.occupy(silicon, 4, 0.047, seed=42, member=4)
    assert a.n_spins != c.n_spins or not np.array_equal(a.sites, c.sites)


def test_occupy_central_and_extent(silicon):
    lat = crystal.occupy(silicon, 3, 0.3, seed=1)
    assert np.allclose(lat.sites[lat.central_index], 0.0)
    # everything inside the box diagonal plus one cell of margin
    r = lat.radii()
    assert r.max() <= (3 + 1) * silicon.a * np.sqrt(3)


def test_occupy_full():
    s = CubicStructure("sc", 1.0)
    lat = crystal.occupy(s, 2, 1.0, seed=0)
    assert lat.n_spins == 5**3


def test_occupied_fraction_binomial(silicon):
    # one large lattice: kept fraction within 3 sigma of f
    f = 0.047
    lat = crystal.occupy(silicon, 24, f, seed=7)
    n_sites = 49**3 * 8
    sigma = np.sqrt(f * (1 - f) / n_sites)
    assert abs(lat.n_spins / n_sites - f) < 3 * sigma + 1 / n_sites


def test_mean_fraction_over_seeds(silicon):
    f, extent = 0.1, 4
    n_sites = 9**3 * 8
    counts = [crystal.occupy(silicon, extent, f, seed=11, member=m).n_spins
              for m in range(100)]
    total = 100 * n_sites
    sigma = np.sqrt(f * (1 - f) / total)
    assert abs(sum(counts) / total - f) < 3 * sigma + 100 / total


@given(st.floats(min_value=0.001, max_value=1.0), st.integers(0, 2**63 - 1))
@settings(max_examples=25, deadline=None)
def test_occupy_idempotent_property(f, seed):
    s = CubicStructure("sc", 2.0)
    a = crystal.occupy(s, 2, f, seed=seed)
    b = crystal.occupy(s, 2, f, seed=seed)
    assert np.array_equal(a.sites, b.sites)
    assert a.central_index == b.central_index


def test_nn_distance_silicon(silicon):
    r, clamped = crystal.nn_distance(0.047, CubicStructure("diamond", 5.43))
    assert r == pytest.approx(7.52, abs=0.01)
    assert not clamped


def test_nn_distance_full_sc():
    r, clamped = crystal.nn_distance(1.0, CubicStructure("sc", 1.0))
    assert r == pytest.approx(1.0, rel=1e-12)
    assert not clamped


def test_nn_distance_clamp(silicon):
    # corrected value falls below the bond length at full occupation
    raw = 0.55 * (8 / silicon.a**3) ** (-1 / 3.0)
    assert raw < silicon.min_site_distance
    r, clamped = crystal.nn_distance(1.0, silicon, poisson_correction=True)
    assert clamped
    assert r == pytest.approx(silicon.min_site_distance)
    assert r == pytest.approx(2.3517, abs=2e-3)


def test_nn_distance_validates(silicon):
    with pytest.raises(ValueError):
        crystal.nn_distance(0.0, silicon)


def test_zcw_sizes_and_weights():
    orients, w, n = crystal.zcw_orientations(1597)
    assert n == 1597 and len(orients) == 1597
    assert abs(w.sum() - 1.0) < 1e-12
    orients, w, n = crystal.zcw_orientations(1)
    assert n == 1 and w[0] == 1.0
    _, w, n = crystal.zcw_orientations(150)
    assert n == 144  # nearest Fibonacci size
    assert abs(w.sum() - 1.0) < 1e-12


def test_zcw_angle_ranges_and_uniformity():
    orients, w, _ = crystal.zcw_orientations(233)
    alpha = np.array([o.alpha for o in orients])
    beta = np.array([o.beta for o in orients])
    assert np.all((alpha >= 0) & (alpha < 2 * np.pi))
    assert np.all((beta >= 0) & (beta <= np.pi))
    dirs = crystal.orientation_directions(orients)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    # quasi-uniform sampling: first and second moments of the sphere
    assert abs((w * dirs[:, 2]).sum()) < 0.01
    assert (w * (3 * dirs[:, 2]**2 - 1) / 2).sum() == pytest.approx(0.0, abs=0.01)


def test_zcw_deterministic():
    a = crystal.zcw_orientations(89)[0]
    b = crystal.zcw_orientations(89)[0]
    assert all(x == y for x, y in zip(a, b))

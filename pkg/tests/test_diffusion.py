import numpy as np
import pytest

from spindrift import crystal, diffusion, dipolar, linewidth
from spindrift.diffusion import LATTICE_SUM_COEFF

from conftest import two_spin_lattice


def test_flip_flop_rate_examples():
    assert diffusion.flip_flop_rate(0.0, 4.92e-3) == 0.0
    assert diffusion.flip_flop_rate(29.7, 4.92e-3) == pytest.approx(6.81, abs=0.01)
    w1 = diffusion.flip_flop_rate(10.0, 1e-3)
    w2 = diffusion.flip_flop_rate(20.0, 1e-3)
    assert w2 == pytest.approx(4 * w1, rel=1e-12)
    with pytest.raises(ValueError):
        diffusion.flip_flop_rate(10.0, 0.0)


def test_flip_flop_rate_accepts_spectral_density():
    p = linewidth.p_zero(191.0)
    assert diffusion.flip_flop_rate(29.7, p) == pytest.approx(
        0.5 * np.pi * 29.7**2 * p.p0, rel=1e-12)


def test_d_nearest_neighbor_anchor():
    d = diffusion.d_nearest_neighbor(191.0, 7.52)
    assert d.value == pytest.approx(3.6, abs=0.01)
    assert d.method == "nearest-neighbor"


def test_d_nearest_neighbor_limits_and_errors():
    assert diffusion.d_nearest_neighbor(1e-9, 7.52).value < 1e-9
    with pytest.raises(ValueError):
        diffusion.d_nearest_neighbor(0.0, 7.52)
    with pytest.raises(ValueError):
        diffusion.d_nearest_neighbor(191.0, -1.0)


def test_d_lattice_sum_single_neighbor(silicon):
    """One neighbor at distance r: the lattice sum reduces to its single term
    (pi^3/2) d^2 r^2 p0 = pi^2 W r^2 (flip-flop weight on angular-frequency
    couplings; W = (pi/2) d^2 p0 from the rate formula)."""
    from spindrift import oracle

    r = 5.43
    lat = two_spin_lattice(silicon, [0, 0, r])
    p0 = 4.92e-3
    d_hz = dipolar.coupling([0, 0, r], [0, 0, 1])
    one_term = oracle.unrestricted_lattice_sum(lat, "eq6", p0=p0)
    expected = LATTICE_SUM_COEFF * d_hz**2 * r**2 * p0 * 1e-2
    assert one_term == pytest.approx(expected, rel=1e-12)
    w = diffusion.flip_flop_rate(d_hz, p0)
    r_nm = r * 0.1
    assert one_term == pytest.approx(np.pi**2 * w * r_nm**2, rel=1e-12)


def test_d_lattice_sum_deterministic_and_positive(silicon, si_cutoffs):
    p0 = linewidth.p_zero(200.0)
    cut = si_cutoffs.lookup(0.30, "d2r2")
    kw = dict(n_lattices=4, n_orientations=21, seed=5, extent=5)
    a = diffusion.d_lattice_sum(silicon, 0.30, p0, cut, **kw)
    b = diffusion.d_lattice_sum(silicon, 0.30, p0, cut, **kw)
    assert a.value == b.value > 0
    assert a.method == "lattice-sum"
    assert len(a.per_lattice) == 4
    assert a.value == pytest.approx(a.per_lattice.mean(), rel=1e-12)


def test_d_lattice_sum_scalings(silicon, si_cutoffs):
    """d_ij scales with gamma_i gamma_j, so D at fixed p0 scales with gamma^4;
    linear in p0 throughout."""
    cut = si_cutoffs.lookup(0.30, "d2r2")
    kw = dict(n_lattices=3, n_orientations=13, seed=5, extent=4)
    base = diffusion.d_lattice_sum(silicon, 0.30, 1e-3, cut, gamma=-53.19e6, **kw)
    twog = diffusion.d_lattice_sum(silicon, 0.30, 1e-3, cut, gamma=-106.38e6, **kw)
    assert twog.value == pytest.approx(16 * base.value, rel=1e-10)
    twop = diffusion.d_lattice_sum(silicon, 0.30, 2e-3, cut, gamma=-53.19e6, **kw)
    assert twop.value == pytest.approx(2 * base.value, rel=1e-12)


def test_unit_chain():
    # Hz * A^2 inputs produce nm^2/s with 1 A^2 = 1e-2 nm^2
    d = diffusion.d_nearest_neighbor(30.0, 10.0)  # 10 A = 1 nm
    assert d.value == pytest.approx(30.0 / 30.0 * 1.0, rel=1e-12)


def test_abundance_sweep_rows_and_errors(silicon, si_cutoffs):
    class FlakyTable:
        def lookup(self, f, wk):
            if f < 0.02:
                raise RuntimeError("synthetic failure")
            return si_cutoffs.lookup(f, wk)

    rows, errors = diffusion.abundance_sweep(
        silicon, [0.01, 0.30], FlakyTable(), n_lattices=3, n_orientations=13,
        seed=2, extent=4)
    assert len(errors) == 1 and errors[0][0] == 0.01
    methods = {r["method"] for r in rows}
    assert methods == {"nearest-neighbor", "lattice-sum"}
    for row in rows:
        assert row["abundance_percent"] == 30.0
        assert row["D_nm2_per_s"] > 0
        assert row["fwhm_zq_hz"] > 0
        assert row["p0_s"] > 0
        assert row["seed"] == 2


@pytest.mark.slow
def test_d_lat_increases_with_abundance(silicon, si_cutoffs):
    rows, errors = diffusion.abundance_sweep(
        silicon, [0.047, 0.30], si_cutoffs, n_lattices=20, n_orientations=55,
        seed=31, extent=10)
    assert not errors
    lat = {r["abundance_percent"]: r["D_nm2_per_s"]
           for r in rows if r["method"] == "lattice-sum"}
    assert lat[30.0] > lat[4.7]

import numpy as np
import pytest

from spindrift import oracle, particle
from spindrift.particle import (HOUR, ParticleGeometry, RadialProfile,
                                T1GridSpec, Trace, fit_mono_exponential,
                                fit_t1, rate_model, simulate_buildup,
                                simulate_decay, volume_average)

GEO = ParticleGeometry(10.0, 3.0, 1000)
TIMES = np.linspace(0.0, 4 * HOUR, 49)[1:]


def test_geometry_validation():
    with pytest.raises(ValueError):
        ParticleGeometry(10.0, 12.0)
    with pytest.raises(ValueError):
        ParticleGeometry(10.0, 3.0, 5)
    assert GEO.volumes().sum() == pytest.approx(4 / 3 * np.pi * 1000, rel=1e-12)
    assert GEO.core_cells == 700


def test_volume_average_uniform_and_shell():
    assert volume_average(np.full(1000, 0.37), GEO) == pytest.approx(0.37)
    shell_only = np.where(GEO.shell_mask(), 1.0, 0.0)
    assert volume_average(shell_only, GEO) == pytest.approx(
        1 - 0.7**3, abs=1e-12)  # 0.657


def test_volume_average_linear_profile_quadrature():
    # P(r) = r/R: exact volume average is 3/4
    prof = GEO.centers() / GEO.radius
    assert volume_average(prof, GEO) == pytest.approx(0.75, abs=1e-6)


def test_uniform_decay_exact():
    tr = simulate_decay(GEO, 51.0, 2.0, 2.0, 1.0, TIMES)
    assert np.abs(tr.polarization - np.exp(-TIMES / (2 * HOUR))).max() < 1e-6
    assert tr.kind == "decay"


def test_two_compartment_decay_oracle():
    tr = simulate_decay(GEO, 1e-12, 3.0, 0.3, 1.0, TIMES)
    ref = oracle.closed_form_trace("two-compartment-decay", TIMES / HOUR,
                                   radius=10.0, shell=3.0, t1_in=3.0,
                                   t1_out=0.3)
    assert np.abs(tr.polarization - ref).max() < 1e-6


def test_conservation_no_relaxation():
    tr = simulate_decay(GEO, 51.0, 1e15, 1e15, 1.0, TIMES)
    # drift below 1e-9 per simulated hour
    assert np.abs(tr.polarization - 1.0).max() < 1e-9 * 4


def test_clamped_buildup_series_oracle():
    t = np.linspace(0.0, 12.0, 25)[1:]  # seconds; covers the transient
    tr, _ = simulate_buildup(GEO, 51.0, 1e15, 1.0, 0.8, t)
    ref = oracle.closed_form_trace("clamped-shell-buildup", t / HOUR,
                                   radius=10.0, shell=3.0, diffusion=51.0,
                                   p_shell=0.8)
    assert np.abs(tr.polarization - ref).max() < 5e-3
    assert tr.polarization[0] > 0.657  # clamped shell counts immediately


def test_buildup_saturates_at_clamp():
    t = np.linspace(0.0, 60.0, 10)
    tr, prof = simulate_buildup(GEO, 51.0, 1e15, 1.0, 0.8, t[1:])
    assert tr.polarization[-1] == pytest.approx(0.8, rel=1e-6)
    assert np.allclose(prof.values, 0.8, rtol=1e-6)


def test_buildup_monotone_and_bounded():
    tr, prof = simulate_buildup(GEO, 3.6, 50.0, 0.3, 0.9, TIMES)
    # monotone up to the scheme's O(dt) wobble near saturation
    assert np.all(np.diff(tr.polarization) >= -1e-4 * 0.9)
    assert np.all(tr.polarization <= 0.9 + 1e-12)
    assert np.all(prof.values >= -1e-15)


def test_decay_maximum_principle():
    rng = np.random.default_rng(3)
    init = RadialProfile(values=rng.uniform(0.0, 0.8, GEO.n_elements),
                         timestamp=0.0)
    tr = simulate_decay(GEO, 10.0, 1.0, 0.2, init, TIMES)
    assert np.all(tr.polarization <= init.values.max() + 1e-12)
    assert np.all(tr.polarization >= 0.0)


def test_decay_bounded_by_pure_exponentials():
    tr = simulate_decay(GEO, 10.0, 3.0, 0.3, 1.0, TIMES)
    lo = np.exp(-TIMES / (0.3 * HOUR))
    hi = np.exp(-TIMES / (3.0 * HOUR))
    assert np.all(tr.polarization >= lo - 1e-12)
    assert np.all(tr.polarization <= hi + 1e-12)


def test_dt_and_grid_convergence():
    base = simulate_decay(GEO, 51.0, 3.0, 0.3, 1.0, TIMES)
    dt_cap = min(0.3 * HOUR / 100.0, TIMES[-1] / 100.0)
    half = simulate_decay(GEO, 51.0, 3.0, 0.3, 1.0, TIMES, dt=dt_cap / 2)
    rel = np.abs(half.polarization - base.polarization)
    assert rel.max() < 1e-3 * np.abs(base.polarization).max()

    fine = simulate_decay(ParticleGeometry(10.0, 3.0, 2000), 51.0, 3.0, 0.3,
                          1.0, TIMES)
    relg = np.abs(fine.polarization - base.polarization)
    assert relg.max() < 1e-3 * np.abs(base.polarization).max()


def test_fixed_scheme_agrees_with_ramp():
    t = np.linspace(0.0, 0.5 * HOUR, 13)[1:]
    a = simulate_decay(GEO, 20.0, 2.0, 0.4, 1.0, t, scheme="ramp")
    b = simulate_decay(GEO, 20.0, 2.0, 0.4, 1.0, t, scheme="fixed")
    assert np.abs(a.polarization - b.polarization).max() < 1e-3


def test_time_grid_validation():
    with pytest.raises(ValueError):
        simulate_decay(GEO, 1.0, 1.0, 1.0, 1.0, [2.0, 1.0])
    with pytest.raises(ValueError):
        simulate_decay(GEO, 0.0, 1.0, 1.0, 1.0, [1.0])
    with pytest.raises(ValueError):
        prof = RadialProfile(values=np.ones(5), timestamp=0.0)
        simulate_decay(GEO, 1.0, 1.0, 1.0, prof, [1.0])


def test_chained_buildup_decay():
    t = np.linspace(0.0, HOUR, 10)[1:]
    _, prof = simulate_buildup(GEO, 51.0, 5.0, 0.3, 0.9, t)
    tr = simulate_decay(GEO, 51.0, 5.0, 0.3, prof, t)
    assert tr.polarization[0] <= volume_average(prof.values, GEO)


def test_rate_model_roundtrip():
    params = rate_model(0.023, 2.6, 0.9)
    assert 1.0 / params.tau_bup == pytest.approx(params.k_w + params.k_r,
                                                 rel=1e-12)
    assert params.steady_state == pytest.approx(
        params.asymptote * params.k_w * params.tau_bup, rel=1e-12)


def test_rate_model_limits():
    lossless = rate_model(0.9, 2.0, 0.9)
    assert lossless.k_r == pytest.approx(0.0, abs=1e-15)
    a = rate_model(0.02, 2.0, 0.5)
    b = rate_model(0.02, 2.0, 1.0)
    assert a.k_w == pytest.approx(2 * b.k_w, rel=1e-12)
    with pytest.raises(ValueError):
        rate_model(0.9, 2.0, 0.5)
    with pytest.raises(ValueError):
        rate_model(0.1, 0.0, 0.5)


def test_thermal_electron_polarization():
    # ~0.88 at 7 T / 3.4 K, saturates toward 1 at low temperature
    assert particle.thermal_electron_polarization(7.02, 3.4) == pytest.approx(
        0.882, abs=0.005)
    assert particle.thermal_electron_polarization(7.0, 0.1) > 0.999


def test_fit_mono_exponential_exact():
    t = np.linspace(0, 5, 40)
    amp, tau = fit_mono_exponential(t, 0.8 * np.exp(-t / 1.7), "decay")
    assert amp == pytest.approx(0.8, rel=1e-9)
    assert tau == pytest.approx(1.7, rel=1e-9)
    amp, tau = fit_mono_exponential(t, 0.5 * (1 - np.exp(-t / 2.2)), "build-up")
    assert tau == pytest.approx(2.2, rel=1e-9)
    with pytest.raises(ValueError):
        fit_mono_exponential([1, 2], [1, 2])
    with pytest.raises(ValueError):
        fit_mono_exponential(t, t, kind="nope")


def test_fit_t1_insensitive_warning():
    t = np.linspace(0.0, 2 * HOUR, 12)[1:]
    synth, _ = simulate_buildup(GEO, 51.0, 3.0, 0.3, 0.9, t)
    grid = T1GridSpec((3.0, 3.0), (0.05, 50.0), 4, refine=False, polish=False)
    with pytest.warns(UserWarning, match="insensitive"):
        fit = fit_t1(synth, GEO, 51.0, grid, p_shell=0.9)
    assert fit.insensitive


def test_fit_t1_sensitivity_ratio_decay():
    t = np.geomspace(0.02 * HOUR, 6 * HOUR, 25)
    synth = simulate_decay(GEO, 3.6, 3.0, 0.3, 1.0, t)
    # grids chosen so the generating pair sits on a node
    grid = T1GridSpec((0.3, 30.0), (0.03, 3.0), 5, refine=False, polish=False)
    fit = fit_t1(synth, GEO, 3.6, grid)
    assert fit.t1_in == pytest.approx(3.0, rel=1e-9)
    assert fit.t1_out == pytest.approx(0.3, rel=1e-9)
    # residues vary more along the t1_out axis than along t1_in
    assert fit.sensitivity_ratio > 1.0
    assert not fit.insensitive


def test_fit_t1_surface_invariant():
    t = np.geomspace(0.02 * HOUR, 4 * HOUR, 15)
    synth = simulate_decay(GEO, 10.0, 2.0, 0.4, 1.0, t)
    grid = T1GridSpec((0.1, 10.0), (0.1, 10.0), 5, refine=True, polish=False)
    fit = fit_t1(synth, GEO, 10.0, grid)
    assert fit.residue == fit.surface[:, 2].min()
    assert len(fit.surface) == 25 + 25


@pytest.mark.slow
def test_fit_t1_roundtrip_single_case():
    t = np.geomspace(0.01 * HOUR, 24 * HOUR, 60)
    synth = simulate_decay(GEO, 3.6, 1.0, 0.5, 1.0, t)
    grid = T1GridSpec((0.05, 50.0), (0.05, 50.0), 10, refine=True, polish=True)
    fit = fit_t1(synth, GEO, 3.6, grid)
    h_refined = np.log(50 / 0.05) / 9 / 2
    assert abs(np.log(fit.t1_in / 1.0)) < h_refined
    assert abs(np.log(fit.t1_out / 0.5)) < h_refined

"""Compiled-vs-reference kernel equivalence on random inputs."""

import numpy as np
import pytest

from spindrift import kernels

pytestmark = pytest.mark.skipif(
    kernels.BACKEND != "compiled",
    reason="compiled extension not built; nothing to compare against")


@pytest.fixture
def random_geometry(rng):
    n, m = 400, 13
    unit = rng.normal(size=(n, 3))
    unit /= np.linalg.norm(unit, axis=1)[:, None]
    dirs = rng.normal(size=(m, 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    return (np.ascontiguousarray(unit), rng.random(n) + 0.01,
            np.ascontiguousarray(dirs))


def test_weighted_d2_sums_equivalence(random_geometry, rng):
    unit, inv3, dirs = random_geometry
    w = rng.random(len(inv3))
    a = kernels.weighted_d2_sums(unit, inv3, w, dirs)
    b = kernels.reference.weighted_d2_sums(unit, inv3, w, dirs)
    assert np.allclose(a, b, rtol=1e-13, atol=0)


def test_weighted_d2_sums_empty(random_geometry):
    _, _, dirs = random_geometry
    out = kernels.weighted_d2_sums(np.zeros((0, 3)), np.zeros(0), np.zeros(0), dirs)
    assert np.array_equal(out, np.zeros(len(dirs)))


@pytest.mark.parametrize("rate_weighted", [False, True])
def test_zq_detuning_sums_equivalence(random_geometry, rng, rate_weighted):
    i_unit, i_inv3, dirs = random_geometry
    n = len(i_inv3)
    j_unit = rng.normal(size=(n, 3))
    j_unit /= np.linalg.norm(j_unit, axis=1)[:, None]
    j_inv3 = rng.random(n) + 0.01
    cuts = np.sort(rng.choice(np.arange(1, n), size=6, replace=False))
    offsets = np.concatenate([[0], cuts, [n]]).astype(np.int64)
    nt = len(offsets) - 1
    t_unit = rng.normal(size=(nt, 3))
    t_unit /= np.linalg.norm(t_unit, axis=1)[:, None]
    t_inv3 = rng.random(nt) + 0.01
    args = (i_unit, i_inv3, np.ascontiguousarray(j_unit), j_inv3, offsets,
            np.ascontiguousarray(t_unit), t_inv3, dirs, rate_weighted)
    a = kernels.zq_detuning_sums(*args)
    b = kernels.reference.zq_detuning_sums(*args)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-300)


def test_zq_detuning_sums_empty_target_slice(random_geometry, rng):
    i_unit, i_inv3, dirs = random_geometry
    n = len(i_inv3)
    # second target owns no background pairs
    offsets = np.array([0, n, n], dtype=np.int64)
    t_unit = np.ascontiguousarray(np.eye(3)[:2])
    t_inv3 = np.array([1.0, 2.0])
    args = (i_unit, i_inv3, i_unit, i_inv3, offsets, t_unit, t_inv3, dirs, False)
    a = kernels.zq_detuning_sums(*args)
    b = kernels.reference.zq_detuning_sums(*args)
    assert np.allclose(a, b, rtol=1e-12)


def test_be_relax_steps_equivalence(rng):
    n, steps = 64, 40
    cond = rng.random(n + 1) * 10
    cond[0] = cond[-1] = 0.0
    vol = rng.random(n) + 0.5
    dt = 0.05
    sub = np.zeros(n); sup = np.zeros(n); dia_flux = np.zeros(n)
    sub[1:] = -cond[1:n]
    sup[:-1] = -cond[1:n]
    dia_flux[:-1] += cond[1:n]
    dia_flux[1:] += cond[1:n]
    q = vol / dt
    dia = dia_flux + q
    bcoef = np.zeros(n); btarget = np.zeros(n)
    bcoef[-1] = 3.0; btarget[-1] = 0.7
    dia[-1] += bcoef[-1]
    relax = np.exp(-dt / (rng.random(n) * 5 + 1))
    p1 = rng.random(n)
    p2 = p1.copy()
    a = kernels.be_relax_steps(sub, dia, sup, q, bcoef, btarget, relax,
                               p1, vol, 0.3, 1.0 / (vol.sum() + 1), steps)
    b = kernels.reference.be_relax_steps(sub, dia, sup, q, bcoef, btarget,
                                         relax, p2, vol, 0.3,
                                         1.0 / (vol.sum() + 1), steps)
    assert np.allclose(a, b, rtol=1e-10)
    assert np.allclose(p1, p2, rtol=1e-10)

"""Pure-numpy reference kernels.

Same contracts as the compiled extension (spindrift.kernels._core); used as
the fallback backend and as the correctness reference in tests.  All coupling
kernels work on geometric factors g = (3 cos^2 theta - 1) / (2 r^3); the
dipolar prefactor is applied by the caller.
"""

import numpy as np


def weighted_d2_sums(unit, inv_r3, weight, dirs):
    """sum_k weight_k * g_k(dir)^2 for every field direction.

    unit: (n, 3) unit vectors spin->k, inv_r3: (n,), weight: (n,),
    dirs: (m, 3) field directions.  Returns (m,).
    """
    if len(unit) == 0:
        return np.zeros(len(dirs))
    proj = unit @ dirs.T                      # (n, m)
    g = (3.0 * proj**2 - 1.0) * (0.5 * inv_r3[:, None])
    return np.einsum("n,nm->m", weight, g * g)


def zq_detuning_sums(i_unit, i_inv_r3, j_unit, j_inv_r3, offsets,
                     t_unit, t_inv_r3, dirs, rate_weighted):
    """Target-averaged sum_k (g_ik - g_jk)^2 per field direction.

    Pairs are flattened over targets; ``offsets`` (n_targets + 1) slices them.
    With ``rate_weighted`` the per-target mean uses d_ij^2 weights (the
    flip-flop-rate weighting) instead of uniform ones.  Returns (m,).
    """
    n_t = len(offsets) - 1
    m = len(dirs)
    if n_t == 0:
        return np.zeros(m)
    proj_i = i_unit @ dirs.T
    g_i = (3.0 * proj_i**2 - 1.0) * (0.5 * i_inv_r3[:, None])
    proj_j = j_unit @ dirs.T
    g_j = (3.0 * proj_j**2 - 1.0) * (0.5 * j_inv_r3[:, None])
    diff2 = (g_i - g_j) ** 2                  # (pairs, m)
    if len(diff2):
        # reduceat cannot take an index == len (trailing empty slice) and
        # copies rows for empty slices; clip and zero those explicitly
        idx = np.minimum(offsets[:-1], len(diff2) - 1)
        per_target = np.add.reduceat(diff2, idx, axis=0)
        empty = np.flatnonzero(np.diff(offsets) == 0)
        if len(empty):
            per_target[empty] = 0.0
    else:
        per_target = np.zeros((n_t, m))
    if not rate_weighted:
        return per_target.mean(axis=0)
    proj_t = t_unit @ dirs.T
    g_t2 = ((3.0 * proj_t**2 - 1.0) * (0.5 * t_inv_r3[:, None])) ** 2
    norm = g_t2.sum(axis=0)
    norm[norm == 0.0] = 1.0
    return (per_target * g_t2).sum(axis=0) / norm


def be_relax_steps(sub, dia, sup, q, bcoef, btarget, relax, p, vol, shell_sum,
                   inv_vtot, n_steps):
    """n_steps of implicit diffusion + exact relaxation on a tridiagonal system.

    Backward Euler in increment form: A dp = g with A = tridiag(sub, dia, sup)
    (diag(q) already absorbed in ``dia``) and the explicit divergence g built
    from face flux differences

        g_i = -sub_i (p_{i-1} - p_i) - sup_i (p_{i+1} - p_i)
              + bcoef_i (btarget_i - p_i),

    which vanishes bit-exactly on uniform fields, so conservation survives
    arbitrarily large diffusion CFL numbers.  ``bcoef``/``btarget`` carry the
    clamped-boundary flux.  After each solve the per-cell relaxation factor
    ``relax`` is applied; ``p`` is updated in place.  Returns the volume
    average (p . vol + shell_sum) * inv_vtot after every step.
    """
    from scipy.linalg import solve_banded

    n = len(p)
    ab = np.zeros((3, n))
    ab[0, 1:] = sup[:-1]
    ab[1] = dia
    ab[2, :-1] = sub[1:]
    avgs = np.empty(n_steps)
    for s in range(n_steps):
        g = bcoef * (btarget - p)
        g[1:] -= sub[1:] * (p[:-1] - p[1:])
        g[:-1] -= sup[:-1] * (p[1:] - p[:-1])
        p += solve_banded((1, 1), ab, g)
        p *= relax
        avgs[s] = (p @ vol + shell_sum) * inv_vtot
    return avgs

"""Radial finite-element model of core-shell nanoparticle polarization.

Conservative finite-volume discretization of

    dP/dt = D (1/r^2) d/dr (r^2 dP/dr) - P / T1(r)

on uniform radial shells, advanced by implicit (backward-Euler) diffusion
steps combined with exact per-cell relaxation factors.  Build-ups clamp the
whole outer shell at the steady-state polarization; decays evolve freely with
zero flux at both boundaries.  Lengths in nm, D in nm^2/s, T1 in hours,
trace times in seconds.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from . import kernels

HOUR = 3600.0


@dataclass(frozen=True)
class ParticleGeometry:
    radius: float                 # nm
    shell: float                  # nm
    n_elements: int = 1000

    def __post_init__(self):
        if not 0 < self.shell < self.radius:
            raise ValueError("need 0 < shell thickness < radius")
        if self.n_elements < 10:
            raise ValueError("need at least 10 radial elements")

    @property
    def dr(self):
        return self.radius / self.n_elements

    def faces(self):
        return np.linspace(0.0, self.radius, self.n_elements + 1)

    def centers(self):
        f = self.faces()
        return 0.5 * (f[:-1] + f[1:])

    def volumes(self):
        f = self.faces()
        return 4.0 * np.pi / 3.0 * (f[1:] ** 3 - f[:-1] ** 3)

    def shell_mask(self):
        return self.centers() >= self.radius - self.shell

    @property
    def core_cells(self):
        return int(np.argmax(self.shell_mask()))


@dataclass(frozen=True)
class RadialProfile:
    values: np.ndarray = field(repr=False)
    timestamp: float              # s


@dataclass(frozen=True)
class Trace:
    times: np.ndarray = field(repr=False)     # s, strictly increasing
    polarization: np.ndarray = field(repr=False)
    kind: str                                  # 'build-up' | 'decay'
    provenance: dict = field(default_factory=dict, repr=False)


@dataclass(frozen=True)
class FitResult:
    t1_in: float                  # h
    t1_out: float                 # h
    residue: float
    surface: np.ndarray = field(repr=False)    # rows (t1_in, t1_out, residue)
    insensitive: bool = False
    sensitivity_ratio: float = float("nan")    # residue range t1_out / t1_in


@dataclass(frozen=True)
class RateModelParams:
    k_w: float                    # 1/h
    k_r: float                    # 1/h
    asymptote: float
    steady_state: float
    tau_bup: float                # h


def volume_average(values, geometry):
    v = geometry.volumes()
    return float(np.asarray(values) @ v / v.sum())


def _check_times(times):
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or len(t) == 0:
        raise ValueError("need a 1-d time grid")
    if np.any(np.diff(t) <= 0) or t[0] < 0:
        raise ValueError("time grid must be strictly increasing and non-negative")
    return t


def _dt_schedule(times, d_nm2_s, geometry, t1_values_h, scheme, dt=None):
    """Per-segment (dt, n_steps) whose step boundaries hit every requested
    time exactly (the recorded trace then needs no interpolation there).

    'fixed': dt = min(tau_diff, T1_min)/100 throughout.  'ramp': a geometric
    ramp from tau_diff/100 up to the fixed-scheme cap resolves the diffusion
    transient without paying its cost over hour-long windows.
    """
    t_end = times[-1]
    tau_diff = geometry.radius**2 / d_nm2_s
    finite = [v for v in t1_values_h if np.isfinite(v)]
    t1_min = min(finite) * HOUR if finite else np.inf
    if scheme == "fixed":
        dt_cap = dt if dt is not None else min(tau_diff / 100.0, t1_min / 100.0,
                                               t_end / 50.0)
        dt_lo = dt_cap
    elif scheme == "ramp":
        dt_cap = dt if dt is not None else min(t1_min / 100.0, t_end / 100.0)
        dt_lo = min(tau_diff / 100.0, dt_cap)
    else:
        raise ValueError(f"unknown dt scheme {scheme!r}")

    segments = []
    t_now = 0.0
    step = dt_lo
    for t_req in times:
        gap = t_req - t_now
        if gap <= 0:
            continue
        # ramp sub-segments while the step is still growing
        while step < dt_cap and gap > 8 * step:
            segments.append((step, 8))
            t_now += 8 * step
            gap = t_req - t_now
            step = min(step * 1.6, dt_cap)
        n = max(1, int(np.ceil(gap / min(step, dt_cap) - 1e-12)))
        segments.append((gap / n, n))
        t_now = t_req
    return segments


def _flux_coefficients(geometry, d_nm2_s):
    faces = geometry.faces()
    area = 4.0 * np.pi * faces**2
    return d_nm2_s * area / geometry.dr      # nm^3/s per unit dP


def _run(geometry, d_nm2_s, invt1_cells, clamp_value, n_active, p0_cells,
         times, scheme, dt):
    """Advance the active cells; returns (trace values at `times`, profile)."""
    t = _check_times(times)
    vol = geometry.volumes()
    cond = _flux_coefficients(geometry, d_nm2_s)
    n = n_active
    sub = np.zeros(n)
    sup = np.zeros(n)
    dia_flux = np.zeros(n)
    sub[1:] = -cond[1:n]
    sup[:-1] = -cond[1:n]
    dia_flux[:-1] += cond[1:n]
    dia_flux[1:] += cond[1:n]
    bcoef = np.zeros(n)
    btarget = np.zeros(n)
    shell_sum = 0.0
    if clamp_value is not None:
        # Dirichlet neighbor across the core/shell interface face
        dia_flux[-1] += cond[n]
        bcoef[-1] = cond[n]
        btarget[-1] = clamp_value
        shell_sum = clamp_value * vol[n:].sum()
    inv_vtot = 1.0 / vol.sum()
    p = np.array(p0_cells[:n], dtype=float)

    t1_h = 1.0 / invt1_cells[invt1_cells > 0] / HOUR if np.any(invt1_cells > 0) else []
    segments = _dt_schedule(t, d_nm2_s, geometry,
                            list(t1_h) if len(t1_h) else [np.inf], scheme, dt)
    step_times, step_avgs = [], []
    t_now = 0.0
    avg0 = (p @ vol[:n] + shell_sum) * inv_vtot
    for dt_k, n_k in segments:
        relax = np.exp(-dt_k * invt1_cells[:n])
        q = vol[:n] / dt_k
        dia = dia_flux + q
        avgs = kernels.be_relax_steps(
            np.ascontiguousarray(sub), np.ascontiguousarray(dia),
            np.ascontiguousarray(sup), np.ascontiguousarray(q),
            np.ascontiguousarray(bcoef), np.ascontiguousarray(btarget),
            np.ascontiguousarray(relax),
            p, np.ascontiguousarray(vol[:n]), shell_sum, inv_vtot, n_k)
        step_times.append(t_now + dt_k * np.arange(1, n_k + 1))
        step_avgs.append(avgs)
        t_now += dt_k * n_k
    st = np.concatenate([[0.0], *step_times])
    sa = np.concatenate([[avg0], *step_avgs])
    trace = np.interp(t, st, sa)
    full = np.empty(geometry.n_elements)
    full[:n] = p
    full[n:] = clamp_value if clamp_value is not None else p[-1]
    return trace, RadialProfile(values=full, timestamp=float(t[-1]))


def simulate_buildup(geometry, d_nm2_s, t1_in, t1_out, p_shell, times,
                     scheme="ramp", dt=None):
    """Hyperpolarization build-up with the shell clamped at p_shell.

    t1_in (h) relaxes the core; the clamped shell makes t1_out inert here (it
    is kept for interface symmetry with the decay).  Returns (Trace of the
    volume-averaged polarization over the whole particle, final RadialProfile).
    """
    if d_nm2_s <= 0 or t1_in <= 0 or t1_out <= 0:
        raise ValueError("D and both T1 values must be positive")
    n = geometry.core_cells
    invt1 = np.full(geometry.n_elements, 1.0 / (t1_in * HOUR))
    p0 = np.zeros(geometry.n_elements)
    vals, profile = _run(geometry, d_nm2_s, invt1, p_shell, n, p0, times,
                         scheme, dt)
    return Trace(np.asarray(times, float), vals, "build-up",
                 {"D_nm2_s": d_nm2_s, "t1_in_h": t1_in, "t1_out_h": t1_out,
                  "p_shell": p_shell, "geometry": geometry}), profile


def simulate_decay(geometry, d_nm2_s, t1_in, t1_out, initial, times,
                   scheme="ramp", dt=None):
    """Free decay: zero flux at both boundaries, piecewise T1.

    ``initial`` is a uniform fraction or a RadialProfile (e.g. chained from a
    build-up).  Returns a Trace of the volume-averaged polarization.
    """
    if d_nm2_s <= 0 or t1_in <= 0 or t1_out <= 0:
        raise ValueError("D and both T1 values must be positive")
    n = geometry.n_elements
    invt1 = np.where(geometry.shell_mask(), 1.0 / (t1_out * HOUR),
                     1.0 / (t1_in * HOUR))
    if isinstance(initial, RadialProfile):
        p0 = np.array(initial.values, dtype=float)
        if len(p0) != n:
            raise ValueError("initial profile does not match the geometry")
    else:
        p0 = np.full(n, float(initial))
    vals, profile = _run(geometry, d_nm2_s, invt1, None, n, p0, times,
                         scheme, dt)
    return Trace(np.asarray(times, float), vals, "decay",
                 {"D_nm2_s": d_nm2_s, "t1_in_h": t1_in, "t1_out_h": t1_out,
                  "geometry": geometry})


@dataclass(frozen=True)
class T1GridSpec:
    t1_in_range: tuple = (0.05, 50.0)    # h, log-spaced
    t1_out_range: tuple = (0.05, 50.0)
    n: int = 40
    refine: bool = True
    # local simplex polish from the refined argmin; the residue trough is
    # nearly degenerate along t1_in, which a pure grid cannot resolve
    polish: bool = True


def _simulate_for_fit(kind, geometry, d_nm2_s, t1_in, t1_out, exp_trace,
                      p_shell, initial, scheme):
    if kind == "decay":
        sim = simulate_decay(geometry, d_nm2_s, t1_in, t1_out, initial,
                             exp_trace.times, scheme=scheme)
    else:
        sim, _ = simulate_buildup(geometry, d_nm2_s, t1_in, t1_out, p_shell,
                                  exp_trace.times, scheme=scheme)
    return float(((sim.polarization - exp_trace.polarization) ** 2).sum())


def fit_t1(exp_trace, geometry, d_nm2_s, grid=T1GridSpec(), p_shell=1.0,
           initial=1.0, scheme="ramp"):
    """Least-squares grid search over (T1_in, T1_out), all else fixed.

    Simulates at every grid node, interpolating the trace at the experimental
    timestamps.  One optional refinement pass with halved log-spacing around
    the coarse minimum.  A relative residue variation below 1 % across the
    grid raises an insensitivity warning (not an error).
    """
    if len(exp_trace.times) < 3:
        raise ValueError("need at least 3 experimental points")
    kind = exp_trace.kind
    gin = np.geomspace(*grid.t1_in_range, grid.n)
    gout = np.geomspace(*grid.t1_out_range, grid.n)
    rows = []
    for ti in gin:
        for to in gout:
            rows.append((ti, to, _simulate_for_fit(
                kind, geometry, d_nm2_s, ti, to, exp_trace, p_shell, initial,
                scheme)))
    surface = np.array(rows)
    best = surface[np.argmin(surface[:, 2])]
    if grid.refine:
        h_in = np.log(gin[1] / gin[0]) if grid.n > 1 else 0.1
        h_out = np.log(gout[1] / gout[0]) if grid.n > 1 else 0.1
        rin = best[0] * np.exp(np.linspace(-h_in, h_in, 5))
        rout = best[1] * np.exp(np.linspace(-h_out, h_out, 5))
        for ti in rin:
            for to in rout:
                rows.append((ti, to, _simulate_for_fit(
                    kind, geometry, d_nm2_s, ti, to, exp_trace, p_shell,
                    initial, scheme)))
        surface = np.array(rows)
        best = surface[np.argmin(surface[:, 2])]
    if grid.polish:
        from scipy.optimize import minimize, minimize_scalar

        def objective(logt):
            return _simulate_for_fit(kind, geometry, d_nm2_s,
                                     float(np.exp(logt[0])), float(np.exp(logt[1])),
                                     exp_trace, p_shell, initial, scheme)

        # The residue surface has a nearly flat valley along constant
        # volume-weighted mean relaxation rate (fast-exchange degeneracy), so
        # a plain local descent strands on the valley floor.  Scan the valley:
        # profile out t1_out for a spread of t1_in values, then descend from
        # the profile minimum.
        lo, hi = np.log(grid.t1_out_range)
        profile = []
        for ti in np.geomspace(*grid.t1_in_range, 2 * grid.n // 2 + 7):
            res = minimize_scalar(lambda lt: objective((np.log(ti), lt)),
                                  bounds=(lo, hi), method="bounded",
                                  options={"xatol": 5e-4})
            profile.append((ti, float(np.exp(res.x)), float(res.fun)))
        rows.extend(profile)
        ti0, to0, _ = min(profile, key=lambda p: p[2])
        opt = minimize(objective, np.log([ti0, to0]), method="Nelder-Mead",
                       options={"xatol": 1e-5, "fatol": 1e30, "maxiter": 300})
        rows.append((float(np.exp(opt.x[0])), float(np.exp(opt.x[1])),
                     float(opt.fun)))
        surface = np.array(rows)
        best = surface[np.argmin(surface[:, 2])]

    res = surface[:, 2]
    spread = (res.max() - res.min()) / max(res.max(), 1e-300)
    insensitive = bool(spread < 0.01)
    if insensitive:
        warnings.warn("T1 grid search residue varies by <1%: "
                      "fit is insensitive to the relaxation times")
    # residue ranges along the two axes through the coarse node nearest the
    # best fit; ratio > 1 means t1_out is constrained more tightly than t1_in
    coarse = surface[:grid.n * grid.n]
    anchor = coarse[np.argmin(np.abs(np.log(coarse[:, 0] / best[0]))
                              + np.abs(np.log(coarse[:, 1] / best[1])))]
    vary_out = coarse[np.isclose(coarse[:, 0], anchor[0])][:, 2]
    vary_in = coarse[np.isclose(coarse[:, 1], anchor[1])][:, 2]
    ratio = float("nan")
    if len(vary_in) > 1 and len(vary_out) > 1 and np.ptp(vary_in) > 0:
        ratio = float(np.ptp(vary_out) / np.ptp(vary_in))
    return FitResult(t1_in=float(best[0]), t1_out=float(best[1]),
                     residue=float(best[2]), surface=surface,
                     insensitive=insensitive, sensitivity_ratio=ratio)


def rate_model(steady_state, tau_bup, asymptote):
    """One-compartment build-up rates: 1/tau = k_W + k_R, P0 = A k_W tau."""
    if tau_bup <= 0:
        raise ValueError("build-up time must be positive")
    if not 0 < steady_state <= asymptote:
        raise ValueError("steady state must satisfy 0 < P0 <= A")
    k_w = steady_state / (asymptote * tau_bup)
    k_r = 1.0 / tau_bup - k_w
    return RateModelParams(k_w=k_w, k_r=k_r, asymptote=asymptote,
                           steady_state=steady_state, tau_bup=tau_bup)


def thermal_electron_polarization(field_t, temperature_k):
    """tanh(g mu_B B / 2 k T) for g = 2.002."""
    from .constants import BOHR_MAGNETON, BOLTZMANN, G_ELECTRON
    x = G_ELECTRON * BOHR_MAGNETON * field_t / (2.0 * BOLTZMANN * temperature_k)
    return float(np.tanh(x))


def fit_mono_exponential(times, values, kind="decay"):
    """Nonlinear fit of B exp(-t/tau) (decay) or B (1 - exp(-t/tau)).

    Returns (amplitude, tau) in the units of ``times``.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if len(t) < 3:
        raise ValueError("need at least 3 points")
    span = t[-1] - t[0] if t[-1] > t[0] else 1.0
    guess = (max(abs(y).max(), 1e-12), span / 3.0)
    if kind == "decay":
        model = lambda tt, b, tau: b * np.exp(-tt / tau)
    elif kind == "build-up":
        model = lambda tt, b, tau: b * (1.0 - np.exp(-tt / tau))
    else:
        raise ValueError(f"unknown kind {kind!r}")
    try:
        popt, _ = curve_fit(model, t, y, p0=guess, maxfev=20000)
    except RuntimeError as exc:
        raise RuntimeError(f"mono-exponential fit did not converge for "
                           f"{len(t)} points on [{t[0]}, {t[-1]}]: {exc}") from exc
    return float(popt[0]), float(popt[1])

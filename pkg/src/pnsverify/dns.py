"""Pseudo-spectral time integration of the periodic incompressible equations.

Semi-implicit scheme: Crank-Nicolson for the stiff diffusion, second-order
Adams-Bashforth for the dealiased advection (Euler-with-CN bootstrap on the
first step), divergence projection every step.  Fixed dt with an advective
CFL guard keeps diagnostics time series reproducible.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DivergenceError, InvalidArgumentError, StepRejectedError
from .grid import (
    ScalarField,
    VectorField,
    as_physical,
    curl,
    leray_project,
    norm,
    to_physical,
    to_spectral,
)
from .residuals import FlowParams


@dataclass
class DiagnosticSeries:
    """Sampled scalar diagnostics of one run.

    energy        0.5 * int |u|^2
    enstrophy     0.5 * int |curl u|^2
    max_vorticity sup-norm of curl u
    bkm_integral  trapezoid of max_vorticity over time
    min_pressure  min of the projection pressure
    """

    times: list = dc_field(default_factory=list)
    energy: list = dc_field(default_factory=list)
    enstrophy: list = dc_field(default_factory=list)
    max_vorticity: list = dc_field(default_factory=list)
    bkm_integral: list = dc_field(default_factory=list)
    min_pressure: list = dc_field(default_factory=list)

    CSV_HEADER = ("t", "energy", "enstrophy", "max_vorticity", "bkm_integral", "min_pressure")

    def append(self, t, energy, enstrophy, max_vort, min_p):
        if self.times:
            prev_b = self.bkm_integral[-1]
            prev_t = self.times[-1]
            prev_w = self.max_vorticity[-1]
            bkm = prev_b + 0.5 * (prev_w + max_vort) * (t - prev_t)
        else:
            bkm = 0.0
        self.times.append(t)
        self.energy.append(energy)
        self.enstrophy.append(enstrophy)
        self.max_vorticity.append(max_vort)
        self.bkm_integral.append(bkm)
        self.min_pressure.append(min_p)

    def rows(self):
        return list(
            zip(
                self.times,
                self.energy,
                self.enstrophy,
                self.max_vorticity,
                self.bkm_integral,
                self.min_pressure,
            )
        )


@dataclass
class SolverState:
    """Spectral divergence-free velocity plus bookkeeping."""

    u: VectorField  # spectral representation
    t: float
    step_count: int
    params: FlowParams
    dt: float
    cfl_limit: float = 0.5
    vorticity_ceiling: float = np.inf
    _prev_nonlinear: tuple = None


def random_divergence_free(grid, seed=0, amplitude=0.3, max_mode=3):
    """Smooth random solenoidal field: band-limited noise, projected, scaled."""
    rng = np.random.default_rng(seed)
    comps = []
    keep1 = np.abs(grid.modes) <= max_mode
    mask = (
        keep1.reshape(-1, 1, 1) & keep1.reshape(1, -1, 1) & keep1.reshape(1, 1, -1)
    )
    for _ in range(3):
        vals = rng.standard_normal((grid.n_modes,) * 3)
        spec = to_spectral(ScalarField(grid, vals))
        comps.append(to_physical(ScalarField(grid, spec.values * mask, "spectral")))
    v = leray_project(VectorField(*comps))
    scale = amplitude / max(norm(v, np.inf), 1e-300)
    return VectorField(
        *(ScalarField(v.grid, as_physical(c).values * scale) for c in v.components())
    )


def init(u0, params, dt, cfl_limit=0.5, vorticity_ceiling=np.inf):
    """Project the initial field and wrap it in a fresh state at t = 0."""
    if dt <= 0:
        raise InvalidArgumentError("dt must be positive")
    for c in u0.components():
        if not np.all(np.isfinite(c.values)):
            raise InvalidArgumentError("initial velocity contains NaN/Inf")
    spec = u0 if u0.representation == "spectral" else to_spectral(u0)
    return SolverState(
        u=leray_project(spec),
        t=0.0,
        step_count=0,
        params=params,
        dt=float(dt),
        cfl_limit=cfl_limit,
        vorticity_ceiling=vorticity_ceiling,
    )


def _nonlinear(state):
    """Dealiased advection term N_i = -(u . grad) u_i, spectral output."""
    g = state.u.grid
    mask = g.dealias_mask
    spec = [c.values * mask for c in state.u.components()]
    phys = [np.real(np.fft.ifftn(s * g.n_modes**3)) for s in spec]
    ks = (g.kx, g.ky, g.kz)
    out = []
    grads = [
        [np.real(np.fft.ifftn(1j * ks[j] * spec[i] * g.n_modes**3)) for j in range(3)]
        for i in range(3)
    ]
    for i in range(3):
        adv = phys[0] * grads[i][0] + phys[1] * grads[i][1] + phys[2] * grads[i][2]
        nhat = np.fft.fftn(-adv) / g.n_modes**3
        out.append(nhat * mask)
    return tuple(out), phys


def _projection_pressure(state, nonlinear):
    """Pressure field recovering the divergence-free constraint."""
    g = state.u.grid
    ksq = np.where(g.ksq == 0.0, 1.0, g.ksq)
    kdotn = g.kx * nonlinear[0] + g.ky * nonlinear[1] + g.kz * nonlinear[2]
    p_hat = state.params.rho * (-1j) * kdotn / ksq
    p_hat = np.where(np.broadcast_to(g.ksq == 0.0, p_hat.shape), 0.0, p_hat)
    return to_physical(ScalarField(g, p_hat, "spectral"))


def step(state):
    """Advance one dt; returns a fresh state (inputs never mutated)."""
    g = state.u.grid
    n, phys = _nonlinear(state)
    maxu = max(float(np.max(np.abs(p))) for p in phys) if phys else 0.0
    cfl = maxu * state.dt / g.spacing
    if cfl > state.cfl_limit:
        suggested = 0.9 * state.cfl_limit * g.spacing / maxu
        raise StepRejectedError(
            f"advective CFL {cfl:.3f} exceeds limit {state.cfl_limit}; "
            f"suggested dt = {suggested:.3e}",
            suggested_dt=suggested,
        )
    nu = state.params.nu
    dt = state.dt
    if state._prev_nonlinear is None:
        adv = n  # first step: explicit Euler bootstrap for the advection
    else:
        adv = tuple(
            1.5 * n[i] - 0.5 * state._prev_nonlinear[i] for i in range(3)
        )
    diff = nu * g.ksq
    denom = 1.0 + 0.5 * dt * diff
    numer = 1.0 - 0.5 * dt * diff
    new = []
    for i, c in enumerate(state.u.components()):
        new.append((numer * c.values + dt * adv[i]) / denom)
    unew = leray_project(
        VectorField(*(ScalarField(g, v, "spectral") for v in new))
    )
    for c in unew.components():
        if not np.all(np.isfinite(c.values)):
            raise DivergenceError(
                f"NaN detected at t = {state.t + dt:.6g}", t=state.t + dt
            )
    return SolverState(
        u=unew,
        t=state.t + dt,
        step_count=state.step_count + 1,
        params=state.params,
        dt=state.dt,
        cfl_limit=state.cfl_limit,
        vorticity_ceiling=state.vorticity_ceiling,
        _prev_nonlinear=n,
    )


def sample_diagnostics(state, series):
    """Append energy/enstrophy/vorticity/pressure diagnostics (state untouched)."""
    uphys = to_physical(state.u)
    w = curl(uphys)
    energy = 0.5 * norm(uphys, 2) ** 2
    enst = 0.5 * norm(w, 2) ** 2
    wmax = norm(w, np.inf)
    nhat, _ = _nonlinear(state)
    p = _projection_pressure(state, nhat)
    series.append(state.t, energy, enst, wmax, float(np.min(p.values)))
    return wmax


def run(state, t_end, sample_interval=None, observer=None):
    """March to t_end collecting diagnostics every sample_interval.

    Halts with DivergenceError (carrying the BKM integral so far) when the
    vorticity ceiling is exceeded or NaN appears.  The optional observer is
    called as observer(state) at every sample without modifying the state.
    """
    series = DiagnosticSeries()
    interval = sample_interval if sample_interval is not None else state.dt
    wmax = sample_diagnostics(state, series)
    if observer is not None:
        observer(state)
    next_sample = state.t + interval
    eps = 1e-12
    while state.t < t_end - eps:
        try:
            state = step(state)
        except DivergenceError as err:
            err.bkm_integral = series.bkm_integral[-1]
            raise
        if state.t >= next_sample - eps or state.t >= t_end - eps:
            wmax = sample_diagnostics(state, series)
            if observer is not None:
                observer(state)
            next_sample += interval
            if wmax > state.vorticity_ceiling:
                raise DivergenceError(
                    f"max vorticity {wmax:.3e} exceeded ceiling "
                    f"{state.vorticity_ceiling:.3e} at t = {state.t:.6g}",
                    t=state.t,
                    bkm_integral=series.bkm_integral[-1],
                )
    return state, series

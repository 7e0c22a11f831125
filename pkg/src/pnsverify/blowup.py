"""Quantitative blowup analysis of the sixth-root time factor.

Derivative-growth exponents are fitted on log-log samples approaching the
singular time, curve tables (value and derivative magnitudes over a time
grid, zero branch included) are produced for external plotting, and the
closed form is cross-checked against an independent high-order ODE
integration of its defining equation.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InvalidArgumentError, InvalidRangeError, SingularPointError
from .families import sixth_root_value


@dataclass
class ExponentFit:
    """Least-squares slope of log|f^(m)| against log(offset from t*)."""

    m: int
    fitted_slope: float
    expected_slope: float
    rel_error: float
    j_min: int
    j_max: int


def fit_blowup_exponent(params, m, j_min=2, j_max=8):
    """Fit |f^(m)(t* - 10^-j)| ~ (t*-t)^(1/6 - m) for j in [j_min, j_max].

    The expected slope is 1/6 - m; for m >= 1 the magnitude diverges and the
    relative error of the fit is reported against the expected exponent.
    """
    if not 0 <= m <= 3:
        raise InvalidArgumentError(f"derivative order m must be in 0..3, got {m}")
    if not (2 <= j_min < j_max <= 12):
        raise InvalidArgumentError(
            f"need 2 <= j_min < j_max <= 12, got ({j_min}, {j_max})"
        )
    js = np.arange(j_min, j_max + 1)
    offsets = 10.0 ** (-js.astype(float))
    ts = params.t_star - offsets
    if np.any(ts < 0) or np.any(ts >= params.t_star):
        raise InvalidRangeError(
            "sample offsets leave the live branch [0, t_star)"
        )
    mags = np.abs(sixth_root_value(params, ts, m))
    if np.any(mags == 0.0):
        raise InvalidRangeError("sample hit the zero branch; shrink j range")
    slope = np.polyfit(np.log(offsets), np.log(mags), 1)[0]
    expected = 1.0 / 6.0 - m
    rel = abs(slope - expected) / abs(expected)
    return ExponentFit(
        m=m,
        fitted_slope=float(slope),
        expected_slope=expected,
        rel_error=float(rel),
        j_min=int(j_min),
        j_max=int(j_max),
    )


def figure1_data(params, m_list, t_grid):
    """Table of |f^(m)(t)| over the grid, zero branch included.

    Returns (header, rows); the grid must avoid t = t_star exactly when any
    requested m is >= 1 (the one-sided derivative is unbounded there).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if any(m >= 1 for m in m_list) and np.any(t_grid == params.t_star):
        raise SingularPointError(
            "t grid contains the singular time with m >= 1 requested"
        )
    header = ["t"] + [f"abs_derivative_m{m}" for m in m_list]
    columns = [np.abs(sixth_root_value(params, t_grid, m)) for m in m_list]
    rows = [
        [float(t)] + [float(col[i]) for col in columns]
        for i, t in enumerate(t_grid)
    ]
    return header, rows


@dataclass
class CrosscheckReport:
    max_rel_deviation: float
    t_stop: float
    achieved_tolerance: float
    n_samples: int


def ode_crosscheck(params, t_stop_frac=0.9, rtol=1e-12, atol=1e-14):
    """Integrate df/dt = -sqrt(coeff) f^-5 and compare to the closed form.

    Stops at t_stop_frac * t_star (strictly before the singularity).  The
    same right-hand side serves both sign branches since f^-5 carries the
    branch sign.  Returns the maximum relative deviation over a dense
    comparison grid.
    """
    if not 0 <= t_stop_frac < 1:
        raise InvalidArgumentError(
            f"t_stop_frac must lie in [0, 1), got {t_stop_frac}"
        )
    f0 = sixth_root_value(params, 0.0, 0)
    t_stop = t_stop_frac * params.t_star
    if t_stop == 0.0:
        return CrosscheckReport(0.0, 0.0, rtol, 1)
    root = math.sqrt(params.coeff)
    sol = solve_ivp(
        lambda t, f: [-root * f[0] ** -5],
        (0.0, t_stop),
        [f0],
        method="DOP853",
        rtol=rtol,
        atol=atol,
        dense_output=True,
    )
    if not sol.success:
        raise InvalidRangeError(f"ODE integration failed: {sol.message}")
    ts = np.linspace(0.0, t_stop, 200)
    exact = sixth_root_value(params, ts, 0)
    got = sol.sol(ts)[0]
    rel = np.max(np.abs(got - exact) / np.abs(exact))
    return CrosscheckReport(
        max_rel_deviation=float(rel),
        t_stop=float(t_stop),
        achieved_tolerance=rtol,
        n_samples=len(ts),
    )

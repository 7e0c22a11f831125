"""Analytic space-time field families.

Provides the closed-form objects the residual and blowup analyses consume:

* ``SymbolicField`` -- arbitrary smooth fields from sympy expressions in
  (x, y, z, t), with exact mixed partial derivatives up to total order 4.
* ``SixthRootFamily`` -- the sixth-root time factor f(t) = s*(a*(t*-t))^(1/6)
  solving (f')^2 = coeff / f^10, extended by zero past its singular time;
  all derivatives of order >= 1 are unbounded as t -> t*.
* logistic closed form, its ODE residual and its denominator-root blowup time.
* the lattice velocity family: products of three modulated sine factors
  (with a sinc-style extension over the divided factor) plus a rigid
  eta * (coordinate) * (1-t)^(1/6) part.
* separable products time_factor(t) * spatial(x, y, z).
* the decaying Taylor-Green vortex, used as the exact Navier-Stokes oracle.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import sympy as sp

from .errors import (
    BlowupPointError,
    InvalidArgumentError,
    NoRealBlowupError,
    OutOfDomainError,
    SingularPointError,
)
from .grid import PHYSICAL, ScalarField, VectorField

X, Y, Z, T = sp.symbols("x y z t", real=True)
_SYMBOLS = {"x": X, "y": Y, "z": Z, "t": T}


# ---------------------------------------------------------------------------
# sinc helper: g(w) = sin(w)/w and its derivatives, numerically stable at w=0
# ---------------------------------------------------------------------------

_W = sp.Symbol("w")
_G_CLOSED = [
    sp.lambdify(_W, sp.diff(sp.sin(_W) / _W, _W, k), "numpy") for k in range(6)
]
_G_SERIES_TERMS = 9  # series through w^16; < 1e-19 truncation for |w| < 0.5


def _sinc_derivative(w, k):
    """k-th derivative of sin(w)/w; Taylor series near 0, closed form away."""
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    big = np.abs(w) >= 0.5
    if big.any():
        out[big] = _G_CLOSED[k](w[big])
    small = ~big
    if small.any():
        ws = w[small]
        acc = np.zeros_like(ws)
        for m in range(_G_SERIES_TERMS):
            p = 2 * m - k
            if p < 0:
                continue
            c = (-1.0) ** m / math.factorial(2 * m + 1)
            for j in range(k):
                c *= 2 * m - j
            acc += c * ws**p
        out[small] = acc
    return out


def _make_g_class(k):
    def fdiff(self, argindex=1):
        return _G_FUNCS[k + 1](self.args[0])

    return type(f"_SincD{k}", (sp.Function,), {"fdiff": fdiff})


_G_FUNCS = [_make_g_class(k) for k in range(5)]
_G_FUNCS.append(type("_SincD5", (sp.Function,), {}))
_G_NUMERIC = {
    f"_SincD{k}": (lambda kk: lambda w: _sinc_derivative(w, kk))(k) for k in range(6)
}


# ---------------------------------------------------------------------------
# base class
# ---------------------------------------------------------------------------

MAX_TOTAL_ORDER = 4


def _check_orders(dx, dy, dz, dt):
    for o in (dx, dy, dz, dt):
        if o < 0:
            raise InvalidArgumentError("derivative orders must be nonnegative")
    if dx + dy + dz + dt > MAX_TOTAL_ORDER:
        raise InvalidArgumentError(
            f"total derivative order {dx + dy + dz + dt} exceeds {MAX_TOTAL_ORDER}"
        )


class ClosedFormField:
    """Analytic space-time field with mixed partials up to total order 4.

    Subclasses implement ``evaluate``; broadcasting over numpy arrays is
    expected.  Call syntax: ``f(x, y, z, t, dx=..., dy=..., dz=..., dt=...)``.
    """

    def evaluate(self, x, y, z, t, dx=0, dy=0, dz=0, dt=0):
        raise NotImplementedError

    def __call__(self, x, y, z, t, dx=0, dy=0, dz=0, dt=0):
        return self.evaluate(x, y, z, t, dx=dx, dy=dy, dz=dz, dt=dt)

    def depends_on_space(self):
        return True

    def depends_on_time(self):
        return True


def _broadcast(value, *args):
    shape = np.broadcast_shapes(*(np.shape(a) for a in args))
    arr = np.broadcast_to(np.asarray(value, dtype=float), shape)
    if shape == ():
        return float(arr)
    return np.array(arr)


class SymbolicField(ClosedFormField):
    """Field backed by a sympy expression in x, y, z, t."""

    def __init__(self, expr):
        if isinstance(expr, str):
            expr = sp.sympify(expr, locals=_SYMBOLS)
        expr = sp.sympify(expr)
        extra = expr.free_symbols - {X, Y, Z, T}
        if extra:
            raise InvalidArgumentError(
                f"expression has free symbols besides x,y,z,t: {sorted(map(str, extra))}"
            )
        self.expr = expr
        self._cache = {}

    def _fn(self, dx, dy, dz, dt):
        key = (dx, dy, dz, dt)
        if key not in self._cache:
            d = sp.diff(self.expr, X, dx, Y, dy, Z, dz, T, dt)
            self._cache[key] = sp.lambdify(
                (X, Y, Z, T), d, modules=[_G_NUMERIC, "numpy"]
            )
        return self._cache[key]

    def evaluate(self, x, y, z, t, dx=0, dy=0, dz=0, dt=0):
        _check_orders(dx, dy, dz, dt)
        val = self._fn(dx, dy, dz, dt)(x, y, z, t)
        return _broadcast(val, x, y, z, t)

    def depends_on_space(self):
        return bool(self.expr.free_symbols & {X, Y, Z})

    def depends_on_time(self):
        return T in self.expr.free_symbols

    def __add__(self, other):
        return SymbolicField(self.expr + _as_expr(other))

    __radd__ = __add__

    def __sub__(self, other):
        return SymbolicField(self.expr - _as_expr(other))

    def __mul__(self, other):
        return SymbolicField(self.expr * _as_expr(other))

    __rmul__ = __mul__

    def __neg__(self):
        return SymbolicField(-self.expr)

    def __repr__(self):
        return f"SymbolicField({self.expr})"


def _as_expr(other):
    if isinstance(other, SymbolicField):
        return other.expr
    return sp.sympify(other)


ZERO_FIELD = SymbolicField(sp.Integer(0))


# ---------------------------------------------------------------------------
# sixth-root blowup time factor
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SixthRootParams:
    """Parameters of the sixth-root time factor.

    coeff: positive constant of the defining ODE (f')^2 = coeff / f^10.
    t_star: positive singular time; the radicand vanishes there.
    sign: +1 or -1, selecting the displayed branch pair.
    """

    coeff: float = 1.0
    t_star: float = 1.0
    sign: int = 1

    def __post_init__(self):
        if self.coeff <= 0:
            raise InvalidArgumentError(f"coeff must be positive, got {self.coeff}")
        if self.t_star <= 0:
            raise InvalidArgumentError(f"t_star must be positive, got {self.t_star}")
        if self.sign not in (1, -1):
            raise InvalidArgumentError(f"sign must be +-1, got {self.sign}")


# coefficient of (t,-t)^(1/6-m): (-1)^m prod_{j<m} (1/6 - j)
_SIXTH_COEFFS = []
for _m in range(5):
    _c = (-1.0) ** _m
    for _j in range(_m):
        _c *= 1.0 / 6.0 - _j
    _SIXTH_COEFFS.append(_c)


def sixth_root_value(params, t, m=0):
    """m-th time derivative of the sixth-root factor, with zero extension.

    f(t) = sign * (6*sqrt(coeff)*(t_star - t))^(1/6) on [0, t_star),
    f = 0 on (t_star, inf).  At t = t_star the value is 0 but every
    derivative is one-sided unbounded, so m >= 1 there raises
    SingularPointError.  Negative t raises OutOfDomainError.
    """
    if not 0 <= m <= 4:
        raise InvalidArgumentError(f"derivative order m must be in 0..4, got {m}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise OutOfDomainError("sixth-root factor defined for t >= 0 only")
    ts = params.t_star
    if m >= 1 and np.any(t_arr == ts):
        raise SingularPointError(
            f"derivative order {m} is unbounded at the singular time t={ts}"
        )
    a = 6.0 * math.sqrt(params.coeff)
    out = np.zeros_like(t_arr)
    live = t_arr < ts
    if live.any():
        tau = ts - t_arr[live]
        out[live] = (
            params.sign * a ** (1.0 / 6.0) * _SIXTH_COEFFS[m] * tau ** (1.0 / 6.0 - m)
        )
    if np.ndim(t) == 0:
        return float(out)
    return out


class SixthRootFamily(ClosedFormField):
    """The sixth-root time factor as a space-independent closed-form field."""

    def __init__(self, params):
        self.params = params

    def evaluate(self, x, y, z, t, dx=0, dy=0, dz=0, dt=0):
        _check_orders(dx, dy, dz, dt)
        if dx or dy or dz:
            return _broadcast(0.0, x, y, z, t)
        return _broadcast(sixth_root_value(self.params, t, dt), x, y, z, t)

    def depends_on_space(self):
        return False


# ---------------------------------------------------------------------------
# logistic family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogisticParams:
    """Constants of the logistic closed form f = a1 / (exp(-a1 t/a2) c1 a1 + 2 a).

    When ``a1`` is omitted it is set by the large-data initial-condition
    rule a1 = -2 a / c1 - epsilon.
    """

    a: float
    a2: float
    c1: float
    epsilon: float = 0.0
    a1: float = None

    def __post_init__(self):
        if self.a2 == 0:
            raise InvalidArgumentError("a2 must be nonzero")
        if self.c1 <= 0:
            raise InvalidArgumentError(f"c1 must be positive, got {self.c1}")
        if self.a1 is None:
            if self.epsilon <= 0:
                raise InvalidArgumentError(
                    "epsilon must be positive when a1 is derived from it"
                )
            object.__setattr__(self, "a1", -2.0 * self.a / self.c1 - self.epsilon)


def _logistic_denominator(params, t):
    return (
        np.exp(-params.a1 * np.asarray(t, dtype=float) / params.a2)
        * params.c1
        * params.a1
        + 2.0 * params.a
    )


def logistic_value(params, t):
    """Closed-form logistic solution; raises BlowupPointError at denominator roots."""
    den = _logistic_denominator(params, t)
    if np.any(np.abs(den) <= 1e-12):
        raise BlowupPointError(
            f"denominator {np.min(np.abs(den)):.3e} within 1e-12 of zero at t={t}"
        )
    out = params.a1 / den
    return float(out) if np.ndim(t) == 0 else out


def logistic_derivative(params, t):
    """Exact df/dt of the closed form."""
    den = _logistic_denominator(params, t)
    if np.any(np.abs(den) <= 1e-12):
        raise BlowupPointError("derivative at a denominator root")
    dden = -(params.a1 / params.a2) * np.exp(
        -params.a1 * np.asarray(t, dtype=float) / params.a2
    ) * params.c1 * params.a1
    out = -params.a1 * dden / den**2
    return float(out) if np.ndim(t) == 0 else out


def logistic_ode_residual(params, t):
    """Residual a2 f' - f (a1 - 2 a f) of the defining first-order ODE."""
    f = logistic_value(params, t)
    fp = logistic_derivative(params, t)
    return params.a2 * fp - f * (params.a1 - 2.0 * params.a * f)


def logistic_blowup_time(params):
    """Denominator root t* = -ln(-2a/(c1 a1)) a2 / a1.

    Requires the log argument -2a/(c1 a1) to be positive; otherwise the
    denominator never vanishes on the real line for this branch and
    NoRealBlowupError is raised.
    """
    arg = -2.0 * params.a / (params.c1 * params.a1)
    if arg <= 0:
        raise NoRealBlowupError(
            f"log argument {arg:.6g} is not positive; no real blowup time"
        )
    return -math.log(arg) * params.a2 / params.a1


# ---------------------------------------------------------------------------
# lattice velocity family
# ---------------------------------------------------------------------------


def wall_envelope(cell_scale, power=2):
    """Smooth envelope prod_i sin(x_i/n)^power vanishing on cell walls.

    The walls sit at coordinate multiples of n*pi; each factor vanishes to
    order ``power`` there, which also makes lattice quadrature of products
    of such fields effectively spectrally accurate.
    """
    n = sp.nsimplify(cell_scale, rational=True)
    return SymbolicField(
        (sp.sin(X / n) * sp.sin(Y / n) * sp.sin(Z / n)) ** int(power)
    )


@dataclass(frozen=True)
class LatticeFlowParams:
    """Cell-scale n, eta scaling, and the two smooth envelope fields.

    Envelopes must be SymbolicField instances (the family is assembled
    symbolically so that its mixed partials stay exact).
    """

    cell_scale: float
    eta: float
    fx: SymbolicField = None
    fy: SymbolicField = None

    def __post_init__(self):
        if self.cell_scale <= 0:
            raise InvalidArgumentError("cell_scale must be positive")
        if self.eta <= 0:
            raise InvalidArgumentError("eta must be positive")
        if self.fx is None:
            object.__setattr__(self, "fx", wall_envelope(self.cell_scale))
        if self.fy is None:
            object.__setattr__(self, "fy", wall_envelope(self.cell_scale))
        for name in ("fx", "fy"):
            f = getattr(self, name)
            if not isinstance(f, SymbolicField):
                raise InvalidArgumentError(f"envelope {name} must be a SymbolicField")


class LatticeVelocityField(ClosedFormField):
    """One horizontal component of the lattice family.

    component 'x':
        sin(c1 x) sin(c2 y) * sinc(c3 z) * fx + eta * y * (1-t)^(1/6)
    component 'y':
        sin(c1 x) sin(c2 y) * sinc(c3 z) * fy + eta * x * (1-t)^(1/6)

    with c1 = n^2-(z/pi)^2, c2 = n^2-(x/pi)^2, c3 = n^2-(y/pi)^2.  The
    divided sine factor sin(c3 z)/(c3 z) is extended by its sinc limit
    wherever c3 z vanishes, so the field is smooth across z = 0 and across
    the y = +-n*pi planes.  Defined for t <= 1 (the sixth root stays real).
    """

    def __init__(self, params, component):
        if component not in ("x", "y"):
            raise InvalidArgumentError(f"component must be 'x' or 'y', got {component!r}")
        self.params = params
        self.component = component
        n = sp.nsimplify(params.cell_scale, rational=True)
        c1 = n**2 - (Z / sp.pi) ** 2
        c2 = n**2 - (X / sp.pi) ** 2
        c3 = n**2 - (Y / sp.pi) ** 2
        envelope = params.fx.expr if component == "x" else params.fy.expr
        rigid_coord = Y if component == "x" else X
        expr = (
            sp.sin(c1 * X) * sp.sin(c2 * Y) * _G_FUNCS[0](c3 * Z) * envelope
            + sp.Float(params.eta) * rigid_coord * (1 - T) ** sp.Rational(1, 6)
        )
        self._sym = SymbolicField(expr)

    @property
    def expr(self):
        return self._sym.expr

    def evaluate(self, x, y, z, t, dx=0, dy=0, dz=0, dt=0):
        _check_orders(dx, dy, dz, dt)
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr > 1.0):
            raise OutOfDomainError("lattice family defined for t <= 1 only")
        if dt >= 1 and np.any(t_arr == 1.0):
            raise SingularPointError(
                "time derivatives of (1-t)^(1/6) are unbounded at t=1"
            )
        return self._sym.evaluate(x, y, z, t, dx=dx, dy=dy, dz=dz, dt=dt)


def lattice_velocity(params, component, point, t):
    """Evaluate one component of the lattice family at a point and time."""
    f = LatticeVelocityField(params, component)
    x, y, z = point
    return float(f(x, y, z, t))


# ---------------------------------------------------------------------------
# separable product
# ---------------------------------------------------------------------------


def _probe_depends_on_space(f):
    pts = [(0.3, 0.7, 1.1, 0.2), (1.9, 0.4, 2.3, 0.6)]
    for ax in ("dx", "dy", "dz"):
        for p in pts:
            if abs(f(*p, **{ax: 1})) > 1e-12:
                return True
    return False


def _probe_depends_on_time(f):
    pts = [(0.3, 0.7, 1.1, 0.2), (1.9, 0.4, 2.3, 0.6)]
    return any(abs(f(*p, dt=1)) > 1e-12 for p in pts)


class SeparableField(ClosedFormField):
    """Product time_factor(t) * spatial(x, y, z); derivatives distribute."""

    def __init__(self, time_factor, spatial):
        if isinstance(time_factor, (SymbolicField, SixthRootFamily)):
            spatial_dep = time_factor.depends_on_space()
        else:
            spatial_dep = _probe_depends_on_space(time_factor)
        if spatial_dep:
            raise InvalidArgumentError("time factor must not depend on x,y,z")
        if isinstance(spatial, SymbolicField):
            time_dep = spatial.depends_on_time()
        else:
            time_dep = _probe_depends_on_time(spatial)
        if time_dep:
            raise InvalidArgumentError("spatial factor must not depend on t")
        self.time_factor = time_factor
        self.spatial = spatial

    def evaluate(self, x, y, z, t, dx=0, dy=0, dz=0, dt=0):
        _check_orders(dx, dy, dz, dt)
        tf = self.time_factor.evaluate(0.0, 0.0, 0.0, t, dt=dt)
        sf = self.spatial.evaluate(x, y, z, 0.0, dx=dx, dy=dy, dz=dz)
        return _broadcast(np.asarray(tf) * np.asarray(sf), x, y, z, t)


def separable_product(time_factor, spatial):
    """Build u(x,y,z,t) = time_factor(t) * spatial(x,y,z)."""
    return SeparableField(time_factor, spatial)


# ---------------------------------------------------------------------------
# Taylor-Green manufactured solution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TaylorGreenFlow:
    """Decaying Taylor-Green vortex, an exact zero-forcing solution.

    u = (sin x cos y, -cos x sin y, 0) * exp(-2 nu t)
    P = rho/4 (cos 2x + cos 2y) * exp(-4 nu t)
    """

    nu: float
    rho: float = 1.0
    u_x: SymbolicField = dc_field(init=False)
    u_y: SymbolicField = dc_field(init=False)
    u_z: SymbolicField = dc_field(init=False)
    pressure: SymbolicField = dc_field(init=False)

    def __post_init__(self):
        if self.nu <= 0:
            raise InvalidArgumentError("nu must be positive")
        decay = sp.exp(-2 * sp.Float(self.nu) * T)
        object.__setattr__(self, "u_x", SymbolicField(sp.sin(X) * sp.cos(Y) * decay))
        object.__setattr__(self, "u_y", SymbolicField(-sp.cos(X) * sp.sin(Y) * decay))
        object.__setattr__(self, "u_z", SymbolicField(sp.Integer(0)))
        object.__setattr__(
            self,
            "pressure",
            SymbolicField(
                sp.Float(self.rho) / 4 * (sp.cos(2 * X) + sp.cos(2 * Y)) * decay**2
            ),
        )

    def velocity(self, grid, t):
        return VectorField(
            sample_on_grid(self.u_x, grid, t),
            sample_on_grid(self.u_y, grid, t),
            sample_on_grid(self.u_z, grid, t),
        )

    def velocity_rate(self, grid, t):
        return VectorField(
            sample_on_grid(self.u_x, grid, t, dt=1),
            sample_on_grid(self.u_y, grid, t, dt=1),
            sample_on_grid(self.u_z, grid, t, dt=1),
        )

    def pressure_field(self, grid, t):
        return sample_on_grid(self.pressure, grid, t)

    def energy(self, t):
        """Kinetic energy 0.5 * int |u|^2 over [0, 2 pi)^3."""
        return (2.0 * np.pi) ** 3 / 4.0 * math.exp(-4.0 * self.nu * t)


def taylor_green(nu, rho=1.0):
    """Exact decaying-vortex solution used to calibrate residual operators."""
    return TaylorGreenFlow(nu=nu, rho=rho)


# ---------------------------------------------------------------------------
# sampling and finite-difference oracle helpers
# ---------------------------------------------------------------------------


def sample_on_grid(f, grid, t, dx=0, dy=0, dz=0, dt=0):
    """Sample a closed-form field (or derivative) on the collocation lattice."""
    Xc, Yc, Zc = grid.coords()
    vals = f(Xc, Yc, Zc, t, dx=dx, dy=dy, dz=dz, dt=dt)
    arr = np.broadcast_to(np.asarray(vals, dtype=float), (grid.n_modes,) * 3)
    return ScalarField(grid, np.array(arr), PHYSICAL)


_FD_OFFSETS = (-2.0, -1.0, 1.0, 2.0)
_FD_WEIGHTS = (1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0)


def finite_difference(f, point, orders, step=1e-3):
    """Mixed partial by nested 4th-order central differences.

    ``point`` is (x, y, z, t); ``orders`` the multi-index (dx, dy, dz, dt).
    Independent of the analytic derivative path; used as the test oracle.
    """

    def rec(pt, remaining):
        for axis in range(4):
            if remaining[axis] > 0:
                nxt = list(remaining)
                nxt[axis] -= 1
                acc = 0.0
                for off, wgt in zip(_FD_OFFSETS, _FD_WEIGHTS):
                    shifted = list(pt)
                    shifted[axis] += off * step
                    acc += wgt * rec(shifted, tuple(nxt))
                return acc / step
        return float(f(pt[0], pt[1], pt[2], pt[3]))

    return rec(list(point), tuple(orders))

"""Periodic-box spectral substrate.

Uniform N^3 collocation lattice on [0, 2*pi*L)^3 with FFT-based transforms,
differentiation, Poisson inversion, divergence-free (Leray) projection and
lattice-quadrature norms.  Everything downstream (residual operators, the
DNS solver, the inequality checks) is built on these primitives.

Transform convention: the forward transform divides by N^3, so the
coefficient of mode k is the per-sample average of f(x) exp(-i k.x).  A unit
sine then carries coefficients -i/2 and +i/2 at k = +1 and k = -1.
"""

from dataclasses import dataclass

import numpy as np

from .errors import IncompatibleRhsError, InvalidArgumentError, InvalidStateError

PHYSICAL = "physical"
SPECTRAL = "spectral"


class SpectralGrid:
    """Discretization of the periodic box [0, 2*pi*L)^3.

    Attributes:
        n_modes: points (and Fourier modes) per axis, even, >= 4.
        box_length: the scale L; the physical box edge is 2*pi*L.
        modes: integer mode numbers per axis in FFT order,
            {0, 1, ..., N/2-1, -N/2, ..., -1}.
        dealias_mask: boolean per mode, False where any |mode| > N/3
            (two-thirds rule).
    """

    def __init__(self, n_modes, box_length):
        if n_modes % 2 != 0 or n_modes < 4:
            raise InvalidArgumentError(
                f"n_modes must be even and >= 4, got {n_modes}"
            )
        if box_length <= 0:
            raise InvalidArgumentError(
                f"box_length must be positive, got {box_length}"
            )
        n = int(n_modes)
        self.n_modes = n
        self.box_length = float(box_length)
        self.modes = np.fft.fftfreq(n, d=1.0 / n).astype(int)

        k1 = self.modes / self.box_length
        self.kx = k1.reshape(n, 1, 1)
        self.ky = k1.reshape(1, n, 1)
        self.kz = k1.reshape(1, 1, n)
        self.ksq = self.kx**2 + self.ky**2 + self.kz**2

        keep1 = np.abs(self.modes) <= n / 3.0
        self.dealias_mask = (
            keep1.reshape(n, 1, 1)
            & keep1.reshape(1, n, 1)
            & keep1.reshape(1, 1, n)
        )

        self.spacing = 2.0 * np.pi * self.box_length / n
        self.cell_volume = self.spacing**3
        x1 = self.spacing * np.arange(n)
        self._x1 = x1

    @property
    def edge(self):
        """Physical edge length 2*pi*L of the box."""
        return 2.0 * np.pi * self.box_length

    def coords(self):
        """Return broadcast (X, Y, Z) coordinate arrays, 'ij' indexed."""
        n = self.n_modes
        return (
            self._x1.reshape(n, 1, 1),
            self._x1.reshape(1, n, 1),
            self._x1.reshape(1, 1, n),
        )

    def axis_k(self, axis):
        """Scaled wavenumber array broadcastable along ``axis`` in {0,1,2}."""
        return (self.kx, self.ky, self.kz)[axis]

    def __eq__(self, other):
        return (
            isinstance(other, SpectralGrid)
            and other.n_modes == self.n_modes
            and other.box_length == self.box_length
        )

    def __hash__(self):
        return hash((self.n_modes, self.box_length))

    def __repr__(self):
        return f"SpectralGrid(n_modes={self.n_modes}, box_length={self.box_length})"


def make_grid(n_modes, box_length):
    """Build a validated SpectralGrid (see class docstring)."""
    return SpectralGrid(n_modes, box_length)


@dataclass
class ScalarField:
    """Scalar samples on the lattice (physical) or mode coefficients (spectral)."""

    grid: SpectralGrid
    values: np.ndarray
    representation: str = PHYSICAL

    def __post_init__(self):
        n = self.grid.n_modes
        if self.values.shape != (n, n, n):
            raise InvalidArgumentError(
                f"field shape {self.values.shape} does not match grid N={n}"
            )
        if self.representation not in (PHYSICAL, SPECTRAL):
            raise InvalidArgumentError(
                f"unknown representation {self.representation!r}"
            )

    def is_physical(self):
        return self.representation == PHYSICAL


@dataclass
class VectorField:
    """Three scalar components sharing one grid and representation."""

    x: ScalarField
    y: ScalarField
    z: ScalarField

    def __post_init__(self):
        g = self.x.grid
        rep = self.x.representation
        for c in (self.y, self.z):
            if c.grid != g:
                raise InvalidArgumentError("vector components on different grids")
            if c.representation != rep:
                raise InvalidArgumentError(
                    "vector components in different representations"
                )

    @property
    def grid(self):
        return self.x.grid

    @property
    def representation(self):
        return self.x.representation

    def components(self):
        return (self.x, self.y, self.z)


def field_from_values(grid, values):
    """Wrap physical samples (broadcast to the lattice) as a ScalarField."""
    arr = np.broadcast_to(np.asarray(values, dtype=float), (grid.n_modes,) * 3)
    return ScalarField(grid, np.array(arr), PHYSICAL)


def field_from_function(grid, fn):
    """Sample ``fn(X, Y, Z)`` on the collocation lattice."""
    X, Y, Z = grid.coords()
    return field_from_values(grid, fn(X, Y, Z))


def vector_from_functions(grid, fx, fy, fz):
    return VectorField(
        field_from_function(grid, fx),
        field_from_function(grid, fy),
        field_from_function(grid, fz),
    )


def to_spectral(field):
    """Forward transform; per-sample normalization (divide by N^3)."""
    if isinstance(field, VectorField):
        return VectorField(*(to_spectral(c) for c in field.components()))
    if field.representation != PHYSICAL:
        raise InvalidStateError("to_spectral expects a physical-representation field")
    n3 = field.grid.n_modes**3
    coeff = np.fft.fftn(field.values) / n3
    return ScalarField(field.grid, coeff, SPECTRAL)


def to_physical(field):
    """Inverse transform back to real lattice samples."""
    if isinstance(field, VectorField):
        return VectorField(*(to_physical(c) for c in field.components()))
    if field.representation != SPECTRAL:
        raise InvalidStateError("to_physical expects a spectral-representation field")
    n3 = field.grid.n_modes**3
    vals = np.fft.ifftn(field.values * n3)
    return ScalarField(field.grid, np.real(vals), PHYSICAL)


def as_spectral(field):
    return field if field.representation == SPECTRAL else to_spectral(field)


def as_physical(field):
    return field if field.representation == PHYSICAL else to_physical(field)


_AXES = {"x": 0, "y": 1, "z": 2, 0: 0, 1: 1, 2: 2}


def derivative(field, axis, order=1):
    """Spectral derivative along ``axis`` ('x' | 'y' | 'z'), order 1..4.

    Multiplies by (i k)^order; the unpaired -N/2 mode is zeroed for odd
    orders so that derivatives of real fields stay real.
    """
    if isinstance(field, VectorField):
        return VectorField(*(derivative(c, axis, order) for c in field.components()))
    if not 1 <= order <= 4:
        raise InvalidArgumentError(f"derivative order must be in 1..4, got {order}")
    if axis not in _AXES:
        raise InvalidArgumentError(f"unknown axis {axis!r}")
    ax = _AXES[axis]
    was_physical = field.representation == PHYSICAL
    spec = as_spectral(field)
    g = field.grid
    k = g.axis_k(ax)
    mult = (1j * k) ** order
    if order % 2 == 1:
        keep = (np.abs(g.modes) != g.n_modes // 2).astype(float)
        shape = [1, 1, 1]
        shape[ax] = g.n_modes
        mult = mult * keep.reshape(shape)
    out = ScalarField(g, spec.values * mult, SPECTRAL)
    return to_physical(out) if was_physical else out


def gradient(field):
    """(d/dx, d/dy, d/dz) of a scalar field as a VectorField."""
    return VectorField(
        derivative(field, "x"), derivative(field, "y"), derivative(field, "z")
    )


def divergence(v):
    """Scalar divergence of a vector field."""
    parts = [derivative(c, ax) for c, ax in zip(v.components(), "xyz")]
    rep = parts[0].representation
    vals = parts[0].values + parts[1].values + parts[2].values
    return ScalarField(v.grid, vals, rep)


def laplacian(field):
    spec = as_spectral(field)
    out = ScalarField(field.grid, -field.grid.ksq * spec.values, SPECTRAL)
    return to_physical(out) if field.representation == PHYSICAL else out


def curl(v):
    """Standard curl of a vector field, spectral differentiation."""
    ux, uy, uz = v.components()
    wx = derivative(uz, "y").values - derivative(uy, "z").values
    wy = derivative(ux, "z").values - derivative(uz, "x").values
    wz = derivative(uy, "x").values - derivative(ux, "y").values
    rep = v.representation
    g = v.grid
    return VectorField(
        ScalarField(g, wx, rep), ScalarField(g, wy, rep), ScalarField(g, wz, rep)
    )


def dealias(field):
    """Zero all modes outside the two-thirds band."""
    if isinstance(field, VectorField):
        return VectorField(*(dealias(c) for c in field.components()))
    was_physical = field.representation == PHYSICAL
    spec = as_spectral(field)
    out = ScalarField(field.grid, spec.values * field.grid.dealias_mask, SPECTRAL)
    return to_physical(out) if was_physical else out


def solve_poisson(rhs):
    """Solve laplacian(u) = rhs for the mean-zero periodic solution.

    The right-hand side must itself be (numerically) mean-free, otherwise no
    periodic solution exists and IncompatibleRhsError is raised.
    """
    phys = as_physical(rhs)
    scale = np.max(np.abs(phys.values))
    mean = abs(np.mean(phys.values))
    if scale > 0 and mean > 1e-10 * scale:
        raise IncompatibleRhsError(
            f"rhs mean {mean:.3e} exceeds 1e-10 * max|rhs| = {1e-10 * scale:.3e}"
        )
    spec = as_spectral(rhs)
    g = rhs.grid
    ksq = np.where(g.ksq == 0.0, 1.0, g.ksq)
    coeff = -spec.values / ksq
    coeff[0, 0, 0] = 0.0
    out = ScalarField(g, coeff, SPECTRAL)
    return to_physical(out) if rhs.representation == PHYSICAL else out


def leray_project(v):
    """Project a vector field onto its divergence-free part, mode-wise."""
    was_physical = v.representation == PHYSICAL
    spec = to_spectral(v) if was_physical else v
    g = v.grid
    ksq = np.where(g.ksq == 0.0, 1.0, g.ksq)
    kdotv = (
        g.kx * spec.x.values + g.ky * spec.y.values + g.kz * spec.z.values
    ) / ksq
    out = VectorField(
        ScalarField(g, spec.x.values - g.kx * kdotv, SPECTRAL),
        ScalarField(g, spec.y.values - g.ky * kdotv, SPECTRAL),
        ScalarField(g, spec.z.values - g.kz * kdotv, SPECTRAL),
    )
    return to_physical(out) if was_physical else out


def norm(field, p=2):
    """Lattice L_p norm, p in {1, 2, inf}; vector fields use the pointwise
    Euclidean magnitude.  Finite p uses the uniform cell weight
    (2*pi*L / N)^3."""
    if isinstance(field, VectorField):
        phys = as_physical(field)
        mag = np.sqrt(
            phys.x.values**2 + phys.y.values**2 + phys.z.values**2
        )
        g = field.grid
    else:
        phys = as_physical(field)
        mag = np.abs(phys.values)
        g = field.grid
    if p == np.inf or p == "inf":
        return float(np.max(mag))
    if p not in (1, 2):
        raise InvalidArgumentError(f"p must be 1, 2 or inf, got {p}")
    return float((np.sum(mag**p) * g.cell_volume) ** (1.0 / p))


def integrate(values, grid):
    """Lattice quadrature of raw sample values with uniform cell weight."""
    return float(np.sum(values) * grid.cell_volume)


def mean_zero(field):
    """Subtract the lattice mean (physical representation)."""
    phys = as_physical(field)
    return ScalarField(phys.grid, phys.values - np.mean(phys.values), PHYSICAL)

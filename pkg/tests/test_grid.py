"""Tests for the periodic spectral substrate.

Covers transform round trips, Parseval, spectral differentiation, the
Poisson solve, Leray projection and lattice-quadrature norms.
"""

import numpy as np
import pytest

from pnsverify.errors import (
    IncompatibleRhsError,
    InvalidArgumentError,
    InvalidStateError,
)
from pnsverify.grid import (
    ScalarField,
    VectorField,
    curl,
    derivative,
    divergence,
    field_from_function,
    field_from_values,
    gradient,
    laplacian,
    leray_project,
    make_grid,
    norm,
    solve_poisson,
    to_physical,
    to_spectral,
    vector_from_functions,
)


def random_field(grid, seed=0, cutoff=None):
    """Random real field with spectrum confined below ``cutoff`` modes."""
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal((grid.n_modes,) * 3)
    f = to_spectral(ScalarField(grid, vals))
    cutoff = cutoff if cutoff is not None else grid.n_modes // 3
    keep1 = np.abs(grid.modes) <= cutoff
    mask = (
        keep1.reshape(-1, 1, 1) & keep1.reshape(1, -1, 1) & keep1.reshape(1, 1, -1)
    )
    return to_physical(ScalarField(grid, f.values * mask, "spectral"))


class TestMakeGrid:
    def test_mode_set(self):
        grid = make_grid(8, 1.0)
        assert sorted(grid.modes.tolist()) == [-4, -3, -2, -1, 0, 1, 2, 3]

    def test_dealias_mask_n4(self):
        # two-thirds of the Nyquist band: |k| > 4/3 masked, so only |k| <= 1
        grid = make_grid(4, 1.0)
        kept = grid.modes[np.abs(grid.modes) <= 1]
        for i, ki in enumerate(grid.modes):
            for j, kj in enumerate(grid.modes):
                for k, kk in enumerate(grid.modes):
                    expected = all(abs(m) <= 1 for m in (ki, kj, kk))
                    assert grid.dealias_mask[i, j, k] == expected
        assert set(kept.tolist()) == {-1, 0, 1}

    def test_odd_n_rejected(self):
        with pytest.raises(InvalidArgumentError):
            make_grid(7, 1.0)

    def test_small_n_rejected(self):
        with pytest.raises(InvalidArgumentError):
            make_grid(2, 1.0)

    def test_nonpositive_length_rejected(self):
        with pytest.raises(InvalidArgumentError):
            make_grid(8, 0.0)

    def test_box_scaling(self):
        grid = make_grid(8, 2.0)
        assert grid.edge == pytest.approx(4 * np.pi)
        # wavenumbers are integer modes divided by L
        assert grid.kx.ravel()[1] == pytest.approx(0.5)


class TestTransforms:
    def test_sine_coefficients(self):
        # per-sample convention: sin(x) -> -i/2 at k=+1, +i/2 at k=-1
        grid = make_grid(16, 1.0)
        f = field_from_function(grid, lambda X, Y, Z: np.sin(X) + 0 * Y + 0 * Z)
        s = to_spectral(f)
        ip = np.where(grid.modes == 1)[0][0]
        im = np.where(grid.modes == -1)[0][0]
        assert s.values[ip, 0, 0] == pytest.approx(-0.5j, abs=1e-13)
        assert s.values[im, 0, 0] == pytest.approx(+0.5j, abs=1e-13)
        other = s.values.copy()
        other[ip, 0, 0] = other[im, 0, 0] = 0.0
        assert np.max(np.abs(other)) < 1e-13

    def test_zero_field(self):
        grid = make_grid(8, 1.0)
        s = to_spectral(field_from_values(grid, 0.0))
        assert np.all(s.values == 0.0)

    def test_round_trip_random(self):
        grid = make_grid(16, 1.0)
        rng = np.random.default_rng(7)
        vals = rng.standard_normal((16, 16, 16))
        f = ScalarField(grid, vals)
        back = to_physical(to_spectral(f))
        assert np.max(np.abs(back.values - vals)) <= 1e-12 * np.max(np.abs(vals))

    def test_representation_mismatch(self):
        grid = make_grid(8, 1.0)
        f = field_from_values(grid, 1.0)
        with pytest.raises(InvalidStateError):
            to_physical(f)
        with pytest.raises(InvalidStateError):
            to_spectral(to_spectral(f))

    def test_conjugate_symmetry(self):
        grid = make_grid(8, 1.0)
        s = to_spectral(random_field(grid, seed=3))
        n = grid.n_modes
        idx = [(1, 2, 3), (2, 0, 1), (3, 3, 0)]
        for i, j, k in idx:
            conj = s.values[(-i) % n, (-j) % n, (-k) % n]
            assert s.values[i, j, k] == pytest.approx(np.conj(conj), abs=1e-14)

    def test_parseval(self):
        grid = make_grid(16, 1.0)
        f = random_field(grid, seed=11)
        s = to_spectral(f)
        phys = norm(f, 2)
        spect = np.sqrt(grid.edge**3 * np.sum(np.abs(s.values) ** 2))
        assert phys == pytest.approx(spect, rel=1e-12)


class TestDerivative:
    def test_d_sin_is_cos(self):
        grid = make_grid(16, 1.0)
        f = field_from_function(grid, lambda X, Y, Z: np.sin(X) + 0 * Y + 0 * Z)
        d = derivative(f, "x")
        X, _, _ = grid.coords()
        exact = np.broadcast_to(np.cos(X), d.values.shape)
        assert np.max(np.abs(d.values - exact)) <= 1e-12

    def test_constant_derivatives_vanish(self):
        grid = make_grid(8, 1.0)
        f = field_from_values(grid, 3.5)
        for axis in "xyz":
            for order in (1, 2, 3, 4):
                d = derivative(f, axis, order)
                assert np.max(np.abs(d.values)) <= 1e-12

    def test_laplacian_eigenfunction(self):
        grid = make_grid(16, 1.0)
        f = field_from_function(grid, lambda X, Y, Z: np.sin(X) * np.sin(Y) * np.sin(Z))
        lap = sum(derivative(f, ax, 2).values for ax in "xyz")
        assert np.max(np.abs(lap + 3.0 * f.values)) <= 1e-11
        lap2 = laplacian(f)
        assert np.max(np.abs(lap2.values + 3.0 * f.values)) <= 1e-11

    def test_order_out_of_range(self):
        grid = make_grid(8, 1.0)
        f = field_from_values(grid, 1.0)
        with pytest.raises(InvalidArgumentError):
            derivative(f, "x", 5)
        with pytest.raises(InvalidArgumentError):
            derivative(f, "x", 0)

    def test_mixed_partials_commute(self):
        grid = make_grid(16, 1.0)
        f = random_field(grid, seed=5)
        dxy = derivative(derivative(f, "x"), "y")
        dyx = derivative(derivative(f, "y"), "x")
        scale = np.max(np.abs(dxy.values))
        assert np.max(np.abs(dxy.values - dyx.values)) <= 1e-12 * scale

    def test_box_length_scaling(self):
        # on [0, 4 pi) the fundamental is sin(x/2) with derivative cos(x/2)/2
        grid = make_grid(16, 2.0)
        f = field_from_function(grid, lambda X, Y, Z: np.sin(X / 2) + 0 * Y + 0 * Z)
        d = derivative(f, "x")
        X, _, _ = grid.coords()
        exact = np.broadcast_to(0.5 * np.cos(X / 2), d.values.shape)
        assert np.max(np.abs(d.values - exact)) <= 1e-12


class TestPoisson:
    def test_eigenfunction(self):
        grid = make_grid(16, 1.0)
        f = field_from_function(
            grid, lambda X, Y, Z: -3.0 * np.sin(X) * np.sin(Y) * np.sin(Z)
        )
        u = solve_poisson(f)
        exact = field_from_function(grid, lambda X, Y, Z: np.sin(X) * np.sin(Y) * np.sin(Z))
        assert np.max(np.abs(u.values - exact.values)) <= 1e-12

    def test_zero(self):
        grid = make_grid(8, 1.0)
        u = solve_poisson(field_from_values(grid, 0.0))
        assert np.all(u.values == 0.0)

    def test_nonzero_mean_rejected(self):
        grid = make_grid(8, 1.0)
        with pytest.raises(IncompatibleRhsError):
            solve_poisson(field_from_values(grid, 1.0))

    def test_inverse_of_laplacian(self):
        grid = make_grid(16, 1.0)
        f = random_field(grid, seed=2)
        f = ScalarField(grid, f.values - np.mean(f.values))
        u = solve_poisson(laplacian(f))
        scale = norm(f, 2)
        err = norm(ScalarField(grid, u.values - f.values), 2)
        assert err <= 1e-11 * scale


class TestLerayProjection:
    def test_annihilates_gradients(self):
        grid = make_grid(16, 1.0)
        phi = field_from_function(grid, lambda X, Y, Z: np.sin(X) * np.cos(Y) + 0 * Z)
        v = gradient(phi)
        pv = leray_project(v)
        assert norm(pv, np.inf) <= 1e-12 * norm(v, np.inf)

    def test_divergence_free_unchanged(self):
        grid = make_grid(16, 1.0)
        v = vector_from_functions(
            grid,
            lambda X, Y, Z: np.sin(Y) + 0 * X + 0 * Z,
            lambda X, Y, Z: 0.0 * X,
            lambda X, Y, Z: 0.0 * X,
        )
        pv = leray_project(v)
        for c, pc in zip(v.components(), pv.components()):
            assert np.max(np.abs(pc.values - c.values)) <= 1e-13

    def test_result_divergence_free(self):
        grid = make_grid(16, 1.0)
        v = VectorField(
            random_field(grid, 1), random_field(grid, 2), random_field(grid, 3)
        )
        pv = leray_project(v)
        assert norm(divergence(pv), np.inf) <= 1e-12 * norm(v, np.inf)

    def test_idempotent(self):
        grid = make_grid(16, 1.0)
        v = VectorField(
            random_field(grid, 4), random_field(grid, 5), random_field(grid, 6)
        )
        p1 = leray_project(v)
        p2 = leray_project(p1)
        for c1, c2 in zip(p1.components(), p2.components()):
            assert np.max(np.abs(c1.values - c2.values)) <= 1e-13

    def test_linear(self):
        grid = make_grid(8, 1.0)
        v = VectorField(
            random_field(grid, 7), random_field(grid, 8), random_field(grid, 9)
        )
        w = VectorField(
            random_field(grid, 10), random_field(grid, 11), random_field(grid, 12)
        )
        lhs = leray_project(
            VectorField(
                *(
                    ScalarField(grid, 2.0 * a.values + b.values)
                    for a, b in zip(v.components(), w.components())
                )
            )
        )
        pv, pw = leray_project(v), leray_project(w)
        for c, a, b in zip(lhs.components(), pv.components(), pw.components()):
            assert np.max(np.abs(c.values - 2.0 * a.values - b.values)) <= 1e-12


class TestNorms:
    def test_sine_l2(self):
        # mean of sin^2 over the box is 1/2, so the norm is sqrt((2 pi)^3 / 2)
        grid = make_grid(16, 1.0)
        f = field_from_function(grid, lambda X, Y, Z: np.sin(X) + 0 * Y + 0 * Z)
        assert norm(f, 2) == pytest.approx(np.sqrt((2 * np.pi) ** 3 / 2), rel=1e-12)

    @pytest.mark.parametrize("p", [1, 2])
    def test_constant_norms(self, p):
        grid = make_grid(8, 1.5)
        f = field_from_values(grid, 1.0)
        assert norm(f, p) == pytest.approx(grid.edge ** (3.0 / p), rel=1e-12)

    def test_zero(self):
        grid = make_grid(8, 1.0)
        f = field_from_values(grid, 0.0)
        for p in (1, 2, np.inf):
            assert norm(f, p) == 0.0

    def test_inf_norm(self):
        # x = pi/2 is a lattice point for N=8, so the max is exactly 1
        grid = make_grid(8, 1.0)
        f = field_from_function(grid, lambda X, Y, Z: np.sin(X) + 0 * Y + 0 * Z)
        assert norm(f, np.inf) == pytest.approx(1.0, rel=1e-12)

    def test_vector_norm_is_pointwise_magnitude(self):
        grid = make_grid(8, 1.0)
        v = vector_from_functions(
            grid,
            lambda X, Y, Z: 3.0 + 0 * X,
            lambda X, Y, Z: 4.0 + 0 * X,
            lambda X, Y, Z: 0.0 * X,
        )
        assert norm(v, np.inf) == pytest.approx(5.0)
        assert norm(v, 2) == pytest.approx(5.0 * grid.edge ** 1.5, rel=1e-12)


class TestCurl:
    def test_curl_of_gradient_vanishes(self):
        grid = make_grid(16, 1.0)
        f = random_field(grid, seed=13)
        w = curl(gradient(f))
        assert norm(w, np.inf) <= 1e-12 * norm(gradient(f), np.inf)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obkm import ic
from obkm.grid import Grid, SymTensorField, forward_transform, inverse_transform, spectral_derivative
from obkm.norms import hm_norm
from obkm.stokes import (
    CompactStress,
    PVQuadratureSpec,
    StokesParams,
    SupportError,
    _sphere_points,
    eval_kernel_M1,
    eval_kernel_M2,
    freespace_tail_bound,
    gradvel_freespace,
    kernel_sphere_average,
    kernel_sphere_average_all,
    padded_spectral_reference,
    solve_stokes_spectral,
    velocity_freespace,
)

from conftest import random_sym, sin_x1, sym_from


def _div(u):
    F = forward_transform(u)
    return sum(
        inverse_transform(spectral_derivative(F, tuple(int(a == k) for a in range(3)))).values[k]
        for k in range(3)
    )


class TestSpectral:
    def test_constant_stress(self, grid16):
        s = SymTensorField(grid16, np.ones((6, *grid16.shape)) * np.arange(6)[:, None, None, None])
        u, g = solve_stokes_spectral(s)
        assert np.abs(u.values).max() == 0 and np.abs(g.values).max() == 0

    def test_single_mode(self, grid16):
        u, g = solve_stokes_spectral(sym_from(grid16, s12=sin_x1(grid16)), StokesParams(1.0))
        cos = np.cos(grid16.mesh()[0]) * np.ones(grid16.shape)
        np.testing.assert_allclose(u.values[1], cos, atol=1e-14)
        assert np.abs(u.values[[0, 2]]).max() < 1e-15
        # gradu[0, 1] is d u_2 / d x_1
        np.testing.assert_allclose(g.values[1], -sin_x1(grid16), atol=1e-14)
        mask = np.ones(9, bool)
        mask[1] = False
        assert np.abs(g.values[mask]).max() < 1e-14

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_divergence_free(self, grid16, seed):
        u, _ = solve_stokes_spectral(random_sym(grid16, seed))
        div = _div(u)
        assert np.sqrt(np.sum(div**2) * grid16.cell_volume) < 1e-12 * hm_norm(u, 1)

    def test_zero_mean(self, grid16):
        u, _ = solve_stokes_spectral(random_sym(grid16, 3))
        assert np.abs(u.values.mean(axis=(1, 2, 3))).max() < 1e-15

    def test_linear(self, grid16):
        a, b = random_sym(grid16, 4), random_sym(grid16, 5)
        u, g = solve_stokes_spectral(a * 2.5 + b * -0.5)
        ua, ga = solve_stokes_spectral(a)
        ub, gb = solve_stokes_spectral(b)
        np.testing.assert_allclose(u.values, 2.5 * ua.values - 0.5 * ub.values, atol=1e-12)
        np.testing.assert_allclose(g.values, 2.5 * ga.values - 0.5 * gb.values, atol=1e-12)

    @pytest.mark.parametrize("nu", [0.1, 3.0])
    def test_viscosity_scaling(self, grid16, nu):
        s = random_sym(grid16, 6)
        u1, _ = solve_stokes_spectral(s, 1.0)
        un, _ = solve_stokes_spectral(s, StokesParams(nu))
        np.testing.assert_allclose(un.values * nu, u1.values, rtol=1e-13, atol=1e-15)

    def test_gradient_matches_derivative_of_u(self, grid16):
        u, g = solve_stokes_spectral(random_sym(grid16, 7))
        F = forward_transform(u)
        for i in range(3):
            alpha = tuple(int(a == i) for a in range(3))
            d = inverse_transform(spectral_derivative(F, alpha)).values
            np.testing.assert_allclose(g.values[3 * i : 3 * i + 3], d, atol=1e-12)

    @pytest.mark.parametrize("nu", [0.0, -1.0, np.inf, np.nan])
    def test_params_reject(self, nu):
        with pytest.raises(ValueError):
            StokesParams(nu)


class TestKernels:
    e1 = np.array([1.0, 0.0, 0.0])

    def test_m1_values(self):
        m = eval_kernel_M1(self.e1)
        assert m[0, 0, 0] == 2.0
        assert m[0, 1, 1] == -1.0
        assert m[1, 0, 1] == 0.0

    def test_m2_values(self):
        assert eval_kernel_M2(self.e1)[0, 0, 0, 0] == 4.0
        assert eval_kernel_M2([0.0, 1.0, 0.0])[0, 0, 0, 0] == 1.0

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=3, max_size=3).filter(lambda v: np.linalg.norm(v) > 0.1))
    def test_homogeneity(self, y):
        y = np.asarray(y)
        np.testing.assert_allclose(eval_kernel_M1(2 * y), eval_kernel_M1(y) / 4, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(eval_kernel_M2(2 * y), eval_kernel_M2(y) / 8, rtol=1e-12, atol=1e-14)

    def test_batched_matches_single(self):
        pts = np.random.default_rng(0).standard_normal((5, 3))
        batch = eval_kernel_M2(pts)
        for p, y in enumerate(pts):
            np.testing.assert_array_equal(batch[p], eval_kernel_M2(y))

    @pytest.mark.parametrize("fn", [eval_kernel_M1, eval_kernel_M2])
    def test_rejects_origin(self, fn):
        with pytest.raises(ValueError):
            fn(np.zeros(3))

    def test_symmetrised_is_symmetric_in_kl(self):
        m = eval_kernel_M2([0.3, -1.2, 0.8], symmetrize=True)
        np.testing.assert_allclose(m, np.swapaxes(m, -1, -2))


class TestSphereAverage:
    @pytest.mark.parametrize("component", [(0, 0, 0, 0), (0, 1, 0, 1), (2, 1, 1, 2)])
    def test_zero_within_three_stderr(self, component):
        res = kernel_sphere_average(component, 1 << 16)
        assert abs(res.mean) <= 3 * res.stderr

    def test_contract_bound(self):
        n = 1 << 16
        res = kernel_sphere_average_all(n)
        assert np.all(np.abs(res.mean) <= 5 / np.sqrt(n) * res.max_abs)

    def test_antipodal_pairs_meet_contract(self):
        res = kernel_sphere_average_all(20_000, method="antipodal", seed=3)
        assert np.all(np.abs(res.mean) <= 5 / np.sqrt(20_000) * res.max_abs)

    def test_odd_kernel_cancels_exactly_on_antipodal_pairs(self):
        pts = _sphere_points(20_000, 1, "antipodal")
        assert np.abs(eval_kernel_M1(pts).mean(axis=0)).max() < 1e-15

    def test_rejects_few_samples(self):
        with pytest.raises(ValueError):
            kernel_sphere_average((0, 0, 0, 0), 100)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            kernel_sphere_average_all(1 << 14, method="grid")


@pytest.fixture(scope="module")
def bump32():
    g = Grid(32)
    c = np.full(3, np.pi)
    s = ic.gaussian_bump(g, 1.0, 0.5, c)
    return g, c, s, CompactStress(s, center=c)


class TestFreeSpace:
    spec = PVQuadratureSpec(points_per_axis=24)

    def test_zero_stress(self, grid16):
        z = SymTensorField.zeros(grid16)
        assert np.array_equal(gradvel_freespace(z, [1.0, 2.0, 3.0]), np.zeros((3, 3)))
        assert np.array_equal(velocity_freespace(z, [1.0, 2.0, 3.0]), np.zeros(3))

    def test_gradient_at_centre(self, bump32):
        g, c, s, cs = bump32
        _, ref = padded_spectral_reference(s, [c], center=c)
        got = gradvel_freespace(cs, c, spec=self.spec)
        assert np.linalg.norm(got - ref[0]) / np.linalg.norm(ref[0]) < 0.01

    def test_gradient_against_periodic_solve(self, bump32):
        g, c, s, cs = bump32
        _, per = solve_stokes_spectral(s)
        j = g.n // 2
        ref = per.values[:, j, j, j].reshape(3, 3)
        got = gradvel_freespace(cs, c, spec=self.spec)
        assert np.linalg.norm(got - ref) / np.linalg.norm(ref) < 0.01

    def test_velocity_off_centre(self, bump32):
        g, c, s, cs = bump32
        x = c + [0.2, -0.1, 0.15]
        u_ref, _ = padded_spectral_reference(s, [x], center=c)
        got = velocity_freespace(cs, x, spec=self.spec)
        assert np.linalg.norm(got - u_ref[0]) / np.linalg.norm(u_ref[0]) < 0.01

    def test_traceless_gradient(self, bump32):
        _, c, _, cs = bump32
        assert abs(np.trace(gradvel_freespace(cs, c + 0.1, spec=self.spec))) < 1e-3

    def test_viscosity_scaling(self, bump32):
        _, c, _, cs = bump32
        a = gradvel_freespace(cs, c, 1.0, self.spec)
        b = gradvel_freespace(cs, c, StokesParams(4.0), self.spec)
        np.testing.assert_allclose(4 * b, a, rtol=1e-13)

    def test_outer_radius_tail(self, bump32):
        _, c, s, cs = bump32
        R = np.pi
        a = gradvel_freespace(cs, c, spec=PVQuadratureSpec(outer_radius=R, points_per_axis=24))
        b = gradvel_freespace(cs, c, spec=PVQuadratureSpec(outer_radius=2 * R, points_per_axis=24))
        assert np.abs(a - b).max() < freespace_tail_bound(R, hm_norm(s, 0))

    def test_tail_bound_decays(self):
        assert freespace_tail_bound(2.0, 1.0) == pytest.approx(freespace_tail_bound(1.0, 1.0) / 2**1.5)

    def test_isotropic_stress_drives_no_flow(self, grid16):
        # div(g I) is a gradient, so the pressure absorbs it
        c = np.full(3, np.pi)
        profile = ic.gaussian_bump(grid16, 1.0, 0.5, c).values[0]
        v = np.zeros((6, *grid16.shape))
        v[:3] = profile
        iso = SymTensorField(grid16, v)
        aniso = ic.gaussian_bump(grid16, 1.0, 0.5, c)
        x = c + [0.3, 0.1, -0.2]
        spec = PVQuadratureSpec(points_per_axis=16)
        u_iso = velocity_freespace(iso, x, spec=spec)
        u_aniso = velocity_freespace(aniso, x, spec=spec)
        assert np.linalg.norm(u_iso) < 1e-6 * np.linalg.norm(u_aniso)

    def test_support_error(self, grid16):
        with pytest.raises(SupportError):
            gradvel_freespace(random_sym(grid16, 1), [0.0, 0.0, 0.0])

    def test_wide_bump_rejected(self, grid16):
        wide = ic.gaussian_bump(grid16, 1.0, np.pi / 2)
        with pytest.raises(SupportError, match="compactly supported"):
            CompactStress(wide)

    def test_support_error_is_value_error(self):
        assert issubclass(SupportError, ValueError)

    @pytest.mark.parametrize("kw", [{"inner_radius": 0.0}, {"inner_radius": 2.0, "outer_radius": 1.0}, {"points_per_axis": 2}])
    def test_spec_rejects(self, kw):
        with pytest.raises(ValueError):
            PVQuadratureSpec(**kw)

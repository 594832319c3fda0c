import math
import unittest

import numpy as np

from adsm.errors import DomainError, MarginError
from adsm.melvin_space import SpaceParams, eval_profile, metric
from adsm.surface.core import (GraphSurface, GridSpec, differentiate, gap_integrand, gauss_bonnet, gauss_equation_residual,
                               geometry, lap_r_split_residual, laplacian_intrinsic, normal, q_functional,
                               quadrature_self_estimate, refine)


def make_surface(b=1.0, n=32, r0=2.0, ax=0.0, ay=0.0, mixed=0.0, order=4, px=1.0):
    params = SpaceParams(b, px=px)
    grid = GridSpec.for_space(params, n, n, order)
    x, y = grid.coords()
    tx = 2.0 * math.pi * x / params.px
    ty = 2.0 * math.pi * y / params.py
    s = r0 + ax * np.cos(tx) + ay * np.sin(ty) + mixed * np.cos(tx) * np.cos(ty)
    return GraphSurface(params, grid, s)

def random_surface(params, n, r0, amp, seed, bandlimit=2, order=4):
    grid = GridSpec.for_space(params, n, n, order)
    x, y = grid.coords()
    tx = 2.0 * math.pi * x / params.px
    ty = 2.0 * math.pi * y / params.py
    rng = np.random.default_rng(seed)
    s = np.zeros_like(x)
    for kx in range(-bandlimit, bandlimit + 1):
        for ky in range(-bandlimit, bandlimit + 1):
            if kx == 0 and ky == 0:
                continue
            a, c = rng.standard_normal(2)
            s += a * np.cos(kx * tx + ky * ty) + c * np.sin(kx * tx + ky * ty)
    s *= amp / np.max(np.abs(s))
    return GraphSurface(params, grid, r0 + s)

# Equality case of the inequality on coordinate tori
# Each entry: (name, b, r0 as a multiple of r_s)
TORUS_TESTS = [
    (f'b{str(b).replace(".", "p")}_r{str(m).replace(".", "p")}', b, m)
    for b in (0.0, 0.5, 1.0, 2.0)
    for m in (1.5, 2.0, 4.0)
]


class TestGrid(unittest.TestCase):

    def test_small_grid(self):
        with self.assertRaises(DomainError):
            GridSpec(nx=4, ny=16, px=1.0, py=1.0)

    def test_bad_order(self):
        with self.assertRaises(DomainError):
            GridSpec(nx=16, ny=16, px=1.0, py=1.0, order=5)

    def test_spacing(self):
        params = SpaceParams(1.0, px=2.0)
        grid = GridSpec.for_space(params, 16, 20)
        self.assertAlmostEqual(grid.hx, 0.125, delta=1e-15)
        self.assertAlmostEqual(grid.hy, params.py / 20, delta=1e-15)

    def test_margin_names_grid_point(self):
        params = SpaceParams(1.0)
        grid = GridSpec.for_space(params, 16, 16)
        s = np.full((16, 16), 2.0)
        s[3, 5] = params.r_s
        with self.assertRaises(MarginError) as cm:
            GraphSurface(params, grid, s)
        self.assertEqual(cm.exception.index, (3, 5))
        self.assertIn('(3, 5)', str(cm.exception))

    def test_non_finite_height(self):
        params = SpaceParams(1.0)
        grid = GridSpec.for_space(params, 16, 16)
        s = np.full((16, 16), 2.0)
        s[1, 2] = np.nan
        with self.assertRaises(MarginError):
            GraphSurface(params, grid, s)

    def test_shape_mismatch(self):
        params = SpaceParams(1.0)
        grid = GridSpec.for_space(params, 16, 16)
        with self.assertRaises(DomainError):
            GraphSurface(params, grid, np.full((16, 8), 2.0))


class TestGeometry(unittest.TestCase):

    def test_constant_derivatives(self):
        d = differentiate(make_surface())
        for field in d:
            self.assertLess(float(np.max(np.abs(field))), 1e-12)

    def test_sin_derivative(self):
        surface = make_surface(n=64, ax=0.1)
        x, _ = surface.grid.coords()
        d = differentiate(surface)
        k = 2.0 * math.pi
        np.testing.assert_allclose(d.s_x, -0.1 * k * np.sin(k * x), atol=1e-5)

    def test_coordinate_torus(self):
        surface = make_surface(b=1.0, r0=2.0)
        geom = geometry(surface)
        F0, dF0 = 13.0 / 16.0, 5.0 / 16.0
        np.testing.assert_allclose(geom.z2, 1.0, atol=1e-14)
        np.testing.assert_allclose(geom.N, 1.0 / (2.0 * math.sqrt(F0)), rtol=1e-13)
        np.testing.assert_allclose(geom.H, 2.0 * math.sqrt(F0) + 0.5 * 2.0 * dF0 / math.sqrt(F0), rtol=1e-12)
        self.assertAlmostEqual(float(geom.H[0, 0]), 2.149464, delta=1e-6)
        self.assertLess(float(np.max(np.abs(geom.K))), 1e-10)

    def test_large_torus_mean_curvature(self):
        geom = geometry(make_surface(b=1.0, r0=1e3))
        np.testing.assert_allclose(geom.H, 2.0, atol=1e-8)

    def test_field_invariants(self):
        surface = make_surface(ax=0.2, ay=0.15, mixed=0.1)
        geom = geometry(surface)
        r = surface.s
        F = eval_profile(surface.params, r)[0]
        self.assertTrue(np.all(geom.z2 >= 1.0))
        np.testing.assert_allclose(geom.N**2 * r**2 * F, geom.z2, rtol=1e-13)
        det = geom.g_xx * geom.g_yy - geom.g_xy**2
        np.testing.assert_allclose(det, geom.detg, rtol=1e-12)

    def test_grad_r(self):
        surface = make_surface(ax=0.2, ay=0.15)
        geom = geometry(surface)
        d = geom.deriv
        assembled = geom.ginv_xx * d.s_x**2 + 2.0 * geom.ginv_xy * d.s_x * d.s_y + geom.ginv_yy * d.s_y**2
        np.testing.assert_allclose(assembled, geom.grad_r2, rtol=1e-10, atol=1e-14)

    def test_normal(self):
        surface = make_surface(ax=0.2, ay=0.15)
        geom = geometry(surface)
        nu = normal(surface, geom)
        g = metric(surface.params, surface.s)
        np.testing.assert_allclose(np.sum(g * nu**2, axis=0), 1.0, atol=1e-12)
        d = geom.deriv
        # Orthogonal to both coordinate tangents (s_x, 1, 0) and (s_y, 0, 1)
        np.testing.assert_allclose(g[0] * nu[0] * d.s_x + g[1] * nu[1], 0.0, atol=1e-12)
        np.testing.assert_allclose(g[0] * nu[0] * d.s_y + g[2] * nu[2], 0.0, atol=1e-12)
        self.assertTrue(np.all(nu[0] > 0))

    def test_laplacian_constant(self):
        surface = make_surface(ax=0.2)
        self.assertLess(float(np.max(np.abs(laplacian_intrinsic(surface, np.full((32, 32), 4.0))))), 1e-10)

    def test_laplacian_integrates_to_zero(self):
        surface = make_surface(ax=0.2, ay=0.1)
        geom = geometry(surface)
        f = np.random.default_rng(3).standard_normal((32, 32))
        lap = laplacian_intrinsic(surface, f, geom)
        self.assertLess(abs(surface.grid.integrate(lap * geom.area_density)), 1e-9)

    def test_laplacian_of_r_converges(self):
        errors = []
        for n in (16, 32):
            surface = make_surface(n=n, mixed=0.1)
            geom = geometry(surface)
            errors.append(float(np.max(np.abs(laplacian_intrinsic(surface, surface.s, geom) - geom.lap_r))))
        self.assertGreater(errors[0] / errors[1], 4.0)

    def test_gauss_equation_converges(self):
        errors = [float(np.max(np.abs(gauss_equation_residual(make_surface(n=n, mixed=0.1))))) for n in (32, 64)]
        self.assertGreater(errors[0] / errors[1], 8.0)

    def test_lap_r_split_converges(self):
        errors = [float(np.max(np.abs(lap_r_split_residual(make_surface(n=n, mixed=0.1))))) for n in (32, 64)]
        self.assertGreater(errors[0] / errors[1], 8.0)

    def test_gauss_bonnet(self):
        surface = make_surface(n=64, mixed=0.1)
        geom = geometry(surface)
        total = surface.grid.integrate(np.abs(geom.K) * geom.area_density)
        self.assertLess(abs(gauss_bonnet(surface, geom)), 1e-3 * total)


class TestQFunctional(unittest.TestCase):

    def test_random_surfaces_satisfy_inequality(self):
        for b in (0.0, 1.0, 2.0):
            params = SpaceParams(b)
            r0 = 2.0 * params.r_s
            for seed in range(50):
                surface = random_surface(params, 32, r0, 0.3 * (r0 - params.r_s), seed)
                q = q_functional(surface)
                eps_quad = quadrature_self_estimate(surface)
                self.assertGreaterEqual(q.gap, -eps_quad, (b, seed))
                self.assertGreater(q.gap, 0.0, (b, seed))
                self.assertAlmostEqual(q.q, q.gap + params.q_floor, delta=1e-12 * abs(q.q))

    def test_integrand_matches_mean_curvature_form(self):
        surface = make_surface(ax=0.2, ay=0.1, mixed=0.05)
        geom = geometry(surface)
        s = surface.s
        direct = geom.H * s**4 * geom.F * geom.N - 2.0 * s**3 + 0.5
        np.testing.assert_allclose(gap_integrand(surface, geom), direct, rtol=1e-9, atol=1e-12)

    def test_large_radius_torus(self):
        params = SpaceParams(1.0)
        for r0 in (200.0, 1000.0):
            grid = GridSpec.for_space(params, 64, 64)
            surface = GraphSurface(params, grid, np.full((64, 64), r0))
            q = q_functional(surface)
            self.assertEqual(q.gap, 0.0)
            self.assertLess(quadrature_self_estimate(surface), 1e-12 * params.area)

    def test_large_radius_bump(self):
        for r0 in (200.0, 1000.0):
            surface = make_surface(n=64, r0=r0, ax=0.5, ay=0.5)
            q = q_functional(surface)
            self.assertAlmostEqual(q.q, q.gap + surface.params.q_floor, delta=1e-12 * abs(q.q))
            self.assertGreaterEqual(q.gap, -quadrature_self_estimate(surface))

    def test_translation_invariance(self):
        surface = make_surface(ax=0.2, ay=0.1, mixed=0.05)
        base = q_functional(surface).gap
        for shift in ((3, 0), (0, 5), (7, 11)):
            moved = surface.with_heights(np.roll(surface.s, shift, axis=(0, 1)))
            self.assertAlmostEqual(q_functional(moved).gap, base, delta=1e-11)

    def test_refine_band_limited(self):
        surface = make_surface(n=16, ax=0.2, ay=0.1)
        fine = refine(surface, 2)
        expected = make_surface(n=32, ax=0.2, ay=0.1)
        np.testing.assert_allclose(fine.s, expected.s, atol=1e-12)

    def test_quadrature_estimate_small(self):
        surface = make_surface(n=32, ax=0.1, ay=0.1, order=6)
        self.assertLess(quadrature_self_estimate(surface), 1e-4 * q_functional(surface).gap)


def generate_torus_test(name, b, multiple):
    def test(self):
        params = SpaceParams(b)
        grid = GridSpec.for_space(params, 64, 64)
        surface = GraphSurface(params, grid, np.full((64, 64), multiple * params.r_s))
        q = q_functional(surface)
        self.assertLessEqual(abs(q.gap), 1e-12 * params.px * params.py)
        self.assertAlmostEqual(q.q, params.q_floor, delta=1e-10 * abs(params.q_floor))
    test.__name__ = f'test_torus_{name}'
    return test

for case in TORUS_TESTS:
    func = generate_torus_test(*case)
    setattr(TestQFunctional, func.__name__, func)


if __name__ == '__main__':
    unittest.main()

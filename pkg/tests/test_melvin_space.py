import math
import unittest

import numpy as np

from adsm.errors import DomainError
from adsm.melvin_space import (R, X, Y, SpaceParams, ambient_tensors, christoffels, eval_profile, hessian_r, metric,
                               period_y, period_y_simplified, ricci, ricci_normal, riemann, scalar_curvature,
                               sectional_curvatures, solve_r_s, static_tensor, volume_below)

# Soliton radius cases
# Each entry: (name, b, expected r_s, tolerance)
R_S_TESTS = [
    ('b0', 0.0, 1.0, 0.0),
    ('b1', 1.0, 1.2207440846, 1e-9),
    ('b2', 2.0, 1.35321, 1e-5),
    ('b12', 12.0, 1.93198, 1e-4),
]

# Closed form Ricci eigenvalues relative to g
# Each entry: (name, b, r)
RICCI_TESTS = [
    ('b0_r2', 0.0, 2.0),
    ('b1_r1p5', 1.0, 1.5),
    ('b1_r3', 1.0, 3.0),
    ('b2_r2', 2.0, 2.0),
    ('b5_r10', 5.0, 10.0),
]


class TestSolitonRadius(unittest.TestCase):

    def test_negative_b(self):
        with self.assertRaises(DomainError) as cm:
            solve_r_s(-1.0)
        self.assertIn('b >= 0', str(cm.exception))

    def test_params_negative_b(self):
        with self.assertRaises(DomainError):
            SpaceParams(b=-0.5)

    def test_params_bad_px(self):
        with self.assertRaises(DomainError):
            SpaceParams(b=1.0, px=0.0)

    def test_profile_vanishes(self):
        for b in (0.0, 0.5, 1.0, 2.0, 12.0):
            p = SpaceParams(b)
            F, dF, _ = eval_profile(p, p.r_s)
            self.assertLess(abs(float(F)), 1e-13)
            self.assertGreater(float(dF), 0.0)

    def test_period_b0(self):
        self.assertAlmostEqual(period_y(0.0), 4.0 * math.pi / 3.0, delta=1e-12)

    def test_period_b1(self):
        self.assertAlmostEqual(period_y(1.0), 2.9835, delta=2e-4)

    def test_period_forms_agree(self):
        for b in (0.0, 0.3, 1.0, 2.0, 7.5):
            self.assertAlmostEqual(period_y(b), period_y_simplified(b), delta=1e-12)

    def test_period_decreases_in_b(self):
        periods = [period_y(b) for b in (0.0, 0.5, 1.0, 2.0, 4.0)]
        self.assertTrue(all(a > b for a, b in zip(periods, periods[1:])))

    def test_q_floor(self):
        p = SpaceParams(1.0, px=2.0)
        self.assertAlmostEqual(p.q_floor, 2.0 * p.py * (2.0 * p.r_s**3 - 0.5), delta=1e-12)


def generate_r_s_test(name, b, expected, tol):
    def test(self):
        r_s = solve_r_s(b)
        self.assertAlmostEqual(r_s, expected, delta=tol)
        self.assertEqual(SpaceParams(b).r_s, r_s)
    test.__name__ = f'test_r_s_{name}'
    return test

for case in R_S_TESTS:
    func = generate_r_s_test(*case)
    setattr(TestSolitonRadius, func.__name__, func)


class TestCurvature(unittest.TestCase):

    def test_metric_outside_chart(self):
        p = SpaceParams(1.0)
        with self.assertRaises(DomainError):
            metric(p, p.r_s)
        with self.assertRaises(DomainError):
            christoffels(p, np.array([2.0, 1.0]))

    def test_profile_requires_positive_r(self):
        with self.assertRaises(DomainError):
            eval_profile(SpaceParams(1.0), 0.0)

    def test_christoffel_symmetry(self):
        gamma = christoffels(SpaceParams(1.0), np.linspace(1.5, 4.0, 5))
        np.testing.assert_array_equal(gamma, np.swapaxes(gamma, 1, 2))

    def test_named_riemann_components(self):
        p = SpaceParams(1.0)
        r = 2.0
        F, dF, _ = eval_profile(p, r)
        rm = riemann(p, r)
        self.assertAlmostEqual(float(rm[R, X, R, X]), float(-1.0 - 0.5 * r * dF / F), delta=1e-13)
        self.assertAlmostEqual(float(rm[Y, X, Y, X]), float(-r**4 * F**2 - 0.5 * r**5 * F * dF), delta=1e-12)
        self.assertEqual(float(rm[R, X, R, Y]), 0.0)

    def test_riemann_symmetries(self):
        rm = riemann(SpaceParams(2.0), 2.5)
        np.testing.assert_allclose(rm, -np.swapaxes(rm, 0, 1), atol=1e-14)
        np.testing.assert_allclose(rm, -np.swapaxes(rm, 2, 3), atol=1e-14)
        np.testing.assert_allclose(rm, np.transpose(rm, (2, 3, 0, 1)), atol=1e-14)

    def test_ricci_contracts_riemann(self):
        p = SpaceParams(1.0)
        r = 1.8
        g = metric(p, r)
        contracted = np.einsum('abad->bd', riemann(p, r) / g[:, None, None, None])
        np.testing.assert_allclose(contracted, np.diag(ricci(p, r).diag), rtol=1e-12, atol=1e-12)

    def test_large_r_is_hyperbolic(self):
        k = sectional_curvatures(SpaceParams(1.0), 1e4)
        np.testing.assert_allclose(k, -1.0, atol=1e-10)

    def test_scalar_closed_form(self):
        p = SpaceParams(2.0)
        r = np.linspace(1.5, 6.0, 10)
        np.testing.assert_allclose(scalar_curvature(p, r), np.sum(ricci(p, r).eigenvalues, axis=0), rtol=1e-13)

    def test_scalar_extend(self):
        p = SpaceParams(1.0)
        with self.assertRaises(DomainError):
            scalar_curvature(p, 1.0)
        self.assertAlmostEqual(float(scalar_curvature(p, 1.0, extend=True)), -4.0, delta=1e-15)

    def test_ricci_normal(self):
        p = SpaceParams(1.0)
        r = 2.0
        g = metric(p, r)
        nu = np.array([1.0 / math.sqrt(g[R]), 0.0, 0.0])
        self.assertAlmostEqual(float(ricci_normal(p, r, nu)), float(ricci(p, r).eigenvalues[R]), delta=1e-13)

    def test_hessian_laplacian(self):
        p = SpaceParams(1.0)
        r = np.array([1.5, 2.0, 5.0])
        F, dF, _ = eval_profile(p, r)
        np.testing.assert_allclose(hessian_r(p, r).laplacian, 3.0 * r * F + r**2 * dF, rtol=1e-13)

    def test_static_profile_identity(self):
        rng = np.random.default_rng(7)
        for b, r in zip(rng.uniform(0.0, 5.0, 100), rng.uniform(1.0, 10.0, 100)):
            p = SpaceParams(float(b))
            r = max(float(r), p.r_s + 0.1)
            F, dF, ddF = eval_profile(p, r)
            self.assertLess(abs(float(2.0 * dF + 0.5 * r * ddF + 2.0 * b * r**-5)), 1e-13)

    def test_static_tensor_eigenvalues(self):
        rng = np.random.default_rng(11)
        for b, scale in zip(rng.uniform(0.0, 5.0, 100), rng.uniform(1.05, 4.0, 100)):
            p = SpaceParams(float(b))
            r = p.r_s * float(scale)
            eig = static_tensor(p, r)
            expected = -2.0 * b / r**3
            np.testing.assert_allclose(eig, [expected, 0.0, expected], atol=1e-12)
            self.assertAlmostEqual(float(np.min(eig)), expected, delta=1e-12)

    def test_volume_below(self):
        p = SpaceParams(1.0)
        self.assertEqual(float(volume_below(p, p.r_s)), 0.0)
        self.assertAlmostEqual(float(volume_below(p, 2.0)), (8.0 - p.r_s**3) / 3.0, delta=1e-15)

    def test_ambient_tensors(self):
        t = ambient_tensors(SpaceParams(1.0), 2.0)
        self.assertEqual(t.christoffel.shape, (3, 3, 3))
        self.assertEqual(t.riemann.shape, (3, 3, 3, 3))
        self.assertAlmostEqual(float(t.scalar), -6.0 + 2.0 / 16.0, delta=1e-15)


def generate_ricci_test(name, b, r):
    def test(self):
        eig = ricci(SpaceParams(b), r).eigenvalues
        lam_ry = -2.0 + 0.5 * r**-3 + 2.0 * b * r**-4
        lam_x = -2.0 - r**-3 - 2.0 * b * r**-4
        np.testing.assert_allclose(eig, [lam_ry, lam_x, lam_ry], rtol=1e-13)
    test.__name__ = f'test_ricci_{name}'
    return test

for case in RICCI_TESTS:
    func = generate_ricci_test(*case)
    setattr(TestCurvature, func.__name__, func)


if __name__ == '__main__':
    unittest.main()

import math

import numpy as np
from django.test import SimpleTestCase

from p2h.exceptions import DomainError
from p2h.physics.rectifier import (
    DEFAULT_RECTIFIER,
    SQRT3,
    active_power,
    cluster_pf,
    current_for_power,
    distortion_current,
    firing_angle,
    fundamental_current,
    overlap_angle,
    pf_angle,
    phase_form_consistency,
    power_derivative,
    power_factor_single,
    production_rank,
    reactive_power,
    sweep,
)
from p2h.physics.stack import DEFAULT_STACK, cell_voltage

COMPENSATION = 80000.0


def pf_profile(temperature, samples=100):
    currents = np.linspace(DEFAULT_STACK.i_min_sampled, DEFAULT_STACK.i_max, samples)
    return currents, np.asarray(power_factor_single(currents, temperature, compensation=COMPENSATION))


class AngleChainTests(SimpleTestCase):
    def test_firing_angle_defined_over_operating_box(self):
        grid_i, grid_t = np.meshgrid(np.linspace(0.0, 5000.0, 60), np.linspace(30.0, 80.0, 60), indexing="ij")
        alpha = np.asarray(firing_angle(cell_voltage(grid_i, grid_t)))

        self.assertTrue(np.all(np.isfinite(alpha)))
        self.assertTrue(np.all((alpha > 0.0) & (alpha < math.pi / 2)))

    def test_firing_angle_outside_domain_raises(self):
        with self.assertRaises(DomainError):
            firing_angle(300.0)

    def test_overlap_angle_is_linear_in_firing_angle(self):
        alpha = np.array([0.2, 0.6, 1.0])
        gamma = np.asarray(overlap_angle(alpha))

        np.testing.assert_allclose(gamma, DEFAULT_RECTIFIER.gamma_slope * alpha + DEFAULT_RECTIFIER.gamma_intercept)
        self.assertEqual(pf_angle(0.6), pf_angle(0.6, gamma=overlap_angle(0.6)))

    def test_distortion_current_matches_distortion_factor(self):
        fundamental = np.array([50.0, 120.0])
        total = np.hypot(fundamental, distortion_current(fundamental))

        np.testing.assert_allclose(fundamental / total, DEFAULT_RECTIFIER.nu, rtol=1e-12)

    def test_power_conservation_identity(self):
        currents = np.array([700.0, 2500.0, 5000.0])
        for temperature in (30.0, 80.0):
            cos_phi, _ = pf_angle(firing_angle(cell_voltage(currents, temperature)))
            ac_side = SQRT3 * DEFAULT_RECTIFIER.u1 * np.asarray(fundamental_current(currents, temperature)) * cos_phi

            np.testing.assert_allclose(ac_side, active_power(currents, temperature), rtol=1e-9)

    def test_phase_form_report(self):
        report = phase_form_consistency()

        self.assertAlmostEqual(report["phase_slope_from_gamma"], 1.0 - 0.6738, places=12)
        self.assertEqual(report["linear_phase_slope"], 0.6339)
        self.assertIsInstance(report["consistent"], bool)


class PowerRangeTests(SimpleTestCase):
    def test_active_power_range(self):
        table = sweep(compensation=COMPENSATION)

        self.assertGreaterEqual(table["p_w"].min(), 0.24e6 * 0.85)
        self.assertLessEqual(table["p_w"].max(), 1.21e6 * 1.15)

    def test_reactive_power_range_after_compensation(self):
        table = sweep(compensation=COMPENSATION)

        self.assertGreaterEqual(table["q_var"].min(), 0.08e6 * 0.85)
        self.assertLessEqual(table["q_var"].min(), 0.08e6 * 1.15)
        self.assertGreaterEqual(table["q_var"].max(), 0.52e6 * 0.85)
        self.assertLessEqual(table["q_var"].max(), 0.52e6 * 1.15)

    def test_power_derivative_matches_finite_difference(self):
        for current, temperature in ((900.0, 40.0), (3000.0, 70.0)):
            numeric = (active_power(current + 1.0, temperature) - active_power(current - 1.0, temperature)) / 2.0
            self.assertTrue(math.isclose(power_derivative(current, temperature), numeric, rel_tol=1e-4))

    def test_current_for_power_inverts_active_power(self):
        target = active_power(2200.0, 60.0)

        self.assertAlmostEqual(current_for_power(target, 60.0), 2200.0, delta=1e-4)
        self.assertEqual(current_for_power(1.0, 60.0), 0.0)
        self.assertEqual(current_for_power(5.0e6, 60.0), DEFAULT_STACK.i_max)

    def test_production_rank_positive(self):
        self.assertGreater(production_rank(2500.0, 60.0), 0.0)


class PowerFactorTests(SimpleTestCase):
    def test_pf_valley_single_sign_change(self):
        for temperature in (40.0, 60.0, 80.0):
            with self.subTest(temperature=temperature):
                _, pf = pf_profile(temperature)
                steps = np.diff(pf)
                signs = np.sign(steps[np.abs(steps) > 1e-9])
                self.assertEqual(int(np.sum(signs[1:] != signs[:-1])), 1)
                self.assertEqual(signs[0], -1.0)
                self.assertEqual(signs[-1], 1.0)

    def test_sub_limit_interval_at_high_temperature(self):
        _, hot = pf_profile(80.0)
        _, cold = pf_profile(40.0)
        below = np.nonzero(hot < 0.9)[0]

        self.assertGreater(below.size, 0)
        self.assertEqual(below[-1] - below[0] + 1, below.size)
        self.assertLess(int(np.sum(cold < 0.9)), below.size)

    def test_cluster_pf_single_stack_equals_single_pf(self):
        p = active_power(3000.0, 70.0)
        q = reactive_power(3000.0, 70.0)

        self.assertAlmostEqual(cluster_pf([p], [q]), power_factor_single(3000.0, 70.0, compensation=0.0), places=12)

    def test_identical_stacks_share_the_single_stack_pf(self):
        p = active_power(2600.0, 80.0)
        q = reactive_power(2600.0, 80.0)
        single = power_factor_single(2600.0, 80.0, compensation=COMPENSATION)

        self.assertAlmostEqual(cluster_pf([p, p], [q, q], 2 * COMPENSATION), single, places=12)
        self.assertAlmostEqual(cluster_pf([p] * 3, [q] * 3, 3 * COMPENSATION), single, places=12)

    def test_unequal_two_stack_split_at_high_temperature(self):
        powers = [active_power(4000.0, 80.0), active_power(2530.0, 80.0)]
        reactives = [reactive_power(4000.0, 80.0), reactive_power(2530.0, 80.0)]

        self.assertAlmostEqual(cluster_pf(powers, reactives, 2 * COMPENSATION), 0.9025, delta=0.02)

    def test_cluster_pf_input_validation(self):
        with self.assertRaises(ValueError):
            cluster_pf([], [])
        with self.assertRaises(ValueError):
            cluster_pf([1.0, 2.0], [1.0])
        self.assertEqual(cluster_pf([0.0], [0.0]), 1.0)

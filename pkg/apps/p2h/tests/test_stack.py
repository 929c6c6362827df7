import math

import numpy as np
from django.test import SimpleTestCase

from p2h.exceptions import DomainError
from p2h.harness.characterize import hto_crossing_hours, purge_threshold
from p2h.physics.stack import (
    DEFAULT_SEPARATOR,
    DEFAULT_STACK,
    StackState,
    StackStatus,
    cell_voltage,
    current_efficiency,
    feasible,
    hto_off_step,
    hto_step,
    hydrogen_rate,
    hydrogen_rate_slope,
    production_efficiency,
    purge_gain,
    reversible_voltage,
    status_of,
    steady_temperature,
    thermal_step,
    voltage_current_slope,
)

from .conftest_mixin import make_config


class VoltageTests(SimpleTestCase):
    def test_reversible_voltage_falls_with_temperature(self):
        self.assertGreater(reversible_voltage(25.0), reversible_voltage(80.0))
        self.assertGreater(reversible_voltage(80.0), 0.0)

    def test_reversible_voltage_rejects_out_of_range_temperature(self):
        with self.assertRaises(DomainError):
            reversible_voltage(120.0)
        with self.assertRaises(DomainError):
            reversible_voltage(-5.0)

    def test_cell_voltage_matches_closed_form(self):
        tk = 80.0 + 273.15
        per_cell = 1.5184 - 1.5421e-3 * tk + 9.523e-5 * tk * math.log(tk) + 9.84e-8 * tk ** 2
        expected = 172.0 * per_cell + 0.0054 * 2500.0 + 6.0 * math.log10((0.002 + 0.03 / 80.0) * 2500.0 + 1.0)

        self.assertTrue(math.isclose(cell_voltage(2500.0, 80.0), expected, rel_tol=1e-9))

    def test_cell_voltage_at_zero_current_is_reversible_voltage(self):
        self.assertAlmostEqual(cell_voltage(0.0, 55.0), reversible_voltage(55.0), places=12)

    def test_voltage_rises_with_current_and_falls_with_temperature(self):
        currents = np.linspace(0.0, DEFAULT_STACK.i_max, 50)
        temperatures = np.linspace(DEFAULT_STACK.t_min, DEFAULT_STACK.t_max, 50)
        grid_i, grid_t = np.meshgrid(currents, temperatures, indexing="ij")
        voltage = np.asarray(cell_voltage(grid_i, grid_t))

        self.assertTrue(np.all(np.diff(voltage, axis=0) > 0.0))
        self.assertTrue(np.all(np.diff(voltage, axis=1) < 0.0))

    def test_cell_voltage_rejects_current_above_rating(self):
        with self.assertRaises(DomainError):
            cell_voltage(6000.0, 60.0)

    def test_analytic_slope_matches_finite_difference(self):
        for current, temperature in ((400.0, 35.0), (2500.0, 60.0), (4800.0, 80.0)):
            numeric = (cell_voltage(current + 1.0, temperature) - cell_voltage(current - 1.0, temperature)) / 2.0
            self.assertTrue(math.isclose(voltage_current_slope(current, temperature), numeric, rel_tol=1e-4))


class ProductionTests(SimpleTestCase):
    def test_current_efficiency_anchors(self):
        self.assertEqual(current_efficiency(0.0), 0.0)
        self.assertAlmostEqual(current_efficiency(500.0), 0.48, places=12)
        self.assertAlmostEqual(current_efficiency(1.0e6), 0.96, delta=1e-3)

    def test_hydrogen_rate_anchors(self):
        self.assertEqual(hydrogen_rate(0.0), 0.0)
        self.assertAlmostEqual(hydrogen_rate(500.0), 360.0 * 0.48 * 500.0 / 96485.0, places=12)
        self.assertAlmostEqual(hydrogen_rate(500.0), 0.8955, places=4)

    def test_hydrogen_rate_is_consistent_with_current_efficiency(self):
        currents = np.linspace(1.0, 5000.0, 500)
        recovered = np.asarray(hydrogen_rate(currents)) * 96485.0 / (360.0 * currents)

        np.testing.assert_allclose(recovered, current_efficiency(currents), rtol=1e-12)

    def test_hydrogen_rate_slope_matches_finite_difference(self):
        for current in (300.0, 1500.0, 4500.0):
            numeric = (hydrogen_rate(current + 1.0) - hydrogen_rate(current - 1.0)) / 2.0
            self.assertTrue(math.isclose(hydrogen_rate_slope(current), numeric, rel_tol=1e-4))

    def test_efficiency_hill(self):
        currents = np.linspace(DEFAULT_STACK.i_min_sampled, DEFAULT_STACK.i_max, 100)
        profiles = {t: np.asarray(production_efficiency(currents, t)) for t in (40.0, 60.0, 80.0)}

        for temperature, profile in profiles.items():
            with self.subTest(temperature=temperature):
                peak = int(np.argmax(profile))
                self.assertGreater(peak, 0)
                self.assertLess(peak, len(profile) - 1)
                self.assertTrue(np.all(np.diff(profile, n=2) <= 1e-6))
        self.assertTrue(np.all(profiles[80.0] > profiles[60.0]))
        self.assertTrue(np.all(profiles[60.0] > profiles[40.0]))


class SeparatorTests(SimpleTestCase):
    def test_zero_current_accumulates_at_inflow_rate(self):
        self.assertAlmostEqual(hto_step(1.0, 0.0, 0.25), 1.0 + 0.75 * 0.25, places=12)

    def test_empty_separator_gains_only_inflow(self):
        for current in (0.0, 1200.0, 5000.0):
            self.assertAlmostEqual(hto_step(0.0, current, 0.25), 0.75 * 0.25, places=12)

    def test_hto_is_bounded_above_purge_threshold(self):
        current = 2000.0
        steady = DEFAULT_SEPARATOR.n_in / purge_gain(current)
        self.assertAlmostEqual(hto_step(steady, current, 0.25), steady, places=12)

        hto, peak = 0.0, 0.0
        for _ in range(400):
            hto = hto_step(hto, current, 0.25)
            peak = max(peak, hto)
        self.assertLessEqual(peak, steady + 1e-12)
        self.assertLess(steady, DEFAULT_SEPARATOR.hto_max)

    def test_off_step_flushes_down_to_zero(self):
        self.assertAlmostEqual(hto_off_step(1.0, 0.25), 1.0 - 1.5 * 0.25, places=12)
        self.assertEqual(hto_off_step(0.1, 1.0), 0.0)

    def test_ten_percent_load_reaches_limit_in_about_three_hours(self):
        config = make_config()
        coarse = hto_crossing_hours(0.1 * config.stack.i_max, config)
        fine = hto_crossing_hours(0.1 * config.stack.i_max, config, dt=1e-3)

        self.assertGreater(coarse, 2.5)
        self.assertLess(coarse, 3.5)
        self.assertAlmostEqual(coarse, fine, delta=0.1)

    def test_purge_threshold_separates_bounded_and_unbounded_currents(self):
        config = make_config()
        threshold = purge_threshold(config)

        self.assertGreater(threshold, config.stack.i_min_sampled)
        self.assertAlmostEqual(purge_gain(threshold) * config.separator.hto_max, config.separator.n_in, places=6)
        self.assertIsNone(hto_crossing_hours(threshold + 200.0, config))


class ThermalTests(SimpleTestCase):
    def test_ambient_equilibrium(self):
        self.assertAlmostEqual(thermal_step(25.0, 0.0, 0.0, 0.0, 0.25), 25.0, places=12)

    def test_heat_release_raises_temperature(self):
        voltage = cell_voltage(3000.0, 50.0)
        self.assertGreater(voltage, DEFAULT_STACK.u_tn)
        self.assertGreater(thermal_step(50.0, 3000.0, voltage, 0.0, 0.25), 50.0)

    def test_step_is_linear_in_temperature_and_cooling(self):
        voltage = cell_voltage(2000.0, 60.0)
        base = thermal_step(0.0, 2000.0, voltage, 0.0, 0.25)
        a = thermal_step(40.0, 2000.0, voltage, 1.0e4, 0.25)
        b = thermal_step(60.0, 2000.0, voltage, 3.0e4, 0.25)
        combined = thermal_step(100.0, 2000.0, voltage, 4.0e4, 0.25)

        self.assertAlmostEqual(combined - base, (a - base) + (b - base), places=9)

    def test_steady_temperature_matches_iterated_stepping(self):
        voltage = cell_voltage(2000.0, 60.0)
        p_cool = 1.4e5
        temperature = 40.0
        for _ in range(4000):
            temperature = thermal_step(temperature, 2000.0, voltage, p_cool, 0.25)

        self.assertAlmostEqual(temperature, steady_temperature(2000.0, voltage, p_cool), delta=0.01)


class StatusTests(SimpleTestCase):
    def test_status_examples(self):
        self.assertEqual(status_of(0.0, 25.0, 0), StackStatus.OFF)
        self.assertEqual(status_of(0.0, 70.0, 1), StackStatus.STANDBY)
        self.assertEqual(status_of(2000.0, 40.0, 1), StackStatus.STARTUP)
        self.assertEqual(status_of(2000.0, 70.0, 1), StackStatus.NORMAL)

    def test_feasible_box(self):
        self.assertTrue(feasible(StackState(current=2500.0, temperature=60.0, delta=1)))
        self.assertTrue(feasible(StackState(current=0.0, temperature=20.0, delta=0)))
        self.assertFalse(feasible(StackState(current=100.0, temperature=60.0, delta=0)))
        self.assertFalse(feasible(StackState(current=2500.0, temperature=85.0, delta=1)))
        self.assertFalse(feasible(StackState(current=2500.0, temperature=60.0, delta=1, hto=2.5), separator=DEFAULT_SEPARATOR))

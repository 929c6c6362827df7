import json
import os
import tempfile
from dataclasses import replace
from pathlib import Path
from unittest.mock import patch

import numpy as np
from django.test import SimpleTestCase

from p2h.exceptions import ConfigError
from p2h.fitting.artifact import dump_surrogates
from p2h.harness.allocation_map import allocation_map_two_stack
from p2h.harness.characterize import calibration_report, characteristic_surfaces, two_stack_pf_map
from p2h.harness.closed_loop import run_closed_loop
from p2h.harness.export import read_table, trace_columns, write_metrics, write_trace
from p2h.harness.metrics import Metrics, comparison_table, compute_metrics, hourly_pf
from p2h.harness.modes import ModeLabel, Split, Switching, classify_modes
from p2h.harness.profiles import make_antiload_profile
from p2h.harness.runner import RunRequest, build_policy, resolve_surrogates, run_scenario, write_run_outputs
from p2h.harness.traditional import TraditionalController, equal_split_current, traditional_controller
from p2h.physics.plant import initial_state
from p2h.physics.rectifier import active_power

from .conftest_mixin import make_config, make_plant_file, make_surrogates, make_trace


class ProfileTests(SimpleTestCase):
    def setUp(self):
        self.config = make_config(2)

    def test_daily_shape(self):
        scenario = make_antiload_profile("daily", self.config, alpha=0.0)

        self.assertEqual(scenario.profile.shape, (24, 4))
        np.testing.assert_array_equal(scenario.instructions, scenario.profile)
        np.testing.assert_allclose(scenario.forecast, scenario.profile.mean(axis=1))
        self.assertAlmostEqual(scenario.profile[0, 0], 0.85 * self.config.rated_power)
        self.assertAlmostEqual(scenario.profile[10, 0], 0.15 * self.config.rated_power)

    def test_noise_is_seeded_and_bounded(self):
        first = make_antiload_profile("30%", self.config, alpha=0.05, seed=4)
        second = make_antiload_profile("30", self.config, alpha=0.05, seed=4)
        other = make_antiload_profile("30", self.config, alpha=0.05, seed=5)

        np.testing.assert_array_equal(first.instructions, second.instructions)
        self.assertFalse(np.array_equal(first.instructions, other.instructions))
        ratio = first.instructions / first.profile
        self.assertTrue(np.all(np.abs(ratio - 1.0) <= 0.05 + 1e-12))
        self.assertEqual(first.name, "30")

    def test_explicit_levels(self):
        hourly = np.linspace(0.1, 0.9, 24)
        scenario = make_antiload_profile(hourly, self.config, alpha=0.0)

        self.assertEqual(scenario.name, "custom")
        np.testing.assert_allclose(scenario.forecast, hourly * self.config.rated_power)

    def test_invalid_inputs(self):
        with self.assertRaises(ConfigError):
            make_antiload_profile("weekly", self.config)
        with self.assertRaises(ValueError):
            make_antiload_profile([0.5] * 7, self.config)
        with self.assertRaises(ValueError):
            make_antiload_profile(1.5, self.config)
        with self.assertRaises(ValueError):
            make_antiload_profile("50", self.config, alpha=1.0)

    def test_forecast_window_stops_at_day_end(self):
        scenario = make_antiload_profile("daily", self.config, days=2)

        self.assertEqual(scenario.hours, 48)
        self.assertEqual(len(scenario.forecast_window(0, 4)), 4)
        self.assertEqual(len(scenario.forecast_window(22, 4)), 2)
        self.assertEqual(len(scenario.forecast_window(24, 4)), 4)
        self.assertEqual(len(scenario.forecast_window(47, 4)), 1)


class TraditionalTests(SimpleTestCase):
    def setUp(self):
        self.config = make_config(2)
        self.state = initial_state(self.config, temperature=60.0)

    def test_both_stacks_at_high_load(self):
        deltas, currents = traditional_controller(self.state, 1.6e6, self.config)

        self.assertEqual(deltas, [1, 1])
        self.assertEqual(currents[0], currents[1])
        self.assertGreaterEqual(currents[0], 2000.0)
        self.assertAlmostEqual(2 * active_power(currents[0], 60.0), 1.6e6, delta=1.0)

    def test_one_stack_at_medium_load(self):
        deltas, currents = traditional_controller(self.state, 0.9e6, self.config)

        self.assertEqual(deltas, [1, 0])
        self.assertEqual(currents[1], 0.0)
        self.assertGreaterEqual(currents[0], 2000.0)

    def test_all_off_below_lower_limit(self):
        deltas, currents = traditional_controller(self.state, 0.3e6, self.config)

        self.assertEqual(deltas, [0, 0])
        self.assertEqual(currents, [0.0, 0.0])

    def test_equal_split_clamps_at_rating(self):
        self.assertEqual(equal_split_current(1.0e8, [60.0, 60.0], self.config), self.config.stack.i_max)

    def test_controller_targets_top_of_band(self):
        decision = TraditionalController(self.config).step(self.state, 1, 1.6e6)

        self.assertEqual(decision.targets, (self.config.stack.t_max - 5.0,) * 2)
        self.assertEqual(decision.baseline, decision.currents)


class MetricsTests(SimpleTestCase):
    def test_sub_watt_residuals_still_count_as_flexibility(self):
        trace = make_trace([[1, 1], [1, 0]], [[3000.0, 3000.0], [4000.0, 0.0]], achieved=1.0e6 - 0.5)
        metrics = compute_metrics(trace, dt=0.25)

        self.assertAlmostEqual(metrics.flexibility_mw, 8 * 0.5 / 1e6, places=15)
        self.assertGreater(metrics.flexibility_mw, 0.0)
        self.assertEqual(metrics.untracked_samples, 0)
        self.assertEqual(metrics.samples, 8)
        self.assertAlmostEqual(metrics.production_kg, 10.0 * 0.25 * 8)
        self.assertAlmostEqual(metrics.avg_pf, 0.95)
        self.assertEqual(metrics.max_hto, 0.5)

    def test_tracking_error_and_violations(self):
        trace = make_trace([[1, 1], [1, 1]], [[3000.0, 3000.0]] * 2, achieved=1.0e6 - 1000.0, pf=0.85)
        metrics = compute_metrics(trace, dt=0.25, pf_min=0.9, mpc_times=[0.5, 1.5])

        self.assertAlmostEqual(metrics.flexibility_mw, 8 * 1000.0 / 1e6)
        self.assertEqual(metrics.untracked_samples, 8)
        self.assertEqual(metrics.pf_violations, 8)
        self.assertEqual(metrics.mpc_time_mean, 1.0)
        self.assertEqual(metrics.mpc_time_max, 1.5)

    def test_empty_trace(self):
        metrics = compute_metrics(make_trace([[1, 1]], [[1.0, 1.0]]).iloc[0:0], dt=0.25)

        self.assertEqual(metrics, Metrics(0.0, 1.0, 0.0, 1.0, 0.0, 0, 0))

    def test_metric_validation(self):
        with self.assertRaises(ValueError):
            Metrics(-1.0, 0.95, 1.0, 0.9, 0.5, 4, 0)
        with self.assertRaises(ValueError):
            Metrics(0.0, 1.5, 1.0, 0.9, 0.5, 4, 0)

    def test_hourly_pf_and_comparison(self):
        trace = make_trace([[1, 1], [1, 1]], [[3000.0, 3000.0]] * 2)
        metrics = compute_metrics(trace, dt=0.25)
        table = comparison_table({"proposed": metrics, "traditional": metrics})

        self.assertEqual(list(hourly_pf(trace).index), [0, 1])
        self.assertEqual(list(table.columns), ["proposed", "traditional"])
        self.assertIn("flexibility_mw", table.index)


class AllocationMapTests(SimpleTestCase):
    def setUp(self):
        self.config = make_config(2)

    def test_cool_stacks_split_nearly_equally(self):
        result = allocation_map_two_stack(1.2e6, (40.0, 40.0), self.config)

        self.assertTrue(result.feasible)
        self.assertLessEqual(result.spread, 22.0)
        self.assertGreaterEqual(result.pf, self.config.pf_min)

    def test_hot_stacks_split_unequally(self):
        result = allocation_map_two_stack(1.5e6, (80.0, 80.0), self.config)

        self.assertTrue(result.feasible)
        self.assertGreater(result.spread, 500.0)

    def test_out_of_range_power_is_infeasible(self):
        result = allocation_map_two_stack(3.0e6, (60.0, 60.0), self.config, points=50)

        self.assertFalse(result.feasible)
        self.assertIsNone(result.currents)
        self.assertIsNone(result.spread)
        self.assertEqual(len(result.grid), 2500)


class ModeTests(SimpleTestCase):
    def setUp(self):
        self.config = make_config(2)

    def test_in_turn_switching(self):
        trace = make_trace([[1, 0], [0, 1]] * 3, [[3000.0, 3000.0]] * 6, hto=1.98)
        report = classify_modes(trace, self.config)

        self.assertEqual(report.switching, Switching.IN_TURN)
        self.assertEqual(report.label, ModeLabel.SWITCH_IN_TURN_EQUAL)
        self.assertTrue(report.hto_binding)
        self.assertTrue(report.flags_match)

    def test_partial_switching(self):
        trace = make_trace([[1, 1, 0], [1, 0, 1]] * 3, [[3000.0, 3000.0, 3000.0]] * 6, hto=1.98)
        report = classify_modes(trace, self.config)

        self.assertEqual(report.switching, Switching.PARTIAL)
        self.assertEqual(report.label, ModeLabel.PARTIAL_SWITCH_EQUAL)
        self.assertEqual(report.cycles, (0, 3, 2))

    def test_unequal_split(self):
        trace = make_trace([[1, 1]] * 6, [[4000.0, 2500.0]] * 6, pf=0.9)
        report = classify_modes(trace, self.config)

        self.assertEqual(report.split, Split.UNEQUAL)
        self.assertEqual(report.label, ModeLabel.NO_SWITCH_UNEQUAL)
        self.assertTrue(report.pf_binding)
        self.assertFalse(report.hto_binding)
        self.assertTrue(report.flags_match)

    def test_periodic_adjustment(self):
        trace = make_trace([[1, 1]] * 6, [[2000.0, 2000.0], [4000.0, 4000.0]] * 3)
        report = classify_modes(trace, self.config)

        self.assertEqual(report.label, ModeLabel.NO_SWITCH_PERIODIC)

    def test_label_ignores_stack_order(self):
        forward = make_trace([[1, 1, 0]] * 3 + [[0, 1, 1]] * 3, [[4000.0, 2500.0, 3000.0]] * 6)
        reverse = make_trace([[0, 1, 1]] * 3 + [[1, 1, 0]] * 3, [[3000.0, 2500.0, 4000.0]] * 6)

        self.assertEqual(classify_modes(forward, self.config).label, classify_modes(reverse, self.config).label)

    def test_report_serializes(self):
        report = classify_modes(make_trace([[1, 1]] * 4, [[3000.0, 3000.0]] * 4), self.config)
        payload = report.to_dict()

        self.assertEqual(payload["label"], ModeLabel.NO_SWITCH_EQUAL.value)
        self.assertIn("hto_peak", payload)
        json.dumps(payload)


class ExportTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_trace_header_and_column_order(self):
        trace = make_trace([[1, 1]], [[3000.0, 2000.0]])
        trace["scratch"] = 1.0
        path = write_trace(trace[list(reversed(trace.columns))], Path(self.tmp.name) / "trace.csv", 2, "abc123", 3,
                           controller="proposed")

        with path.open(encoding="utf-8") as handle:
            self.assertEqual(handle.readline().strip(), "# config_hash=abc123 seed=3 controller=proposed")
        frame = read_table(path)
        self.assertEqual(list(frame.columns), trace_columns(2))
        self.assertEqual(len(trace_columns(2)), 22)
        self.assertEqual(frame["baseline_1"].iloc[0], 2000.0)

    def test_metrics_file(self):
        metrics = compute_metrics(make_trace([[1, 1]], [[3000.0, 3000.0]]), dt=0.25)
        path = write_metrics({"traditional": metrics}, Path(self.tmp.name) / "m.json", "abc123", 0, preset="50")
        payload = json.loads(path.read_text(encoding="utf-8"))

        self.assertEqual(payload["config_hash"], "abc123")
        self.assertEqual(payload["preset"], "50")
        self.assertEqual(payload["controllers"]["traditional"]["samples"], 4)


class CharacterizeTests(SimpleTestCase):
    def setUp(self):
        self.config = make_config(2)

    def test_calibration_anchors(self):
        report = calibration_report(self.config)

        low, high = report["p_range_mw"]
        self.assertGreaterEqual(low, 0.24 * 0.85)
        self.assertLessEqual(high, 1.21 * 1.15)
        q_low, q_high = report["q_range_mvar"]
        self.assertAlmostEqual(q_low, 0.08, delta=0.08 * 0.15)
        self.assertAlmostEqual(q_high, 0.52, delta=0.52 * 0.15)
        self.assertGreater(report["purge_threshold_a"], 1000.0)
        self.assertLess(report["purge_threshold_a"], 1250.0)
        self.assertLess(report["pf_min_at_t_max"], 0.9)
        self.assertLess(report["two_stack_equal_split_pf_min"], 0.9)

    def test_surface_sizes(self):
        surfaces = characteristic_surfaces(self.config, n_currents=20, n_temperatures=5)

        self.assertEqual(set(surfaces), {"p", "q", "pf", "efficiency"})
        for frame in surfaces.values():
            self.assertEqual(len(frame), 100)
            self.assertEqual(list(frame.columns), ["current_a", "temperature_c", "value"])

    def test_two_stack_map(self):
        frame = two_stack_pf_map(self.config, points=10, temperatures=(40.0, 80.0))

        self.assertEqual(len(frame), 200)
        self.assertLess(frame[frame["temperature_c"] == 80.0]["pf"].min(), 0.9)


class RunnerTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_unknown_controller(self):
        with self.assertRaises(ValueError):
            build_policy(make_plant_file(2), "greedy")

    def test_traditional_policy(self):
        self.assertIsInstance(build_policy(make_plant_file(2), "traditional"), TraditionalController)

    def test_resolve_surrogates_from_artifact(self):
        path = dump_surrogates(make_surrogates(2), Path(self.tmp.name) / "s.json")
        surrogates = resolve_surrogates(make_plant_file(2), str(path))

        self.assertEqual(surrogates.n_stacks, 2)
        self.assertEqual(surrogates.grid, make_surrogates(2).grid)

    def test_resolve_surrogates_fits_when_nothing_is_stored(self):
        sentinel = object()
        with patch.dict(os.environ, {"P2H_OUTPUT_DIR": self.tmp.name}), \
                patch("p2h.harness.runner.fit_surrogates", return_value=sentinel) as fit:
            self.assertIs(resolve_surrogates(make_plant_file(2)), sentinel)
        fit.assert_called_once()

    def test_resolve_surrogates_uses_default_artifact(self):
        dump_surrogates(make_surrogates(2), Path(self.tmp.name) / "surrogates_2.json")
        with patch.dict(os.environ, {"P2H_OUTPUT_DIR": self.tmp.name}), \
                patch("p2h.harness.runner.fit_surrogates") as fit:
            surrogates = resolve_surrogates(make_plant_file(2))

        fit.assert_not_called()
        self.assertEqual(surrogates.n_stacks, 2)


class ClosedLoopTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_traditional_day_at_half_load(self):
        plant_file = make_plant_file(2)
        result = run_scenario(plant_file, RunRequest(controller="traditional", preset="50", progress=False))

        self.assertEqual(len(result.trace), 96)
        self.assertEqual(list(result.trace.columns), trace_columns(2))
        self.assertLessEqual(result.metrics.max_hto, plant_file.separator.hto_max)
        self.assertEqual(result.metrics.samples, 96)
        self.assertEqual(result.schedules, [])

    def test_proposed_short_run_and_outputs(self):
        plant_file = make_plant_file(2, {"plant.horizon": 2})
        config = plant_file.plant_config()
        daily = make_antiload_profile("daily", config, alpha=0.05, seed=1)
        scenario = replace(daily, profile=daily.profile[:3], instructions=daily.instructions[:3],
                           forecast=daily.forecast[:3])
        policy = build_policy(plant_file, "proposed", surrogates=make_surrogates(2))
        hours_done = []
        result = run_closed_loop(scenario, config, policy, initial_state(config, 60.0), progress=False,
                                 on_hour=lambda done, total: hours_done.append((done, total)))

        self.assertEqual(len(result.trace), 12)
        self.assertEqual(len(result.schedules), 3)
        self.assertEqual(hours_done[-1], (3, 3))
        self.assertLessEqual(result.metrics.max_hto, config.separator.hto_max)
        self.assertTrue(0.0 < result.metrics.avg_pf <= 1.0)

        paths = write_run_outputs(result, plant_file, self.tmp.name)
        self.assertEqual(set(paths), {"trace", "metrics", "schedules"})
        for path in paths.values():
            self.assertTrue(path.exists())

    def test_proposed_two_stack_hours_hold_limits_and_score_by_hand(self):
        plant_file = make_plant_file(2, {"plant.horizon": 2})
        config = plant_file.plant_config()
        daily = make_antiload_profile("daily", config, alpha=0.05, seed=3)
        scenario = replace(daily, profile=daily.profile[:3], instructions=daily.instructions[:3],
                           forecast=daily.forecast[:3])
        policy = build_policy(plant_file, "proposed", surrogates=make_surrogates(2))
        result = run_closed_loop(scenario, config, policy, initial_state(config, 60.0), progress=False)
        trace = result.trace

        self.assertGreaterEqual(result.metrics.avg_pf, config.pf_min)
        for b in range(2):
            self.assertTrue((trace[f"hto_{b}"] <= config.separator.hto_max).all())
        stack_sum = trace["p_0"] + trace["p_1"]
        by_hand = float((trace["instruction_w"] - stack_sum).abs().sum() / 1e6)
        self.assertAlmostEqual(result.metrics.flexibility_mw, by_hand, places=9)
        np.testing.assert_allclose(trace["achieved_w"], stack_sum, rtol=1e-12)
        self.assertEqual(len(policy.hto_mismatch), 2)
        self.assertLessEqual(max(policy.hto_mismatch), 1e-9)

    def test_sub_interval_mismatch(self):
        config = make_config(2)
        scenario = make_antiload_profile("50", make_config(2, {"plant.intervals_per_hour": 2}))

        with self.assertRaises(ValueError):
            run_closed_loop(scenario, config, TraditionalController(config), progress=False)

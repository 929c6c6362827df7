import itertools
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from p2h.milp.branch_and_bound import solve_milp
from p2h.milp.linearize import product_bin_bin, product_bin_cont
from p2h.milp.lp_format import dump_lp, to_lp
from p2h.milp.model import INF, MilpModel, Sense, SolveStatus
from p2h.milp.simplex import solve_lp
from p2h.milp.solvers import get_solver
from p2h.milp.solvers.highs import HighsSolver
from p2h.milp.solvers.native import NativeSolver

from .conftest_mixin import highs_solver


def small_lp() -> MilpModel:
    model = MilpModel("small")
    x = model.add_var("x", 0.0, INF)
    y = model.add_var("y", 0.0, INF)
    model.add_constraint({x: 1.0, y: 1.0}, Sense.LE, 4.0, "total")
    model.add_constraint({x: 1.0}, Sense.LE, 2.0, "cap_x")
    model.set_objective({x: 3.0, y: 2.0})
    return model


def knapsack(values, weights, capacity) -> MilpModel:
    model = MilpModel("knapsack")
    items = [model.add_var(f"z{k}", binary=True) for k in range(len(values))]
    model.add_constraint(dict(zip(items, weights)), Sense.LE, capacity, "capacity")
    model.set_objective(dict(zip(items, values)))
    return model


def enumerate_knapsack(values, weights, capacity) -> float:
    best = 0.0
    for pick in itertools.product((0, 1), repeat=len(values)):
        if np.dot(pick, weights) <= capacity:
            best = max(best, float(np.dot(pick, values)))
    return best


def random_lp(rng, n_vars=6, n_rows=5) -> MilpModel:
    model = MilpModel("random")
    xs = [model.add_var(f"x{j}", 0.0, 10.0) for j in range(n_vars)]
    for i in range(n_rows):
        coeffs = dict(zip(xs, rng.uniform(0.0, 1.0, n_vars)))
        model.add_constraint(coeffs, Sense.LE, float(rng.uniform(5.0, 10.0)), f"row{i}")
    model.add_constraint({j: 1.0 for j in xs}, Sense.GE, 1.0, "floor")
    model.set_objective(dict(zip(xs, rng.uniform(-1.0, 2.0, n_vars))))
    return model


class ModelTests(SimpleTestCase):
    def test_duplicate_variable_name(self):
        model = MilpModel()
        model.add_var("x")
        with self.assertRaises(ValueError):
            model.add_var("x")

    def test_constraint_validation(self):
        model = MilpModel()
        x = model.add_var("x")
        with self.assertRaises(IndexError):
            model.add_constraint({x + 1: 1.0}, Sense.LE, 1.0)
        with self.assertRaises(ValueError):
            model.add_constraint({x: math.nan}, Sense.LE, 1.0)
        with self.assertRaises(ValueError):
            model.add_constraint({x: 1.0}, Sense.LE, math.nan)

    def test_binary_bounds_are_clamped(self):
        model = MilpModel()
        z = model.add_var("z", -3.0, 7.0, binary=True)

        self.assertEqual(model.bounds()[0][z], 0.0)
        self.assertEqual(model.bounds()[1][z], 1.0)
        self.assertEqual(model.binaries, [z])
        self.assertEqual(model.relaxed().binaries, [])

    def test_violations_name_broken_rows(self):
        model = small_lp()
        model.add_var("z", binary=True)

        self.assertEqual(model.violations([2.0, 2.0, 1.0]), [])
        broken = model.violations([3.0, 2.0, 0.5])
        self.assertIn("total", broken)
        self.assertIn("cap_x", broken)
        self.assertIn("integrality:z", broken)

    def test_evaluate_includes_constant(self):
        model = small_lp()
        model.set_objective({0: 3.0, 1: 2.0}, constant=5.0)

        self.assertEqual(model.evaluate([2.0, 2.0]), 15.0)


class SimplexTests(SimpleTestCase):
    def test_small_lp_optimum_and_certificate(self):
        solution = solve_lp(small_lp())

        self.assertEqual(solution.status, SolveStatus.OPTIMAL)
        np.testing.assert_allclose(solution.x, [2.0, 2.0], atol=1e-9)
        self.assertAlmostEqual(solution.objective, 10.0, places=9)
        self.assertLessEqual(solution.cs_residual, 1e-6)

    def test_infeasible_rows(self):
        model = MilpModel()
        x = model.add_var("x", 0.0, 2.0)
        model.add_constraint({x: 1.0}, Sense.GE, 3.0)
        model.set_objective({x: 1.0})

        self.assertEqual(solve_lp(model).status, SolveStatus.INFEASIBLE)

    def test_crossing_bounds_are_infeasible(self):
        self.assertEqual(solve_lp(small_lp(), bounds={0: (3.0, 2.0)}).status, SolveStatus.INFEASIBLE)

    def test_unbounded(self):
        model = MilpModel()
        x = model.add_var("x", 0.0, INF)
        y = model.add_var("y", 0.0, INF)
        model.add_constraint({x: 1.0, y: -1.0}, Sense.LE, 1.0)
        model.set_objective({x: 1.0, y: 1.0})

        self.assertEqual(solve_lp(model).status, SolveStatus.UNBOUNDED)

    def test_equality_row(self):
        model = small_lp()
        model.add_constraint({0: 1.0, 1: -1.0}, Sense.EQ, 1.0, "gap")
        solution = solve_lp(model)

        np.testing.assert_allclose(solution.x, [2.0, 1.0], atol=1e-9)

    def test_random_lps_agree_with_highs(self):
        rng = np.random.default_rng(11)
        reference = highs_solver()
        for trial in range(25):
            with self.subTest(trial=trial):
                model = random_lp(rng)
                native = solve_lp(model)
                expected = reference.solve(model)

                self.assertEqual(native.status, SolveStatus.OPTIMAL)
                self.assertLessEqual(native.cs_residual, 1e-6)
                self.assertEqual(model.violations(native.x), [])
                self.assertAlmostEqual(native.objective, expected.objective,
                                       delta=1e-6 * max(1.0, abs(expected.objective)))


class BranchAndBoundTests(SimpleTestCase):
    def test_random_knapsacks_match_enumeration(self):
        rng = np.random.default_rng(3)
        for trial in range(100):
            n = int(rng.integers(3, 11))
            values = rng.uniform(1.0, 10.0, n)
            weights = rng.uniform(1.0, 10.0, n)
            capacity = 0.5 * float(weights.sum())
            with self.subTest(trial=trial, n=n):
                solution = solve_milp(knapsack(values, weights, capacity))

                self.assertEqual(solution.status, SolveStatus.OPTIMAL)
                self.assertAlmostEqual(solution.objective, enumerate_knapsack(values, weights, capacity), delta=1e-6)

    def test_mixed_instance_matches_fixed_binary_enumeration(self):
        model = MilpModel("mixed")
        on = [model.add_var(f"on{k}", binary=True) for k in range(3)]
        load = [model.add_var(f"load{k}", 0.0, 10.0) for k in range(3)]
        for k in range(3):
            model.add_constraint({load[k]: 1.0, on[k]: -8.0}, Sense.LE, 0.0, f"link{k}")
            model.add_constraint({load[k]: 1.0, on[k]: -2.0}, Sense.GE, 0.0, f"floor{k}")
        model.add_constraint(dict(zip(load, (1.0, 1.0, 1.0))), Sense.LE, 13.0, "shared")
        model.set_objective({load[0]: 1.0, load[1]: 1.2, load[2]: 0.9, on[0]: -1.5, on[1]: -3.0, on[2]: -0.5})

        best = -np.inf
        for pattern in itertools.product((0.0, 1.0), repeat=3):
            fixed = solve_lp(model, bounds={j: (v, v) for j, v in zip(on, pattern)})
            if fixed.status == SolveStatus.OPTIMAL:
                best = max(best, fixed.objective)
        solution = solve_milp(model)

        self.assertEqual(solution.status, SolveStatus.OPTIMAL)
        self.assertAlmostEqual(solution.objective, best, delta=1e-6)
        self.assertEqual(model.violations(solution.x), [])

    def test_node_limit_reports_open_bound(self):
        solution = solve_milp(knapsack([5.0, 4.0, 3.0], [4.0, 3.0, 2.0], 6.0), node_limit=1)

        self.assertEqual(solution.status, SolveStatus.NODE_LIMIT)
        self.assertGreaterEqual(solution.bound, solution.objective)

    def test_infeasible_milp(self):
        model = knapsack([1.0, 1.0], [1.0, 1.0], 5.0)
        model.add_constraint({0: 1.0, 1: 1.0}, Sense.GE, 3.0)

        self.assertEqual(solve_milp(model).status, SolveStatus.INFEASIBLE)

    def test_native_solver_is_deterministic(self):
        rng = np.random.default_rng(5)
        values, weights = rng.uniform(1.0, 10.0, 9), rng.uniform(1.0, 10.0, 9)
        model = knapsack(values, weights, 0.4 * float(weights.sum()))
        first = NativeSolver().solve(model)
        second = NativeSolver().solve(model)

        np.testing.assert_array_equal(first.x, second.x)
        self.assertEqual(first.nodes, second.nodes)

    def test_highs_agrees_and_rounds_binaries(self):
        rng = np.random.default_rng(8)
        for trial in range(10):
            n = int(rng.integers(4, 9))
            values, weights = rng.uniform(1.0, 10.0, n), rng.uniform(1.0, 10.0, n)
            model = knapsack(values, weights, 0.5 * float(weights.sum()))
            with self.subTest(trial=trial):
                solution = HighsSolver().solve(model)

                self.assertTrue(solution.is_optimal)
                self.assertTrue(set(np.unique(solution.x)) <= {0.0, 1.0})
                self.assertAlmostEqual(solution.objective, NativeSolver().solve(model).objective, delta=1e-5)


class LinearizeTests(SimpleTestCase):
    def extremes(self, model, w, fixed):
        values = []
        for sign in (1.0, -1.0):
            model.set_objective({w: sign})
            solution = solve_lp(model, bounds=fixed)
            self.assertEqual(solution.status, SolveStatus.OPTIMAL)
            values.append(float(solution.x[w]))
        return values

    def test_binary_times_continuous_is_exact(self):
        model = MilpModel()
        sigma = model.add_var("sigma", binary=True)
        x = model.add_var("x", -2.0, 5.0)
        w = model.add_var("w", -100.0, 100.0)
        product_bin_cont(model, w, sigma, x, -2.0, 5.0)

        for s, value in itertools.product((0.0, 1.0), (-2.0, 0.5, 5.0)):
            with self.subTest(sigma=s, x=value):
                high, low = self.extremes(model, w, {sigma: (s, s), x: (value, value)})
                self.assertAlmostEqual(high, s * value, places=9)
                self.assertAlmostEqual(low, s * value, places=9)

    def test_binary_times_binary_is_exact(self):
        model = MilpModel()
        a = model.add_var("a", binary=True)
        b = model.add_var("b", binary=True)
        w = model.add_var("w", -5.0, 5.0)
        product_bin_bin(model, w, a, b)

        self.assertEqual(model.bounds()[0][w], 0.0)
        for va, vb in itertools.product((0.0, 1.0), repeat=2):
            with self.subTest(a=va, b=vb):
                high, low = self.extremes(model, w, {a: (va, va), b: (vb, vb)})
                self.assertAlmostEqual(high, va * vb, places=9)
                self.assertAlmostEqual(low, va * vb, places=9)

    def test_product_needs_finite_ordered_bounds(self):
        model = MilpModel()
        sigma = model.add_var("sigma", binary=True)
        x = model.add_var("x")
        w = model.add_var("w")
        with self.assertRaises(ValueError):
            product_bin_cont(model, w, sigma, x, 0.0, INF)
        with self.assertRaises(ValueError):
            product_bin_cont(model, w, sigma, x, 3.0, 1.0)


class LpFormatTests(SimpleTestCase):
    def test_sections_and_sanitized_names(self):
        model = MilpModel("export")
        x = model.add_var("I[0,1] x", 0.0, 5.0)
        z = model.add_var("on[0,1]", binary=True)
        model.add_constraint({x: 1.0, z: -5.0}, Sense.LE, 0.0, "link 0")
        model.set_objective({x: 2.0, z: -1.0})
        text = to_lp(model)

        positions = [text.index(section) for section in ("Maximize", "Subject To", "Bounds", "Binaries", "End")]
        self.assertEqual(positions, sorted(positions))
        self.assertIn("I[0_1]_x", text)
        self.assertIn("link_0:", text)
        self.assertNotIn("I[0,1] x", text)
        self.assertIn("0.0 <= I[0_1]_x <= 5.0", text)

    def test_dump_writes_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = dump_lp(small_lp(), Path(tmp) / "nested" / "model.lp")

            self.assertTrue(path.exists())
            self.assertTrue(path.read_text(encoding="utf-8").rstrip().endswith("End"))


class SolverRegistryTests(SimpleTestCase):
    def test_lookup_is_case_insensitive(self):
        self.assertIsInstance(get_solver("NATIVE"), NativeSolver)
        self.assertIsInstance(get_solver("highs", gap_tol=1e-4), HighsSolver)
        self.assertEqual(get_solver("highs", gap_tol=1e-4).gap_tol, 1e-4)

    def test_unknown_backend(self):
        with self.assertRaises(ValueError):
            get_solver("bogus")

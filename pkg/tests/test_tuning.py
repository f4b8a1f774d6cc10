"""Tuner tests: evaluation counts, tie-breaking, separable optimality."""

from __future__ import annotations

import csv
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stockcast.errors import ConfigError
from stockcast.tuning import (
    SearchParam,
    SearchSpace,
    export_trials,
    grid_optimize,
    stepwise_optimize,
)


def space_2d():
    return SearchSpace(
        (
            SearchParam("x", (-1, 0, 1), 0),
            SearchParam("y", (-2, 0, 2, 4), 0),
        )
    )


class TestCounts:
    def test_stepwise_is_sum(self):
        log = stepwise_optimize(lambda c: c["x"] ** 2 + c["y"] ** 2, space_2d())
        assert len(log.trials) == 7
        assert space_2d().stepwise_count() == 7

    def test_grid_is_product(self):
        log = grid_optimize(lambda c: c["x"] ** 2 + c["y"] ** 2, space_2d())
        assert len(log.trials) == 12
        assert space_2d().grid_count() == 12

    def test_trial_indices_sequential(self):
        log = stepwise_optimize(lambda c: 0.0, space_2d())
        assert [t.index for t in log.trials] == list(range(7))


class TestStepwise:
    def test_separable_objective_reaches_grid_optimum(self):
        objective = lambda c: c["x"] ** 2 + c["y"] ** 2
        step = stepwise_optimize(objective, space_2d())
        grid = grid_optimize(objective, space_2d())
        assert step.best_config == {"x": 0, "y": 0}
        assert step.best_value == grid.best_value == 0.0

    def test_single_parameter_equals_grid(self):
        space = SearchSpace((SearchParam("x", (3, 1, 2), 3),))
        objective = lambda c: c["x"] * 1.0
        step = stepwise_optimize(objective, space)
        grid = grid_optimize(objective, space)
        assert step.best_config == grid.best_config == {"x": 1}
        assert [t.value for t in step.trials] == [t.value for t in grid.trials]

    def test_nonseparable_hand_trace(self):
        space = SearchSpace(
            (SearchParam("x", (0, 1), 0), SearchParam("y", (0, 1), 1))
        )
        log = stepwise_optimize(lambda c: float((c["x"] - c["y"]) ** 2), space)
        assert len(log.trials) == 4
        # x sweep holds y at its default 1: f(0,1)=1, f(1,1)=0 -> x=1
        assert [t.config for t in log.trials[:2]] == [
            {"x": 0, "y": 1}, {"x": 1, "y": 1},
        ]
        # y sweep holds the frozen x=1: f(1,0)=1, f(1,1)=0 -> y=1
        assert [t.config for t in log.trials[2:]] == [
            {"x": 1, "y": 0}, {"x": 1, "y": 1},
        ]
        assert log.best_config == {"x": 1, "y": 1}
        assert log.best_value == 0.0

    def test_ties_prefer_earliest_candidate(self):
        space = SearchSpace((SearchParam("x", (5, 3, 4), 5),))
        log = stepwise_optimize(lambda c: 0.0, space)
        assert log.best_config == {"x": 5}

    def test_failed_trials_rank_as_infinity(self):
        space = SearchSpace((SearchParam("x", (0, 1, 2), 0),))

        def objective(c):
            return float("nan") if c["x"] == 0 else float(c["x"])

        log = stepwise_optimize(objective, space)
        assert log.trials[0].failed
        assert log.best_config == {"x": 1}
        assert log.best_value == 1.0

    def test_all_failures_still_deterministic(self):
        space = SearchSpace((SearchParam("x", (7, 8), 7),))
        log = stepwise_optimize(lambda c: float("inf"), space)
        assert log.best_config == {"x": 7}
        assert math.isinf(log.best_value)

    def test_best_value_is_log_minimum(self):
        objective = lambda c: (c["x"] - 1) ** 2 + abs(c["y"] - 2) * 0.5
        log = stepwise_optimize(objective, space_2d())
        assert log.best_value == min(
            t.value for t in log.trials if not t.failed
        )

    def test_rerun_identical(self):
        objective = lambda c: c["x"] * 3.0 - c["y"]
        a = stepwise_optimize(objective, space_2d())
        b = stepwise_optimize(objective, space_2d())
        assert a == b


class TestGrid:
    def test_budget_refused_up_front(self):
        calls = []

        def objective(c):
            calls.append(c)
            return 0.0

        with pytest.raises(ConfigError):
            grid_optimize(objective, space_2d(), max_evals=5)
        assert calls == []

    def test_grid_dominates_stepwise(self):
        objective = lambda c: float((c["x"] * c["y"] - 2) ** 2)
        step = stepwise_optimize(objective, space_2d())
        grid = grid_optimize(objective, space_2d())
        assert grid.best_value <= step.best_value

    def test_lexicographic_tie_break(self):
        space = SearchSpace(
            (SearchParam("a", (1, 2), 1), SearchParam("b", (1, 2), 1))
        )
        log = grid_optimize(lambda c: 0.0, space)
        assert log.best_config == {"a": 1, "b": 1}

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10**6))
    def test_grid_finds_true_minimum(self, seed):
        import numpy as np

        rng = np.random.default_rng(seed)
        xs = tuple(float(v) for v in rng.uniform(-5, 5, size=4))
        ys = tuple(float(v) for v in rng.uniform(-5, 5, size=3))
        space = SearchSpace(
            (SearchParam("x", xs, xs[0]), SearchParam("y", ys, ys[0]))
        )
        objective = lambda c: (c["x"] + 1.0) ** 2 * (c["y"] - 2.0) ** 2 + c["y"]
        log = grid_optimize(objective, space)
        brute = min(objective({"x": x, "y": y}) for x in xs for y in ys)
        assert log.best_value == brute


class TestValidationAndExport:
    def test_space_validation(self):
        with pytest.raises(ConfigError):
            SearchSpace(()).validate()
        with pytest.raises(ConfigError):
            SearchSpace((SearchParam("x", (), 1),)).validate()
        with pytest.raises(ConfigError):
            SearchSpace((SearchParam("x", (1, 2), 3),)).validate()
        with pytest.raises(ConfigError):
            SearchSpace(
                (SearchParam("x", (1,), 1), SearchParam("x", (2,), 2))
            ).validate()

    def test_csv_export(self, tmp_path):
        log = stepwise_optimize(lambda c: c["x"] ** 2 + c["y"] ** 2, space_2d())
        path = tmp_path / "trials.csv"
        export_trials(log, path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["eval_index", "x", "y", "objective"]
        assert len(rows) == 8
        assert rows[1][0] == "0"
        assert float(rows[1][3]) == 1.0

"""Hyperparameter search: one-parameter-at-a-time versus full grid.

The stepwise search sweeps parameters in declaration order.  While
sweeping parameter i, earlier parameters sit at their frozen winners and
later ones at their declared defaults, so the total cost is the sum of
the grid sizes rather than their product.  Ties go to the candidate
listed first, which makes reruns reproducible.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from itertools import product
from pathlib import Path

from .errors import ConfigError, DataError


@dataclass(frozen=True)
class SearchParam:
    name: str
    candidates: tuple
    default: object

    def validate(self) -> None:
        if not self.candidates:
            raise ConfigError(f"parameter {self.name!r}: empty candidate list")
        if self.default not in self.candidates:
            raise ConfigError(
                f"parameter {self.name!r}: default {self.default!r} not a candidate"
            )


@dataclass(frozen=True)
class SearchSpace:
    params: tuple[SearchParam, ...]

    def validate(self) -> None:
        if not self.params:
            raise ConfigError("search space has no parameters")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ConfigError("duplicate parameter names in search space")
        for p in self.params:
            p.validate()

    def stepwise_count(self) -> int:
        return sum(len(p.candidates) for p in self.params)

    def grid_count(self) -> int:
        return math.prod(len(p.candidates) for p in self.params)


@dataclass(frozen=True)
class Trial:
    index: int
    config: dict
    value: float
    failed: bool


@dataclass(frozen=True)
class TrialLog:
    trials: tuple[Trial, ...]
    best_config: dict
    best_value: float


def _evaluate(objective, config: dict, index: int) -> Trial:
    raw = objective(dict(config))
    try:
        value = float(raw)
    except (TypeError, ValueError):
        value = float("nan")
    failed = not math.isfinite(value)
    return Trial(index=index, config=dict(config), value=value, failed=failed)


def _effective(trial: Trial) -> float:
    return float("inf") if trial.failed else trial.value


def stepwise_optimize(objective, space: SearchSpace) -> TrialLog:
    """Optimize one parameter at a time; exactly sum(|h_i|) evaluations.

    Failed (non-finite) evaluations are logged and rank as +inf.
    """
    space.validate()
    frozen: dict = {}
    trials: list[Trial] = []
    best_value = float("inf")
    for i, param in enumerate(space.params):
        tail = {p.name: p.default for p in space.params[i + 1 :]}
        best_choice = None
        step_best = float("inf")
        for cand in param.candidates:
            config = {**frozen, param.name: cand, **tail}
            trial = _evaluate(objective, config, len(trials))
            trials.append(trial)
            if best_choice is None or _effective(trial) < step_best:
                step_best = _effective(trial)
                best_choice = cand
        frozen[param.name] = best_choice
        best_value = step_best
    return TrialLog(trials=tuple(trials), best_config=frozen, best_value=best_value)


def grid_optimize(objective, space: SearchSpace, max_evals: int = 10000) -> TrialLog:
    """Exhaustive Cartesian sweep; ties go to the lexicographically
    earliest combination in candidate-list order."""
    space.validate()
    total = space.grid_count()
    if total > max_evals:
        raise ConfigError(
            f"grid needs {total} evaluations, above the budget of {max_evals}"
        )
    names = [p.name for p in space.params]
    trials: list[Trial] = []
    best: Trial | None = None
    for combo in product(*(p.candidates for p in space.params)):
        config = dict(zip(names, combo))
        trial = _evaluate(objective, config, len(trials))
        trials.append(trial)
        if best is None or _effective(trial) < _effective(best):
            best = trial
    return TrialLog(
        trials=tuple(trials), best_config=dict(best.config), best_value=_effective(best)
    )


def export_trials(log: TrialLog, path: str | Path) -> None:
    """CSV with one row per evaluation: index, parameter values, objective."""
    if not log.trials:
        raise DataError("no trials to export")
    names = list(log.trials[0].config)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eval_index", *names, "objective"])
        for trial in log.trials:
            writer.writerow(
                [trial.index, *(trial.config[n] for n in names), repr(trial.value)]
            )

"""Hyperparameter search with pruning: grid, median rule, successive halving,
and the bracketed halving scheduler.

The objective protocol: ``objective(config, budget)`` returns an iterator of
``(step, value)`` pairs with strictly increasing integer steps, ending at
``budget`` (budget unit = training epochs, lower value = better).  Each call
starts an independent evaluation, so a configuration promoted to a larger
budget is retrained from scratch and the executed budget of a halving run
equals its closed-form schedule sum exactly.

Report, prune, and promote decisions all happen on one coordinator thread;
trial evaluation itself could run anywhere.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from statistics import median

from numpy.random import default_rng

from .errors import ConfigError

#: Median pruning is disabled until this many peers have reported at a step.
MEDIAN_WARMUP = 5


@dataclass
class SearchSpace:
    """Named parameters, each with a finite ordered grid of values."""

    params: dict

    def __post_init__(self):
        if not self.params:
            raise ConfigError("search space has no parameters")
        for name, grid in self.params.items():
            if not list(grid):
                raise ConfigError(f"parameter {name!r} has an empty grid")

    @property
    def n_configs(self) -> int:
        out = 1
        for grid in self.params.values():
            out *= len(grid)
        return out


def grid_configs(space: SearchSpace):
    """Cartesian product in lexicographic order of the declared parameters."""
    names = list(space.params)
    return [dict(zip(names, combo))
            for combo in itertools.product(*space.params.values())]


@dataclass
class Trial:
    """One configuration under evaluation with its intermediate reports."""

    id: int
    config: dict
    reports: list = field(default_factory=list)  # (budget_step, value)
    state: str = "running"
    budget_used: int = 0

    def report(self, step: int, value: float):
        if self.state != "running":
            raise ConfigError(f"trial {self.id} is {self.state}; no further reports")
        if self.reports and step <= self.reports[-1][0]:
            raise ConfigError(f"trial {self.id}: step {step} not increasing")
        self.reports.append((step, float(value)))

    def value_at(self, step: int):
        for s, v in self.reports:
            if s == step:
                return v
        return None

    @property
    def last_value(self):
        return self.reports[-1][1] if self.reports else None


def median_should_prune(trial: Trial, peers, step: int, warmup: int = MEDIAN_WARMUP) -> bool:
    """True iff enough peers reported at ``step`` and the trial is strictly
    worse (higher) than their median there."""
    value = trial.value_at(step)
    if value is None:
        raise ConfigError(f"trial {trial.id} has no report at step {step}")
    peer_values = [v for v in (p.value_at(step) for p in peers if p.id != trial.id)
                   if v is not None]
    if len(peer_values) < warmup:
        return False
    return value > median(peer_values)


def sha_schedule(n: int, eta: int, r: int, max_rungs: int = None):
    """Halving schedule: rung i holds floor(n / eta^i) configurations at
    per-configuration budget r * eta^i, stopping before the population
    would drop below one."""
    if n < 1:
        raise ConfigError(f"population must be >= 1, got {n}")
    if eta < 2:
        raise ConfigError(f"elimination rate must be >= 2, got {eta}")
    if r < 1:
        raise ConfigError(f"initial budget must be >= 1, got {r}")
    rungs = []
    i = 0
    while n // eta**i >= 1 and (max_rungs is None or i < max_rungs):
        rungs.append((n // eta**i, r * eta**i))
        i += 1
    return rungs


@dataclass
class Bracket:
    s: int
    n_configs: int
    initial_budget: int
    rungs: list

    @property
    def budget(self) -> int:
        return sum(pop * b for pop, b in self.rungs)


@dataclass
class HyperbandPlan:
    max_budget: int
    eta: int
    brackets: list

    @property
    def total_budget(self) -> int:
        return sum(b.budget for b in self.brackets)


def hyperband_plan(max_budget: int, eta: int) -> HyperbandPlan:
    """Bracketed halving: s_max = floor(log_eta R) + 1 brackets, from the most
    aggressive (many configurations, tiny budget) down to one full-budget rung.

    Bracket s starts ceil((s_max + 1) / (s + 1) * eta^s) configurations at
    budget R / eta^s and halves at most s + 1 times, so every bracket tops
    out at the full budget.
    """
    if max_budget < 1:
        raise ConfigError(f"max budget must be >= 1, got {max_budget}")
    if eta < 2:
        raise ConfigError(f"elimination rate must be >= 2, got {eta}")
    s_max = 0
    while eta ** (s_max + 1) <= max_budget:
        s_max += 1
    brackets = []
    for s in range(s_max, -1, -1):
        n_s = -((-(s_max + 1) * eta**s) // (s + 1))  # ceil division
        r_s = max(1, max_budget // eta**s)
        brackets.append(Bracket(s, n_s, r_s, sha_schedule(n_s, eta, r_s, max_rungs=s + 1)))
    return HyperbandPlan(max_budget, eta, brackets)


# ---------------------------------------------------------------------------
# Study runner.
# ---------------------------------------------------------------------------


@dataclass
class StudyLimits:
    max_budget: int = 81
    eta: int = 3
    seed: int = 0
    warmup: int = MEDIAN_WARMUP
    report_every: int = 5  # lockstep report interval for the median strategy


@dataclass
class StudyResult:
    strategy: str
    best_config: dict
    best_value: float
    trials: list
    total_budget: int
    param_names: list


STRATEGIES = ("grid", "median", "sha", "hyperband")


def _run_to(trial: Trial, objective, budget: int):
    """Run one fresh evaluation of the trial's config up to ``budget``.

    Report steps are offset by the budget the trial has already consumed, so
    repeated from-scratch runs at growing budgets keep the report history
    strictly increasing.  Returns the final value; any objective error marks
    the trial failed and the study continues.
    """
    offset = trial.budget_used
    last_step = 0
    value = None
    try:
        for step, value in objective(trial.config, budget):
            trial.report(offset + step, value)
            last_step = step
    except Exception:
        trial.budget_used = offset + last_step
        trial.state = "failed"
        return None
    trial.budget_used = offset + last_step
    if value is None:
        trial.state = "failed"
        return None
    return value


def run_study(objective, strategy: str, space: SearchSpace,
              limits: StudyLimits = None) -> StudyResult:
    """Run one study and return the best observed (configuration, value).

    The objective must be deterministic for a fixed configuration; decisions
    are a pure function of the report history, so re-running a study
    reproduces it.
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    limits = limits or StudyLimits()
    configs = grid_configs(space)
    runner = {"grid": _run_grid, "median": _run_median,
              "sha": _run_sha, "hyperband": _run_hyperband}[strategy]
    trials = runner(objective, configs, limits)
    best = None
    for t in trials:
        if t.last_value is not None and (best is None or t.last_value < best.last_value):
            best = t
    if best is None:
        raise ConfigError("no trial produced a value")
    return StudyResult(strategy, dict(best.config), best.last_value, trials,
                       sum(t.budget_used for t in trials), list(space.params))


def _run_grid(objective, configs, limits):
    trials = []
    for i, config in enumerate(configs):
        t = Trial(i, config)
        if _run_to(t, objective, limits.max_budget) is not None:
            t.state = "complete"
        trials.append(t)
    return trials


def _run_median(objective, configs, limits):
    """Lockstep rounds: every surviving trial advances one report, then any
    trial strictly above the median at that step is pruned."""
    trials = [Trial(i, c) for i, c in enumerate(configs)]
    streams = {}
    for t in trials:
        try:
            streams[t.id] = iter(objective(t.config, limits.max_budget))
        except Exception:
            t.state = "failed"
    while True:
        running = [t for t in trials if t.state == "running"]
        if not running:
            break
        last_step = None
        for t in running:
            try:
                step, value = next(streams[t.id])
            except StopIteration:
                t.state = "complete"
                continue
            except Exception:
                t.state = "failed"
                continue
            t.report(step, value)
            t.budget_used = step
            last_step = step
        if last_step is None:
            continue
        still = [t for t in trials if t.state == "running"]
        for t in still:
            if t.value_at(last_step) is None:
                continue
            if median_should_prune(t, still, last_step, warmup=limits.warmup):
                t.state = "pruned"
    return trials


def _run_halving_rounds(objective, entries, rungs):
    """Shared halving loop over a list of trials: at each rung every survivor
    re-runs from scratch at the rung budget and only the best (by value, ties
    to the lower trial id) move on to fill the next rung's population."""
    survivors = list(entries)
    for ri, (pop, budget) in enumerate(rungs):
        ranked = []
        for t in survivors[:pop]:
            value = _run_to(t, objective, budget)
            if value is not None:
                ranked.append((value, t.id, t))
        ranked.sort(key=lambda item: (item[0], item[1]))
        if ri + 1 < len(rungs):
            keep = rungs[ri + 1][0]
            promoted = [t for _, _, t in ranked[:keep]]
            for _, _, t in ranked[keep:]:
                t.state = "pruned"
            survivors = promoted
        else:
            for _, _, t in ranked:
                t.state = "complete"
    return survivors


def _run_sha(objective, configs, limits):
    n = len(configs)
    n_rungs = len(sha_schedule(n, limits.eta, 1))
    r0 = max(1, limits.max_budget // limits.eta ** (n_rungs - 1))
    rungs = sha_schedule(n, limits.eta, r0)
    trials = [Trial(i, c) for i, c in enumerate(configs)]
    _run_halving_rounds(objective, trials, rungs)
    return trials


def _run_hyperband(objective, configs, limits):
    """Run every bracket of the plan; bracket populations are drawn from the
    grid without replacement (topped up with replacement only when a bracket
    asks for more configurations than the grid holds)."""
    plan = hyperband_plan(limits.max_budget, limits.eta)
    rng = default_rng(limits.seed)
    trials = []
    next_id = 0
    for bracket in plan.brackets:
        if bracket.n_configs <= len(configs):
            idx = rng.choice(len(configs), size=bracket.n_configs, replace=False)
        else:
            extra = rng.choice(len(configs), size=bracket.n_configs - len(configs),
                               replace=True)
            idx = list(range(len(configs))) + list(extra)
        bracket_trials = []
        for k in idx:
            bracket_trials.append(Trial(next_id, configs[int(k)]))
            next_id += 1
        trials.extend(bracket_trials)
        _run_halving_rounds(objective, bracket_trials, bracket.rungs)
    return trials


def write_study_csv(result: StudyResult, path):
    """Persist one row per trial: id, parameters, final value, budget, state."""
    with open(path, "w", newline="\n") as fh:
        fh.write("trial_id," + ",".join(result.param_names) + ",value,budget,state\n")
        for t in result.trials:
            value = "" if t.last_value is None else format(t.last_value, ".17g")
            params = ",".join(format(t.config[n], ".17g") if isinstance(t.config[n], float)
                              else str(t.config[n]) for n in result.param_names)
            fh.write(f"{t.id},{params},{value},{t.budget_used},{t.state}\n")

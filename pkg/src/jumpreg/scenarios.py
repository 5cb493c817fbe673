"""Simulation scenarios behind the command-line ``simulate`` command.

* ``table1``: random sample sizes and window counts with N(0, 1.5^2) jumps,
  comparing the greedy initializer with the exact optimum and measuring how
  many DP cells the warm start saves.
* ``table2-fig2``: three breaks at (0.234, 0.50, 0.73), levels
  (1.0, 3.1, 2.8, 1.5), noise 0.5 and a uniform design, ranked by ``select``.
* ``two-window``: confidence-interval coverage and the ML versus Bayes
  mean squared error for a single break.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from jumpreg._rng import Seed, child_seed, substream
from jumpreg.bayes import TwoWindowScenario, mse_compare
from jumpreg.core import Dataset
from jumpreg.errors import BadParam
from jumpreg.processes import ci_breakpoint
from jumpreg.segmentation import SegConfig, dp_optimal, dp_pruned, greedy_init
from jumpreg.selection import SelectionReport, select_models

if TYPE_CHECKING:
    from collections.abc import Sequence

SCENARIOS = ("table1", "table2-fig2", "two-window")
THREE_BREAKS = (0.234, 0.50, 0.73)
THREE_BREAK_LEVELS = (1.0, 3.1, 2.8, 1.5)


@dataclass(frozen=True)
class ScenarioSpec:
    """Parameters of one scenario.

    For ``table1`` the sample size is uniform on ``n_min..n_max`` and the
    window count uniform on ``1..floor(sqrt(n) * d_fraction)``;
    ``count="breaks"`` draws the number of breaks from that range instead.
    """

    name: str
    n: int = 1000
    breaks: tuple[float, ...] = THREE_BREAKS
    levels: tuple[float, ...] = THREE_BREAK_LEVELS
    sigma: float = 0.5
    replicates: int = 100
    n_min: int = 20
    n_max: int = 500
    d_fraction: float = 1.0
    count: str = "windows"
    jump_sd: float = 1.5
    noise_sd: float = 1.0
    min_seg_len: int = 2
    d_max: int = 4
    degree_max: int = 3
    criterion: str = "ajic"
    reps: int = 500
    level: float = 0.95
    quantile_reps: int = 4000
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.name not in SCENARIOS:
            raise BadParam(f"scenario must be one of {SCENARIOS}")
        if len(self.levels) != len(self.breaks) + 1:
            raise BadParam("need one more level than breaks")
        if not self.sigma > 0:
            raise BadParam("sigma must be positive")
        if self.replicates < 1:
            raise BadParam("replicates must be positive")
        if self.count not in ("windows", "breaks"):
            raise BadParam("count must be 'windows' or 'breaks'")
        if not 20 <= self.n_min <= self.n_max:
            raise BadParam("need 20 <= n_min <= n_max")


def step_dataset(
    rng: np.random.Generator, n: int, breaks: Sequence[float], levels: Sequence[float], sigma: float
) -> Dataset:
    """Uniform design on the unit interval, step mean (right-closed windows), Gaussian noise."""
    x = np.sort(rng.uniform(0.0, 1.0, n))
    mean = np.asarray(levels, dtype=np.float64)[np.searchsorted(np.asarray(breaks, dtype=np.float64), x, side="left")]
    return Dataset(x, mean + sigma * rng.standard_normal(n))


def table2_dataset(spec: ScenarioSpec, rng: np.random.Generator) -> Dataset:
    return step_dataset(rng, spec.n, spec.breaks, spec.levels, spec.sigma)


@dataclass(frozen=True)
class Table1Row:
    n: int
    d: int
    init_splits: tuple[int, ...]
    opt_splits: tuple[int, ...]
    init_objective: float
    opt_objective: float
    evals_full: int
    evals_pruned: int

    @property
    def correct_solution(self) -> bool:
        return self.init_splits == self.opt_splits

    @property
    def correct_breaks(self) -> float:
        return len(set(self.init_splits) & set(self.opt_splits)) / len(self.opt_splits)

    @property
    def reduction(self) -> float:
        return 1.0 - self.evals_pruned / self.evals_full


def table1_replicate(spec: ScenarioSpec, seed: Seed, r: int) -> Table1Row | None:
    """One Table-1 style run; ``None`` when the drawn model has a single window."""
    rng = substream(seed, r)
    n = int(rng.integers(spec.n_min, spec.n_max + 1))
    upper = max(1, math.floor(math.sqrt(n) * spec.d_fraction))
    k = int(rng.integers(1, upper + 1))
    d = k if spec.count == "windows" else k + 1
    breaks = np.sort(rng.uniform(0.0, 1.0, d - 1))
    levels = np.cumsum(np.concatenate(([0.0], rng.normal(0.0, spec.jump_sd, d - 1))))
    data = step_dataset(rng, n, breaks, levels, spec.noise_sd)
    if d == 1 or d * spec.min_seg_len > n:
        return None
    init, init_obj = greedy_init(data, d, spec.min_seg_len)
    full, s_full = dp_optimal(data, SegConfig(d, spec.min_seg_len), return_stats=True)
    pruned, s_pr = dp_pruned(data, SegConfig(d, spec.min_seg_len, prune=True, incumbent_rss=init_obj))
    if pruned.splits != full.splits:
        raise AssertionError("pruned optimum differs from the full optimum")
    return Table1Row(n, d, init, full.splits, init_obj, s_full.objective, s_full.evaluations, s_pr.evaluations)


def run_table1(spec: ScenarioSpec, seed: Seed) -> dict:
    t0 = time.perf_counter()
    rows = [table1_replicate(spec, seed, r) for r in range(spec.replicates)]
    used = [row for row in rows if row is not None]
    wall = time.perf_counter() - t0
    summary = {
        "replicates": spec.replicates,
        "single_window": spec.replicates - len(used),
        "correct_breaks": float(np.mean([r.correct_breaks for r in used])) if used else math.nan,
        "correct_solution": float(np.mean([r.correct_solution for r in used])) if used else math.nan,
        "computational_reduction": float(np.mean([r.reduction for r in used])) if used else math.nan,
        "init_never_better": all(r.init_objective >= r.opt_objective for r in used),
        "wall_seconds": wall,
    }
    return {"summary": summary, "rows": used}


def run_table2(spec: ScenarioSpec, seed: Seed) -> dict:
    reports: list[SelectionReport] = []
    for r in range(spec.replicates):
        data = table2_dataset(spec, substream(seed, 0, r))
        reports.append(
            select_models(
                data,
                spec.d_max,
                spec.degree_max,
                spec.criterion,
                spec.min_seg_len,
                spec.reps,
                child_seed(seed, 1, r),
            )
        )
    true_d = len(spec.breaks) + 1
    wins = [rep.winner.family == "jump" and rep.winner.d_or_degree == true_d for rep in reports]
    summary = {
        "replicates": spec.replicates,
        "true_model_wins": float(np.mean(wins)),
    }
    return {"summary": summary, "reports": reports}


def run_two_window(spec: ScenarioSpec, seed: Seed) -> dict:
    a0, b0 = spec.levels[0], spec.levels[1]
    g0 = spec.breaks[0]
    sc = TwoWindowScenario(a0, b0, g0, spec.sigma, spec.n)
    cover = np.empty(spec.replicates, dtype=bool)
    widths = np.empty(spec.replicates)
    for r in range(spec.replicates):
        data = sc.draw(substream(seed, 0, r))
        fit = dp_optimal(data, SegConfig(2, spec.min_seg_len))
        lo, hi = ci_breakpoint(
            fit, 0, spec.level, 1.0, fit.sigma0_hat, spec.quantile_reps, child_seed(seed, 1, r)
        )
        cover[r] = lo <= g0 <= hi
        widths[r] = hi - lo
    p = float(cover.mean())
    mse = mse_compare(sc, max(spec.replicates, 100), child_seed(seed, 2), spec.min_seg_len)
    summary = {
        "replicates": spec.replicates,
        "coverage": p,
        "coverage_se": math.sqrt(p * (1 - p) / spec.replicates),
        "mean_width": float(widths.mean()),
        "mse_ml": mse.mse_ml,
        "mse_bayes": mse.mse_bayes,
        "mse_se_diff": mse.se_diff,
    }
    return {"summary": summary}


def run_scenario(spec: ScenarioSpec, seed: Seed) -> dict:
    """Run a scenario; the result always holds a ``summary`` mapping."""
    if spec.name == "table1":
        return run_table1(spec, seed)
    if spec.name == "table2-fig2":
        return run_table2(spec, seed)
    return run_two_window(spec, seed)

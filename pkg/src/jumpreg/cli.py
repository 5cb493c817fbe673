"""Command-line front end.

Commands: ``fit``, ``select``, ``ci``, ``bayes`` and ``simulate``.  Exit
codes are 0 on success, 2 for bad input, 3 for an infeasible configuration
and 4 for numerical degeneracy.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import sys
import warnings
from dataclasses import asdict, dataclass

from jumpreg import __version__
from jumpreg.bayes import posterior_gamma
from jumpreg.core import Dataset, StepFit
from jumpreg.data_io import Report, emit_report, fit_record, ingest_csv, score_record, step_trace
from jumpreg.errors import BadParam, DegenerateSigma, JumpRegError
from jumpreg.processes import ci_breakpoint, design_density
from jumpreg.scenarios import SCENARIOS, ScenarioSpec, run_scenario
from jumpreg.segmentation import SegConfig, dp_optimal, dp_pruned, greedy_init
from jumpreg.selection import CRITERIA, select_models

COMMANDS = ("fit", "select", "ci", "bayes", "simulate")
_SEED_MAX = 2**64 - 1


@dataclass(frozen=True)
class RunConfig:
    command: str
    input_path: str | None = None
    d: int | None = None
    d_max: int | None = None
    degree_max: int = 3
    criterion: str = "ajic"
    min_seg_len: int = 2
    reps: int | None = None
    seed: int | None = None
    level: float = 0.95
    density: str = "uniform"
    output: str = "json"
    tau: float | None = None
    header: bool = True
    scenario: str | None = None
    replicates: int | None = None
    n: int | None = None

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise BadParam(f"unknown command {self.command!r}")
        if self.command in ("select", "ci", "simulate") and self.seed is None:
            raise BadParam(f"--seed is required for {self.command}")
        if self.seed is not None and not 0 <= self.seed <= _SEED_MAX:
            raise BadParam("seed must be a 64-bit unsigned integer")
        if not 0 < self.level < 1:
            raise BadParam("level must lie in (0, 1)")
        if self.min_seg_len < 1:
            raise BadParam("min-seg-len must be positive")
        if self.reps is not None and self.reps < 1:
            raise BadParam("reps must be positive")
        if self.tau is not None and not self.tau > 0:
            raise BadParam("tau must be positive")


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= v <= _SEED_MAX:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jumpreg", description="Step-function regression with break-point inference.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, data: bool = True) -> None:
        if data:
            p.add_argument("--input", dest="input_path", required=True, help="CSV file with columns x,y")
            p.add_argument("--no-header", dest="header", action="store_false", help="input has no header row")
            p.add_argument("--min-seg-len", type=int, default=2)
        p.add_argument("--output", choices=("json", "csv"), default="json")
        p.add_argument("--out", default=None, help="report path (default: stdout)")
        p.add_argument("--trace", default=None, help="write the fitted step trace (x, fitted) here")

    p = sub.add_parser("fit", help="optimal step fit with a given number of windows")
    common(p)
    p.add_argument("--d", type=int, required=True, help="number of windows")

    p = sub.add_parser("select", help="rank jump and polynomial models")
    common(p)
    p.add_argument("--d-max", type=int, required=True)
    p.add_argument("--degree-max", type=int, default=3)
    p.add_argument("--criterion", choices=CRITERIA, default="ajic")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--density", choices=("uniform", "kernel"), default="uniform")

    p = sub.add_parser("ci", help="confidence intervals for the break points of a d-window fit")
    common(p)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--density", choices=("uniform", "kernel"), default="uniform")

    p = sub.add_parser("bayes", help="exact two-window posterior for the break point")
    common(p)
    p.add_argument("--level", type=float, default=0.95)

    p = sub.add_parser("simulate", help="run a simulation scenario")
    common(p, data=False)
    p.add_argument("--scenario", choices=SCENARIOS, required=True)
    p.add_argument("--replicates", type=int, default=None)
    p.add_argument("--seed", type=_seed, default=None)
    p.add_argument("--n", type=int, default=None, help="sample size (table2-fig2, two-window)")
    p.add_argument("--n-min", type=int, default=20)
    p.add_argument("--n-max", type=int, default=500)
    p.add_argument("--d-fraction", type=float, default=1.0, help="table1: upper window count is floor(sqrt(n) * this)")
    p.add_argument("--count", choices=("windows", "breaks"), default="windows")
    p.add_argument("--d-max", type=int, default=4)
    p.add_argument("--degree-max", type=int, default=3)
    p.add_argument("--criterion", choices=CRITERIA, default="ajic")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--quantile-reps", type=int, default=4000)
    p.add_argument("--level", type=float, default=0.95)
    return parser


def _config(args: argparse.Namespace) -> RunConfig:
    fields = RunConfig.__dataclass_fields__
    return RunConfig(**{k: v for k, v in vars(args).items() if k in fields})


def _best_fit(data: Dataset, d: int, min_seg_len: int) -> StepFit:
    if d == 1:
        return dp_optimal(data, SegConfig(1, min_seg_len))
    _, obj = greedy_init(data, d, min_seg_len)
    fit, _ = dp_pruned(data, SegConfig(d, min_seg_len, prune=True, incumbent_rss=obj))
    return fit


def _meta(cfg: RunConfig, extra: dict | None = None) -> dict:
    meta = {
        "seed": cfg.seed,
        "version": __version__,
        "config": asdict(cfg),
        "timestamp": {"utc": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")},
    }
    if extra:
        meta["timestamp"].update(extra)
    return meta


def _run_fit(cfg: RunConfig, data: Dataset) -> Report:
    fit = _best_fit(data, cfg.d, cfg.min_seg_len)
    return Report(_meta(cfg), fits=[fit_record(fit)], traces=[step_trace(fit)])


def _run_select(cfg: RunConfig, data: Dataset, args: argparse.Namespace) -> Report:
    rep = select_models(
        data,
        cfg.d_max,
        cfg.degree_max,
        cfg.criterion,
        cfg.min_seg_len,
        cfg.reps,
        cfg.seed,
        tau=cfg.tau,
        density=cfg.density,
    )
    w = rep.winner
    # ranked best first, so this is the winner or the best jump model behind it
    best_jump = next(s for s in rep.scores if s.family == "jump")
    shown = next(f for f in rep.jump_fits if f.d == best_jump.d_or_degree)
    report = Report(
        _meta(cfg),
        models=[score_record(s) for s in rep.scores],
        fits=[fit_record(shown)],
        warnings=list(rep.diagnostics),
        traces=[step_trace(shown)],
    )
    report.summary = {"winner": w.model_label, "sigma_hat": rep.sigma_hat}
    return report


def _run_ci(cfg: RunConfig, data: Dataset) -> Report:
    if cfg.d < 2:
        raise BadParam("confidence intervals need at least two windows")
    fit = _best_fit(data, cfg.d, cfg.min_seg_len)
    if not fit.sigma0_hat > 0:
        raise DegenerateSigma("the fit is exact, so the break points carry no sampling spread")
    lam = design_density(data.x, fit.breakpoints, cfg.density)
    cis = [
        ci_breakpoint(fit, j, cfg.level, float(lam[j]), fit.sigma0_hat, cfg.reps, (cfg.seed, j))
        for j in range(fit.d - 1)
    ]
    return Report(_meta(cfg), fits=[fit_record(fit, cis)], traces=[step_trace(fit)])


def _run_bayes(cfg: RunConfig, data: Dataset) -> Report:
    post = posterior_gamma(data, cfg.min_seg_len, cfg.level)
    fit = dp_optimal(data, SegConfig(2, cfg.min_seg_len))
    summary = {
        "posterior_mean": post.posterior_mean,
        "credible_interval": list(post.credible_interval),
        "level": post.level,
        "ml_breakpoint": float(fit.breakpoints[0]),
    }
    return Report(_meta(cfg), fits=[fit_record(fit)], summary=summary, traces=[step_trace(fit)])


def _run_simulate(cfg: RunConfig, args: argparse.Namespace) -> Report:
    defaults = {"table1": 500, "table2-fig2": 100, "two-window": 500}
    kw = {
        "name": args.scenario,
        "replicates": args.replicates or defaults[args.scenario],
        "n_min": args.n_min,
        "n_max": args.n_max,
        "d_fraction": args.d_fraction,
        "count": args.count,
        "d_max": args.d_max,
        "degree_max": args.degree_max,
        "criterion": args.criterion,
        "reps": args.reps,
        "quantile_reps": args.quantile_reps,
        "level": args.level,
    }
    if args.scenario == "two-window":
        kw.update(breaks=(0.5,), levels=(2.0, 3.0), sigma=0.5, n=args.n or 500)
    elif args.scenario == "table2-fig2":
        kw.update(n=args.n or 1000)
    spec = ScenarioSpec(**kw)
    result = run_scenario(spec, cfg.seed)
    summary = dict(result["summary"])
    wall = summary.pop("wall_seconds", None)
    report = Report(_meta(cfg, {"wall_seconds": wall} if wall is not None else None), summary=summary)
    if args.scenario == "table2-fig2":
        first = result["reports"][0]
        report.models = [score_record(s) for s in first.scores]
        shown = next((f for f in first.jump_fits if f.d == len(spec.breaks) + 1), first.jump_fits[-1])
        report.fits = [fit_record(shown)]
        report.traces = [step_trace(shown)]
    return report


def run(args: argparse.Namespace) -> Report:
    cfg = _config(args)
    if cfg.command == "simulate":
        return _run_simulate(cfg, args)
    data = ingest_csv(cfg.input_path, header=cfg.header)
    if cfg.command == "fit":
        return _run_fit(cfg, data)
    if cfg.command == "select":
        return _run_select(cfg, data, args)
    if cfg.command == "ci":
        return _run_ci(cfg, data)
    return _run_bayes(cfg, data)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            report = run(args)
        for w in caught:
            msg = f"{w.category.__name__}: {w.message}"
            if msg not in report.warnings:
                report.warnings.append(msg)
        text = emit_report(report, args.output, args.out, args.trace)
    except JumpRegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out is None:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: ``gofbt stat|critvals|cov|simulate|backtest|experiment``.

Every scalar knob can come from a flag, from a ``--config`` JSON file or
from the built-in default, in that order of precedence.  Outputs are
staged in a scratch directory and moved into ``--out-dir`` only once all
of them are written; ``manifest.json`` is written last and lists them.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import math
import os
import shutil
import sys
import tempfile
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .backtest import BacktestConfig, full_sample_params, run_backtest
from .critical_values import (
    DEFAULT_EXPERIMENT_TRIALS,
    DEFAULT_SEED,
    DEFAULT_TABLE_TRIALS,
    NullCache,
    builtin_ad_table,
    critical_value,
    decide,
)
from .diagnostics import cov_curve, cov_warning, first_n_below, write_cov_csv
from .experiments import (
    ALL_TESTS,
    HORIZONS,
    Gaussian,
    ScenarioGrid,
    TStudent,
    empirical_gamma_sweep,
    fictitious_bk_experiment,
    rejection_rate_gaussian,
    rejection_rate_tstudent,
)
from .fixtures import FORECAST_DATES, load_euribor_fixture
from .gof_core import TestKind, compute_statistic
from .ratesim import (
    DEFAULT_UNITS,
    RateSeries,
    compose_rate,
    default_hp_lambda,
    hp_filter,
    ou_mean,
    ou_variance,
    simulate_ou,
    theta,
    volatility_adjust,
)
from .svgplot import histogram_chart, line_chart

DEFAULT_TAILS = (0.25, 0.15, 0.10, 0.05, 0.01, 0.005, 0.001)

#: Sigma grid of the rejection-rate curves and the sample-size sweep.
SIGMA_GRID = tuple(round(0.25 + 0.125 * i, 6) for i in range(19))
N_SWEEP = (5, 10, 15, 20, 30, 40, 50, 60, 80, 100, 125, 150)
FIG4_PANELS = {"a": (0.0, 0.5), "b": (0.0, 1.5), "c": (0.5, 1.0), "d": (0.5, 1.5)}
FIG5_PANELS = {"a": 2.8, "b": 3.0, "c": 3.5}
FIG7_PANELS = dict(zip("abcd", HORIZONS))
TABLE3_GAMMAS = (1.0, 2.0, 2.5, 2.75, 3.0)


class CliError(Exception):
    """Bad input; reported on stderr with exit status 2."""


# ---------------------------------------------------------------------------
# Option resolution
# ---------------------------------------------------------------------------

def _defaults(command: str, figure: Optional[str] = None) -> dict:
    # backtests use their own scenario seed; 0 reproduces the bundled fixture table
    backtest_like = command == "backtest" or figure == "table3"
    return {
        "test": None,
        "confidence": 0.05,
        "n": None,
        "trials": None,
        "seed": 0 if backtest_like else DEFAULT_SEED,
        "data": None,
        "gamma": 1.0,
        "gammas": list(TABLE3_GAMMAS),
        "horizon": 2.0,
        "window": 3.0,
        "out_dir": "gofbt_out",
        "threads": 1,
        "null_trials": DEFAULT_TABLE_TRIALS,
        "null_seed": DEFAULT_SEED,
        "scenarios": 3000,
        "dates": None,
        "table": False,
    }


def resolve_options(args: argparse.Namespace) -> tuple:
    """Merge flags, config file and defaults; return ``(options, sources)``."""
    defaults = _defaults(args.command, getattr(args, "figure", None))
    config = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(config, dict):
            raise CliError("config file must hold a JSON object")
        unknown = sorted(set(config) - set(defaults))
        if unknown:
            raise CliError(f"unknown config keys: {', '.join(unknown)}")
    options, sources = {}, {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            options[key], sources[key] = flag, "flag"
        elif key in config:
            options[key], sources[key] = config[key], "config"
        else:
            options[key], sources[key] = default, "default"
    return options, sources


def _tests(value, default: Sequence[TestKind]) -> List[TestKind]:
    if value is None:
        return list(default)
    items = value if isinstance(value, (list, tuple)) else [value]
    out = []
    for item in items:
        for part in str(item).split(","):
            if part.strip():
                try:
                    out.append(TestKind.parse(part.strip()))
                except ValueError as exc:
                    raise CliError(str(exc)) from exc
    return out


def _dates(value) -> Optional[List[str]]:
    if value is None:
        return None
    items = value if isinstance(value, (list, tuple)) else str(value).split(",")
    return [str(d).strip() for d in items if str(d).strip()]


def _gammas(value) -> List[float]:
    items = value if isinstance(value, (list, tuple)) else str(value).split(",")
    return [float(g) for g in items]


# ---------------------------------------------------------------------------
# Input helpers
# ---------------------------------------------------------------------------

def read_pit_csv(path: str) -> np.ndarray:
    """One probability per row; ``#`` comments, blank lines and a one-word
    header on the first data line are allowed."""
    values = []
    seen_data = False
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            cells = [c.strip() for c in next(csv.reader([text]))]
            if len(cells) != 1:
                raise CliError(f"{path}: line {lineno}: expected one value per row, got {len(cells)}")
            try:
                value = float(cells[0])
            except ValueError:
                if not seen_data and cells[0].isidentifier():
                    seen_data = True
                    continue
                raise CliError(f"{path}: line {lineno}: not a number: {cells[0]!r}") from None
            if not 0.0 < value < 1.0 or not math.isfinite(value):
                raise CliError(f"{path}: line {lineno}: probability must lie strictly inside (0, 1)")
            seen_data = True
            values.append(value)
    if not values:
        raise CliError(f"{path}: no probabilities found")
    return np.array(values)


def _load_series(path: Optional[str]) -> RateSeries:
    if path is None:
        return load_euribor_fixture()
    try:
        return RateSeries.from_csv(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    except (ValueError, StopIteration) as exc:
        raise CliError(str(exc)) from exc


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Run context: staging, metadata and manifest
# ---------------------------------------------------------------------------

class Run:
    def __init__(self, command: str, options: dict, sources: dict):
        self.command = command
        self.options = options
        self.sources = sources
        self.out_dir = Path(options["out_dir"])
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.stage = Path(tempfile.mkdtemp(prefix=".gofbt-stage-", dir=self.out_dir))
        self.outputs: List[str] = []
        self.inputs: Dict[str, str] = {}
        self.cache = NullCache(workers=int(options["threads"]))

    @property
    def seed(self) -> int:
        return int(self.options["seed"])

    def metadata(self, **extra) -> dict:
        meta = {"command": self.command, "seed": self.seed, "version": __version__}
        meta.update(extra)
        return meta

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.stage / name

    def note(self, **extra) -> str:
        return "; ".join(f"{k}: {v}" for k, v in self.metadata(**extra).items())

    def commit(self) -> Path:
        for name in self.outputs:
            (self.stage / name).replace(self.out_dir / name)
        shutil.rmtree(self.stage, ignore_errors=True)
        stamp = os.environ.get("SOURCE_DATE_EPOCH")
        when = (_dt.datetime.fromtimestamp(int(stamp), _dt.timezone.utc) if stamp
                else _dt.datetime.now(_dt.timezone.utc))
        manifest = {
            "command": self.command,
            "config": {k: self.options[k] for k in sorted(self.options)},
            "config_sources": {k: self.sources[k] for k in sorted(self.sources)},
            "seed": self.seed,
            "inputs": self.inputs,
            "outputs": list(self.outputs),
            "timestamp": when.isoformat(timespec="seconds"),
            "version": __version__,
        }
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return path

    def abort(self) -> None:
        shutil.rmtree(self.stage, ignore_errors=True)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_stat(args, options: dict, sources: dict) -> int:
    pits = read_pit_csv(args.input)
    n = len(pits)
    tests = _tests(options["test"], (TestKind.AD,))
    confidence = float(options["confidence"])
    trials = int(options["trials"] or options["null_trials"])
    cache = NullCache(workers=int(options["threads"]))
    report = {"input": args.input, "n": n, "confidence": confidence, "tests": {}}
    for kind in tests:
        stat = compute_statistic(kind, pits)
        if options["table"]:
            if kind != TestKind.AD:
                raise CliError("the built-in table only covers the AD test")
            try:
                threshold = builtin_ad_table().value(confidence)
            except KeyError as exc:
                raise CliError(str(exc)) from exc
            source = "asymptotic AD table"
        else:
            threshold = cache.threshold(kind, n, confidence, trials, int(options["null_seed"]))
            source = f"monte carlo at n={n} ({trials} trials, seed {options['null_seed']})"
        verdict = decide(stat, threshold)
        report["tests"][kind.value] = {
            "statistic": stat.value, "threshold": threshold, "source": source, "verdict": verdict.value,
        }
        print(f"{kind.value}: statistic={stat.value:.6g} threshold={threshold:.6g} [{source}] -> {verdict.value}")
    cov = cov_warning(n)
    report["cov"] = {"cov": cov.cov, "warn": cov.warn, "threshold": cov.threshold, "caveat": cov.caveat}
    print(f"cov={cov.cov:.4f} (threshold {cov.threshold:g}){' WARNING: unreliable sample size' if cov.warn else ''}")
    if cov.caveat:
        print(f"note: {cov.caveat}")
    if sources["out_dir"] != "default":
        run = Run("stat", options, sources)
        run.inputs[args.input] = _digest(args.input)
        report["seed"] = run.seed
        run.path("stat.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        run.commit()
    return 0


def cmd_critvals(run: Run) -> None:
    o = run.options
    tests = _tests(o["test"], (TestKind.AD, TestKind.AD_ASYM, TestKind.KS, TestKind.CM))
    n = int(o["n"] or 5)
    trials = int(o["trials"] or o["null_trials"])
    tails = DEFAULT_TAILS if run.sources["confidence"] == "default" else (float(o["confidence"]),)
    with open(run.path("critvals.csv"), "w", newline="") as fh:
        for key, val in run.metadata(n=n, trials=trials).items():
            fh.write(f"# {key}: {val}\n")
        writer = csv.writer(fh)
        writer.writerow(["test", "n", "tail_prob", "threshold", "trials", "seed"])
        for kind in tests:
            dist = run.cache.get(kind, n, trials, run.seed)
            for tail in tails:
                value = critical_value(dist, tail)
                writer.writerow([kind.value, n, repr(tail), repr(value), trials, run.seed])
                print(f"{kind.value} n={n} tail={tail:g}: {value:.6g}")


def cmd_cov(run: Run) -> None:
    n_max = int(run.options["n"] or 200)
    points = cov_curve(1, n_max)
    write_cov_csv(points, run.path("cov.csv"), run.metadata())
    line_chart(run.path("cov.svg"), {"CoV": ([p[0] for p in points], [p[1] for p in points])},
               title="Coefficient of variation", xlabel="n", ylabel="CoV", note=run.note())
    print(f"CoV falls to 10% at n={first_n_below(0.10)}")


def cmd_simulate(run: Run) -> None:
    o = run.options
    n_paths = int(o["n"] or 10_000)
    horizon = float(o["horizon"])
    if o["data"] is not None:
        series = _load_series(o["data"])
        run.inputs[o["data"]] = _digest(o["data"])
        config = BacktestConfig(calibration_window=float(o["window"]), horizon=horizon)
        params = full_sample_params(series, config)
        decomposition = hp_filter(np.log(series.values), default_hp_lambda(series.units.obs_per_year))
        level, y0 = float(decomposition.trend[-1]), float(decomposition.cycle[-1])
        units = series.units
    else:
        params, level, y0, units = theta(), 0.0, 0.0, DEFAULT_UNITS
    params = volatility_adjust(params, float(o["gamma"]))
    steps = units.steps(horizon)
    paths = compose_rate(simulate_ou(params, y0, units.dt, steps, n_paths, seed=run.seed), level)
    with open(run.path("simulate.csv"), "w", newline="") as fh:
        meta = run.metadata(alpha=params.alpha, k=params.k, sigma=params.sigma, paths=n_paths, units=units.describe())
        for key, val in meta.items():
            fh.write(f"# {key}: {val}\n")
        writer = csv.writer(fh)
        writer.writerow(["step", "time", "mean", "sd", "p05", "p50", "p95", "model_mean", "model_sd"])
        for step in range(steps + 1):
            t = step * units.dt
            col = paths[:, step]
            m, v = float(ou_mean(params, y0, t)) + level, float(ou_variance(params, t))
            p05, p50, p95 = np.quantile(col, [0.05, 0.5, 0.95])
            writer.writerow([step, repr(t), repr(float(col.mean())), repr(float(col.std())), repr(float(p05)),
                             repr(float(p50)), repr(float(p95)), repr(math.exp(m + v / 2)),
                             repr(math.exp(m + v / 2) * math.sqrt(math.expm1(v)))])


def _backtest_config(o: dict, dates, gamma: float, seed: int) -> BacktestConfig:
    return BacktestConfig(
        calibration_window=float(o["window"]),
        horizon=float(o["horizon"]),
        n_scenarios=int(o["scenarios"]),
        backtest_dates=dates,
        confidence=float(o["confidence"]),
        gamma=gamma,
        tests=tuple(_tests(o["test"], (TestKind.AD, TestKind.AD_ASYM, TestKind.KS))),
        seed=seed,
        null_trials=int(o["null_trials"]),
        null_seed=int(o["null_seed"]),
    )


def _series_and_dates(run: Run):
    o = run.options
    series = _load_series(o["data"])
    if o["data"] is not None:
        run.inputs[o["data"]] = _digest(o["data"])
    dates = _dates(o["dates"])
    if dates is None and o["data"] is None:
        dates = list(FORECAST_DATES)
    return series, dates


def cmd_backtest(run: Run) -> None:
    o = run.options
    series, dates = _series_and_dates(run)
    try:
        outcome = run_backtest(series, _backtest_config(o, dates, float(o["gamma"]), run.seed), run.cache)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    outcome.to_csv(run.path("backtest.csv"))
    outcome.to_json(run.path("backtest.json"))
    for kind, stat in outcome.statistics.items():
        print(f"{kind.value}: statistic={stat.value:.6g} threshold={outcome.thresholds[kind]:.6g} "
              f"-> {outcome.verdicts[kind].value}")
    if outcome.cov_report.warn:
        print(f"warning: CoV {outcome.cov_report.cov:.3f} above {outcome.cov_report.threshold:g} at n={outcome.cov_report.n}")


# -- experiment figures ------------------------------------------------------

def _grid_meta(run: Run, figure: str, trials: int) -> dict:
    o = run.options
    return run.metadata(figure=figure, trials=trials, null_trials=o["null_trials"], null_seed=o["null_seed"])


def _trials(run: Run) -> int:
    return int(run.options["trials"] or DEFAULT_EXPERIMENT_TRIALS)


def _curves(result, tests, x_of, group_of):
    series = {}
    for kind in tests:
        for row in result.rows:
            if row.test != kind:
                continue
            label = group_of(row)
            xs, ys = series.setdefault(label, ([], []))
            xs.append(x_of(row))
            ys.append(row.rejection_rate)
    return series


def fig1(run: Run) -> None:
    points = cov_curve(1, int(run.options["n"] or 200))
    write_cov_csv(points, run.path("fig1.csv"), run.metadata(figure="fig1"))
    line_chart(run.path("fig1.svg"), {"CoV": ([p[0] for p in points], [p[1] for p in points])},
               title="Coefficient of variation vs n", xlabel="n", ylabel="CoV", note=run.note(figure="fig1"))


def _sigma_grid(run: Run, figure: str, sizes, tests):
    o = run.options
    grid = ScenarioGrid([Gaussian(0.0, s) for s in SIGMA_GRID], sizes, trials=_trials(run),
                        confidence=float(o["confidence"]), tests=tests, seed=run.seed,
                        null_trials=int(o["null_trials"]), null_seed=int(o["null_seed"]))
    return rejection_rate_gaussian(grid, run.cache)


def fig2(run: Run) -> None:
    tests = (TestKind.AD, TestKind.AD_ASYM)
    result = _sigma_grid(run, "fig2", (5, 10, 20, 100), tests)
    result.to_csv(run.path("fig2.csv"), _grid_meta(run, "fig2", result.trials))
    for panel, kind in zip("ab", tests):
        sub = result.subset(tests=[kind])
        line_chart(run.path(f"fig2{panel}.svg"), _curves(sub, [kind], lambda r: r.sigma_or_nu, lambda r: f"n={r.n}"),
                   title=f"{kind.value} rejection rate vs sigma", xlabel="sigma", ylabel="rejection rate",
                   ylim=(0, 1), note=run.note(figure="fig2"))


def fig3(run: Run) -> None:
    tests = (TestKind.AD, TestKind.AD_ASYM)
    result = _sigma_grid(run, "fig3", (5, 20), tests)
    for panel, n in zip("ab", (5, 20)):
        sub = result.subset(sample_sizes=[n])
        sub.to_csv(run.path(f"fig3{panel}.csv"), _grid_meta(run, "fig3", result.trials))
        line_chart(run.path(f"fig3{panel}.svg"), _curves(sub, tests, lambda r: r.sigma_or_nu, lambda r: r.test.value),
                   title=f"AD vs AD-Asym, n={n}", xlabel="sigma", ylabel="rejection rate", ylim=(0, 1),
                   note=run.note(figure="fig3"))


def fig4(run: Run) -> None:
    o = run.options
    for panel, (mu, sigma) in FIG4_PANELS.items():
        grid = ScenarioGrid([Gaussian(mu, sigma)], N_SWEEP, trials=_trials(run), confidence=float(o["confidence"]),
                            tests=ALL_TESTS, seed=run.seed, null_trials=int(o["null_trials"]),
                            null_seed=int(o["null_seed"]))
        result = rejection_rate_gaussian(grid, run.cache)
        result.to_csv(run.path(f"fig4{panel}.csv"), _grid_meta(run, "fig4", result.trials))
        line_chart(run.path(f"fig4{panel}.svg"), _curves(result, ALL_TESTS, lambda r: r.n, lambda r: r.test.value),
                   title=f"Rejection rate, mu={mu:g}, sigma={sigma:g}", xlabel="n", ylabel="rejection rate",
                   ylim=(0, 1), note=run.note(figure="fig4"))


def fig5(run: Run) -> None:
    o = run.options
    tests = (TestKind.AD, TestKind.AD_ASYM)
    for panel, nu in FIG5_PANELS.items():
        grid = ScenarioGrid([TStudent(nu)], N_SWEEP, trials=_trials(run), confidence=float(o["confidence"]),
                            tests=tests, seed=run.seed, null_trials=int(o["null_trials"]),
                            null_seed=int(o["null_seed"]))
        result = rejection_rate_tstudent(grid, run.cache)
        result.to_csv(run.path(f"fig5{panel}.csv"), _grid_meta(run, "fig5", result.trials))
        line_chart(run.path(f"fig5{panel}.svg"), _curves(result, tests, lambda r: r.n, lambda r: r.test.value),
                   title=f"t-Student alternative, nu={nu:g}", xlabel="n", ylabel="rejection rate", ylim=(0, 1),
                   note=run.note(figure="fig5"))


def _fictitious(run: Run, horizons):
    o = run.options
    return fictitious_bk_experiment(
        horizons=horizons, sample_size=int(o["n"] or 5), trials=_trials(run), seed=run.seed,
        n_scenarios=int(o["scenarios"]), calibration_window=float(o["window"]),
        confidence=float(o["confidence"]), cache=run.cache,
        null_trials=int(o["null_trials"]), null_seed=int(o["null_seed"]),
    )


def fig7(run: Run) -> None:
    results = _fictitious(run, [HORIZONS[label] for label in FIG7_PANELS.values()])
    for (panel, label), res in zip(FIG7_PANELS.items(), results):
        meta = _grid_meta(run, "fig7", res.trials)
        meta.update(horizon=label, dropped=res.dropped)
        res.binned_to_csv(run.path(f"fig7{panel}.csv"), metadata=meta)
        rows = [r for r in res.binned() if not r["extreme"]]
        mids = [(r["bin_lo"] + r["bin_hi"]) / 2 for r in rows]
        curves = {kind.value: (mids, [r[kind.value] for r in rows]) for kind in res.rejected}
        line_chart(run.path(f"fig7{panel}.svg"), curves, title=f"Rejection rate vs delta, horizon {label}",
                   xlabel="delta", ylabel="rejection rate", note=run.note(figure="fig7"))


def fig8(run: Run) -> None:
    res = _fictitious(run, [HORIZONS["2y"]])[0]
    meta = _grid_meta(run, "fig8", res.trials)
    meta.update(horizon="2y", mean_delta=repr(float(res.delta.mean())), dropped=res.dropped)
    res.histogram_to_csv(run.path("fig8.csv"), metadata=meta)
    counts, edges = res.histogram()
    histogram_chart(run.path("fig8.svg"), counts, edges, title="Distribution of delta (2y)", xlabel="delta",
                    note=run.note(figure="fig8"))


def table3(run: Run) -> None:
    o = run.options
    series, dates = _series_and_dates(run)
    seed = run.seed
    gammas = _gammas(o["gammas"])
    try:
        sweep = empirical_gamma_sweep(series, gammas, _backtest_config(o, dates, 1.0, seed), run.cache)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    sweep.to_csv(run.path("table3.csv"), run.metadata(figure="table3"))
    summary = {"seed": seed, "gammas": gammas, "outcomes": {repr(g): sweep.outcomes[g].summary() for g in gammas}}
    run.path("table3.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for kind, verdicts in sweep.matrix().items():
        print(f"{kind.value:8s} " + " ".join(f"{g:g}:{v.value}" for g, v in zip(gammas, verdicts)))


FIGURES: Dict[str, Callable[[Run], None]] = {
    "fig1": fig1, "fig2": fig2, "fig3": fig3, "fig4": fig4, "fig5": fig5,
    "fig7": fig7, "fig8": fig8, "table3": table3,
}


def cmd_experiment(run: Run, figure: str) -> None:
    FIGURES[figure](run)
    manifest = {name: name.rsplit(".", 1)[1] for name in run.outputs}
    run.path(f"{figure}_files.json").write_text(json.dumps(
        {"figure": figure, "seed": run.seed, "files": manifest}, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--test", action="append", help="test(s): ad, ad_asym, ks, cm (repeat or comma-separate)")
    p.add_argument("--confidence", type=float, help="test size, default 0.05")
    p.add_argument("--n", type=int, help="sample size, paths or curve length depending on command")
    p.add_argument("--trials", type=int, help="Monte Carlo trials")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--data", help="rate series CSV with header date,rate (default: bundled fixture)")
    p.add_argument("--gamma", type=float, help="volatility multiplier")
    p.add_argument("--horizon", type=float, help="forecast horizon in years")
    p.add_argument("--window", type=float, help="calibration window in years")
    p.add_argument("--out-dir", dest="out_dir", help="output directory")
    p.add_argument("--threads", type=int, help="worker threads for null simulation (results unchanged)")
    p.add_argument("--null-trials", dest="null_trials", type=int, help="trials of the null distributions")
    p.add_argument("--null-seed", dest="null_seed", type=int, help="seed of the null distributions")
    p.add_argument("--scenarios", type=int, help="forecast scenarios per backtest date")
    p.add_argument("--dates", help="comma-separated backtest dates")
    p.add_argument("--config", help="JSON file of option values (flags take precedence)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gofbt", description="Goodness-of-fit backtesting toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("stat", help="test a PIT sample")
    p.add_argument("input", help="CSV with one probability per row")
    p.add_argument("--table", action="store_true", default=None, help="use the asymptotic AD table")
    _common(p)
    for name, text in (
        ("critvals", "Monte Carlo critical values"),
        ("cov", "coefficient-of-variation curve"),
        ("simulate", "simulate OU log-cycle scenarios"),
        ("backtest", "backtest a rate series"),
    ):
        _common(sub.add_parser(name, help=text))
    p = sub.add_parser("experiment", help="reproduce a figure or table")
    p.add_argument("figure", help=f"one of: {', '.join(FIGURES)}")
    _common(p)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "experiment" and args.figure not in FIGURES:
        parser.error(f"unknown figure id {args.figure!r}; valid ids: {', '.join(FIGURES)}")
    run = None
    try:
        options, sources = resolve_options(args)
        if args.command == "stat":
            return cmd_stat(args, options, sources)
        run = Run(args.command, options, sources)
        if args.command == "experiment":
            cmd_experiment(run, args.figure)
        else:
            {"critvals": cmd_critvals, "cov": cmd_cov, "simulate": cmd_simulate, "backtest": cmd_backtest}[
                args.command](run)
        manifest = run.commit()
        print(f"wrote {len(run.outputs)} file(s) and {manifest}")
        return 0
    except CliError as exc:
        if run is not None:
            run.abort()
        print(f"gofbt: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        if run is not None:
            run.abort()
        print(f"gofbt: error: {exc}", file=sys.stderr)
        return 1
    except BaseException:
        if run is not None:
            run.abort()
        raise


if __name__ == "__main__":
    sys.exit(main())

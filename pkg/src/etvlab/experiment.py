"""Batch experiments: R seeded GA runs, checkpoint ETV pooling, fits and trends."""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .etv_stats import EtvHistogram, PooledDistribution, histogram, max_etv_mean, pool
from .ga import GaConfig, GaResult, run, write_records
from .genealogy import build_graph, etv_snapshots
from .qexp import FitError, QExpFit, fit, linearized_form, q_exponential, q_logarithm
from .trend import MetricSeries, PowerTrendParams, correlation_signs, fit_trend, format_table
from .tsp import TspInstance, load_instance

log = logging.getLogger(__name__)

DEFAULT_CHECKPOINTS = (25, 30, 35, 40, 50, 67, 85, 100, 125, 150, 200, 250, 335, 400, 500)
TAIL_FRACTION = 0.9
TAIL_RATIO_THRESHOLD = 10.0


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    instance: str = "rand42"
    max_generations: int = 500
    population_size: int = 100
    crossover_prob: float = 0.9
    mutation_prob: float = 0.05
    elitism: bool = False
    max_age: int | None = None
    edge_cap: int | None = None
    reverse_insertion: bool = True
    detach: bool = True
    checkpoints: tuple[int, ...] = DEFAULT_CHECKPOINTS
    runs: int = 20
    seed: int = 0
    out: str = "results"
    workers: int = 1
    save_records: bool = False

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        cks = tuple(sorted(set(int(t) for t in self.checkpoints)))
        if not cks:
            raise ConfigError("need at least one checkpoint")
        if cks[0] < 1 or cks[-1] > self.max_generations:
            raise ConfigError(f"checkpoints must lie in [1, {self.max_generations}]")
        object.__setattr__(self, "checkpoints", cks)
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        self.ga_config(0)  # validates the GA fields

    def ga_config(self, seed: int) -> GaConfig:
        try:
            return GaConfig(max_generations=self.max_generations, seed=seed,
                            population_size=self.population_size, crossover_prob=self.crossover_prob,
                            mutation_prob=self.mutation_prob, elitism=self.elitism, max_age=self.max_age,
                            edge_cap=self.edge_cap, reverse_insertion=self.reverse_insertion)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def _convert(name: str, raw: str, typ: str):
    raw = raw.strip()
    if "None" in typ and raw.lower() in ("", "none", "-"):
        return None
    if typ.startswith("bool"):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if typ.startswith("int"):
        return int(raw)
    if typ.startswith("float"):
        return float(raw)
    if typ.startswith("tuple"):
        return tuple(int(v) for v in raw.replace(",", " ").split())
    return raw


def parse_config(text: str, **overrides) -> ExperimentConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment; unknown keys are errors."""
    fields = {f.name: str(f.type) for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in fields:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(key, raw, fields[key])
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    path = Path(path)
    cfg = parse_config(path.read_text(), **overrides)
    inst = Path(cfg.instance)
    if not inst.is_absolute() and (path.parent / inst).exists():
        cfg = dataclasses.replace(cfg, instance=str(path.parent / inst))
    return cfg


def resolve_instance(name: str) -> TspInstance:
    """A path to a TSPLIB file, or the name of a bundled instance."""
    p = Path(name)
    if p.exists():
        return load_instance(p)
    bundled = resources.files("etvlab") / "data" / f"{name}.tsp"
    if bundled.is_file():
        return load_instance(Path(str(bundled)))
    raise ConfigError(f"cannot read instance {name!r}")


def derive_seed(master: int, run_index: int) -> int:
    """Per-run 64-bit seed from the master seed and run index."""
    words = np.random.SeedSequence([master, run_index]).generate_state(2, np.uint32)
    return int(words[0]) << 32 | int(words[1])


@dataclass
class RunOutcome:
    index: int
    seed: int
    histograms: dict[int, EtvHistogram]
    balance_generation: int | None
    clones_only_after_balance: bool | None
    longest_clone_streak: int
    final_best_length: float
    records_path: str | None = None

    def to_json(self) -> dict:
        return {
            "run": self.index,
            "seed": self.seed,
            "balance_generation": self.balance_generation,
            "clones_only_after_balance": self.clones_only_after_balance,
            "longest_clone_streak": self.longest_clone_streak,
            "final_best_length": self.final_best_length,
            "max_etv": {str(t): max(h.counts) for t, h in self.histograms.items()},
            "records": self.records_path,
        }


def clone_only_generations(result: GaResult) -> list[bool]:
    """Per generation >= 2: every coupled birth is an elitist clone."""
    n_pop = len(result.population)
    flags = []
    for j in range(1, len(result.summary)):
        recs = result.records[j * n_pop:(j + 1) * n_pop]
        coupled = [r for r in recs if not r.uncoupled]
        flags.append(bool(coupled) and all(r.is_clone for r in coupled))
    return flags


def _longest_true_run(flags: Sequence[bool]) -> int:
    best = cur = 0
    for f in flags:
        cur = cur + 1 if f else 0
        best = max(best, cur)
    return best


def simulate_run(config: ExperimentConfig, index: int, out_dir: str | None = None) -> RunOutcome:
    inst = resolve_instance(config.instance)
    seed = derive_seed(config.seed, index)
    result = run(inst, config.ga_config(seed))
    graph = build_graph(result.records)
    tables = etv_snapshots(graph, config.checkpoints, edge_cap=config.edge_cap, detach=config.detach)
    flags = clone_only_generations(result)
    bal = result.balance_generation
    # flags[k] describes generation k + 2
    after = None if bal is None else all(flags[bal - 1:])
    path = None
    if config.save_records and out_dir is not None:
        path = f"records/run{index:03d}.txt"
        write_records(result.records, Path(out_dir) / path)
    return RunOutcome(index, seed, {t: histogram(tab) for t, tab in tables.items()}, bal, after,
                      _longest_true_run(flags), result.summary[-1].best_length, path)


@dataclass(frozen=True)
class CheckpointFit:
    t: int
    max_etv_mean: float
    fit: QExpFit | None
    error: str | None = None

    def to_json(self) -> dict:
        d = {"t": self.t, "max_etv_mean": self.max_etv_mean}
        if self.fit is None:
            d["error"] = self.error
        else:
            d.update(q=self.fit.q, x0=self.fit.x0, p0=self.fit.p0, gamma=self.fit.gamma,
                     score=self.fit.score, n_points=self.fit.n_points)
        return d


@dataclass(frozen=True)
class AnomalyReport:
    balance_generations: list[int | None]
    clones_only_after_balance: list[bool | None]
    tail_observed: float
    tail_predicted: float
    tail_ratio: float
    tail_flagged: bool

    @property
    def balanced_runs(self) -> int:
        return sum(g is not None for g in self.balance_generations)

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["balanced_runs"] = self.balanced_runs
        return d


def tail_excess(dist: PooledDistribution, fit_: QExpFit, pop_size: int,
                fraction: float = TAIL_FRACTION) -> tuple[float, float, float]:
    """Observed vs. fitted mass at ETV >= fraction * N, on the observed support."""
    mask = dist.x >= fraction * pop_size
    observed = math.fsum(dist.freq[mask].tolist())
    predicted = math.fsum(np.atleast_1d(q_exponential(fit_.params, dist.x[mask])).tolist())
    if observed == 0:
        return 0.0, predicted, 0.0
    ratio = math.inf if predicted == 0 else observed / predicted
    return observed, predicted, ratio


def detect_anomaly(outcomes: Sequence[RunOutcome], dist: PooledDistribution, fit_: QExpFit | None,
                   pop_size: int, threshold: float = TAIL_RATIO_THRESHOLD) -> AnomalyReport:
    if fit_ is None:
        obs = pred = ratio = float("nan")
        flagged = False
    else:
        obs, pred, ratio = tail_excess(dist, fit_, pop_size)
        flagged = ratio > threshold
    return AnomalyReport([o.balance_generation for o in outcomes],
                         [o.clones_only_after_balance for o in outcomes], obs, pred, ratio, flagged)


def fitted_curve(fit_: QExpFit, x, scale: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if scale == "qlog":
        return np.asarray(linearized_form(fit_.params, x), dtype=float)
    if scale == "loglog":
        return np.asarray(q_exponential(fit_.params, x), dtype=float)
    raise ValueError(f"unknown scale {scale!r}")


def plot_table(dist: PooledDistribution, fit_: QExpFit, scale: str) -> np.ndarray:
    """Rows (x, observed, fitted) in q-log or log10-log10 coordinates."""
    x = dist.x.astype(float)
    f = dist.freq
    model = fitted_curve(fit_, x, scale)
    if scale == "qlog":
        keep = f > 0
        obs = np.full_like(f, np.nan)
        obs[keep] = q_logarithm(fit_.q, f[keep])
        return np.column_stack([x, obs, model])[keep]
    keep = (f > 0) & (model > 0) & (x > 0)
    return np.column_stack([np.log10(x[keep]), np.log10(f[keep]), np.log10(model[keep])])


def emit_plot_data(dist: PooledDistribution, fit_: QExpFit, scale: str, path: str | Path) -> Path:
    rows = plot_table(dist, fit_, scale)
    head = "x ln_q(observed) ln_q(fitted)" if scale == "qlog" else "log10(x) log10(observed) log10(fitted)"
    path = Path(path)
    np.savetxt(path, rows, fmt="%.17g", header=f"{head} q={fit_.q!r} x0={fit_.x0!r}")
    return path


@dataclass
class ExperimentResults:
    outcomes: list[RunOutcome]
    distributions: dict[int, PooledDistribution]
    fits: dict[int, CheckpointFit]
    trends: dict[str, PowerTrendParams]
    correlations: dict[str, float]
    anomaly: AnomalyReport | None

    def series(self, metric: str) -> MetricSeries:
        ok = [c for c in self.fits.values() if c.fit is not None]
        if metric == "ETV":
            ok = list(self.fits.values())
            vals = [c.max_etv_mean for c in ok]
        else:
            vals = [getattr(c.fit, metric) for c in ok]
        return MetricSeries(metric, tuple(c.t for c in ok), tuple(vals))


@dataclass
class RunManifest:
    config: dict
    seeds: list[int]
    files: dict[str, object]
    version: str
    results: ExperimentResults | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {"config": self.config, "seeds": self.seeds, "files": self.files,
                "version": self.version}


def analyse(outcomes: Sequence[RunOutcome], config: ExperimentConfig) -> ExperimentResults:
    dists, fits = {}, {}
    for t in config.checkpoints:
        hists = [o.histograms[t] for o in outcomes]
        dists[t] = pool(hists, horizon=t)
        mean_max = max_etv_mean(hists)
        try:
            fits[t] = CheckpointFit(t, mean_max, fit(dists[t]))
        except FitError as exc:
            log.warning("fit failed at t=%d: %s", t, exc)
            fits[t] = CheckpointFit(t, mean_max, None, str(exc))
    results = ExperimentResults(list(outcomes), dists, fits, {}, {}, None)
    series = {}
    for metric in ("ETV", "x0", "q", "gamma"):
        try:
            s = results.series(metric)
            results.trends[metric] = fit_trend(s)
            series[metric] = s
        except ValueError as exc:
            log.warning("no trend for %s: %s", metric, exc)
    if len(series) == 4:
        report = correlation_signs(series)
        results.correlations = {f"{a}~{b}": r for (a, b), r in report.correlations.items()}
    last = config.checkpoints[-1]
    if config.elitism:
        results.anomaly = detect_anomaly(outcomes, dists[last], fits[last].fit, config.population_size)
    return results


def _rel(path: Path, root: Path) -> str:
    return Path(path).relative_to(root).as_posix()


def _simulate_star(args):
    return simulate_run(*args)


def run_experiment(config: ExperimentConfig, workers: int | None = None,
                   out: str | Path | None = None) -> RunManifest:
    start = time.perf_counter()
    out_dir = Path(out if out is not None else config.out)
    resolve_instance(config.instance)
    try:
        for sub in ("dist", "plots") + (("records",) if config.save_records else ()):
            (out_dir / sub).mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out_dir}: {exc}") from None
    workers = workers or config.workers
    jobs = [(config, r, str(out_dir)) for r in range(config.runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool_:
            outcomes = list(pool_.map(_simulate_star, jobs))
    else:
        outcomes = [_simulate_star(job) for job in jobs]
    results = analyse(outcomes, config)

    files: dict[str, object] = {"distributions": {}, "plots": {}}
    for t, dist in results.distributions.items():
        p = out_dir / "dist" / f"dist_t{t:04d}.txt"
        dist.write(p)
        files["distributions"][str(t)] = _rel(p, out_dir)
        cf = results.fits[t]
        if cf.fit is not None:
            files["plots"][str(t)] = [
                _rel(emit_plot_data(dist, cf.fit, scale, out_dir / "plots" / f"{scale}_t{t:04d}.txt"), out_dir)
                for scale in ("qlog", "loglog")
            ]
    with open(out_dir / "fits.jsonl", "w") as fh:
        for cf in results.fits.values():
            fh.write(json.dumps(cf.to_json()) + "\n")
    (out_dir / "trend.txt").write_text(format_table(results.trends))
    with open(out_dir / "runs.jsonl", "w") as fh:
        for o in outcomes:
            fh.write(json.dumps(o.to_json()) + "\n")
    files.update(fits="fits.jsonl", trend="trend.txt", runs="runs.jsonl")
    analysis = {"correlations": results.correlations,
                "trends": {k: dataclasses.asdict(v) for k, v in results.trends.items()}}
    if results.anomaly is not None:
        analysis["anomaly"] = results.anomaly.to_json()
    (out_dir / "analysis.json").write_text(json.dumps(analysis, indent=2, sort_keys=True) + "\n")
    files["analysis"] = "analysis.json"

    # out and workers do not affect results; leaving them out keeps manifests comparable
    settings = {k: v for k, v in dataclasses.asdict(config).items() if k not in ("out", "workers")}
    manifest = RunManifest(settings, [o.seed for o in outcomes], files,
                           __version__, results)
    (out_dir / "manifest.json").write_text(json.dumps(manifest.to_json(), indent=2) + "\n")
    log.info("%d runs finished in %.1f s", config.runs, time.perf_counter() - start)
    return manifest

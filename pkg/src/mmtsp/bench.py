"""Multi-run experiments: seeded campaigns, summary statistics, t-tests and reports."""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .aco import AcoConfig, run_acs
from .evo import EaConfig, run_ea
from .hybrid import som_pheromone_seed, som_seed_population
from .routing import Solution, check_feasible, minmax_cost, validate
from .som import SomConfig, solve_som
from .tsplib import Instance, load_instance

ALGORITHMS = ("SOM", "EA", "SOM-EA", "SOM-EA-2OPT", "ACO", "SOM-ACO")
WORKERS_ENV = "MMTSP_WORKERS"
DEFAULT_2OPT_PERIOD = 10


class ConfigError(ValueError):
    """An experiment cannot start: bad field, unknown algorithm, unreadable instance."""


def canonical_algorithm(name: str) -> str:
    key = name.strip().upper().replace("_", "-")
    if key not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    return key


@dataclass(frozen=True)
class ExperimentConfig:
    instance: str
    m: int
    algorithm: str
    runs: int = 50
    seed: int = 0
    budget: int = 250_000
    som: SomConfig = field(default_factory=SomConfig)
    ea: EaConfig = field(default_factory=EaConfig)
    aco: AcoConfig = field(default_factory=AcoConfig)
    pheromone_runs: int = 10
    pheromone_length: str = "minsum"
    trace_every: int = 1000
    out: str | None = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "algorithm", canonical_algorithm(self.algorithm))
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.budget < 1 or self.trace_every < 1 or self.pheromone_runs < 1:
            raise ConfigError("budget, trace_every and pheromone_runs must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.pheromone_length not in ("minsum", "minmax"):
            raise ConfigError("pheromone_length must be 'minsum' or 'minmax'")

    def ea_config(self) -> EaConfig:
        f_2opt = 0
        if self.algorithm == "SOM-EA-2OPT":
            f_2opt = self.ea.f_2opt or DEFAULT_2OPT_PERIOD
        return replace(self.ea, budget=self.budget, f_2opt=f_2opt)

    def aco_config(self) -> AcoConfig:
        return replace(self.aco, budget=self.budget)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        try:
            for key, kind in (("som", SomConfig), ("ea", EaConfig), ("aco", AcoConfig)):
                if isinstance(data.get(key), dict):
                    data[key] = kind(**data[key])
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: str | Path, **overrides) -> ExperimentConfig:
    """Read an experiment from a JSON file; non-None overrides replace its fields."""
    with open(path) as fh:
        data = json.load(fh)
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(data)


@dataclass
class RunRecord:
    run: int
    seed: int
    cost: float
    evaluations: int
    seconds: float
    tours: list[list[int]]  # 1-based city labels
    trace: list[list[float]]  # sampled (generation, evaluations, best_minmax)


@dataclass
class RunStats:
    instance: str
    m: int
    algorithm: str
    budget: int
    records: list[RunRecord]

    @property
    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.records])

    @property
    def runs(self) -> int:
        return len(self.records)

    @property
    def min(self) -> float:
        return float(self.costs.min())

    @property
    def max(self) -> float:
        return float(self.costs.max())

    @property
    def avg(self) -> float:
        return float(self.costs.mean())

    @property
    def stdev(self) -> float:
        return float(self.costs.std(ddof=1)) if self.runs > 1 else 0.0

    @property
    def total_seconds(self) -> float:
        return float(sum(r.seconds for r in self.records))

    @property
    def total_evaluations(self) -> int:
        return int(sum(r.evaluations for r in self.records))

    def summary(self) -> dict:
        return {"instance": self.instance, "m": self.m, "algorithm": self.algorithm,
                "runs": self.runs, "min": self.min, "max": self.max, "avg": self.avg,
                "stdev": self.stdev}

    def to_dict(self) -> dict:
        out = {"instance": self.instance, "m": self.m, "algorithm": self.algorithm,
               "budget": self.budget}
        out["stats"] = {k: getattr(self, k) for k in ("min", "max", "avg", "stdev")}
        out["total_seconds"] = self.total_seconds
        out["records"] = [asdict(r) for r in self.records]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "RunStats":
        return cls(data["instance"], data["m"], data["algorithm"], data["budget"],
                   [RunRecord(**r) for r in data["records"]])


def sample_trace(trace: np.ndarray, every: int) -> list[list[float]]:
    """Best-so-far at each multiple of ``every`` evaluations, plus the final row.

    ``trace`` rows are (generation, evaluations, best). A sample point before
    the first recorded row is skipped.
    """
    if trace.shape[0] == 0:
        return []
    evals = trace[:, 1]
    out = []
    for target in range(every, int(evals[-1]) + 1, every):
        i = int(np.searchsorted(evals, target, side="right")) - 1
        if i >= 0:
            out.append([float(trace[i, 0]), float(target), float(trace[i, 2])])
    if not out or out[-1][1] != evals[-1]:
        out.append([float(x) for x in trace[-1]])
    return out


_INSTANCES: dict[str, Instance] = {}


def _instance(name: str) -> Instance:
    if name not in _INSTANCES:
        _INSTANCES[name] = load_instance(name)
    return _INSTANCES[name]


def solve_once(cfg: ExperimentConfig, inst: Instance, rng: np.random.Generator):
    """One run of ``cfg.algorithm``; returns (solution, evaluations, raw trace)."""
    algo, m = cfg.algorithm, cfg.m
    if algo == "SOM":
        rotation = int(rng.integers(0, cfg.som.d * inst.n))
        sol = solve_som(inst, m, cfg.som, rng, rotation)
        cost = minmax_cost(inst, sol)
        return sol, 1, np.array([[0.0, 1.0, cost]])
    if algo in ("EA", "SOM-EA", "SOM-EA-2OPT"):
        ea = cfg.ea_config()
        seeds = None
        if algo != "EA":
            seeds = som_seed_population(inst, m, cfg.som, ea.pop_size, rng)
        res = run_ea(inst, m, ea, rng, seed_population=seeds)
    else:
        tau0 = None
        if algo == "SOM-ACO":
            tau0 = som_pheromone_seed(inst, m, cfg.som, cfg.pheromone_runs, rng,
                                      length=cfg.pheromone_length)
        res = run_acs(inst, m, cfg.aco_config(), rng, tau0_override=tau0)
    return res.best, res.evaluations, res.trace


def run_single(cfg: ExperimentConfig, run: int) -> RunRecord:
    inst = _instance(cfg.instance)
    seed = cfg.seed + run
    start = time.perf_counter()
    sol, evaluations, trace = solve_once(cfg, inst, np.random.default_rng(seed))
    seconds = time.perf_counter() - start
    problems = validate(inst, sol)
    if problems:
        raise RuntimeError(f"run {run} produced an invalid solution: {problems}")
    return RunRecord(
        run=run, seed=seed, cost=minmax_cost(inst, sol), evaluations=int(evaluations),
        seconds=seconds, tours=sol.to_dict(inst)["tours"],
        trace=sample_trace(trace, cfg.trace_every),
    )


def _run_pair(args):
    return run_single(*args)


def resolve_workers(cfg: ExperimentConfig, workers: int | None = None) -> int:
    """Explicit argument, then the environment variable, then the config."""
    if workers is not None:
        return max(1, workers)
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return cfg.workers


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> RunStats:
    """Run ``cfg.runs`` seeded runs (seed of run i = cfg.seed + i) and aggregate them.

    Writes a report to ``cfg.out`` when it is set.
    """
    try:
        inst = _instance(cfg.instance)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read instance {cfg.instance!r}: {exc}") from exc
    try:
        check_feasible(inst, cfg.m)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.ea_config()  # surfaces EA validation errors before any run starts
    n_workers = min(resolve_workers(cfg, workers), cfg.runs)
    jobs = [(cfg, i) for i in range(cfg.runs)]
    if n_workers == 1:
        records = [run_single(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            records = list(pool.map(_run_pair, jobs))
    records.sort(key=lambda r: r.run)
    stats = RunStats(inst.name, cfg.m, cfg.algorithm, cfg.budget, records)
    if cfg.out:
        emit_report([stats], cfg.out)
    return stats


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    significant: bool
    defined: bool


def t_test(a: Sequence[float], b: Sequence[float], alpha: float = 0.10) -> TTestResult:
    """Two-sided Welch (unequal variance) two-sample t-test at level ``alpha``.

    When both samples have zero variance the statistic is undefined: equal
    means give t = nan (not significant); different means give t = +-inf.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least 2 values")
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    if a.var() == 0 and b.var() == 0:
        diff = a.mean() - b.mean()
        if diff == 0:
            return TTestResult(math.nan, 1.0, False, False)
        return TTestResult(math.copysign(math.inf, diff), 0.0, True, False)
    res = sps.ttest_ind(a, b, equal_var=False)
    t, p = float(res.statistic), float(res.pvalue)
    return TTestResult(t, p, bool(p < alpha), True)


CSV_FIELDS = ("instance", "m", "algorithm", "runs", "min", "max", "avg", "stdev")


def _trace_dir(out: Path, stats: RunStats, many: bool) -> Path:
    if not many:
        return out
    return out / f"{stats.instance}_m{stats.m}_{stats.algorithm}"


def emit_report(collection: Iterable[RunStats], out: str | Path) -> None:
    """Write results.csv, results.json and one trace_<run>.csv per run.

    With several experiments the traces go to one sub-directory per experiment.
    results.csv holds no timings, so equal inputs give identical bytes.
    """
    collection = list(collection)
    if not collection:
        raise ValueError("nothing to report")
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for s in collection:
            row = s.summary()
            writer.writerow([row[k] if isinstance(row[k], (int, str)) else repr(row[k])
                             for k in CSV_FIELDS])
    with open(out / "results.json", "w") as fh:
        json.dump([s.to_dict() for s in collection], fh, indent=1)
    many = len(collection) > 1
    for s in collection:
        tdir = _trace_dir(out, s, many)
        tdir.mkdir(parents=True, exist_ok=True)
        for r in s.records:
            with open(tdir / f"trace_{r.run}.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["generation", "evaluations", "best_minmax"])
                for g, e, best in r.trace:
                    writer.writerow([int(g), int(e), repr(best)])


def load_results(path: str | Path) -> list[RunStats]:
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = [data]
    return [RunStats.from_dict(d) for d in data]


def mean_trace(records: Sequence[RunRecord]) -> np.ndarray:
    """Average sampled best cost per evaluation count over runs.

    Rows are (evaluations, mean best); only evaluation counts present in
    every run are kept.
    """
    common = None
    for r in records:
        points = {row[1] for row in r.trace}
        common = points if common is None else common & points
    grid = sorted(common or ())
    table = np.array([[dict((row[1], row[2]) for row in r.trace)[e] for e in grid]
                      for r in records])
    return np.column_stack((grid, table.mean(axis=0))) if grid else np.empty((0, 2))

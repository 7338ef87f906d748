"""Experiment orchestration: multi-seed batches, regret / running-MSE
aggregation, and plot-ready CSV emission.

Within one run index every algorithm faces the identical loss table and the
identical per-run probability table (common random numbers), so paired
comparisons across algorithms are meaningful.  Run ``r`` of an experiment
with master seed ``s`` derives all of its streams from the entropy ``(s, r)``.
"""

from __future__ import annotations

import csv
import hashlib
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .environment import PROBS_STREAM, FixedTableAdversary, run_episode, substream
from .errors import ConfigError
from .experts import DatasetBundle
from .graph import EdgeProbabilityTable, NominalGraph
from .policies import ALGORITHMS, LearnerConfig, make_learner
from .schedulers import InverseSqrtEta, Schedule

__all__ = [
    "ExperimentConfig",
    "AggregateResult",
    "run_experiment",
    "running_mse",
    "emit_results",
    "checkpoint_rounds",
]


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a set of algorithms over a common environment.

    Exactly one of ``adversary`` (synthetic mode, metric = cumulative regret)
    or ``bundle`` (dataset mode, metric = running MSE of the chosen expert's
    predictions) must be given.  ``prob_generator`` is ``("equal", p)`` or
    ``("uniform", lo, hi)``; uniform tables are drawn once per run.
    """

    algorithms: tuple[str, ...]
    graph: NominalGraph
    prob_generator: tuple
    adversary: object | None = None
    bundle: DatasetBundle | None = None
    horizon: int | None = None
    probability_mode: str = "informative"
    runs: int = 20
    schedule: Schedule = InverseSqrtEta()
    min_observations: int = 25
    confidence_width: float = 1.0
    epsilon: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        algorithms = tuple(self.algorithms)
        object.__setattr__(self, "algorithms", algorithms)
        if not algorithms:
            raise ConfigError("need at least one algorithm")
        for name in algorithms:
            if name not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {name!r}")
        if len(set(algorithms)) != len(algorithms):
            raise ConfigError("duplicate algorithm in the list")
        if self.probability_mode not in ("informative", "uninformative"):
            raise ConfigError(f"bad probability mode {self.probability_mode!r}")
        if self.probability_mode == "uninformative" and "exp3-ip" in algorithms:
            raise ConfigError("exp3-ip needs the informative setting (edge probabilities revealed)")
        if (self.adversary is None) == (self.bundle is None):
            raise ConfigError("give exactly one of adversary (synthetic) or bundle (dataset)")
        if self.adversary is not None and self.horizon is None:
            raise ConfigError("synthetic mode needs a horizon")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if self.runs < 1:
            raise ConfigError(f"runs must be >= 1, got {self.runs}")
        if self.bundle is not None and self.bundle.num_experts != self.graph.num_experts:
            raise ConfigError(
                f"bundle has {self.bundle.num_experts} experts, graph has {self.graph.num_experts}"
            )
        kind = self.prob_generator[0] if self.prob_generator else None
        if kind == "equal":
            _, value = self.prob_generator
            if not 0 < value <= 1:
                raise ConfigError(f"equal(p) needs p in (0, 1], got {value}")
        elif kind == "uniform":
            _, lo, hi = self.prob_generator
            if not 0 < lo <= hi <= 1:
                raise ConfigError(f"uniform(lo, hi) needs 0 < lo <= hi <= 1, got ({lo}, {hi})")
        elif kind == "table":
            _, matrix = self.prob_generator
            try:
                EdgeProbabilityTable.from_probs(self.graph, matrix)
            except ValueError as exc:
                raise ConfigError(f"explicit probability table invalid: {exc}") from exc
        else:
            raise ConfigError(f"bad probability generator {self.prob_generator!r}")

    @property
    def metric(self) -> str:
        return "regret" if self.adversary is not None else "mse"

    @property
    def effective_horizon(self) -> int:
        if self.adversary is not None:
            return self.horizon
        if self.horizon is None:
            return self.bundle.horizon
        return min(self.horizon, self.bundle.horizon)


@dataclass(frozen=True)
class AggregateResult:
    """Per-checkpoint mean/std across runs, with the raw per-run values kept
    so every aggregate can be recomputed and audited."""

    checkpoints: np.ndarray
    metric: str
    per_run: dict
    loss_digests: dict
    p_tables: tuple

    def algorithms(self) -> tuple[str, ...]:
        return tuple(self.per_run)

    def runs(self) -> int:
        return next(iter(self.per_run.values())).shape[0]

    def mean(self, algorithm: str) -> np.ndarray:
        return self.per_run[algorithm].mean(axis=0)

    def std(self, algorithm: str) -> np.ndarray:
        values = self.per_run[algorithm]
        if values.shape[0] < 2:
            return np.zeros(values.shape[1])
        return values.std(axis=0, ddof=1)

    def final_mean(self, algorithm: str) -> float:
        return float(self.mean(algorithm)[-1])

    def final_std(self, algorithm: str) -> float:
        return float(self.std(algorithm)[-1])


def checkpoint_rounds(horizon: int) -> np.ndarray:
    """Checkpoints every ceil(T/200) rounds, always including the final round."""
    step = math.ceil(horizon / 200)
    points = list(range(step, horizon + 1, step))
    if not points or points[-1] != horizon:
        points.append(horizon)
    return np.array(points, dtype=np.int64)


def _probability_table(cfg: ExperimentConfig, run: int) -> EdgeProbabilityTable:
    kind = cfg.prob_generator[0]
    if kind == "equal":
        return EdgeProbabilityTable.constant(cfg.graph, cfg.prob_generator[1])
    if kind == "table":
        return EdgeProbabilityTable.from_probs(cfg.graph, cfg.prob_generator[1])
    _, lo, hi = cfg.prob_generator
    rng = substream((cfg.seed, run), PROBS_STREAM)
    return EdgeProbabilityTable.uniform(cfg.graph, lo, hi, rng)


def _learner_config(cfg: ExperimentConfig, algorithm: str) -> LearnerConfig:
    return LearnerConfig(
        algorithm=algorithm,
        schedule=cfg.schedule,
        min_observations=cfg.min_observations,
        confidence_width=cfg.confidence_width,
        epsilon=cfg.epsilon,
    )


def _execute_job(job) -> tuple[int, str, np.ndarray, str]:
    cfg, run, algorithm, probs = job
    horizon = cfg.effective_horizon
    checkpoints = checkpoint_rounds(horizon)
    adversary = cfg.adversary
    if adversary is None:
        adversary = FixedTableAdversary(cfg.bundle.loss_table[:horizon])
    learner_probs = probs if algorithm == "exp3-ip" else None
    learner = make_learner(_learner_config(cfg, algorithm), cfg.graph, probs=learner_probs, seed=0)
    trace = run_episode(learner, adversary, cfg.graph, probs, horizon, seed=(cfg.seed, run))
    digest = hashlib.sha256(trace.loss_table.tobytes()).hexdigest()

    if cfg.metric == "regret":
        cum_incurred = np.cumsum(trace.incurred)
        cum_experts = np.cumsum(trace.loss_table, axis=0)
        values = cum_incurred[checkpoints - 1] - cum_experts[checkpoints - 1].min(axis=1)
    else:
        picked = cfg.bundle.predictions[trace.chosen - 1, np.arange(horizon)]
        cum_sq = np.cumsum((picked - cfg.bundle.truths[:horizon]) ** 2)
        values = cum_sq[checkpoints - 1] / checkpoints
    return run, algorithm, values, digest


def _max_workers() -> int:
    raw = os.environ.get("GRAPHBANDIT_THREADS", "1")
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"GRAPHBANDIT_THREADS must be an integer, got {raw!r}") from exc
    return max(1, value)


def run_experiment(cfg: ExperimentConfig) -> AggregateResult:
    """Run runs x algorithms episodes and aggregate the metric at checkpoints.

    Episodes are independent and may execute in parallel (capped by the
    GRAPHBANDIT_THREADS environment variable); results are identical either
    way.
    """
    horizon = cfg.effective_horizon
    checkpoints = checkpoint_rounds(horizon)
    p_tables = tuple(_probability_table(cfg, run) for run in range(cfg.runs))
    jobs = [(cfg, run, algorithm, p_tables[run]) for run in range(cfg.runs) for algorithm in cfg.algorithms]

    workers = _max_workers()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_execute_job, jobs))
    else:
        outcomes = [_execute_job(job) for job in jobs]

    per_run = {algorithm: np.zeros((cfg.runs, checkpoints.size)) for algorithm in cfg.algorithms}
    digests = {algorithm: [""] * cfg.runs for algorithm in cfg.algorithms}
    for run, algorithm, values, digest in outcomes:
        per_run[algorithm][run] = values
        digests[algorithm][run] = digest
    return AggregateResult(
        checkpoints=checkpoints,
        metric=cfg.metric,
        per_run=per_run,
        loss_digests={a: tuple(d) for a, d in digests.items()},
        p_tables=tuple(t.probs for t in p_tables),
    )


def running_mse(predictions, truths, t: int) -> float:
    """Average over runs of the mean squared prediction error up to round t."""
    predictions = np.atleast_2d(np.asarray(predictions, dtype=float))
    truths = np.asarray(truths, dtype=float)
    if predictions.shape[1] != truths.shape[0]:
        raise ValueError(
            f"predictions cover {predictions.shape[1]} rounds, truths cover {truths.shape[0]}"
        )
    if not 1 <= t <= truths.shape[0]:
        raise ValueError(f"round {t} outside 1..{truths.shape[0]}")
    sq = (predictions[:, :t] - truths[None, :t]) ** 2
    return float(np.mean(sq.sum(axis=1) / t))


def emit_results(result: AggregateResult, out_dir) -> None:
    """Write ``results.csv`` (one row per checkpoint x algorithm) and
    ``summary.csv`` (final values).  Output is byte-deterministic."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "results.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "algorithm", "metric", "mean", "std"])
        for c, t in enumerate(result.checkpoints):
            for algorithm in result.algorithms():
                writer.writerow(
                    [
                        int(t),
                        algorithm,
                        result.metric,
                        repr(float(result.mean(algorithm)[c])),
                        repr(float(result.std(algorithm)[c])),
                    ]
                )
    with (out_dir / "summary.csv").open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["algorithm", "metric", "final_mean", "final_std"])
        for algorithm in result.algorithms():
            writer.writerow(
                [
                    algorithm,
                    result.metric,
                    repr(result.final_mean(algorithm)),
                    repr(result.final_std(algorithm)),
                ]
            )

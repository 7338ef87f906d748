"""The simulated environment: adversarial loss generation, stochastic edge
activations, observation sets, and episode execution.

Randomness is split into disjoint counter-based streams derived from one
master seed: stream 0 generates the loss table, stream 1 realizes the edge
activations, stream 2 drives the learner.  Two algorithms run with the same
seed therefore face the identical loss sequence (common random numbers) and
consume identical learner streams.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError, IngestError
from .graph import EdgeProbabilityTable, NominalGraph

__all__ = [
    "FeedbackEvent",
    "RunTrace",
    "FixedTableAdversary",
    "StochasticGapAdversary",
    "SwitchingAdversary",
    "realize_feedback",
    "run_episode",
    "empirical_regret",
    "episode_streams",
]

LOSS_STREAM, FEEDBACK_STREAM, LEARNER_STREAM, PROBS_STREAM = range(4)


def substream(seed, key: int) -> np.random.Generator:
    """Counter-based generator for one of the per-seed sub-streams."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(key,))))


def episode_streams(seed) -> tuple[np.random.Generator, np.random.Generator, np.random.Generator]:
    return substream(seed, LOSS_STREAM), substream(seed, FEEDBACK_STREAM), substream(seed, LEARNER_STREAM)


@dataclass(frozen=True)
class FeedbackEvent:
    """One round of feedback: the chosen expert, the observation set with its
    losses, and the loss actually incurred (recorded by the environment even
    when the learner never observes it)."""

    t: int
    chosen: int
    observed: tuple[tuple[int, float], ...]
    incurred_loss: float

    def observed_indices(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.observed)


@dataclass(frozen=True)
class RunTrace:
    """Everything one episode produced, enough to recompute any metric."""

    incurred: np.ndarray
    chosen: np.ndarray
    loss_table: np.ndarray
    seed: object

    @property
    def horizon(self) -> int:
        return self.incurred.size

    @property
    def expert_cumulative(self) -> np.ndarray:
        """Final cumulative loss of each fixed expert."""
        return self.loss_table.sum(axis=0)


@dataclass(frozen=True)
class FixedTableAdversary:
    """Loss function given explicitly as a (T, K) table with entries in [0, 1]."""

    table: np.ndarray

    def __post_init__(self) -> None:
        table = np.asarray(self.table, dtype=float)
        if table.ndim != 2:
            raise ValueError(f"loss table must be 2-d, got shape {table.shape}")
        if not np.isfinite(table).all() or (table < 0).any() or (table > 1).any():
            raise ValueError("losses must lie in [0, 1]")
        object.__setattr__(self, "table", table)

    @classmethod
    def from_csv(cls, path) -> "FixedTableAdversary":
        """Load a T x K loss table from CSV; a non-numeric first row is treated
        as a header and skipped."""
        path = Path(path)
        rows: list[list[float]] = []
        with path.open(newline="") as handle:
            for lineno, row in enumerate(csv.reader(handle), start=1):
                if not row:
                    continue
                try:
                    rows.append([float(cell) for cell in row])
                except ValueError:
                    if lineno == 1:
                        continue  # header
                    raise IngestError(f"{path}:{lineno}: non-numeric loss value") from None
        if not rows:
            raise IngestError(f"{path}: no loss rows found")
        widths = {len(r) for r in rows}
        if len(widths) != 1:
            raise IngestError(f"{path}: ragged rows, widths {sorted(widths)}")
        try:
            return cls(np.array(rows))
        except ValueError as exc:
            raise IngestError(f"{path}: {exc}") from exc

    def materialize(self, horizon: int, num_experts: int, rng: np.random.Generator) -> np.ndarray:
        if self.table.shape[1] != num_experts:
            raise ValueError(f"loss table has {self.table.shape[1]} columns, graph has {num_experts} experts")
        if self.table.shape[0] < horizon:
            raise ValueError(f"loss table has {self.table.shape[0]} rows, horizon is {horizon}")
        return self.table[:horizon]


@dataclass(frozen=True)
class StochasticGapAdversary:
    """I.i.d. Bernoulli losses with one best arm whose mean sits ``gap`` below
    the rest (base for the others, base - gap for the best arm)."""

    gap: float
    best_arm: int = 1
    base: float = 0.5

    def __post_init__(self) -> None:
        if not 0 < self.gap <= self.base <= 1:
            raise ValueError(f"need 0 < gap <= base <= 1, got gap={self.gap} base={self.base}")

    def materialize(self, horizon: int, num_experts: int, rng: np.random.Generator) -> np.ndarray:
        if not 1 <= self.best_arm <= num_experts:
            raise ValueError(f"best arm {self.best_arm} out of range 1..{num_experts}")
        means = np.full(num_experts, self.base)
        means[self.best_arm - 1] = self.base - self.gap
        return (rng.random((horizon, num_experts)) < means).astype(float)


@dataclass(frozen=True)
class SwitchingAdversary:
    """Like the gap adversary, but the identity of the best arm rotates every
    ``period`` rounds."""

    gap: float
    period: int
    base: float = 0.5

    def __post_init__(self) -> None:
        if not 0 < self.gap <= self.base <= 1:
            raise ValueError(f"need 0 < gap <= base <= 1, got gap={self.gap} base={self.base}")
        if self.period < 1:
            raise ValueError(f"period must be >= 1, got {self.period}")

    def materialize(self, horizon: int, num_experts: int, rng: np.random.Generator) -> np.ndarray:
        blocks = np.arange(horizon) // self.period
        best = blocks % num_experts
        means = np.full((horizon, num_experts), self.base)
        means[np.arange(horizon), best] = self.base - self.gap
        return (rng.random((horizon, num_experts)) < means).astype(float)


def realize_feedback(
    graph: NominalGraph,
    probs: EdgeProbabilityTable,
    chosen: int,
    losses,
    rng: np.random.Generator,
    t: int = 0,
) -> FeedbackEvent:
    """Draw the round's edge activations and build the observation set.

    Each out-edge of the chosen expert fires independently with its table
    probability (draws consumed in ascending target order).  The chosen
    expert's own loss is included only when its self-loop fires; the incurred
    loss is recorded regardless.
    """
    if not 1 <= chosen <= graph.num_experts:
        raise ValueError(f"chosen index {chosen} out of range 1..{graph.num_experts}")
    losses = np.asarray(losses, dtype=float)
    if losses.shape != (graph.num_experts,):
        raise ContractError(f"expected {graph.num_experts} losses, got shape {losses.shape}")
    if not np.isfinite(losses).all() or (losses < 0).any() or (losses > 1).any():
        raise ContractError("losses must lie in [0, 1]")
    out = np.flatnonzero(graph.adjacency[chosen - 1])
    fired = rng.random(out.size) < probs.probs[chosen - 1, out]
    observed = tuple((int(j + 1), float(losses[j])) for j in out[fired])
    return FeedbackEvent(t=t, chosen=chosen, observed=observed, incurred_loss=float(losses[chosen - 1]))


def run_episode(
    learner,
    adversary,
    graph: NominalGraph,
    probs: EdgeProbabilityTable,
    horizon: int,
    seed,
    graphs=None,
) -> RunTrace:
    """Run the full select -> realize -> update loop for ``horizon`` rounds.

    ``graphs``, when given, is a callable t -> (graph, probs) producing the
    round's nominal graph; learners that require a static graph reject any
    round whose graph differs from the one they were built with.
    Deterministic given the seed.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    loss_rng = substream(seed, LOSS_STREAM)
    feedback_rng = substream(seed, FEEDBACK_STREAM)
    learner.reseed(np.random.SeedSequence(seed, spawn_key=(LEARNER_STREAM,)))
    table = adversary.materialize(horizon, graph.num_experts, loss_rng)
    table = np.asarray(table, dtype=float)
    if table.shape != (horizon, graph.num_experts):
        raise ContractError(f"adversary produced shape {table.shape}, expected {(horizon, graph.num_experts)}")
    if (table < 0).any() or (table > 1).any():
        raise ContractError("adversary produced losses outside [0, 1]")

    incurred = np.empty(horizon)
    chosen = np.empty(horizon, dtype=np.int64)
    for t in range(1, horizon + 1):
        if graphs is None:
            g_t, p_t = graph, probs
            pick = learner.select(t, g_t)
        else:
            g_t, p_t = graphs(t)
            pick = learner.select(t, g_t, p_t)
        event = realize_feedback(g_t, p_t, pick, table[t - 1], feedback_rng, t=t)
        learner.update(event)
        incurred[t - 1] = event.incurred_loss
        chosen[t - 1] = pick
    return RunTrace(incurred=incurred, chosen=chosen, loss_table=table, seed=seed)


def empirical_regret(trace: RunTrace) -> float:
    """Total incurred loss minus the best fixed expert's total loss."""
    return float(trace.incurred.sum() - trace.expert_cumulative.min())

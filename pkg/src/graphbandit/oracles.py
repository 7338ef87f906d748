"""Monte-Carlo checks of the estimator expectation identities.

These simulate the select -> observe -> estimate pipeline in vectorized
chunks and compare the sample means against the closed-form expectations:

* importance-weighted estimates are unbiased: E[l_hat_i] = l_i, and their
  second moment is l_i^2 / q_i;
* the capped resampling count has E[Q] = (1 - (1 - q)^M) / q, and the
  resampled loss estimate has E[l_tilde] = (1 - (1 - q)^M) * l.

The batch paths reuse the same kernels the per-round learners call
(observation probabilities, the pmf sampler, the resampling trial kernel),
so a failing check indicts the production code, not a reimplementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimator import Pmf, sample_positions
from .graph import EdgeProbabilityTable, NominalGraph
from .policies import _resample_trials, observation_probs

__all__ = ["MomentCheck", "ip_estimator_checks", "resampling_checks", "default_suite"]


@dataclass(frozen=True)
class MomentCheck:
    """One sample-mean-vs-expectation comparison."""

    name: str
    observed: float
    expected: float
    stderr: float
    draws: int

    @property
    def deviation(self) -> float:
        """|observed - expected| in standard-error units."""
        if self.stderr == 0:
            return 0.0 if self.observed == self.expected else math.inf
        return abs(self.observed - self.expected) / self.stderr

    def passed(self, max_stderrs: float = 4.0) -> bool:
        return abs(self.observed - self.expected) <= max_stderrs * self.stderr

    def describe(self) -> str:
        return (
            f"{self.name}: observed {self.observed:.6f} vs expected {self.expected:.6f} "
            f"({self.deviation:.2f} stderr, n={self.draws})"
        )


def _moment(name: str, total: float, total_sq: float, n: int, expected: float) -> MomentCheck:
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    return MomentCheck(name=name, observed=mean, expected=expected, stderr=math.sqrt(var / n), draws=n)


def ip_estimator_checks(
    graph: NominalGraph,
    probs: EdgeProbabilityTable,
    pmf: Pmf,
    losses,
    draws: int,
    rng: np.random.Generator,
    chunk: int = 200_000,
) -> list[MomentCheck]:
    """Simulate the informative-setting estimate for every arm.

    Each draw picks an expert from ``pmf``, fires the chosen row's edges
    independently, and importance-weights every observed loss by its exact
    observation probability.  Returns first- and second-moment checks per arm.
    """
    losses = np.asarray(losses, dtype=float)
    k = graph.num_experts
    if losses.shape != (k,):
        raise ValueError(f"need {k} losses, got shape {losses.shape}")
    q = observation_probs(pmf, graph, probs)
    ratio = losses / q
    sums = np.zeros(k)
    sums_sq = np.zeros(k)
    sums_4 = np.zeros(k)
    done = 0
    while done < draws:
        m = min(chunk, draws - done)
        chosen = sample_positions(pmf, rng, m)
        fired = rng.random((m, k)) < probs.probs[chosen]
        observed = fired & graph.adjacency[chosen]
        est = observed * ratio
        sums += est.sum(axis=0)
        est *= est
        sums_sq += est.sum(axis=0)
        est *= est
        sums_4 += est.sum(axis=0)
        done += m
    checks = []
    for i in range(k):
        checks.append(_moment(f"mean estimate, arm {i + 1}", sums[i], sums_sq[i], draws, losses[i]))
        expected_second = losses[i] ** 2 / q[i]
        checks.append(_moment(f"second moment, arm {i + 1}", sums_sq[i], sums_4[i], draws, expected_second))
    return checks


def resampling_checks(
    q: float,
    window: int,
    loss: float,
    draws: int,
    rng: np.random.Generator,
    chunk: int = 200_000,
) -> tuple[MomentCheck, MomentCheck]:
    """Simulate the resampling pipeline on a one-expert self-loop graph whose
    activation probability is ``q``, with fresh window contents per draw.

    Returns (trial-count check, resampled-loss check) against
    E[Q] = (1 - (1-q)^M) / q and E[l_tilde] = (1 - (1-q)^M) * l.
    """
    if not 0 < q <= 1:
        raise ValueError(f"q must be in (0, 1], got {q}")
    probs = np.array([1.0])  # point-mass selection on the single expert
    in_positions = np.array([0])
    sum_q = sum_q2 = 0.0
    sum_l = sum_l2 = 0.0
    done = 0
    while done < draws:
        m = min(chunk, draws - done)
        buffers = (rng.random((m, 1, window)) < q).astype(np.uint8)
        trials = _resample_trials(probs, in_positions, buffers, rng).astype(float)
        observed = rng.random(m) < q
        est = trials * loss * observed
        sum_q += trials.sum()
        sum_q2 += (trials * trials).sum()
        sum_l += est.sum()
        sum_l2 += (est * est).sum()
        done += m
    hit = 1.0 - (1.0 - q) ** window
    trial_check = _moment(f"mean trial count (q={q}, M={window})", sum_q, sum_q2, draws, hit / q)
    loss_check = _moment(f"mean resampled loss (q={q}, M={window})", sum_l, sum_l2, draws, hit * loss)
    return trial_check, loss_check


def default_suite(draws: int = 1_000_000, seed: int = 20_240_601) -> list[MomentCheck]:
    """The oracle suite the CLI exposes: the informative-setting unbiasedness
    check on a five-expert complete graph, plus the resampling expectations
    over a grid of activation probabilities and window sizes."""
    from .estimator import WeightVector
    from .graph import greedy_dominating_set
    from .policies import exp3ip_pmf

    graph = NominalGraph.complete(5)
    probs = EdgeProbabilityTable.constant(graph, 0.25)
    pmf = exp3ip_pmf(WeightVector.uniform(5), 0.3, graph, probs, greedy_dominating_set(graph))
    losses = np.array([0.9, 0.7, 0.5, 0.3, 0.1])
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    checks = ip_estimator_checks(graph, probs, pmf, losses, draws, rng)
    for q in (0.1, 0.5, 0.9):
        for window in (5, 25):
            checks.extend(resampling_checks(q, window, loss=0.8, draws=draws, rng=rng))
    return checks

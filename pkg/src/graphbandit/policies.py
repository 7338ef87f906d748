"""The learners.

Five policies share one interface (``select(t, graph) -> index`` then
``update(feedback)``):

* ``exp3-ip``  - exploits the revealed edge probabilities (informative setting);
* ``exp3-up``  - estimates edge probabilities online, with an inflated
  observation-probability divisor (uninformative setting);
* ``exp3-gr``  - replaces the divisor with geometric resampling against a
  window of recent edge activations (uninformative setting);
* ``exp3``     - the classic bandit baseline, side observations ignored;
* ``exp3-dom`` - treats the nominal graph as exact (all edge probabilities 1).

All expert indices crossing the public interface are 1-based.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .environment import FeedbackEvent
from .errors import ConfigError, ContractError, InvariantError, PhaseOrderError, ProtocolError
from .estimator import Pmf, WeightVector, exp_weight_update, importance_loss_estimate, sample_index
from .graph import EdgeProbabilityTable, NominalGraph, VertexSet, greedy_dominating_set
from .schedulers import (
    DoublingSchedule,
    DoublingState,
    InverseSqrtEta,
    Schedule,
    eta_at,
    format_schedule,
    gr_doubling_params,
    ip_doubling_step,
    parse_schedule,
    up_doubling_params,
    up_start_epoch,
)

__all__ = [
    "ALGORITHMS",
    "LearnerConfig",
    "ProbabilityEstimatorState",
    "ResampleBuffer",
    "exp3ip_pmf",
    "exp3up_pmf",
    "observation_prob",
    "observation_probs",
    "exploration_index",
    "estimated_observation_prob",
    "geometric_resample",
    "resampled_loss_estimate",
    "Exp3IP",
    "Exp3Dom",
    "Exp3",
    "Exp3UP",
    "Exp3GR",
    "make_learner",
    "load_snapshot",
]

ALGORITHMS = ("exp3", "exp3-dom", "exp3-ip", "exp3-up", "exp3-gr")

SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class LearnerConfig:
    """Learner parameters.

    ``min_observations`` is the per-edge sample floor M used by the
    uninformative learners' forced exploration; ``confidence_width`` is the
    inflation parameter xi added to the probability estimates (>= 1);
    ``epsilon`` is a user-supplied lower bound on the edge probabilities,
    needed only by the resampling learner's doubling schedule.
    """

    algorithm: str
    schedule: Schedule = InverseSqrtEta()
    min_observations: int = 25
    confidence_width: float = 1.0
    epsilon: float | None = None

    def __post_init__(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.min_observations < 1:
            raise ConfigError(f"min_observations must be >= 1, got {self.min_observations}")
        if not self.confidence_width >= 1:
            raise ConfigError(f"confidence_width must be >= 1, got {self.confidence_width}")
        if self.epsilon is not None and not 0 < self.epsilon <= 1:
            raise ConfigError(f"epsilon must be in (0, 1], got {self.epsilon}")


# ---------------------------------------------------------------------------
# Selection distributions and observation probabilities
# ---------------------------------------------------------------------------


def _check_eta(eta: float) -> float:
    if not (np.isfinite(eta) and 0 <= eta <= 1):
        raise ValueError(f"mixing rate must be in [0, 1], got {eta}")
    return float(eta)


def exp3ip_pmf(
    weights: WeightVector,
    eta: float,
    graph: NominalGraph,
    probs: EdgeProbabilityTable,
    dominating: VertexSet,
) -> Pmf:
    """Selection distribution for the informative setting.

    Mixes the normalized weights with exploration mass spread over the
    dominating set proportionally to each member's expected number of
    revealed losses.
    """
    eta = _check_eta(eta)
    base = weights.normalized()
    if base.size != graph.num_experts:
        raise ValueError("weight vector and graph disagree on the number of experts")
    expected = np.where(graph.adjacency, probs.probs, 0.0).sum(axis=1)
    dom = np.fromiter((i - 1 for i in dominating), dtype=np.int64, count=len(dominating))
    total = expected[dom].sum()
    if total <= 0:
        raise InvariantError("dominating set has zero expected observations")
    out = (1.0 - eta) * base
    out[dom] += eta * (expected[dom] / total)
    return Pmf(out)


def exp3up_pmf(weights: WeightVector, eta: float, dominating: VertexSet) -> Pmf:
    """Selection distribution for the uninformative setting: exploration mass
    is spread uniformly over the dominating set."""
    eta = _check_eta(eta)
    if len(dominating) == 0:
        raise ValueError("dominating set must be non-empty")
    out = (1.0 - eta) * weights.normalized()
    dom = np.fromiter((i - 1 for i in dominating), dtype=np.int64, count=len(dominating))
    if dom.max() >= out.size:
        raise ValueError("dominating set references an expert outside the weight vector")
    out[dom] += eta / len(dominating)
    return Pmf(out)


def observation_prob(pmf: Pmf, graph: NominalGraph, probs: EdgeProbabilityTable, i: int) -> float:
    """Exact probability that expert i's loss gets observed this round:
    sum over i's in-neighbors of (selection probability * edge probability)."""
    if not 1 <= i <= graph.num_experts:
        raise ValueError(f"expert index {i} out of range 1..{graph.num_experts}")
    col = graph.adjacency[:, i - 1]
    return float((pmf.probs * probs.probs[:, i - 1] * col).sum())


def observation_probs(pmf: Pmf, graph: NominalGraph, probs: EdgeProbabilityTable) -> np.ndarray:
    """Vectorized observation_prob over all experts."""
    masked = np.where(graph.adjacency, probs.probs, 0.0)
    return pmf.probs @ masked


def exploration_index(t: int, num_experts: int, min_observations: int | None = None) -> int:
    """Round-robin choice during forced exploration: ((t-1) mod K) + 1, so the
    first K*M rounds select each expert exactly M times."""
    if t < 1:
        raise ValueError(f"round numbers start at 1, got {t}")
    if num_experts < 1:
        raise ValueError("need at least one expert")
    if min_observations is not None and t > num_experts * min_observations:
        raise ValueError(f"round {t} is past the {num_experts * min_observations}-round exploration phase")
    return (t - 1) % num_experts + 1


# ---------------------------------------------------------------------------
# Edge-probability estimation (uninformative, estimation-based)
# ---------------------------------------------------------------------------


class ProbabilityEstimatorState:
    """Per-edge Bernoulli sample means, fed by rounds where the edge's source
    was the chosen expert."""

    def __init__(self, graph: NominalGraph):
        self._graph = graph
        k = graph.num_experts
        self.counts = np.zeros((k, k), dtype=np.int64)
        self.sums = np.zeros((k, k), dtype=np.int64)

    @property
    def graph(self) -> NominalGraph:
        return self._graph

    @property
    def estimates(self) -> np.ndarray:
        """Sample-mean estimate per edge; 0 where no samples exist yet."""
        return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), 0.0)

    def observe_row(self, chosen: int, realized) -> None:
        """Record one round's activations for every out-edge of ``chosen``.

        ``realized`` is a length-K boolean row; entry j-1 says whether expert
        j's loss was revealed.  A True entry on a non-edge is a contract
        violation.
        """
        if not 1 <= chosen <= self._graph.num_experts:
            raise ValueError(f"chosen index {chosen} out of range")
        realized = np.asarray(realized, dtype=bool)
        if realized.shape != (self._graph.num_experts,):
            raise ContractError(f"realized row must have length {self._graph.num_experts}")
        row = self._graph.adjacency[chosen - 1]
        if (realized & ~row).any():
            raise ContractError("activation reported for a non-edge")
        self.counts[chosen - 1, row] += 1
        self.sums[chosen - 1, row] += realized[row]


def estimated_observation_prob(
    pmf: Pmf,
    graph: NominalGraph,
    state: ProbabilityEstimatorState,
    confidence_width: float,
    min_observations: int,
    i: int,
) -> float:
    """Inflated estimate of expert i's observation probability.

    Uses the per-edge sample means plus a confidence_width / sqrt(M) margin so
    the estimate dominates the true probability with high probability.  May
    exceed 1 (only ever used as a divisor).  Raises if any in-edge has fewer
    than ``min_observations`` samples.
    """
    if not 1 <= i <= graph.num_experts:
        raise ValueError(f"expert index {i} out of range 1..{graph.num_experts}")
    if min_observations < 1:
        raise ValueError("min_observations must be >= 1")
    in_mask = graph.adjacency[:, i - 1]
    if (state.counts[:, i - 1][in_mask] < min_observations).any():
        raise PhaseOrderError(
            f"an in-edge of expert {i} has fewer than {min_observations} samples; exploration is incomplete"
        )
    inflation = confidence_width / math.sqrt(min_observations)
    phat = state.estimates[:, i - 1]
    return float((pmf.probs * (phat + inflation) * in_mask).sum())


# ---------------------------------------------------------------------------
# Geometric resampling (uninformative, resampling-based)
# ---------------------------------------------------------------------------


class ResampleBuffer:
    """Sliding window of recent edge activations, one ring buffer per edge.

    An edge's buffer gains one sample whenever its source expert is chosen;
    during forced exploration the explored expert therefore feeds all of its
    out-edges at once.
    """

    def __init__(self, graph: NominalGraph, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {capacity}")
        self._graph = graph
        self._capacity = int(capacity)
        self._data: dict[tuple[int, int], deque] = {}
        for i in range(graph.num_experts):
            for j in np.flatnonzero(graph.adjacency[i]):
                self._data[(i, int(j))] = deque(maxlen=self._capacity)

    @property
    def capacity(self) -> int:
        return self._capacity

    @property
    def graph(self) -> NominalGraph:
        return self._graph

    def observe_row(self, chosen: int, realized) -> None:
        """Append one round's activations for every out-edge of ``chosen``."""
        if not 1 <= chosen <= self._graph.num_experts:
            raise ValueError(f"chosen index {chosen} out of range")
        realized = np.asarray(realized, dtype=bool)
        if realized.shape != (self._graph.num_experts,):
            raise ContractError(f"realized row must have length {self._graph.num_experts}")
        row = self._graph.adjacency[chosen - 1]
        if (realized & ~row).any():
            raise ContractError("activation reported for a non-edge")
        for j in np.flatnonzero(row):
            self._data[(chosen - 1, int(j))].append(int(realized[j]))

    def grow(self, new_capacity: int) -> None:
        """Raise the window size, keeping existing samples; never shrinks."""
        if new_capacity < self._capacity:
            raise ValueError("resample buffers never shrink")
        if new_capacity == self._capacity:
            return
        self._capacity = int(new_capacity)
        self._data = {key: deque(old, maxlen=self._capacity) for key, old in self._data.items()}

    def is_full(self) -> bool:
        return all(len(d) == self._capacity for d in self._data.values())

    def fill_count(self, source: int, target: int) -> int:
        """Number of buffered samples on the 1-based edge (source, target)."""
        return len(self._data[(source - 1, target - 1)])

    def edge_matrix(self, sources0: np.ndarray, target0: int, window: int) -> np.ndarray:
        """The last ``window`` samples of each edge (source, target), stacked
        as a (num_sources, window) 0/1 matrix.  Raises while underfull."""
        rows = []
        for s in sources0:
            data = self._data[(int(s), int(target0))]
            if len(data) < window:
                raise PhaseOrderError(
                    f"edge ({int(s) + 1}, {int(target0) + 1}) holds {len(data)} samples, needs {window}"
                )
            rows.append(list(data)[-window:])
        return np.array(rows, dtype=np.uint8)


def _resample_trials(probs: np.ndarray, in_positions: np.ndarray, buffers: np.ndarray, rng) -> np.ndarray:
    """Capped first-success trial counts, one per row of ``buffers``.

    ``buffers`` has shape (n, E, M): for each of n independent repetitions,
    the M buffered activation samples of each of the E in-edges.  Trial u of a
    repetition draws an expert from ``probs``; it succeeds when the draw is an
    in-neighbor whose freshly permuted buffer shows an activation at slot u.
    Returns min(first success, M) per repetition, in [1, M].
    """
    n, num_edges, m = buffers.shape
    cum = np.cumsum(probs)
    draws = np.minimum(np.searchsorted(cum, rng.random((n, m)), side="right"), probs.size - 1)
    order = np.argsort(rng.random(buffers.shape), axis=-1)
    shuffled = np.take_along_axis(buffers, order, axis=-1)
    slot = np.full(probs.size, -1, dtype=np.int64)
    slot[in_positions] = np.arange(num_edges)
    s = slot[draws]
    hit = np.where(s >= 0, shuffled[np.arange(n)[:, None], np.clip(s, 0, None), np.arange(m)[None, :]], 0).astype(bool)
    found = hit.any(axis=1)
    first = hit.argmax(axis=1) + 1
    return np.where(found, first, m)


def geometric_resample(
    i: int,
    pmf: Pmf,
    graph: NominalGraph,
    buffers: ResampleBuffer,
    min_observations: int,
    rng: np.random.Generator,
) -> int:
    """Estimate 1/q for expert i by simulated trials against buffered samples.

    Runs up to M = ``min_observations`` trials: each draws an expert from
    ``pmf`` and asks whether that draw would have revealed i's loss, reading
    a fresh random permutation of each in-edge's buffered activations.
    Returns the capped count of trials until the first simulated observation,
    a value in [1, M] whose expectation is (1 - (1 - q)^M) / q.
    """
    if not 1 <= i <= graph.num_experts:
        raise ValueError(f"expert index {i} out of range 1..{graph.num_experts}")
    in_positions = np.flatnonzero(graph.adjacency[:, i - 1])
    matrix = buffers.edge_matrix(in_positions, i - 1, min_observations)
    return int(_resample_trials(pmf.probs, in_positions, matrix[None, :, :], rng)[0])


def resampled_loss_estimate(loss: float, trials: int, observed: bool, cap: int | None = None) -> float:
    """trials * loss when observed, 0 otherwise; under-estimates the loss."""
    if not observed:
        return 0.0
    if not np.isfinite(loss) or not 0 <= loss <= 1:
        raise ValueError(f"loss must be in [0, 1], got {loss}")
    if trials < 1 or (cap is not None and trials > cap):
        raise ContractError(f"trial count {trials} outside [1, {cap}]")
    return float(trials) * float(loss)


# ---------------------------------------------------------------------------
# Learners
# ---------------------------------------------------------------------------


class _LearnerBase:
    """Protocol plumbing shared by all learners: strict select/update
    alternation, per-round bookkeeping, reseeding, and snapshots.

    Instances are single-threaded; distinct instances are independent.
    """

    algorithm = ""
    requires_static_graph = False

    def __init__(self, config: LearnerConfig, graph: NominalGraph, probs=None, seed=0):
        if config.algorithm != self.algorithm:
            raise ConfigError(f"config says {config.algorithm!r} but this learner is {self.algorithm!r}")
        self.config = config
        self._graph = graph
        self._probs = probs
        self._k = graph.num_experts
        self._weights = WeightVector.uniform(self._k)
        self._round = 0
        self._pending = None
        self._last_pmf: Pmf | None = None
        self._rng: np.random.Generator
        self.reseed(seed)

    @property
    def num_experts(self) -> int:
        return self._k

    @property
    def rounds_played(self) -> int:
        return self._round

    @property
    def weights(self) -> WeightVector:
        return self._weights

    @property
    def last_pmf(self) -> Pmf | None:
        """The selection distribution of the most recent non-exploration round."""
        return self._last_pmf

    def reseed(self, seed) -> None:
        if not isinstance(seed, np.random.SeedSequence):
            seed = np.random.SeedSequence(seed)
        self._rng = np.random.Generator(np.random.Philox(seed))

    def select(self, t: int, graph: NominalGraph | None = None, probs=None) -> int:
        if self._pending is not None:
            raise ProtocolError("select called twice without an update in between")
        if t != self._round + 1:
            raise ProtocolError(f"expected round {self._round + 1}, got {t}")
        g, p = self._resolve_graph(graph, probs)
        choice, extras = self._choose(t, g, p)
        self._pending = (t, choice, extras)
        return choice

    def update(self, feedback: FeedbackEvent) -> None:
        if self._pending is None:
            raise ProtocolError("update called before select")
        t, choice, extras = self._pending
        if feedback.t != t:
            raise ProtocolError(f"feedback is for round {feedback.t}, learner is at round {t}")
        if feedback.chosen != choice:
            raise ProtocolError(f"feedback says index {feedback.chosen} was chosen, learner chose {choice}")
        self._apply(feedback, extras)
        self._pending = None
        self._round = t

    # -- hooks ------------------------------------------------------------

    def _resolve_graph(self, graph, probs):
        if graph is None:
            return self._graph, self._probs
        if graph.num_experts != self._k:
            raise ProtocolError("graph size changed mid-run")
        if self.requires_static_graph:
            if not (graph is self._graph or graph == self._graph):
                raise ProtocolError(f"{self.algorithm} requires a static nominal graph")
            if probs is not None:
                raise ProtocolError("uninformative learner cannot take a probability table")
            return self._graph, self._probs
        return self._resolve_varying(graph, probs)

    def _resolve_varying(self, graph, probs):
        raise NotImplementedError

    def _choose(self, t, graph, probs):
        raise NotImplementedError

    def _apply(self, feedback, extras):
        raise NotImplementedError

    # -- realized edge activations ----------------------------------------

    def _realized_row(self, feedback: FeedbackEvent) -> np.ndarray:
        realized = np.zeros(self._k, dtype=bool)
        for j in feedback.observed_indices():
            realized[j - 1] = True
        return realized

    # -- snapshots ---------------------------------------------------------

    def snapshot(self) -> str:
        """Serialize the learner between rounds; restore with load_snapshot."""
        if self._pending is not None:
            raise ProtocolError("snapshot only permitted between rounds (after update)")
        payload = {
            "version": SNAPSHOT_VERSION,
            "algorithm": self.algorithm,
            "round": self._round,
            "log_weights": self._weights.log_weights.tolist(),
            "rng": _encode_rng_state(self._rng),
            "config": {
                "schedule": format_schedule(self.config.schedule),
                "min_observations": self.config.min_observations,
                "confidence_width": self.config.confidence_width,
                "epsilon": self.config.epsilon,
            },
            "extra": self._extra_state(),
        }
        return json.dumps(payload)

    def _extra_state(self) -> dict:
        return {}

    def _restore_extra(self, extra: dict) -> None:
        pass


def _encode_rng_state(rng: np.random.Generator):
    def conv(obj):
        if isinstance(obj, dict):
            return {k: conv(v) for k, v in obj.items()}
        if isinstance(obj, np.ndarray):
            return {"__array__": obj.tolist(), "dtype": str(obj.dtype)}
        if isinstance(obj, np.integer):
            return int(obj)
        return obj

    return conv(rng.bit_generator.state)


def _decode_rng_state(payload) -> np.random.Generator:
    def conv(obj):
        if isinstance(obj, dict):
            if "__array__" in obj:
                return np.array(obj["__array__"], dtype=obj["dtype"])
            return {k: conv(v) for k, v in obj.items()}
        return obj

    state = conv(payload)
    if state.get("bit_generator") != "Philox":
        raise ValueError(f"unsupported generator {state.get('bit_generator')!r} in snapshot")
    bit_gen = np.random.Philox()
    bit_gen.state = state
    return np.random.Generator(bit_gen)


class Exp3IP(_LearnerBase):
    """Informative-setting learner: uses the revealed edge probabilities both
    to spread exploration over the dominating set and to importance-weight
    the observed losses by their exact observation probabilities."""

    algorithm = "exp3-ip"

    def __init__(self, config, graph, probs=None, seed=0):
        if probs is None:
            raise ConfigError(f"{config.algorithm} needs the edge-probability table (informative setting)")
        super().__init__(config, graph, probs, seed)
        self._dominating = greedy_dominating_set(graph)
        self._doubling = DoublingState() if isinstance(config.schedule, DoublingSchedule) else None

    def _eta(self, t: int) -> float:
        if self._doubling is not None:
            return math.sqrt(math.log(self._k) / 2.0 ** (self._doubling.epoch + 1))
        return eta_at(self.config.schedule, t)

    def _resolve_varying(self, graph, probs):
        if graph is self._graph or graph == self._graph:
            return self._graph, self._probs
        if probs is None:
            raise ProtocolError("a time-varying graph must come with its probability table")
        return graph, probs

    def _choose(self, t, graph, probs):
        dominating = self._dominating if graph is self._graph else greedy_dominating_set(graph)
        eta = self._eta(t)
        pmf = exp3ip_pmf(self._weights, eta, graph, probs, dominating)
        self._last_pmf = pmf
        return sample_index(pmf, self._rng), (pmf, eta, graph, probs)

    def _apply(self, feedback, extras):
        pmf, eta, graph, probs = extras
        q = observation_probs(pmf, graph, probs)
        estimates = np.zeros(self._k)
        for j, loss in feedback.observed:
            estimates[j - 1] = importance_loss_estimate(loss, q[j - 1], True)
        if eta > 0:
            self._weights = exp_weight_update(self._weights, eta, estimates)
        if self._doubling is not None:
            self._doubling, restart, _ = ip_doubling_step(self._doubling, pmf, q, math.log(self._k))
            if restart:
                self._weights = WeightVector.uniform(self._k)

    def _extra_state(self):
        if self._doubling is None:
            return {"doubling": None}
        return {"doubling": {"epoch": self._doubling.epoch, "accumulated": self._doubling.accumulated}}

    def _restore_extra(self, extra):
        d = extra.get("doubling")
        if d is not None:
            self._doubling = DoublingState(epoch=int(d["epoch"]), accumulated=float(d["accumulated"]))


class Exp3Dom(Exp3IP):
    """Uncertainty-ignoring baseline: runs the informative-setting machinery
    with every edge probability forced to 1, i.e. the nominal graph is taken
    at face value."""

    algorithm = "exp3-dom"

    def __init__(self, config, graph, probs=None, seed=0):
        if probs is not None:
            raise ConfigError("exp3-dom never takes the probability table; it assumes the graph is exact")
        super().__init__(config, graph, EdgeProbabilityTable.constant(graph, 1.0), seed)

    def _resolve_varying(self, graph, probs):
        if graph is self._graph or graph == self._graph:
            return self._graph, self._probs
        return graph, EdgeProbabilityTable.constant(graph, 1.0)


class Exp3(Exp3IP):
    """Classic bandit baseline: assumes self-loop-only feedback with certain
    observation of the chosen arm, and ignores side observations entirely.
    When the chosen arm's own loss goes unobserved the round's estimate is
    zero."""

    algorithm = "exp3"

    def __init__(self, config, graph, probs=None, seed=0):
        if probs is not None:
            raise ConfigError("exp3 never takes the probability table")
        bandit = NominalGraph.bandit(graph.num_experts)
        Exp3IP.__init__(self, config, bandit, EdgeProbabilityTable.constant(bandit, 1.0), seed)

    def _resolve_varying(self, graph, probs):
        return self._graph, self._probs  # the internal bandit view, regardless

    def _apply(self, feedback, extras):
        own = tuple((j, loss) for j, loss in feedback.observed if j == feedback.chosen)
        filtered = FeedbackEvent(feedback.t, feedback.chosen, own, feedback.incurred_loss)
        super()._apply(filtered, extras)


class _UninformativeBase(_LearnerBase):
    """Shared forced-exploration machinery for the uninformative learners."""

    requires_static_graph = True

    def __init__(self, config, graph, probs=None, seed=0):
        if probs is not None:
            raise ConfigError(f"{config.algorithm} runs uninformative; it must not receive the probability table")
        super().__init__(config, graph, None, seed)
        self._dominating = greedy_dominating_set(graph)
        self._explore_counts = np.zeros(self._k, dtype=np.int64)
        self._explore_cursor = 0
        self._epoch: int | None = None
        self._eta_value: float | None = None
        self._min_obs = config.min_observations

    @property
    def min_observations(self) -> int:
        """The current per-edge sample floor M (epoch-dependent under doubling)."""
        return self._min_obs

    def _eta(self, t: int) -> float:
        if self._epoch is not None:
            return self._eta_value
        return eta_at(self.config.schedule, t)

    def _exploring(self) -> bool:
        return bool((self._explore_counts < self._min_obs).any())

    def _next_exploration(self) -> int:
        for _ in range(self._k):
            v = self._explore_cursor
            self._explore_cursor = (v + 1) % self._k
            if self._explore_counts[v] < self._min_obs:
                return v + 1
        raise InvariantError("exploration requested with no deficit")

    def _choose(self, t, graph, probs):
        self._advance_epochs(t)
        if self._exploring():
            return self._next_exploration(), None
        eta = self._eta(t)
        pmf = exp3up_pmf(self._weights, eta, self._dominating)
        self._last_pmf = pmf
        return sample_index(pmf, self._rng), (pmf, eta)

    def _advance_epochs(self, t: int) -> None:
        if self._epoch is None:
            return
        advanced = False
        while t > 2 ** (self._epoch + 1):
            self._epoch += 1
            advanced = True
        if advanced:
            self._apply_epoch_params()

    def _apply_epoch_params(self) -> None:
        raise NotImplementedError

    def _restart(self, eta: float, min_observations: int) -> None:
        """Epoch restart: reset weights to uniform and raise the sample floor;
        existing counters/buffers are retained, so the exploration loop only
        tops up the per-expert deficit."""
        self._eta_value = eta
        self._min_obs = int(min_observations)
        self._weights = WeightVector.uniform(self._k)

    def _base_extra(self) -> dict:
        return {
            "explore_counts": self._explore_counts.tolist(),
            "explore_cursor": self._explore_cursor,
            "epoch": self._epoch,
            "eta_value": self._eta_value,
            "min_observations": self._min_obs,
        }

    def _restore_base_extra(self, extra: dict) -> None:
        self._explore_counts = np.array(extra["explore_counts"], dtype=np.int64)
        self._explore_cursor = int(extra["explore_cursor"])
        self._epoch = extra["epoch"] if extra["epoch"] is None else int(extra["epoch"])
        self._eta_value = extra["eta_value"]
        self._min_obs = int(extra["min_observations"])


class Exp3UP(_UninformativeBase):
    """Estimation-based uninformative learner: forced round-robin exploration
    builds per-edge sample means, after which losses are importance-weighted
    by an inflated estimate of their observation probability."""

    algorithm = "exp3-up"

    def __init__(self, config, graph, probs=None, seed=0):
        super().__init__(config, graph, probs, seed)
        self._state = ProbabilityEstimatorState(graph)
        self._xi = config.confidence_width
        if isinstance(config.schedule, DoublingSchedule):
            self._epoch = up_start_epoch(self._k)
            self._eta_value, self._min_obs, self._xi = up_doubling_params(self._epoch, self._k)

    @property
    def estimator_state(self) -> ProbabilityEstimatorState:
        return self._state

    @property
    def confidence_width(self) -> float:
        return self._xi

    def _apply_epoch_params(self) -> None:
        eta, min_obs, xi = up_doubling_params(self._epoch, self._k)
        self._xi = xi
        self._restart(eta, min_obs)

    def _apply(self, feedback, extras):
        realized = self._realized_row(feedback)
        if extras is None:  # exploration round: record samples, no weight update
            self._state.observe_row(feedback.chosen, realized)
            self._explore_counts[feedback.chosen - 1] += 1
            return
        pmf, eta = extras
        estimates = np.zeros(self._k)
        for j, loss in feedback.observed:
            q_hat = estimated_observation_prob(pmf, self._graph, self._state, self._xi, self._min_obs, j)
            estimates[j - 1] = importance_loss_estimate(loss, q_hat, True)
        self._state.observe_row(feedback.chosen, realized)
        if eta > 0:
            self._weights = exp_weight_update(self._weights, eta, estimates)

    def _extra_state(self):
        extra = self._base_extra()
        extra.update(
            {
                "counts": self._state.counts.tolist(),
                "sums": self._state.sums.tolist(),
                "confidence_width": self._xi,
            }
        )
        return extra

    def _restore_extra(self, extra):
        self._restore_base_extra(extra)
        self._state.counts = np.array(extra["counts"], dtype=np.int64)
        self._state.sums = np.array(extra["sums"], dtype=np.int64)
        self._xi = float(extra["confidence_width"])


class Exp3GR(_UninformativeBase):
    """Resampling-based uninformative learner: keeps a window of recent edge
    activations and, for each observed loss, multiplies it by a capped
    first-success trial count that estimates the inverse observation
    probability."""

    algorithm = "exp3-gr"

    def __init__(self, config, graph, probs=None, seed=0):
        super().__init__(config, graph, probs, seed)
        if isinstance(config.schedule, DoublingSchedule):
            if config.epsilon is None:
                raise ConfigError("exp3-gr with the doubling schedule needs epsilon (edge-probability lower bound)")
            self._epoch = 0
            self._eta_value, self._min_obs = gr_doubling_params(0, self._k, len(self._dominating), config.epsilon)
        self._buffers = ResampleBuffer(graph, self._min_obs)

    @property
    def buffers(self) -> ResampleBuffer:
        return self._buffers

    def _apply_epoch_params(self) -> None:
        eta, min_obs = gr_doubling_params(self._epoch, self._k, len(self._dominating), self.config.epsilon)
        self._restart(eta, min_obs)
        self._buffers.grow(min_obs)

    def _apply(self, feedback, extras):
        realized = self._realized_row(feedback)
        if extras is None:
            self._buffers.observe_row(feedback.chosen, realized)
            self._explore_counts[feedback.chosen - 1] += 1
            return
        pmf, eta = extras
        estimates = np.zeros(self._k)
        for j, loss in feedback.observed:
            trials = geometric_resample(j, pmf, self._graph, self._buffers, self._min_obs, self._rng)
            estimates[j - 1] = resampled_loss_estimate(loss, trials, True, cap=self._min_obs)
        self._buffers.observe_row(feedback.chosen, realized)  # window stays strictly pre-round
        if eta > 0:
            self._weights = exp_weight_update(self._weights, eta, estimates)

    def _extra_state(self):
        extra = self._base_extra()
        extra.update(
            {
                "capacity": self._buffers.capacity,
                "buffers": {f"{i + 1},{j + 1}": list(d) for (i, j), d in self._buffers._data.items()},
            }
        )
        return extra

    def _restore_extra(self, extra):
        self._restore_base_extra(extra)
        self._buffers = ResampleBuffer(self._graph, int(extra["capacity"]))
        for key, samples in extra["buffers"].items():
            i, j = (int(part) for part in key.split(","))
            self._buffers._data[(i - 1, j - 1)].extend(int(s) for s in samples)


_REGISTRY = {cls.algorithm: cls for cls in (Exp3, Exp3Dom, Exp3IP, Exp3UP, Exp3GR)}


def make_learner(config: LearnerConfig, graph: NominalGraph, probs=None, seed=0):
    """Build the learner named by ``config.algorithm``.

    Only exp3-ip takes (and requires) the edge-probability table; passing it
    to any other learner is a configuration error.
    """
    cls = _REGISTRY.get(config.algorithm)
    if cls is None:
        raise ConfigError(f"unknown algorithm {config.algorithm!r}")
    return cls(config, graph, probs=probs, seed=seed)


def load_snapshot(text: str, graph: NominalGraph, probs=None):
    """Rebuild a learner from ``snapshot()`` output plus its (static) graph."""
    payload = json.loads(text)
    if payload.get("version") != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {payload.get('version')}")
    cfg = payload["config"]
    config = LearnerConfig(
        algorithm=payload["algorithm"],
        schedule=parse_schedule(cfg["schedule"]),
        min_observations=int(cfg["min_observations"]),
        confidence_width=float(cfg["confidence_width"]),
        epsilon=cfg["epsilon"],
    )
    learner = make_learner(config, graph, probs=probs, seed=0)
    learner._round = int(payload["round"])
    learner._weights = WeightVector(np.array(payload["log_weights"], dtype=float))
    learner._rng = _decode_rng_state(payload["rng"])
    learner._restore_extra(payload["extra"])
    return learner

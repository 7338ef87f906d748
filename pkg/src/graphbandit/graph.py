"""Nominal feedback graphs and the graph quantities the learners rely on.

Expert indices are 1-based everywhere in the public API; the underlying
adjacency and probability matrices are plain 0-based numpy arrays where
row/column ``k`` belongs to expert ``k + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IngestError

__all__ = [
    "NominalGraph",
    "EdgeProbabilityTable",
    "VertexSet",
    "out_neighbors",
    "in_neighbors",
    "greedy_dominating_set",
    "independence_number",
    "expected_observations",
    "load_graph_file",
]

# Exact maximum-independent-set search is restricted to small graphs.
MAX_EXACT_INDEPENDENCE = 25


@dataclass(frozen=True)
class VertexSet:
    """Duplicate-free, ordered collection of 1-based expert indices."""

    members: tuple[int, ...]

    def __post_init__(self) -> None:
        members = tuple(int(i) for i in self.members)
        object.__setattr__(self, "members", members)
        if len(set(members)) != len(members):
            raise ValueError(f"duplicate vertices in {members}")
        if any(i < 1 for i in members):
            raise ValueError("expert indices are 1-based and must be >= 1")

    def __contains__(self, item: object) -> bool:
        return item in self.members

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class NominalGraph:
    """Directed feedback graph over experts; an edge (i, j) means choosing
    expert i may reveal expert j's loss.  Self-loops are mandatory: choosing
    an expert always has some chance of revealing its own loss."""

    adjacency: np.ndarray

    def __post_init__(self) -> None:
        adj = np.asarray(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        if adj.shape[0] < 1:
            raise ValueError("graph needs at least one expert")
        if not adj.diagonal().all():
            raise ValueError("every expert needs a self-loop")
        adj = adj.copy()
        adj.flags.writeable = False
        object.__setattr__(self, "adjacency", adj)

    @property
    def num_experts(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def complete(cls, num_experts: int) -> "NominalGraph":
        return cls(np.ones((num_experts, num_experts), dtype=bool))

    @classmethod
    def bandit(cls, num_experts: int) -> "NominalGraph":
        """Self-loops only: the classic bandit feedback structure."""
        return cls(np.eye(num_experts, dtype=bool))

    @classmethod
    def from_edges(cls, num_experts: int, edges) -> "NominalGraph":
        adj = np.zeros((num_experts, num_experts), dtype=bool)
        for i, j in edges:
            if not (1 <= i <= num_experts and 1 <= j <= num_experts):
                raise ValueError(f"edge ({i}, {j}) out of range for K={num_experts}")
            adj[i - 1, j - 1] = True
        return cls(adj)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NominalGraph):
            return NotImplemented
        return np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self) -> int:
        return hash(self.adjacency.tobytes())


@dataclass(frozen=True)
class EdgeProbabilityTable:
    """Per-edge observation probabilities: entry (i, j) is the chance that a
    loss at j is revealed when i is chosen.  ``epsilon`` is a strictly
    positive lower bound holding on every edge; non-edge entries are zero and
    never read."""

    probs: np.ndarray
    epsilon: float

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 2 or probs.shape[0] != probs.shape[1]:
            raise ValueError(f"probability table must be square, got {probs.shape}")
        if not np.isfinite(probs).all() or (probs < 0).any() or (probs > 1).any():
            raise ValueError("edge probabilities must lie in [0, 1]")
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must be in (0, 1], got {self.epsilon}")
        probs = probs.copy()
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @classmethod
    def from_probs(cls, graph: NominalGraph, probs, epsilon: float | None = None) -> "EdgeProbabilityTable":
        """Validate ``probs`` against ``graph``: edges in [epsilon, 1], non-edges 0."""
        probs = np.asarray(probs, dtype=float)
        if probs.shape != graph.adjacency.shape:
            raise ValueError("probability table shape does not match the graph")
        if (probs[~graph.adjacency] != 0).any():
            raise ValueError("non-edge entries must be exactly 0")
        edge_probs = probs[graph.adjacency]
        if epsilon is None:
            epsilon = float(edge_probs.min())
        if (edge_probs < epsilon).any():
            raise ValueError("some edge probability is below the stated epsilon")
        return cls(probs, epsilon)

    @classmethod
    def constant(cls, graph: NominalGraph, value: float) -> "EdgeProbabilityTable":
        probs = np.where(graph.adjacency, float(value), 0.0)
        return cls.from_probs(graph, probs, epsilon=float(value))

    @classmethod
    def uniform(cls, graph: NominalGraph, low: float, high: float, rng) -> "EdgeProbabilityTable":
        """Independent per-edge probabilities drawn uniformly from [low, high]."""
        if not 0 < low <= high <= 1:
            raise ValueError(f"need 0 < low <= high <= 1, got [{low}, {high}]")
        draws = rng.uniform(low, high, size=graph.adjacency.shape)
        probs = np.where(graph.adjacency, draws, 0.0)
        return cls.from_probs(graph, probs, epsilon=low)


def _check_index(graph: NominalGraph, i: int) -> int:
    if not 1 <= i <= graph.num_experts:
        raise ValueError(f"expert index {i} out of range 1..{graph.num_experts}")
    return int(i) - 1


def out_neighbors(graph: NominalGraph, i: int) -> VertexSet:
    """Experts whose losses may be revealed when ``i`` is chosen (includes i)."""
    row = graph.adjacency[_check_index(graph, i)]
    return VertexSet(tuple(int(j + 1) for j in np.flatnonzero(row)))


def in_neighbors(graph: NominalGraph, i: int) -> VertexSet:
    """Experts whose choice may reveal ``i``'s loss (includes i)."""
    col = graph.adjacency[:, _check_index(graph, i)]
    return VertexSet(tuple(int(j + 1) for j in np.flatnonzero(col)))


def greedy_dominating_set(graph: NominalGraph) -> VertexSet:
    """Greedy set cover over out-neighborhoods.

    Repeatedly picks the vertex covering the most still-uncovered vertices,
    breaking ties toward the lowest index, until every vertex is observable
    from some member.  Deterministic; self-loops guarantee termination.
    """
    adj = graph.adjacency
    uncovered = np.ones(graph.num_experts, dtype=bool)
    chosen: list[int] = []
    while uncovered.any():
        gains = (adj & uncovered).sum(axis=1)
        v = int(np.argmax(gains))  # argmax returns the first (lowest-index) max
        chosen.append(v + 1)
        uncovered &= ~adj[v]
    return VertexSet(tuple(chosen))


def independence_number(graph: NominalGraph) -> int:
    """Size of the largest vertex set with no edge (in either direction,
    self-loops ignored) between any two distinct members.

    Exact branch-and-bound; only supported for K <= 25.
    """
    n = graph.num_experts
    if n > MAX_EXACT_INDEPENDENCE:
        raise ValueError(f"exact independence number limited to K <= {MAX_EXACT_INDEPENDENCE}, got {n}")
    sym = graph.adjacency | graph.adjacency.T
    np.fill_diagonal(sym, False)
    nbr = []
    for v in range(n):
        mask = 0
        for u in np.flatnonzero(sym[v]):
            mask |= 1 << int(u)
        nbr.append(mask)
    return _mis_size((1 << n) - 1, nbr)


def _mis_size(mask: int, nbr: list[int]) -> int:
    if mask == 0:
        return 0
    best_v, best_deg = -1, -1
    mm = mask
    while mm:
        v = (mm & -mm).bit_length() - 1
        mm &= mm - 1
        deg = (nbr[v] & mask).bit_count()
        if deg > best_deg:
            best_deg, best_v = deg, v
    if best_deg == 0:
        return mask.bit_count()
    without = _mis_size(mask & ~(1 << best_v), nbr)
    with_v = 1 + _mis_size(mask & ~(1 << best_v) & ~nbr[best_v], nbr)
    return max(without, with_v)


def expected_observations(graph: NominalGraph, probs: EdgeProbabilityTable, i: int) -> float:
    """Expected number of losses revealed when ``i`` is chosen: the sum of
    edge probabilities over i's out-neighborhood.  Strictly positive."""
    row = _check_index(graph, i)
    return float(probs.probs[row][graph.adjacency[row]].sum())


def load_graph_file(path) -> tuple[NominalGraph, np.ndarray | None]:
    """Parse the graph literal format.

    Line 1 must be ``K=<int>``.  The body is either a single shorthand line
    (``complete [p]`` or ``bandit [p]``) or a list of ``edge i j [p]`` lines
    with 1-based endpoints.  Per-edge probabilities must be given for all
    edges or none; missing self-loops are an error, never silently added.
    Blank lines and ``#`` comments are ignored.

    Returns the graph plus the probability matrix, or None when the file
    carries no probabilities.
    """
    path = Path(path)
    lines = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if text:
            lines.append((lineno, text))
    if not lines:
        raise IngestError(f"{path}: empty graph file")

    lineno, header = lines[0]
    if not header.startswith("K="):
        raise IngestError(f"{path}:{lineno}: first line must be 'K=<int>', got {header!r}")
    try:
        num_experts = int(header[2:])
    except ValueError as exc:
        raise IngestError(f"{path}:{lineno}: bad expert count in {header!r}") from exc
    if num_experts < 1:
        raise IngestError(f"{path}:{lineno}: K must be >= 1")

    body = lines[1:]
    if not body:
        raise IngestError(f"{path}: no edges after the K= line")

    first_word = body[0][1].split()[0]
    if first_word in ("complete", "bandit"):
        if len(body) > 1:
            raise IngestError(f"{path}:{body[1][0]}: no lines allowed after a shorthand")
        parts = body[0][1].split()
        graph = NominalGraph.complete(num_experts) if first_word == "complete" else NominalGraph.bandit(num_experts)
        if len(parts) == 1:
            return graph, None
        if len(parts) == 2:
            value = _parse_prob(path, body[0][0], parts[1])
            return graph, np.where(graph.adjacency, value, 0.0)
        raise IngestError(f"{path}:{body[0][0]}: expected '{first_word} [p]'")

    adj = np.zeros((num_experts, num_experts), dtype=bool)
    probs = np.zeros((num_experts, num_experts), dtype=float)
    saw_prob: bool | None = None
    for lineno, text in body:
        parts = text.split()
        if parts[0] != "edge" or len(parts) not in (3, 4):
            raise IngestError(f"{path}:{lineno}: expected 'edge i j [p]', got {text!r}")
        try:
            i, j = int(parts[1]), int(parts[2])
        except ValueError as exc:
            raise IngestError(f"{path}:{lineno}: non-integer endpoint in {text!r}") from exc
        if not (1 <= i <= num_experts and 1 <= j <= num_experts):
            raise IngestError(f"{path}:{lineno}: edge ({i}, {j}) out of range for K={num_experts}")
        if adj[i - 1, j - 1]:
            raise IngestError(f"{path}:{lineno}: duplicate edge ({i}, {j})")
        adj[i - 1, j - 1] = True
        has_prob = len(parts) == 4
        if saw_prob is None:
            saw_prob = has_prob
        elif saw_prob != has_prob:
            raise IngestError(f"{path}:{lineno}: probabilities must be given for all edges or none")
        if has_prob:
            probs[i - 1, j - 1] = _parse_prob(path, lineno, parts[3])

    missing = [str(v + 1) for v in range(num_experts) if not adj[v, v]]
    if missing:
        raise IngestError(f"{path}: missing self-loop for expert(s) {', '.join(missing)}")
    graph = NominalGraph(adj)
    return graph, (probs if saw_prob else None)


def _parse_prob(path, lineno: int, token: str) -> float:
    try:
        value = float(token)
    except ValueError as exc:
        raise IngestError(f"{path}:{lineno}: bad probability {token!r}") from exc
    if not 0 < value <= 1:
        raise IngestError(f"{path}:{lineno}: probability {value} outside (0, 1]")
    return value

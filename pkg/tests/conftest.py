"""Shared brute-force oracles and generators for the test suite."""

import itertools

import numpy as np

from graphbandit.graph import NominalGraph


def random_graph(rng, num_experts, density=0.3):
    adj = rng.random((num_experts, num_experts)) < density
    np.fill_diagonal(adj, True)
    return NominalGraph(adj)


def brute_min_dominating_size(graph):
    """Exhaustive minimum dominating set size via subset enumeration."""
    k = graph.num_experts
    rows = []
    for v in range(k):
        mask = 0
        for u in np.flatnonzero(graph.adjacency[v]):
            mask |= 1 << int(u)
        rows.append(mask)
    full = (1 << k) - 1
    for size in range(1, k + 1):
        for combo in itertools.combinations(range(k), size):
            covered = 0
            for v in combo:
                covered |= rows[v]
            if covered == full:
                return size
    raise AssertionError("self-loops guarantee a cover")


def brute_independence_number(graph):
    """Exhaustive maximum independent set via subset enumeration."""
    sym = graph.adjacency | graph.adjacency.T
    k = graph.num_experts
    best = 0
    for mask in range(1 << k):
        members = [v for v in range(k) if mask >> v & 1]
        if all(not sym[a, b] for a, b in itertools.combinations(members, 2)):
            best = max(best, len(members))
    return best

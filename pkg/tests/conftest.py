"""Shared helpers: seeded random model builders and tiny reference oracles."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from mapprune import Factor, GraphicalModel


def random_pairwise(
    rng: np.random.Generator,
    n_lo: int = 3,
    n_hi: int = 8,
    k_lo: int = 2,
    k_hi: int = 4,
    edge_prob: float = 0.5,
    coupling: tuple[float, float] = (0.0, 1.0),
    noise: tuple[float, float] = (0.0, 1.0),
    mixed_labels: bool = False,
) -> GraphicalModel:
    n = int(rng.integers(n_lo, n_hi + 1))
    if mixed_labels:
        counts = [int(rng.integers(k_lo, k_hi + 1)) for _ in range(n)]
    else:
        counts = [int(rng.integers(k_lo, k_hi + 1))] * n
    factors = [Factor((v,), rng.uniform(*noise, counts[v])) for v in range(n)]
    for u in range(n):
        for v in range(u + 1, n):
            if rng.uniform() < edge_prob:
                factors.append(Factor((u, v), rng.uniform(*coupling, (counts[u], counts[v]))))
    return GraphicalModel(counts, factors)


def random_with_ternary(rng: np.random.Generator, n_lo: int = 4, n_hi: int = 7) -> GraphicalModel:
    base = random_pairwise(rng, n_lo=n_lo, n_hi=n_hi, k_lo=2, k_hi=3)
    counts = base.label_counts
    scope = tuple(sorted(rng.choice(base.num_nodes, size=3, replace=False).tolist()))
    shape = tuple(counts[v] for v in scope)
    return GraphicalModel(counts, list(base.factors) + [Factor(scope, rng.uniform(0, 1, shape))])


def enumerate_min(model: GraphicalModel) -> tuple[float, list[tuple[int, ...]]]:
    """Reference oracle: plain itertools enumeration, independent of the
    vectorized solver path."""
    from mapprune import energy

    best = None
    argbest: list[tuple[int, ...]] = []
    for x in itertools.product(*[range(k) for k in model.label_counts]):
        e = energy(model, x)
        if best is None or e < best - 1e-9:
            best, argbest = e, [x]
        elif abs(e - best) <= 1e-9:
            argbest.append(x)
    return best if best is not None else 0.0, argbest


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)

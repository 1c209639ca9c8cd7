"""Brute-force oracles for the cluster tree and its pruning.

Every query slices the level subgraph out of the adjacency matrix and labels
its connected components from scratch, sharing nothing with the union-find
sweep beyond the graph type.
"""

import numpy as np
from scipy.sparse.csgraph import connected_components

from app.core.config import get_settings
from app.core.errors import OracleSizeError, ParameterError
from app.domain.graph import LevelGraph

Partition = tuple[tuple[int, ...], ...]


def _check_size(g: LevelGraph, max_vertices: int | None) -> None:
    cap = max_vertices if max_vertices is not None else get_settings().oracle_max_vertices
    if g.n > cap:
        raise OracleSizeError(
            f"Oracle accepts at most {cap} vertices, graph has {g.n}."
        )


def oracle_components(
    g: LevelGraph, level: float, *, max_vertices: int | None = None
) -> Partition:
    """Components of the subgraph induced on {i: f_n(X_i) >= level}."""
    _check_size(g, max_vertices)
    present = np.flatnonzero(g.densities >= level)
    if present.size == 0:
        return ()

    sub = g.csr[present][:, present]
    _, labels = connected_components(sub, directed=False)

    blocks: dict[int, list[int]] = {}
    for v, label in zip(present.tolist(), labels.tolist()):
        blocks.setdefault(label, []).append(v)
    return tuple(sorted(tuple(block) for block in blocks.values()))


def oracle_prune(
    g: LevelGraph,
    level: float,
    epsilon_tilde: float,
    *,
    max_vertices: int | None = None,
) -> Partition:
    """Pruned components at `level`, evaluated literally on explicit subgraphs.

    Components of G_n(level) are joined when they meet the same component of
    G_n(level - epsilon_tilde). When epsilon_tilde > 0 and
    level <= epsilon_tilde, all present vertices form one block.
    """
    if epsilon_tilde < 0:
        raise ParameterError(f"Pruning parameter must be >= 0, got {epsilon_tilde}.")
    _check_size(g, max_vertices)

    upper = oracle_components(g, level, max_vertices=max_vertices)
    if not upper:
        return ()
    if epsilon_tilde > 0 and level <= epsilon_tilde:
        return (tuple(sorted(v for block in upper for v in block)),)

    lower = oracle_components(g, level - epsilon_tilde, max_vertices=max_vertices)
    lower_of = {v: idx for idx, block in enumerate(lower) for v in block}

    joined: dict[int, list[int]] = {}
    for block in upper:
        joined.setdefault(lower_of[block[0]], []).extend(block)
    return tuple(sorted(tuple(sorted(vs)) for vs in joined.values()))


def refines(fine: Partition, coarse: Partition) -> bool:
    """True when every block of `fine` lies inside one block of `coarse`."""
    owner = {v: idx for idx, block in enumerate(coarse) for v in block}
    for block in fine:
        owners = {owner.get(v) for v in block}
        if len(owners) != 1 or None in owners:
            return False
    return True

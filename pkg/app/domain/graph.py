from collections.abc import Iterable
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.sparse import coo_matrix, csr_array
from scipy.spatial import cKDTree

from app.core.errors import ParameterError
from app.core.logging import get_logger
from app.domain.density import DensityEstimate
from app.domain.geometry import (
    KnnIndex,
    PointSet,
    iter_distance_blocks,
    row_norms,
)
from app.schemas.config import GraphKind

logger = get_logger("domain.graph")

EdgeMethod = Literal["allpairs", "range"]


@dataclass(frozen=True)
class LevelGraph:
    """Undirected graph over sample indices with a density value per vertex.

    Adjacency is stored as a symmetric CSR matrix with sorted column indices,
    so `neighbors(i)` is an ascending array without duplicates or self-loops.
    """

    csr: csr_array
    densities: np.ndarray
    kind: GraphKind
    theta: float

    def __post_init__(self) -> None:
        self.densities.flags.writeable = False

    @property
    def n(self) -> int:
        return int(self.csr.shape[0])

    @property
    def edge_count(self) -> int:
        return int(self.csr.nnz // 2)

    def neighbors(self, i: int) -> np.ndarray:
        start, stop = self.csr.indptr[i], self.csr.indptr[i + 1]
        return self.csr.indices[start:stop]

    def degree(self, i: int) -> int:
        return int(self.csr.indptr[i + 1] - self.csr.indptr[i])

    def edges(self) -> list[tuple[int, int]]:
        """Edges (i, j) with i < j, sorted."""
        coo = self.csr.tocoo()
        upper = coo.row < coo.col
        pairs = sorted(zip(coo.row[upper].tolist(), coo.col[upper].tolist()))
        return pairs

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges: Iterable[tuple[int, int]],
        densities: Iterable[float],
        *,
        kind: GraphKind = GraphKind.KNN,
        theta: float = 1.0,
    ) -> "LevelGraph":
        """Build a graph from an explicit edge list (self-loops are dropped)."""
        values = np.asarray(list(densities), dtype=np.float64)
        if values.shape != (n,):
            raise ParameterError(f"Expected {n} density values, got {values.size}.")
        pairs = np.asarray([(i, j) for i, j in edges if i != j], dtype=np.int64)
        if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
            raise ParameterError(f"Edge endpoint out of range for n={n}.")
        rows = pairs[:, 0] if pairs.size else np.empty(0, dtype=np.int64)
        cols = pairs[:, 1] if pairs.size else np.empty(0, dtype=np.int64)
        return cls(_symmetric_csr(n, rows, cols), values, GraphKind(kind), theta)


def build_graph(
    ps: PointSet,
    idx: KnnIndex,
    dens: DensityEstimate,
    kind: GraphKind | str,
    theta: float,
    *,
    method: EdgeMethod = "allpairs",
    chunk_size: int | None = None,
) -> LevelGraph:
    """Build the theta-scaled k-NN (OR rule) or mutual k-NN (AND rule) graph.

    X_i and X_j are joined when ||X_i - X_j|| <= theta * r_{k,n}(X_i) or/and
    ||X_i - X_j|| <= theta * r_{k,n}(X_j), using closed balls and the sample
    radii.

    Raises:
        ParameterError: If theta <= 0, the inputs disagree on n, or the
            kind or method is unknown.
    """
    if not (np.isfinite(theta) and theta > 0):
        raise ParameterError(f"theta must be > 0, got {theta}.")
    if not (ps.n == idx.n == dens.values.size):
        raise ParameterError(
            f"Inconsistent sizes: points={ps.n}, radii={idx.n}, densities={dens.values.size}."
        )
    try:
        kind = GraphKind(kind)
    except ValueError as exc:
        raise ParameterError(
            f"Unknown graph kind '{kind}'. Available: knn, mutual"
        ) from exc

    reach = theta * idx.radii
    if method == "allpairs":
        rows, cols = _edges_allpairs(ps.points, reach, kind, chunk_size)
    elif method == "range":
        rows, cols = _edges_range(ps.points, reach, kind)
    else:
        raise ParameterError(
            f"Unknown edge method '{method}'. Available: allpairs, range"
        )

    graph = LevelGraph(
        _symmetric_csr(ps.n, rows, cols), np.array(dens.values), kind, float(theta)
    )
    logger.debug(
        "Built %s graph (theta=%g): %d vertices, %d edges",
        kind.value,
        theta,
        graph.n,
        graph.edge_count,
    )
    return graph


def _joined(dist: np.ndarray, reach_i: np.ndarray, reach_j: np.ndarray, kind: GraphKind):
    in_i = dist <= reach_i
    in_j = dist <= reach_j
    return (in_i | in_j) if kind is GraphKind.KNN else (in_i & in_j)


def _edges_allpairs(
    points: np.ndarray, reach: np.ndarray, kind: GraphKind, chunk_size: int | None
) -> tuple[np.ndarray, np.ndarray]:
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    for start, block in iter_distance_blocks(points, chunk_size):
        stop = start + block.shape[0]
        hit = _joined(block, reach[start:stop, None], reach[None, :], kind)
        r, c = np.nonzero(hit)
        r = r + start
        upper = r < c
        rows.append(r[upper])
        cols.append(c[upper])
    return np.concatenate(rows), np.concatenate(cols)


def _edges_range(
    points: np.ndarray, reach: np.ndarray, kind: GraphKind
) -> tuple[np.ndarray, np.ndarray]:
    # Candidate radius slightly above the largest reach so tree rounding never drops a pair
    tree = cKDTree(points)
    radius = float(reach.max()) * (1 + 1e-9)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    if pairs.size == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    i, j = pairs[:, 0], pairs[:, 1]
    dist = row_norms(np.ascontiguousarray(points[i] - points[j]))
    hit = _joined(dist, reach[i], reach[j], kind)
    return i[hit], j[hit]


def _symmetric_csr(n: int, rows: np.ndarray, cols: np.ndarray) -> csr_array:
    data = np.ones(2 * rows.size, dtype=np.int8)
    coo = coo_matrix(
        (data, (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
        shape=(n, n),
    )
    csr = csr_array(coo.tocsr())
    csr.sum_duplicates()
    csr.sort_indices()
    return csr

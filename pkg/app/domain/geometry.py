from collections.abc import Iterator, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.spatial import cKDTree

from app.core.config import get_settings
from app.core.errors import InputError, ParameterError
from app.core.logging import get_logger

logger = get_logger("domain.geometry")

KnnBackend = Literal["brute", "kdtree"]


@dataclass(frozen=True)
class PointSet:
    """n points in R^d. Row i of `points` is the point with index i."""

    points: np.ndarray

    def __post_init__(self) -> None:
        self.points.flags.writeable = False

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    def scaled(self, factor: float) -> "PointSet":
        if not (np.isfinite(factor) and factor > 0):
            raise ParameterError(f"Scale factor must be > 0, got {factor}.")
        return PointSet(np.array(self.points * factor, dtype=np.float64))

    def permuted(self, order: Sequence[int]) -> "PointSet":
        """Return a PointSet whose row j is row order[j] of this one."""
        return PointSet(np.array(self.points[np.asarray(order)], dtype=np.float64))


@dataclass(frozen=True)
class KnnIndex:
    k: int
    radii: np.ndarray
    neighbors: np.ndarray  # (n, k), sorted by (distance, index)

    def __post_init__(self) -> None:
        self.radii.flags.writeable = False
        self.neighbors.flags.writeable = False

    @property
    def n(self) -> int:
        return int(self.radii.shape[0])


def build_point_set(raw: Sequence[Sequence[float]] | np.ndarray) -> PointSet:
    """Validate raw coordinate rows and wrap them in a PointSet.

    Raises:
        InputError: on empty input, ragged rows, non-finite values or
            exact duplicate rows.
    """
    rows = list(raw)
    if not rows:
        raise InputError("No points given.", kind="empty")

    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise InputError(
            f"All rows must have the same dimension, got widths {sorted(widths)}.",
            kind="dimension_mismatch",
        )
    (d,) = widths
    if d < 1:
        raise InputError("Points must have at least one coordinate.", kind="empty")

    try:
        points = np.asarray(rows, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InputError(f"Non-numeric coordinate: {exc}", kind="invalid_value") from exc

    bad = ~np.isfinite(points)
    if bad.any():
        row, col = map(int, np.argwhere(bad)[0])
        raise InputError(
            f"Point {row} has a non-finite coordinate at position {col}.",
            kind="invalid_value",
        )

    _, first, counts = np.unique(points, axis=0, return_index=True, return_counts=True)
    if (counts > 1).any():
        dup_row = points[first[np.argmax(counts > 1)]]
        dup_idx = np.flatnonzero((points == dup_row).all(axis=1))
        raise InputError(
            f"Duplicate points at indices {dup_idx.tolist()}; "
            "the k-NN density estimate is undefined at atoms.",
            kind="duplicate_point",
        )

    logger.debug("Built point set with n=%d, d=%d", points.shape[0], d)
    return PointSet(points)


def pairwise_distances(points: np.ndarray, rows: np.ndarray | slice) -> np.ndarray:
    """Euclidean distances from points[rows] to every point.

    This is the single distance kernel of the package; every backend and every
    oracle goes through it so results agree bit for bit.
    """
    block = points[rows]
    diff = block[:, None, :] - points[None, :, :]
    return row_norms(diff.reshape(-1, points.shape[1])).reshape(block.shape[0], -1)


def row_norms(diff: np.ndarray) -> np.ndarray:
    """Euclidean norm of each row of a C-contiguous (m, d) array."""
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def iter_distance_blocks(
    points: np.ndarray, chunk_size: int | None = None
) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (start_row, distances) blocks covering the full distance matrix."""
    size = chunk_size or get_settings().distance_chunk_size
    n = points.shape[0]
    for start in range(0, n, size):
        stop = min(start + size, n)
        yield start, pairwise_distances(points, slice(start, stop))


def knn_index(
    ps: PointSet,
    k: int,
    *,
    backend: KnnBackend | None = None,
    chunk_size: int | None = None,
) -> KnnIndex:
    """Compute k-NN radii and neighbor lists (self excluded).

    Distance ties are broken by ascending point index.

    Args:
        ps: The sample.
        k: Neighbor count, 1 <= k <= n-1.
        backend: "brute" (all pairs) or "kdtree". Defaults to settings.
        chunk_size: Rows per distance block for the brute backend.

    Raises:
        ParameterError: If k is out of range.
    """
    if not (1 <= k <= ps.n - 1):
        raise ParameterError(f"k must satisfy 1 <= k <= n-1 = {ps.n - 1}, got {k}.")
    backend = backend or get_settings().knn_backend

    if backend == "brute":
        radii, neighbors = _knn_brute(ps.points, k, chunk_size)
    elif backend == "kdtree":
        radii, neighbors = _knn_kdtree(ps.points, k)
    else:
        raise ParameterError(
            f"Unknown k-NN backend '{backend}'. Available: brute, kdtree"
        )

    if (radii <= 0).any():
        raise InputError("Zero k-NN radius encountered.", kind="duplicate_point")

    logger.debug("k-NN index built (backend=%s, n=%d, k=%d)", backend, ps.n, k)
    return KnnIndex(k=k, radii=radii, neighbors=neighbors)


def _select_k(dists: np.ndarray, k: int) -> tuple[float, np.ndarray]:
    """Pick the k nearest entries of one distance row, ties by index.

    `dists` must already have the query point masked with +inf.
    """
    kth = np.partition(dists, k - 1)[k - 1]
    candidates = np.flatnonzero(dists <= kth)
    order = np.argsort(dists[candidates], kind="stable")
    return float(kth), candidates[order[:k]]


def _knn_brute(
    points: np.ndarray, k: int, chunk_size: int | None
) -> tuple[np.ndarray, np.ndarray]:
    n = points.shape[0]
    radii = np.empty(n, dtype=np.float64)
    neighbors = np.empty((n, k), dtype=np.int64)

    for start, block in iter_distance_blocks(points, chunk_size):
        rows = np.arange(start, start + block.shape[0])
        block[rows - start, rows] = np.inf
        for offset, row in enumerate(rows):
            radii[row], neighbors[row] = _select_k(block[offset], k)

    return radii, neighbors


def _knn_kdtree(points: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    n = points.shape[0]
    tree = cKDTree(points)
    approx, _ = tree.query(points, k=k + 1)
    # Widen the search a little so no point at the canonical k-th distance is missed
    reach = approx[:, -1] * (1 + 1e-9) + 1e-300
    candidate_lists = tree.query_ball_point(points, reach)

    radii = np.empty(n, dtype=np.float64)
    neighbors = np.empty((n, k), dtype=np.int64)
    for i, cand in enumerate(candidate_lists):
        cand = np.asarray(sorted(c for c in cand if c != i), dtype=np.int64)
        dists = row_norms(points[None, i, :] - points[cand])
        radii[i], picked = _select_k(dists, k)
        neighbors[i] = cand[picked]

    return radii, neighbors

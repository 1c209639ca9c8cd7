"""Binary merge forests over a descending density filtration.

Both the empirical cluster tree and its pruned variant are `ClusterForest`
instances grown by `grow_forest`. The sweep visits vertices by descending
level and replays spanning edges. An edge recorded at level m takes effect
once the lookup level (query level minus `lift`) drops to m, so the pruned
tree is the same sweep with the edges shifted up by the pruning parameter.
"""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from enum import StrEnum
from typing import NamedTuple

import numpy as np

from app.domain.union_find import DisjointSet
from app.schemas.tree import LeafRecord, TreeDocument, TreeNodeRecord

BOTTOM = -math.inf

Partition = tuple[tuple[int, ...], ...]


class NodeKind(StrEnum):
    LEAF = "leaf"
    MERGE = "merge"
    FLOOR = "floor"


class SpanningEdge(NamedTuple):
    """Edge (u, v) whose union changed connectivity when the sweep reached `level`."""

    u: int
    v: int
    level: float


@dataclass(frozen=True)
class ClusterNode:
    id: int
    kind: NodeKind
    level: float
    anchor: float
    children: tuple[int, ...]
    parent: int | None


@dataclass(frozen=True)
class MergeEvent:
    node: int
    left: int
    right: int
    level: float


@dataclass(frozen=True)
class Leaf:
    node: int
    birth_level: float
    death_level: float | None
    birth_members: tuple[int, ...]
    members: tuple[int, ...]

    def to_record(self) -> LeafRecord:
        return LeafRecord(
            leaf_id=self.node,
            birth_level=self.birth_level,
            size_at_birth=len(self.birth_members),
            size=len(self.members),
            death_level=self.death_level,
        )


def descending_order(levels: np.ndarray) -> np.ndarray:
    """Vertex indices by descending level, ties by ascending index."""
    return np.lexsort((np.arange(levels.size), -levels))


@dataclass(frozen=True)
class ClusterForest:
    levels: np.ndarray
    nodes: tuple[ClusterNode, ...]
    home: np.ndarray
    lift: float = 0.0
    floor: float | None = None

    def __post_init__(self) -> None:
        self.levels.flags.writeable = False
        self.home.flags.writeable = False

    @property
    def n(self) -> int:
        return int(self.levels.size)

    @property
    def roots(self) -> tuple[int, ...]:
        return tuple(node.id for node in self.nodes if node.parent is None)

    @property
    def merges(self) -> tuple[MergeEvent, ...]:
        return tuple(
            MergeEvent(node.id, node.children[0], node.children[1], node.level)
            for node in self.nodes
            if node.kind is not NodeKind.LEAF
        )

    def is_active(self, node: ClusterNode, level: float) -> bool:
        """Whether `node` already exists when the filtration is cut at `level`."""
        match node.kind:
            case NodeKind.LEAF:
                return node.anchor >= level
            case NodeKind.MERGE:
                return node.anchor >= level - self.lift
            case NodeKind.FLOOR:
                return level <= node.anchor

    def components_at_level(self, level: float) -> Partition:
        present = np.flatnonzero(self.levels >= level)
        if present.size == 0:
            return ()

        top = [-1] * len(self.nodes)
        # nodes are created children-first, so walk parents before children
        for node in reversed(self.nodes):
            if not self.is_active(node, level):
                continue
            parent = node.parent
            top[node.id] = top[parent] if parent is not None and top[parent] >= 0 else node.id

        blocks: dict[int, list[int]] = {}
        for v in present.tolist():
            blocks.setdefault(top[int(self.home[v])], []).append(v)
        return canonical_partition(blocks.values())

    def merge_level(self, i: int, j: int) -> float:
        """Highest level at which i and j share a component, or BOTTOM."""
        if i == j:
            return float(self.levels[i])
        ancestors = set(self._ancestors(int(self.home[i])))
        for node_id in self._ancestors(int(self.home[j])):
            if node_id in ancestors:
                return min(
                    self.nodes[node_id].level,
                    float(self.levels[i]),
                    float(self.levels[j]),
                )
        return BOTTOM

    def leaves(self) -> list[Leaf]:
        homed: dict[int, list[int]] = {}
        for v, node_id in enumerate(self.home.tolist()):
            homed.setdefault(node_id, []).append(v)

        result = []
        for node in self.nodes:
            if node.kind is not NodeKind.LEAF:
                continue
            members = tuple(homed.get(node.id, ()))
            result.append(
                Leaf(
                    node=node.id,
                    birth_level=node.level,
                    death_level=(
                        self.nodes[node.parent].level if node.parent is not None else None
                    ),
                    birth_members=tuple(
                        v for v in members if self.levels[v] >= node.anchor
                    ),
                    members=members,
                )
            )
        result.sort(key=lambda leaf: (-leaf.birth_level, leaf.node))
        return result

    def leaf_count(self) -> int:
        return sum(1 for node in self.nodes if node.kind is NodeKind.LEAF)

    def node_members(self, node_id: int) -> tuple[int, ...]:
        """Vertices homed anywhere in the subtree rooted at `node_id`."""
        inside = set()
        for node in reversed(self.nodes):
            if node.id == node_id or (node.parent is not None and node.parent in inside):
                inside.add(node.id)
        return tuple(v for v, h in enumerate(self.home.tolist()) if h in inside)

    def subtree_sizes(self) -> list[int]:
        sizes = np.bincount(self.home, minlength=len(self.nodes)).tolist()
        for node in self.nodes:
            if node.parent is not None:
                sizes[node.parent] += sizes[node.id]
        return sizes

    def to_document(self, epsilon_tilde: float | None = None) -> TreeDocument:
        sizes = self.subtree_sizes()
        leaf_ids = {leaf.node for leaf in self.leaves()}
        records = [
            TreeNodeRecord(
                id=node.id,
                kind=node.kind.value,
                birth_level=node.level,
                merge_level=(
                    self.nodes[node.parent].level if node.parent is not None else None
                ),
                children=list(node.children),
                member_count=sizes[node.id],
            )
            for node in self.nodes
        ]
        # each subtree is represented by its leaf with the highest birth level
        peak_leaf = [0] * len(self.nodes)
        for node in self.nodes:
            if node.kind is NodeKind.LEAF:
                peak_leaf[node.id] = node.id
            else:
                peak_leaf[node.id] = max(
                    (peak_leaf[child] for child in node.children),
                    key=lambda leaf: (self.nodes[leaf].level, -leaf),
                )
        home = self.home.tolist()
        return TreeDocument(
            n=self.n,
            max_level=float(self.levels.max()),
            epsilon_tilde=epsilon_tilde,
            roots=list(self.roots),
            leaves=sorted(leaf_ids),
            nodes=records,
            vertex_leaf=[peak_leaf[h] for h in home],
            vertex_node=home,
        )

    def _ancestors(self, node_id: int | None) -> Iterable[int]:
        while node_id is not None:
            yield node_id
            node_id = self.nodes[node_id].parent


def canonical_partition(blocks: Iterable[Iterable[int]]) -> Partition:
    """Sort each block and order blocks by their smallest member."""
    return tuple(sorted(tuple(sorted(block)) for block in blocks if block))


class _ForestBuilder:
    def __init__(self) -> None:
        self.kinds: list[NodeKind] = []
        self.levels: list[float] = []
        self.anchors: list[float] = []
        self.children: list[tuple[int, ...]] = []
        self.parents: list[int | None] = []

    def add(
        self, kind: NodeKind, level: float, anchor: float, children: tuple[int, ...] = ()
    ) -> int:
        node_id = len(self.kinds)
        self.kinds.append(kind)
        self.levels.append(level)
        self.anchors.append(anchor)
        self.children.append(children)
        self.parents.append(None)
        for child in children:
            self.parents[child] = node_id
        return node_id

    def join(self, a: int, b: int, kind: NodeKind, level: float, anchor: float) -> int:
        return self.add(kind, level, anchor, (min(a, b), max(a, b)))

    def freeze(self) -> tuple[ClusterNode, ...]:
        return tuple(
            ClusterNode(i, kind, level, anchor, children, parent)
            for i, (kind, level, anchor, children, parent) in enumerate(
                zip(self.kinds, self.levels, self.anchors, self.children, self.parents)
            )
        )


def grow_forest(
    levels: np.ndarray,
    edges: Sequence[SpanningEdge],
    *,
    lift: float = 0.0,
    floor: float | None = None,
) -> ClusterForest:
    """Sweep the filtration and return its merge forest.

    Args:
        levels: Per-vertex level (f_n values).
        edges: Union edges tagged with the level at which they join.
        lift: Shift applied to every edge level; 0 reproduces the filtration.
        floor: When set, every cluster present at or below this level is
            joined into one.
    """
    levels = np.asarray(levels, dtype=np.float64)
    n = levels.size
    order = descending_order(levels).tolist()
    position = [0] * n
    for rank, v in enumerate(order):
        position[v] = rank
    # edge.u is the vertex whose insertion created the edge
    ordered_edges = sorted(edges, key=lambda edge: (-edge.level, position[edge.u]))

    # every vertex at the lookup level is present there, so ties are joined
    # before any of them opens a leaf
    def edge_due(edge: SpanningEdge, lookup: float) -> bool:
        return edge.level >= lookup

    builder = _ForestBuilder()
    ds = DisjointSet(n)
    cluster_node: dict[int, int] = {}
    home = np.full(n, -1, dtype=np.int64)

    def apply_edge(edge: SpanningEdge) -> None:
        ru, rv = ds.find(edge.u), ds.find(edge.v)
        if ru == rv:
            return
        nu, nv = cluster_node.pop(ru, None), cluster_node.pop(rv, None)
        root = ds.union(ru, rv)
        if nu is not None and nv is not None:
            cluster_node[root] = builder.join(
                nu, nv, NodeKind.MERGE, edge.level + lift, edge.level
            )
        elif nu is not None or nv is not None:
            cluster_node[root] = nu if nu is not None else nv

    def apply_floor(level: float) -> None:
        roots = sorted({ds.find(i) for i in range(n)})
        present = sorted(cluster_node[r] for r in roots if r in cluster_node)
        for r in roots[1:]:
            ds.union(roots[0], r)
        cluster_node.clear()
        if not present:
            return
        acc = present[0]
        for other in present[1:]:
            acc = builder.join(acc, other, NodeKind.FLOOR, level, level)
        cluster_node[ds.find(0)] = acc

    e = 0
    floored = floor is None
    for v in order:
        f = float(levels[v])
        lookup = f - lift
        while e < len(ordered_edges) and edge_due(ordered_edges[e], lookup):
            apply_edge(ordered_edges[e])
            e += 1
        if not floored and f <= floor:
            while e < len(ordered_edges):
                apply_edge(ordered_edges[e])
                e += 1
            apply_floor(floor)
            floored = True

        root = ds.find(v)
        node_id = cluster_node.get(root)
        if node_id is None:
            node_id = builder.add(NodeKind.LEAF, f, f)
            cluster_node[root] = node_id
        home[v] = node_id

    while e < len(ordered_edges):
        apply_edge(ordered_edges[e])
        e += 1
    if not floored:
        apply_floor(floor)

    return ClusterForest(levels, builder.freeze(), home, lift=lift, floor=floor)

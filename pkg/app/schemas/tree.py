from pydantic import BaseModel, ConfigDict, Field


class TreeNodeRecord(BaseModel):
    id: int
    kind: str = Field(description="leaf, merge or floor")
    birth_level: float = Field(description="Level at which the cluster forms.")
    merge_level: float | None = Field(
        description="Level at which the cluster joins its parent; null for roots."
    )
    children: list[int]
    member_count: int

    model_config = ConfigDict(frozen=True)


class TreeDocument(BaseModel):
    """JSON export of an empirical (optionally pruned) cluster tree."""

    n: int
    max_level: float
    epsilon_tilde: float | None = None
    roots: list[int]
    leaves: list[int]
    nodes: list[TreeNodeRecord]
    vertex_leaf: list[int] = Field(
        description=(
            "For each vertex, the leaf with the highest birth level below the "
            "node the vertex was attached to."
        )
    )
    vertex_node: list[int] = Field(
        description="Node each vertex was attached to when it entered the filtration."
    )


class LeafRecord(BaseModel):
    leaf_id: int
    birth_level: float
    size_at_birth: int
    size: int
    death_level: float | None

    model_config = ConfigDict(frozen=True)


class RunSummary(BaseModel):
    n: int
    d: int
    k: int
    theta: float
    graph: str
    leaf_count: int
    max_f_n: float
    merge_count: int
    epsilon_tilde: float | None = None
    pruned_leaf_count: int | None = None

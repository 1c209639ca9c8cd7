class DisjointSet:
    """
    Disjoint sets over 0..n-1 with union by size and path compression.

    Examples
    --------
    >>> ds = DisjointSet(4)
    >>> ds.union(0, 1)
    0
    >>> ds.find(1)
    0
    >>> ds.union(2, 1)
    0
    >>> ds.size_of(2)
    3
    """

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        # path compression
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> int:
        """Join the sets of x and y and return the surviving root."""
        rx, ry = self.find(x), self.find(y)
        if rx == ry:
            return rx
        if self.size[rx] < self.size[ry]:
            rx, ry = ry, rx
        self.parent[ry] = rx
        self.size[rx] += self.size[ry]
        return rx

    def size_of(self, x: int) -> int:
        return self.size[self.find(x)]

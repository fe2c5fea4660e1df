"""Minimum s-t cuts on small real-capacity networks (Dinic's algorithm)."""

from __future__ import annotations

from collections import deque

EPS = 1e-12


class FlowNetwork:
    """Directed network stored as paired forward/residual arcs.

    Arc ``k`` and ``k ^ 1`` are mutual reverses. ``add_arc(u, v, c, c_rev)``
    inserts an arc of capacity ``c`` and its reverse with capacity ``c_rev``,
    so an undirected edge costs one pair instead of two.
    """

    def __init__(self, n: int, source: int, sink: int):
        if source == sink:
            raise ValueError("source and sink must differ")
        if not (0 <= source < n and 0 <= sink < n):
            raise ValueError("source/sink out of range")
        self.n = n
        self.source = source
        self.sink = sink
        self.head: list[int] = []
        self.cap: list[float] = []
        self.adj: list[list[int]] = [[] for _ in range(n)]

    def add_arc(self, u: int, v: int, cap: float, rev_cap: float = 0.0) -> int:
        if cap < 0 or rev_cap < 0:
            raise ValueError("capacities must be nonnegative")
        k = len(self.head)
        self.head += [v, u]
        self.cap += [float(cap), float(rev_cap)]
        self.adj[u].append(k)
        self.adj[v].append(k + 1)
        return k

    def arcs(self):
        """Yield ``(tail, head, capacity)`` for every stored arc with positive capacity."""
        for k in range(0, len(self.head), 2):
            u, v = self.head[k + 1], self.head[k]
            if self.cap[k] > 0:
                yield u, v, self.cap[k]
            if self.cap[k + 1] > 0:
                yield v, u, self.cap[k + 1]


def max_flow(net: FlowNetwork) -> tuple[float, list[float]]:
    """Maximum flow value and residual capacities (original network untouched)."""
    s, t = net.source, net.sink
    head, adj = net.head, net.adj
    res = list(net.cap)
    n = net.n
    total = 0.0
    while True:
        level = [-1] * n
        level[s] = 0
        q = deque([s])
        while q:
            x = q.popleft()
            for k in adj[x]:
                y = head[k]
                if level[y] < 0 and res[k] > EPS:
                    level[y] = level[x] + 1
                    q.append(y)
        if level[t] < 0:
            break
        it = [0] * n
        while True:
            pushed = _augment(s, t, head, adj, res, level, it)
            if pushed <= EPS:
                break
            total += pushed
    return total, res


def _augment(s, t, head, adj, res, level, it) -> float:
    """One blocking-flow path in the level graph (iterative DFS)."""
    path: list[int] = []
    x = s
    while True:
        if x == t:
            f = min(res[k] for k in path)
            for k in path:
                res[k] -= f
                res[k ^ 1] += f
            return f
        arcs = adj[x]
        advanced = False
        while it[x] < len(arcs):
            k = arcs[it[x]]
            y = head[k]
            if res[k] > EPS and level[y] == level[x] + 1:
                path.append(k)
                x = y
                advanced = True
                break
            it[x] += 1
        if advanced:
            continue
        if x == s:
            return 0.0
        # dead end: prune and back up
        level[x] = -1
        k = path.pop()
        x = head[k ^ 1]
        it[x] += 1


def min_cut(net: FlowNetwork) -> tuple[float, set[int]]:
    """Minimum cut value and the maximal source side among all minimum cuts.

    The maximal source side is the complement of the vertices that can still
    reach the sink in the residual graph.
    """
    value, res = max_flow(net)
    head, adj = net.head, net.adj
    reaches_t = [False] * net.n
    reaches_t[net.sink] = True
    q = deque([net.sink])
    while q:
        y = q.popleft()
        for k in adj[y]:
            # arc k leaves y; its reverse (k ^ 1) enters y from head[k]
            x = head[k]
            if not reaches_t[x] and res[k ^ 1] > EPS:
                reaches_t[x] = True
                q.append(x)
    side = {x for x in range(net.n) if not reaches_t[x]}
    return value, side


def cut_capacity(net: FlowNetwork, side: set[int]) -> float:
    return sum(c for u, v, c in net.arcs() if u in side and v not in side)

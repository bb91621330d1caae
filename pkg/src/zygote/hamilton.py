"""Hamiltonian cycles and paths on (induced subgraphs of) dual graphs.

Large instances first get a randomized rotation-extension search: the path
grows from its tail toward the neighbor with the fewest free neighbors, and a
stuck tail is replaced by rotating the path around one of the tail's path
neighbors. It only ever finds solutions. The exact search is a depth-first
backtracking walk in the same Warnsdorff order (ties to the lowest node id).
Branches are cut when an unvisited node can no longer be an interior path
node, when a node is forced to be next, or when the unvisited nodes stop being
connected. Only the exact search reports that no solution exists.
"""

from __future__ import annotations

import random
from collections import deque
from typing import Iterable, Mapping, Sequence

from .geometry import DualGraph

BRUTE_FORCE_LIMIT = 12
HEURISTIC_MIN_NODES = 16
HEURISTIC_TRIES = 12


class SearchBudgetExceeded(RuntimeError):
    """The node-expansion budget ran out before the search finished."""


def default_budget(n: int) -> int:
    return 10_000 * max(n, 1)


def _local(g: DualGraph | Sequence[Sequence[int]], nodes: Iterable[int] | None):
    adjacency = g.adjacency if isinstance(g, DualGraph) else g
    ids = sorted(range(len(adjacency)) if nodes is None else set(nodes))
    index = {n: i for i, n in enumerate(ids)}
    adj = [sorted(index[w] for w in adjacency[n] if w in index) for n in ids]
    return ids, index, adj


def _connected(adj: list[list[int]]) -> bool:
    if not adj:
        return True
    seen = [False] * len(adj)
    seen[0] = True
    queue = deque([0])
    count = 1
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if not seen[w]:
                seen[w] = True
                count += 1
                queue.append(w)
    return count == len(adj)


def _two_coloring(adj: list[list[int]]) -> list[int] | None:
    color = [-1] * len(adj)
    for s in range(len(adj)):
        if color[s] >= 0:
            continue
        color[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if color[w] < 0:
                    color[w] = 1 - color[u]
                    queue.append(w)
                elif color[w] == color[u]:
                    return None
    return color


def is_hamiltonian_path(g: DualGraph | Sequence[Sequence[int]], order: Sequence[int],
                        nodes: Iterable[int] | None = None) -> bool:
    adjacency = g.adjacency if isinstance(g, DualGraph) else g
    expected = set(range(len(adjacency))) if nodes is None else set(nodes)
    if len(order) != len(expected) or set(order) != expected:
        return False
    return all(b in adjacency[a] for a, b in zip(order, order[1:]))


def is_hamiltonian_cycle(g: DualGraph | Sequence[Sequence[int]], order: Sequence[int],
                         nodes: Iterable[int] | None = None) -> bool:
    adjacency = g.adjacency if isinstance(g, DualGraph) else g
    return (len(order) >= 3 and is_hamiltonian_path(g, order, nodes)
            and order[0] in adjacency[order[-1]])


class _Search:
    """One backtracking search over a local adjacency list."""

    def __init__(self, adj: list[list[int]], rank: list[int], budget: list[int],
                 positions: Mapping[int, int]):
        self.adj = adj
        self.rank = rank
        self.budget = budget
        self.at = {p: n for n, p in positions.items()}
        self.fixed = dict(positions)
        self.m = len(adj)
        self.visited = [False] * self.m
        self.unvisited_deg = [len(a) for a in adj]
        self.low = {n for n in range(self.m) if self.unvisited_deg[n] <= 1}
        self.remaining = self.m

    def _visit(self, v: int) -> None:
        self.budget[0] -= 1
        if self.budget[0] < 0:
            raise SearchBudgetExceeded("node-expansion budget exhausted")
        self.visited[v] = True
        self.remaining -= 1
        self.low.discard(v)
        for w in self.adj[v]:
            self.unvisited_deg[w] -= 1
            if not self.visited[w] and self.unvisited_deg[w] == 1:
                self.low.add(w)

    def _unvisit(self, v: int) -> None:
        self.visited[v] = False
        self.remaining += 1
        for w in self.adj[v]:
            self.unvisited_deg[w] += 1
            if not self.visited[w] and self.unvisited_deg[w] == 2:
                self.low.discard(w)
        if self.unvisited_deg[v] <= 1:
            self.low.add(v)

    def _feasible(self, end: int, last: int | None) -> tuple[bool, int | None]:
        """Check the unvisited remainder; also report a forced next node."""
        if self.remaining == 0:
            return True, None
        end_adj = self.adj[end]
        if self.remaining == 1:
            for w in end_adj:
                if not self.visited[w]:
                    return (last is None or w == last), w
            return False, None
        # a node with one unvisited neighbor is either next or final
        near, far = [], []
        for w in self.low:
            if self.unvisited_deg[w] == 0:
                return False, None
            if w == last:
                continue
            (near if w in end_adj else far).append(w)
        forced = None
        if last is not None:
            if far or len(near) > 1:
                return False, None
            forced = near[0] if near else None
        else:
            if len(far) > 1 or (far and len(near) > 1) or len(near) > 2:
                return False, None
            if far and near:
                forced = near[0]
        seen = set()
        queue = deque()
        for w in end_adj:
            if not self.visited[w]:
                seen.add(w)
                queue.append(w)
        while queue:
            u = queue.popleft()
            for w in self.adj[u]:
                if not self.visited[w] and w not in seen:
                    seen.add(w)
                    queue.append(w)
        if len(seen) != self.remaining:
            return False, None
        return True, forced

    def _candidates(self, end: int, depth: int, last: int | None, forced: int | None) -> list[int]:
        want = self.at.get(depth)
        out = []
        for w in self.adj[end]:
            if self.visited[w]:
                continue
            if want is not None and w != want:
                continue
            if forced is not None and w != forced:
                continue
            if w == last and self.remaining > 1:
                continue
            p = self.fixed.get(w)
            if p is not None and p != depth:
                continue
            out.append(w)
        out.sort(key=lambda w: (self.unvisited_deg[w], self.rank[w]))
        return out

    def run(self, start: int, last: int | None = None) -> list[int] | None:
        if self.fixed.get(start, 0) != 0 or self.at.get(0, start) != start:
            return None
        path = [start]
        self._visit(start)
        ok, forced = self._feasible(start, last)
        stack = [self._candidates(start, 1, last, forced) if ok else []]
        while stack:
            if len(path) == self.m:
                return path
            options = stack[-1]
            if not options:
                stack.pop()
                self._unvisit(path.pop())
                continue
            v = options.pop(0)
            path.append(v)
            self._visit(v)
            ok, forced = self._feasible(v, last)
            if len(path) == self.m:
                if ok:
                    return path
                stack.append([])
                continue
            stack.append(self._candidates(v, len(path), last, forced) if ok else [])
        return None


def _rotation_extension(adj: list[list[int]], rng: random.Random, budget: list[int],
                        start: int | None = None, close: bool = False) -> list[int] | None:
    """One randomized try; ``start`` keeps the head fixed, ``close`` asks for a cycle."""
    m = len(adj)
    steps = 20 * m + 100
    head = rng.randrange(m) if start is None else start
    path = [head]
    pos = [-1] * m
    pos[head] = 0
    free = [len(a) for a in adj]
    for w in adj[head]:
        free[w] -= 1

    def rotate(i: int) -> None:
        path[i + 1:] = path[:i:-1]
        for j in range(i + 1, len(path)):
            pos[path[j]] = j

    while steps > 0:
        steps -= 1
        budget[0] -= 1
        if budget[0] < 0:
            raise SearchBudgetExceeded("node-expansion budget exhausted")
        tail = path[-1]
        if len(path) == m:
            if not close or path[0] in adj[tail]:
                return path
        else:
            options = [w for w in adj[tail] if pos[w] < 0]
            if options:
                low = min(free[w] for w in options)
                v = rng.choice([w for w in options if free[w] == low])
                pos[v] = len(path)
                path.append(v)
                for w in adj[v]:
                    free[w] -= 1
                continue
        if start is None and rng.random() < 0.05:
            path.reverse()
            for j, v in enumerate(path):
                pos[v] = j
            continue
        pivots = [pos[w] for w in adj[tail] if pos[w] < len(path) - 2]
        if not pivots:
            if start is not None:
                return None
            path.reverse()
            for j, v in enumerate(path):
                pos[v] = j
            continue
        if len(path) < m:
            useful = [i for i in pivots if any(pos[w] < 0 for w in adj[path[i + 1]])]
        else:
            useful = [i for i in pivots if path[0] in adj[path[i + 1]]]
        rotate(rng.choice(useful or pivots))
    return None


def _heuristic(adj: list[list[int]], seed: int, budget: list[int], start: int | None = None,
               close: bool = False) -> list[int] | None:
    rng = random.Random(seed)
    for _ in range(HEURISTIC_TRIES):
        path = _rotation_extension(adj, rng, budget, start, close)
        if path is not None:
            return path
    return None


def _rank(m: int, seed: int) -> list[int]:
    rank = list(range(m))
    if seed:
        random.Random(seed).shuffle(rank)
    return rank


def ham_cycle(g: DualGraph | Sequence[Sequence[int]], seed: int = 0, budget: int | None = None,
              nodes: Iterable[int] | None = None) -> list[int] | None:
    """Hamiltonian cycle, or None when none exists.

    Raises SearchBudgetExceeded when the search gives up undecided.
    """
    ids, _, adj = _local(g, nodes)
    m = len(adj)
    if m < 3:
        raise ValueError("a Hamiltonian cycle needs at least 3 nodes")
    if not _connected(adj):
        raise ValueError("graph is disconnected")
    if any(len(a) < 2 for a in adj):
        return None
    color = _two_coloring(adj)
    if color is not None and 2 * sum(color) != m:
        return None
    left = [default_budget(m) if budget is None else budget]
    if m >= HEURISTIC_MIN_NODES:
        path = _heuristic(adj, seed, left, close=True)
        if path is not None:
            return [ids[i] for i in path]
    rank = list(range(m))
    s = min(range(m), key=lambda n: (len(adj[n]), rank[n]))
    ends = list(adj[s])
    if seed:
        random.Random(seed).shuffle(ends)
    for t in ends[:-1] if len(ends) > 2 else ends[:1]:
        path = _Search(adj, rank, left, {}).run(s, last=t)
        if path is not None:
            return [ids[i] for i in path]
    return None


def ham_path_from_cycle(cycle: Sequence[int], break_index: int) -> list[int]:
    """Open the cycle by removing the edge ``cycle[i] -> cycle[i+1]``."""
    n = len(cycle)
    if not 0 <= break_index < n:
        raise IndexError(f"break index {break_index} outside 0..{n - 1}")
    return list(cycle[break_index + 1:]) + list(cycle[:break_index + 1])


def ham_path_constrained(g: DualGraph | Sequence[Sequence[int]], nodes: Iterable[int] | None = None,
                         start: int | None = None, positions: Mapping[int, int] | None = None,
                         seed: int = 0, budget: int | None = None) -> list[int] | None:
    """Hamiltonian path of the subgraph induced by ``nodes``.

    ``start`` pins the first node; ``positions`` maps node -> 0-based index.
    Returns None when the constraints are provably infeasible and raises
    SearchBudgetExceeded when the budget runs out first.
    """
    ids, index, adj = _local(g, nodes)
    m = len(adj)
    if m == 0:
        raise ValueError("empty subgraph")
    if not _connected(adj):
        raise ValueError("subgraph is disconnected")
    fixed: dict[int, int] = {}
    for n, p in (positions or {}).items():
        if n not in index or not 0 <= p < m:
            return None
        fixed[index[n]] = p
    if start is not None:
        if start not in index:
            return None
        fixed.setdefault(index[start], 0)
        if fixed[index[start]] != 0:
            return None
    if len(set(fixed.values())) != len(fixed):
        return None
    if m == 1:
        return [ids[0]]
    color = _two_coloring(adj)
    if color is not None:
        ones = sum(color)
        if abs(2 * ones - m) > 1:
            return None
        bigger = 1 if 2 * ones > m else 0
        for n, p in fixed.items():
            # in an odd path of a bipartite graph even positions hold the larger class
            if m % 2 == 1 and (color[n] == bigger) != (p % 2 == 0):
                return None
    ends = [n for n in range(m) if len(adj[n]) == 1]
    if len(ends) > 2:
        return None
    left = [default_budget(m) if budget is None else budget]
    head = [n for n, p in fixed.items() if p == 0]
    if m >= HEURISTIC_MIN_NODES and set(fixed.values()) <= {0}:
        path = _heuristic(adj, seed, left, start=head[0] if head else None)
        if path is not None:
            return [ids[i] for i in path]
    rank = _rank(m, seed)
    first = [n for n, p in fixed.items() if p == 0]
    if first:
        starts = first
    elif ends:
        starts = sorted(ends, key=lambda n: rank[n])
    else:
        starts = sorted(range(m), key=lambda n: (len(adj[n]), rank[n]))
    for s in starts:
        path = _Search(adj, rank, left, fixed).run(s)
        if path is not None:
            return [ids[i] for i in path]
    return None


def brute_force_ham(g: DualGraph | Sequence[Sequence[int]], mode: str = "cycle",
                    nodes: Iterable[int] | None = None, limit: int | None = None) -> list[tuple[int, ...]]:
    """Every Hamiltonian path or cycle, by plain enumeration (test oracle).

    Paths are reported once per reversal pair, cycles once per
    rotation/reflection class. ``limit`` stops after that many solutions.
    """
    if mode not in ("path", "cycle"):
        raise ValueError("mode must be 'path' or 'cycle'")
    ids, _, adj = _local(g, nodes)
    m = len(adj)
    if m > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} nodes")
    if m == 0 or (mode == "cycle" and m < 3):
        return []
    found: set[tuple[int, ...]] = set()
    sets = [set(a) for a in adj]

    def extend(path: list[int], used: list[bool]) -> bool:
        if len(path) == m:
            if mode == "path":
                if m == 1 or path[0] < path[-1]:
                    found.add(tuple(path))
            elif path[0] in sets[path[-1]] and path[1] < path[-1]:
                found.add(tuple(path))
            return limit is not None and len(found) >= limit
        for w in adj[path[-1]]:
            if not used[w]:
                used[w] = True
                path.append(w)
                if extend(path, used):
                    return True
                path.pop()
                used[w] = False
        return False

    for s in (range(m) if mode == "path" else [0]):
        used = [False] * m
        used[s] = True
        if extend([s], used):
            break
    return sorted(tuple(ids[i] for i in sol) for sol in found)

"""Pile placement on a 2-D grid and the parent order over piles."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .geometry import DualGraph
from .partition import BalancedPartition

MAX_PILES = 8

Cell = tuple[int, int]


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class Hypergraph:
    k: int
    weights: dict[tuple[int, int], int]

    def weight(self, i: int, j: int) -> int:
        return self.weights.get((min(i, j), max(i, j)), 0)


@dataclass(frozen=True)
class PilePlacement:
    cells: tuple[Cell, ...]
    realized: frozenset[tuple[int, int]]
    weight: int

    @property
    def rows(self) -> int:
        return max(r for r, _ in self.cells) + 1

    @property
    def cols(self) -> int:
        return max(c for _, c in self.cells) + 1

    def direction(self, src: int, dst: int) -> int:
        """Compass index of ``dst`` seen from ``src``: 0=+col 1=+row 2=-col 3=-row."""
        (r0, c0), (r1, c1) = self.cells[src], self.cells[dst]
        step = (r1 - r0, c1 - c0)
        lookup = {(0, 1): 0, (1, 0): 1, (0, -1): 2, (-1, 0): 3}
        if step not in lookup:
            raise LayoutError(f"piles {src} and {dst} are not grid neighbors")
        return lookup[step]


@dataclass(frozen=True)
class PileParentTree:
    reference: int
    parent: tuple[int, ...]
    order: tuple[int, ...]  # BFS order from the reference

    def depth(self, pile: int) -> int:
        d = 0
        while pile != self.reference:
            pile = self.parent[pile]
            d += 1
        return d

    def children(self, pile: int) -> list[int]:
        return [p for p in self.order if p != self.reference and self.parent[p] == pile]


def build_hypergraph(g: DualGraph, partition: BalancedPartition | Sequence[int], k: int | None = None) -> Hypergraph:
    if isinstance(partition, BalancedPartition):
        labels, k = partition.labels, partition.k
    else:
        labels = partition
        if k is None:
            k = max(labels) + 1
    weights: dict[tuple[int, int], int] = {}
    for e in g.edges:
        a, b = labels[e.a], labels[e.b]
        if a != b:
            key = (min(a, b), max(a, b))
            weights[key] = weights.get(key, 0) + 1
    return Hypergraph(k, dict(sorted(weights.items())))


def _normalize(cells: Sequence[Cell]) -> tuple[Cell, ...]:
    r0 = min(r for r, _ in cells)
    c0 = min(c for _, c in cells)
    return tuple((r - r0, c - c0) for r, c in cells)


_SYMMETRIES = (
    lambda r, c: (r, c), lambda r, c: (c, -r), lambda r, c: (-r, -c), lambda r, c: (-c, r),
    lambda r, c: (r, -c), lambda r, c: (-c, -r), lambda r, c: (-r, c), lambda r, c: (c, r),
)


def canonical_cells(cells: Sequence[Cell]) -> tuple[Cell, ...]:
    """Smallest normalized cell list (in pile order) over the 8 grid symmetries."""
    return min(_normalize([f(r, c) for r, c in cells]) for f in _SYMMETRIES)


@lru_cache(maxsize=None)
def free_polyominoes(size: int) -> tuple[tuple[Cell, ...], ...]:
    """One representative per free polyomino of ``size`` cells."""
    shapes = {((0, 0),)}
    for _ in range(size - 1):
        grown = set()
        for shape in shapes:
            occupied = set(shape)
            for r, c in shape:
                for dr, dc in ((0, 1), (1, 0), (0, -1), (-1, 0)):
                    cell = (r + dr, c + dc)
                    if cell not in occupied:
                        grown.add(tuple(sorted(_normalize(list(shape) + [cell]))))
        shapes = grown
    free = {min(tuple(sorted(_normalize([f(r, c) for r, c in s]))) for f in _SYMMETRIES) for s in shapes}
    return tuple(sorted(free))


def _realized(h: Hypergraph, cells: Sequence[Cell]) -> frozenset[tuple[int, int]]:
    out = set()
    for (i, j), w in h.weights.items():
        (r0, c0), (r1, c1) = cells[i], cells[j]
        if w > 0 and abs(r0 - r1) + abs(c0 - c1) == 1:
            out.add((i, j))
    return frozenset(out)


def _spans(k: int, pairs: frozenset[tuple[int, int]]) -> bool:
    adj: list[list[int]] = [[] for _ in range(k)]
    for i, j in pairs:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == k


def optimal_placement(h: Hypergraph) -> PilePlacement:
    """Grid placement of the piles maximizing the realized adjacency weight.

    Exhaustive over free polyominoes and pile-to-cell assignments, with a
    weight bound for pruning. Placements whose realized adjacencies connect
    all piles rank ahead of those that do not. Ties go to the smallest
    canonical cell list.
    """
    k = h.k
    if k > MAX_PILES:
        raise LayoutError("pile count beyond exhaustive placement limit")
    if k == 1:
        return PilePlacement(((0, 0),), frozenset(), 0)
    w = [[h.weight(i, j) for j in range(k)] for i in range(k)]
    order = sorted(range(k), key=lambda p: (-sum(w[p]), p))
    pairs = sorted(((wt, i, j) for (i, j), wt in h.weights.items() if wt > 0), reverse=True)
    best: dict[bool, tuple[int, tuple[Cell, ...]] | None] = {True: None, False: None}

    def consider(assign: dict[int, Cell], weight: int) -> None:
        cells = tuple(assign[p] for p in range(k))
        spanning = _spans(k, _realized(h, cells))
        current = best[spanning]
        if current is not None and weight < current[0]:
            return
        canon = canonical_cells(cells)
        if current is None or weight > current[0] or canon < current[1]:
            best[spanning] = (weight, canon)

    def bound_target() -> int:
        return -1 if best[True] is None else best[True][0]

    def shape_links(shape: tuple[Cell, ...]) -> list[tuple[Cell, Cell]]:
        cells = set(shape)
        return [(a, (a[0] + dr, a[1] + dc)) for a in shape for dr, dc in ((0, 1), (1, 0))
                if (a[0] + dr, a[1] + dc) in cells]

    shapes = sorted(free_polyominoes(k), key=lambda s: (-len(shape_links(s)), s))
    for shape in shapes:
        links = shape_links(shape)
        if sum(wt for wt, _, _ in pairs[:len(links)]) < bound_target():
            continue
        assign: dict[int, Cell] = {}
        used: set[Cell] = set()

        def place(t: int, weight: int) -> None:
            # undecided hyperedges can use at most the still-open cell adjacencies
            open_links = sum(1 for a, b in links if a not in used or b not in used)
            room = 0
            taken = 0
            for wt, i, j in pairs:
                if taken == open_links:
                    break
                if i not in assign or j not in assign:
                    room += wt
                    taken += 1
            if weight + room < bound_target():
                return
            if t == k:
                consider(assign, weight)
                return
            p = order[t]
            for cell in shape:
                if cell in used:
                    continue
                gain = 0
                for q, qc in assign.items():
                    if w[p][q] and abs(qc[0] - cell[0]) + abs(qc[1] - cell[1]) == 1:
                        gain += w[p][q]
                assign[p] = cell
                used.add(cell)
                place(t + 1, weight + gain)
                del assign[p]
                used.discard(cell)

        place(0, 0)

    chosen = best[True] or best[False]
    assert chosen is not None
    weight, cells = chosen
    return PilePlacement(cells, _realized(h, cells), weight)


def parent_tree(h: Hypergraph, placement: PilePlacement, reference: int = 0) -> PileParentTree:
    """BFS over realized adjacencies from ``reference``; lowest pile id first."""
    k = h.k
    if not 0 <= reference < k:
        raise LayoutError(f"reference pile {reference} out of range")
    adj: list[list[int]] = [[] for _ in range(k)]
    for i, j in placement.realized:
        adj[i].append(j)
        adj[j].append(i)
    parent = [-1] * k
    parent[reference] = reference
    order = [reference]
    queue = deque([reference])
    while queue:
        u = queue.popleft()
        for v in sorted(adj[u]):
            if parent[v] < 0:
                parent[v] = u
                order.append(v)
                queue.append(v)
    if len(order) != k:
        raise LayoutError("pile placement disconnects piles")
    return PileParentTree(reference, tuple(parent), tuple(order))

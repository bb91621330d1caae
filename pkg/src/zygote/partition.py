"""Exactly balanced, connected K-way partitions with FM refinement.

Starting partitions come from region growing around K spread-out roots (the
first at random, each next one farthest from the others) and are then
rebalanced by shifting boundary nodes along chains of adjacent parts.
Refinement is a K-way Fiduccia-Mattheyses pass with unit edge weights: nodes
move one at a time (best gain first, lowest id on ties), each moved node is
locked for the rest of the pass, part sizes may drift by one, and the pass is
rolled back to its best balanced prefix. Every move keeps both parts connected.
"""

from __future__ import annotations

import heapq
import logging
import random
from collections import deque
from dataclasses import dataclass
from typing import Sequence

from .geometry import DualGraph

log = logging.getLogger(__name__)

DEFAULT_MAX_TRIES = 200
_LOCAL_SEARCH_LIMIT = 200


class PartitionError(ValueError):
    """Partition request that cannot be satisfied."""


@dataclass(frozen=True)
class BalancedPartition:
    labels: tuple[int, ...]
    k: int

    def parts(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.k)]
        for n, p in enumerate(self.labels):
            out[p].append(n)
        return out


def cut_weight(g: DualGraph, labels: Sequence[int]) -> int:
    return sum(1 for e in g.edges if labels[e.a] != labels[e.b])


def part_sizes(labels: Sequence[int], k: int) -> list[int]:
    sizes = [0] * k
    for p in labels:
        sizes[p] += 1
    return sizes


def parts_connected(g: DualGraph, labels: Sequence[int], k: int) -> bool:
    groups: list[list[int]] = [[] for _ in range(k)]
    for n, p in enumerate(labels):
        groups[p].append(n)
    return all(g.is_connected(grp) for grp in groups)


def _safe_to_remove(adj: list[list[int]], labels: list[int], v: int) -> bool:
    """True if part ``labels[v]`` stays connected without ``v``.

    Checked locally: the neighbors of ``v`` in its part must reach each other
    through a bounded search that avoids ``v``. A failed search is treated as
    unsafe, so the answer is conservative.
    """
    p = labels[v]
    same = [w for w in adj[v] if labels[w] == p]
    if len(same) <= 1:
        return True
    targets = set(same[1:])
    seen = {v, same[0]}
    queue = deque([same[0]])
    budget = _LOCAL_SEARCH_LIMIT
    while queue and targets and budget:
        u = queue.popleft()
        budget -= 1
        for w in adj[u]:
            if labels[w] == p and w not in seen:
                seen.add(w)
                targets.discard(w)
                queue.append(w)
    return not targets


class _State:
    def __init__(self, g: DualGraph, labels: Sequence[int], k: int):
        self.adj = g.adjacency
        self.k = k
        self.labels = list(labels)
        self.sizes = part_sizes(self.labels, k)
        self.cut = cut_weight(g, self.labels)

    def links(self, v: int) -> list[int]:
        counts = [0] * self.k
        for w in self.adj[v]:
            counts[self.labels[w]] += 1
        return counts

    def best_move(self, v: int) -> tuple[int, int] | None:
        counts = self.links(v)
        here = self.labels[v]
        best = None
        for q in range(self.k):
            if q != here and counts[q] > 0:
                gain = counts[q] - counts[here]
                if best is None or gain > best[0]:
                    best = (gain, q)
        return best

    def move(self, v: int, q: int) -> None:
        counts = self.links(v)
        p = self.labels[v]
        self.cut -= counts[q] - counts[p]
        self.labels[v] = q
        self.sizes[p] -= 1
        self.sizes[q] += 1


def _imbalance(sizes: list[int], target: int) -> int:
    return sum(abs(s - target) for s in sizes)


def fm_refine(g: DualGraph, labels: Sequence[int], k: int, max_passes: int = 50,
              stall: int | None = None) -> list[int]:
    """FM passes until one brings no improvement; cut weight never increases."""
    n = len(g.nodes)
    target = n // k
    state = _State(g, labels, k)
    stall = stall if stall is not None else max(25, min(200, n // 20))
    for _ in range(max_passes):
        start_key = (_imbalance(state.sizes, target), state.cut)
        slack = max(1, max(abs(s - target) for s in state.sizes))
        lo_size = max(1, target - slack)
        hi_size = target + slack
        locked = [False] * n
        heap: list[tuple[int, int, int]] = []
        for v in range(n):
            m = state.best_move(v)
            if m is not None:
                heapq.heappush(heap, (-m[0], v, m[1]))
        history: list[tuple[int, int]] = []
        best_key, best_len = start_key, 0
        since_best = 0
        while heap and since_best < stall:
            neg_gain, v, q = heapq.heappop(heap)
            if locked[v]:
                continue
            current = state.best_move(v)
            if current is None or (current[0], current[1]) != (-neg_gain, q):
                if current is not None:
                    heapq.heappush(heap, (-current[0], v, current[1]))
                continue
            p = state.labels[v]
            if state.sizes[p] - 1 < lo_size or state.sizes[q] + 1 > hi_size:
                continue
            if not _safe_to_remove(state.adj, state.labels, v):
                continue
            state.move(v, q)
            locked[v] = True
            history.append((v, p))
            key = (_imbalance(state.sizes, target), state.cut)
            if key[0] <= start_key[0] and key[1] <= start_key[1] and key < best_key:
                best_key, best_len = key, len(history)
                since_best = 0
            else:
                since_best += 1
            for w in g.adjacency[v]:
                if not locked[w]:
                    m = state.best_move(w)
                    if m is not None:
                        heapq.heappush(heap, (-m[0], w, m[1]))
        for v, p in reversed(history[best_len:]):
            state.move(v, p)
        if best_len == 0:
            break
    return state.labels


def _bfs_distances(g: DualGraph, sources: Sequence[int]) -> list[int]:
    dist = [-1] * len(g.nodes)
    queue = deque(sources)
    for s in sources:
        dist[s] = 0
    while queue:
        u = queue.popleft()
        for w in g.adjacency[u]:
            if dist[w] < 0:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def _spread_roots(g: DualGraph, k: int, rng: random.Random) -> list[int]:
    """First root at random, each further root as far as possible from the rest."""
    roots = [rng.randrange(len(g.nodes))]
    while len(roots) < k:
        dist = _bfs_distances(g, roots)
        far = max(dist)
        roots.append(rng.choice([v for v, d in enumerate(dist) if d == far]))
    return roots


def _grow_regions(g: DualGraph, k: int, rng: random.Random) -> list[int]:
    n = len(g.nodes)
    target = n // k
    roots = _spread_roots(g, k, rng)
    labels = [-1] * n
    frontier: list[list[int]] = [[] for _ in range(k)]
    sizes = [0] * k
    for p, r in enumerate(roots):
        labels[r] = p
        sizes[p] = 1
        frontier[p].extend(g.adjacency[r])
    active = True
    while active:
        active = False
        for p in sorted(range(k), key=lambda q: (sizes[q], q)):
            if sizes[p] >= target:
                continue
            options = [w for w in frontier[p] if labels[w] < 0]
            frontier[p] = options
            if not options:
                continue
            # prefer the candidate most attached to the region
            scores = [sum(1 for x in g.adjacency[w] if labels[x] == p) for w in options]
            top = max(scores)
            pick = rng.choice([w for w, s in zip(options, scores) if s == top])
            labels[pick] = p
            sizes[p] += 1
            frontier[p].extend(x for x in g.adjacency[pick] if labels[x] < 0)
            active = True
            break
    # absorb whatever the capped regions could not reach
    queue = deque(v for v in range(n) if labels[v] >= 0)
    while queue:
        u = queue.popleft()
        for w in g.adjacency[u]:
            if labels[w] < 0:
                labels[w] = labels[u]
                queue.append(w)
    return labels


def _rebalance(g: DualGraph, labels: list[int], k: int, rng: random.Random, max_steps: int) -> bool:
    n = len(labels)
    target = n // k
    adj = g.adjacency
    sizes = part_sizes(labels, k)
    for _ in range(max_steps):
        over = [p for p in range(k) if sizes[p] > target]
        if not over:
            return True
        src = max(over, key=lambda p: (sizes[p], -p))
        # shortest chain of adjacent parts from src to some undersized part
        touching: list[set[int]] = [set() for _ in range(k)]
        for e in g.edges:
            a, b = labels[e.a], labels[e.b]
            if a != b:
                touching[a].add(b)
                touching[b].add(a)
        prev = {src: src}
        queue = deque([src])
        sink = None
        while queue and sink is None:
            p = queue.popleft()
            for q in sorted(touching[p]):
                if q not in prev:
                    prev[q] = p
                    if sizes[q] < target:
                        sink = q
                        break
                    queue.append(q)
        if sink is None:
            return False
        chain = [sink]
        while chain[-1] != src:
            chain.append(prev[chain[-1]])
        chain.reverse()
        for p, q in zip(chain, chain[1:]):
            options = []
            for v in range(n):
                if labels[v] != p:
                    continue
                inward = sum(1 for w in adj[v] if labels[w] == q)
                if inward == 0 or not _safe_to_remove(adj, labels, v):
                    continue
                outward = sum(1 for w in adj[v] if labels[w] == p)
                options.append((inward - outward, v))
            if not options:
                return False
            top = max(o[0] for o in options)
            v = rng.choice([v for gain, v in options if gain == top])
            labels[v] = q
            sizes[p] -= 1
            sizes[q] += 1
    return all(s == target for s in sizes)


def random_balanced_start(g: DualGraph, k: int, rng: random.Random) -> list[int] | None:
    labels = _grow_regions(g, k, rng)
    if not _rebalance(g, labels, k, rng, max_steps=4 * len(labels)):
        return None
    return labels


def balanced_partition(g: DualGraph, k: int, seed: int = 0,
                       max_tries: int = DEFAULT_MAX_TRIES, rounds: int = 8) -> BalancedPartition | None:
    """K parts of exactly |V|/K nodes, each connected, with small cut.

    Each try grows a random start and refines it; ``rounds`` successful tries
    are pooled and the smallest cut wins. Returns None after ``max_tries``
    tries without a single success.
    """
    n = len(g.nodes)
    if k < 1:
        raise PartitionError("pile count must be >= 1")
    if n % k:
        raise PartitionError("panel count not divisible by pile count")
    if not g.is_connected():
        raise PartitionError("graph is disconnected")
    if k == 1:
        return BalancedPartition(tuple([0] * n), 1)
    rng = random.Random(seed)
    best: tuple[int, list[int]] | None = None
    successes = 0
    for attempt in range(max_tries):
        labels = random_balanced_start(g, k, rng)
        if labels is None:
            log.debug("partition try %d: start could not be balanced", attempt)
            continue
        labels = fm_refine(g, labels, k)
        if part_sizes(labels, k) != [n // k] * k or not parts_connected(g, labels, k):
            log.debug("partition try %d: refinement left parts unbalanced or split", attempt)
            continue
        cut = cut_weight(g, labels)
        if best is None or cut < best[0]:
            best = (cut, labels)
        successes += 1
        if successes >= rounds:
            break
    if best is None:
        return None
    return BalancedPartition(tuple(best[1]), k)

"""Stacking: per-pile paths, inter-pile bridges and the coded-sequence tree.

Stacked geometry. Pile ``i`` sits in grid cell ``placement.cells[i]``; its
panels lie flat, one per height. A panel's orientation is ``(r, f)``: with
``f == 0`` the outward normal points up and side ``k`` faces compass direction
``(r + k) % 4``; with ``f == 1`` the normal points down and side ``k`` faces
``(r - k) % 4``. Compass directions are 0=+col, 1=+row, 2=-col, 3=-row.

A fold between consecutive panels of a pile keeps the hinge edge in place and
turns the panel over, so both hinge sides face the same direction and the flips
differ. A bridge joins equal heights of grid-neighboring piles lying flat, so
the flips agree and the hinge sides face each other.
"""

from __future__ import annotations

import hashlib
import logging
import random
from collections import Counter, deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .geometry import DualGraph
from .hamilton import HEURISTIC_TRIES, SearchBudgetExceeded, ham_path_constrained, is_hamiltonian_path
from .layout import (LayoutError, PileParentTree, PilePlacement, build_hypergraph,
                     optimal_placement, parent_tree)
from .partition import balanced_partition
from .sequence import BRIDGE, INTRA, CodedSequence, Hinge, PanelRecord, make_sequence

log = logging.getLogger(__name__)

Orientation = tuple[int, int]  # (r, f)

DEFAULT_MOVES = 1000
DEFAULT_MAX_RESTARTS = 20
POLICIES = ("single", "all")


class StackingError(RuntimeError):
    stage = "stacking"


class PileUnbridgeable(StackingError):
    stage = "pile_path"


class AssemblyError(StackingError):
    stage = "assembly"


@dataclass(frozen=True)
class PileOrder:
    pile: int
    path: tuple[int, ...]  # path[x - 1] is the panel at height x
    flip: bool = False  # flip of the bottom panel once orientations are fixed

    @property
    def height(self) -> int:
        return len(self.path)

    def at(self, x: int) -> int:
        if not 1 <= x <= len(self.path):
            raise ValueError(f"height {x} outside 1..{len(self.path)}")
        return self.path[x - 1]


@dataclass(frozen=True)
class MatchVector:
    heights: tuple[int, ...]

    def __post_init__(self) -> None:
        if list(self.heights) != sorted(set(self.heights)):
            raise ValueError("match heights must be strictly increasing")

    def __len__(self) -> int:
        return len(self.heights)


@dataclass(frozen=True)
class Resolution:
    bridges: tuple[tuple[int, int], ...]  # (parent panel, child panel)
    breaks: tuple[tuple[int, int], ...]  # (lower panel, upper panel) along the path
    orient: dict[int, Orientation]
    pile: PileOrder


@dataclass
class Failure:
    attempts: int
    stages: Counter = field(default_factory=Counter)
    message: str = ""

    def __str__(self) -> str:
        hist = ", ".join(f"{k}={v}" for k, v in sorted(self.stages.items()))
        return f"stacking failed after {self.attempts} attempts ({hist}){': ' + self.message if self.message else ''}"


def side_direction(o: Orientation, side: int) -> int:
    r, f = o
    return (r + side) % 4 if f == 0 else (r - side) % 4


def orientation_with(side: int, direction: int, f: int) -> Orientation:
    """Orientation with flip ``f`` whose ``side`` faces ``direction``."""
    return ((direction - side) % 4 if f == 0 else (direction + side) % 4, f)


def fold_orientation(o: Orientation, side: int, other_side: int) -> Orientation:
    """Orientation of a panel folded onto ``o`` across ``side``/``other_side``."""
    return orientation_with(other_side, side_direction(o, side), 1 - o[1])


def derive_seed(seed: int, attempt: int) -> int:
    digest = hashlib.sha256(f"{seed}:{attempt}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def f_match(pi: PileOrder, pj: PileOrder, x: int, g: DualGraph) -> int:
    if not 1 <= x <= min(pi.height, pj.height):
        raise ValueError(f"height {x} out of range")
    return int(g.has_edge(pi.path[x - 1], pj.path[x - 1]))


def f_geo_match(child: PileOrder, parent: PileOrder, x: int, g: DualGraph,
                orient: Mapping[int, Orientation], direction: int) -> int:
    """1 when a bridge at height ``x`` can leave the parent toward the child.

    ``direction`` is the compass direction of the child pile seen from the
    parent. The parent panel's bridge side must face it; a side that faces
    anywhere else is either the host of an intra-pile fold or would poke into
    the wrong cell. If the child panel already has an orientation its bridge
    side must face back and its flip must agree.
    """
    u, c = parent.at(x), child.at(x)
    sides = g.edge_between(u, c)
    if sides is None:
        return 0
    su, sc, _ = sides
    if u in orient and side_direction(orient[u], su) != direction:
        return 0
    if c in orient:
        if u in orient and orient[u][1] != orient[c][1]:
            return 0
        if side_direction(orient[c], sc) != (direction + 2) % 4:
            return 0
    return 1


def match_vector(child: PileOrder, parent: PileOrder, g: DualGraph,
                 orient: Mapping[int, Orientation] | None = None, direction: int | None = None) -> MatchVector:
    top = min(child.height, parent.height)
    heights = []
    for x in range(1, top + 1):
        if not f_match(child, parent, x, g):
            continue
        if orient is not None and direction is not None and not f_geo_match(child, parent, x, g, orient, direction):
            continue
        heights.append(x)
    return MatchVector(tuple(heights))


def path_orientations(g: DualGraph, path: Sequence[int], anchor: int, o: Orientation,
                      lo: int = 0, hi: int | None = None) -> dict[int, Orientation]:
    """Orientations along ``path[lo:hi]`` when ``path[anchor]`` has orientation ``o``."""
    hi = len(path) if hi is None else hi
    out = {path[anchor]: o}
    for i in range(anchor + 1, hi):
        s, t, _ = g.edge_between(path[i - 1], path[i])
        out[path[i]] = fold_orientation(out[path[i - 1]], s, t)
    for i in range(anchor - 1, lo - 1, -1):
        s, t, _ = g.edge_between(path[i + 1], path[i])
        out[path[i]] = fold_orientation(out[path[i + 1]], s, t)
    return out


def bridge_targets(g: DualGraph, parent: PileOrder, nodes: Iterable[int],
                   orient: Mapping[int, Orientation] | None = None,
                   direction: int | None = None) -> dict[int, set[int]]:
    """Height -> child panels that could sit there and take a bridge."""
    members = set(nodes)
    top = min(parent.height, len(members))
    out: dict[int, set[int]] = {}
    for x in range(1, top + 1):
        u = parent.path[x - 1]
        for c in g.neighbors(u):
            if c not in members:
                continue
            if orient is not None and direction is not None and u in orient:
                su, _, _ = g.edge_between(u, c)
                if side_direction(orient[u], su) != direction:
                    continue
            out.setdefault(x, set()).add(c)
    return out


class _PathState:
    """A Hamiltonian path under segment reversals that keep it Hamiltonian.

    Reversing ``path[i..j]`` is valid when ``path[i-1]`` touches ``path[j]``
    (or ``i == 0``) and ``path[i]`` touches ``path[j+1]`` (or ``j`` is the
    end). It sends position ``p`` to ``i + j - p``, which lets the search jump
    a candidate panel straight onto its target height.
    """

    def __init__(self, path: list[int], adj: dict[int, set[int]], targets: dict[int, set[int]]):
        self.path = path
        self.adj = adj
        self.targets = targets
        self.wanted = sorted((x - 1, c) for x, cs in targets.items() for c in cs)

    def score(self, path: list[int] | None = None) -> tuple[int, int]:
        path = self.path if path is None else path
        m = len(path)
        hits = [x for x, cs in self.targets.items() if x <= m and path[x - 1] in cs]
        interior = int(any(1 < x < m for x in hits)) if m >= 3 else int(bool(hits))
        return interior, len(hits)

    def _valid(self, i: int, j: int) -> bool:
        p = self.path
        return ((i == 0 or p[i - 1] in self.adj[p[j]])
                and (j == len(p) - 1 or p[i] in self.adj[p[j + 1]]))

    def _reverse(self, i: int, j: int) -> list[int]:
        p = self.path
        return p[:i] + p[i:j + 1][::-1] + p[j + 1:]

    def jump(self, rng: random.Random, interior_only: bool) -> list[int] | None:
        """A single reversal that lands some candidate on its target height."""
        p = self.path
        m = len(p)
        pos = {v: i for i, v in enumerate(p)}
        by_sum: dict[int, list[int]] = {}
        for i in range(m - 1):
            u = p[i]
            for w in self.adj[u]:
                k = pos[w]
                if k > i + 1:
                    by_sum.setdefault(i + k, []).append(i)
        found = []
        for q, c in self.wanted:
            if interior_only and not 0 < q < m - 1:
                continue
            pc = pos[c]
            if pc == q:
                return list(p)
            total = pc + q
            lo, hi = min(pc, q), max(pc, q)
            starts = [0] if total <= m - 1 else []
            starts += [a + 1 for a in by_sum.get(total - 1, ())]
            for i in starts:
                j = total - i
                if i <= lo and hi <= j <= m - 1 and self._valid(i, j):
                    found.append((i, j))
        if not found:
            return None
        return self._reverse(*rng.choice(found))

    def wander(self, rng: random.Random) -> list[int] | None:
        p = self.path
        m = len(p)
        if m < 3:
            return p[::-1]
        kind = rng.randrange(3)
        if kind == 0:  # rotate the tail around one of its path neighbors
            where = [i for i in range(m - 2) if p[i] in self.adj[p[-1]]]
            return self._reverse(rng.choice(where) + 1, m - 1) if where else None
        if kind == 1:  # same at the head
            where = [i for i in range(2, m) if p[i] in self.adj[p[0]]]
            return self._reverse(0, rng.choice(where) - 1) if where else None
        i = rng.randrange(1, m - 1)
        for j in rng.sample(range(i + 1, m), min(m - i - 1, 8)):
            if self._valid(i, j):
                return self._reverse(i, j)
        return None


def optimize_pile_path(g: DualGraph, pile: int, nodes: Iterable[int], parent: PileOrder, seed: int = 0,
                       orient: Mapping[int, Orientation] | None = None, direction: int | None = None,
                       initial: Sequence[int] | None = None, moves: int = DEFAULT_MOVES,
                       budget: int | None = None) -> PileOrder:
    """Hamiltonian path of the pile that lines up with the parent pile.

    Random walk over Hamiltonian paths (end rotations, reconnecting segment
    reversals); at every step a reversal that drops a candidate panel onto
    its bridge height is taken if one exists. Interior heights are wanted,
    so the bridged panel ends up with three hinges. Scores are (bridgeable
    interior height exists, number of bridgeable heights). Small piles
    also try paths pinned at each candidate. Raises PileUnbridgeable if no
    bridgeable path turns up.
    """
    members = sorted(set(nodes))
    m = len(members)
    targets = bridge_targets(g, parent, members, orient, direction)
    if not targets:
        raise PileUnbridgeable(f"pile {pile} shares no usable edge with pile {parent.pile}")
    rng = random.Random(seed)
    if initial is None:
        initial = ham_path_constrained(g, members, seed=seed, budget=budget)
        if initial is None:
            raise PileUnbridgeable(f"pile {pile} has no Hamiltonian path")
    elif not is_hamiltonian_path(g, initial, members):
        raise ValueError("initial order is not a Hamiltonian path of the pile")
    inside = set(members)
    adj = {v: {w for w in g.neighbors(v) if w in inside} for v in members}
    state = _PathState(list(initial), adj, targets)
    best, best_score = list(state.path), state.score()
    for _ in range(moves):
        if best_score[0]:
            break
        hit = state.jump(rng, interior_only=True)
        if hit is not None:
            best, best_score = hit, state.score(hit)
            break
        cand = state.wander(rng)
        if cand is not None:
            state.path = cand
            s = state.score()
            if s > best_score:
                best, best_score = list(cand), s
    if not best_score[1]:
        hit = state.jump(rng, interior_only=False)
        if hit is not None:
            best, best_score = hit, state.score(hit)
    if not best_score[0] and m < _PINNED_LIMIT:
        pinned = _pinned_path(g, members, targets, seed, budget, interior_only=best_score[1] > 0)
        if pinned is not None:
            best, best_score = pinned, state.score(pinned)
    if best_score[1] == 0:
        raise PileUnbridgeable(f"no bridgeable path for pile {pile} under parent {parent.pile}")
    return PileOrder(pile, tuple(best))


_PINNED_LIMIT = 64


def _pinned_path(g: DualGraph, members: list[int], targets: dict[int, set[int]], seed: int,
                 budget: int | None, interior_only: bool, tries: int = 12) -> list[int] | None:
    m = len(members)
    pairs = sorted(((x, c) for x, cs in targets.items() for c in cs),
                   key=lambda p: (not 1 < p[0] < m, p[0], p[1]))
    if interior_only:
        pairs = [p for p in pairs if 1 < p[0] < m]
    small = 50 * m + 1000 if budget is None else min(budget, 50 * m + 1000)
    for x, c in pairs[:tries]:
        try:
            path = ham_path_constrained(g, members, positions={c: x - 1}, seed=seed, budget=small)
        except SearchBudgetExceeded:
            continue
        if path is not None:
            return path
    return None


def resolve_bridges(pile: PileOrder, xvec: MatchVector, parent: PileOrder, direction: int,
                    g: DualGraph, orient: Mapping[int, Orientation], policy: str = "single") -> Resolution:
    """Bridges and breaks joining ``pile`` to ``parent``, plus the pile's orientations.

    ``single`` bridges at the lowest height of ``xvec``. ``all`` bridges at
    every height and breaks the path edge just below each bridge after the
    first, so each path segment hangs from exactly one bridge.
    """
    if len(xvec) == 0:
        raise ValueError("empty match vector")
    if policy not in POLICIES:
        raise ValueError(f"unknown bridge policy {policy!r}")
    heights = xvec.heights[:1] if policy == "single" else xvec.heights
    path = pile.path
    bridges, breaks = [], []
    new: dict[int, Orientation] = {}
    for i, x in enumerate(heights):
        u, c = parent.at(x), pile.at(x)
        sides = g.edge_between(u, c)
        if sides is None or u not in orient:
            raise ValueError(f"height {x} is not bridgeable")
        su, sc, _ = sides
        if side_direction(orient[u], su) != direction:
            raise ValueError(f"bridge side at height {x} does not face the child pile")
        o = orientation_with(sc, (direction + 2) % 4, orient[u][1])
        lo = 0 if i == 0 else x - 1
        hi = heights[i + 1] - 1 if i + 1 < len(heights) else len(path)
        if i > 0:
            breaks.append((path[x - 2], path[x - 1]))
        new.update(path_orientations(g, path, x - 1, o, lo, hi))
        bridges.append((u, c))
    return Resolution(tuple(bridges), tuple(breaks), new, replace(pile, flip=bool(new[path[0]][1])))


def assemble_tree(g: DualGraph, piles: Sequence[PileOrder], bridges: Iterable[tuple[int, int]],
                  breaks: Iterable[tuple[int, int]], placement: PilePlacement,
                  orient: Mapping[int, Orientation], root: int | None = None) -> CodedSequence:
    """Union of pile paths and bridges minus breaks, rooted and recorded."""
    n = len(g.nodes)
    k = len(piles)
    broken = {frozenset(b) for b in breaks}
    bridge_set = {frozenset(b) for b in bridges}
    pairs: list[tuple[int, int]] = []
    for p in piles:
        for a, b in zip(p.path, p.path[1:]):
            if frozenset((a, b)) not in broken:
                pairs.append((a, b))
    path_edges = {frozenset(e) for p in piles for e in zip(p.path, p.path[1:])}
    if not broken <= path_edges:
        raise AssemblyError("break is not a path edge")
    pairs.extend(tuple(b) for b in bridges)
    if len(pairs) != n - 1:
        raise AssemblyError(f"{len(pairs)} hinges for {n} panels")
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in pairs:
        if not g.has_edge(a, b):
            raise AssemblyError(f"hinge {a}-{b} is not a dual-graph edge")
        adj[a].append(b)
        adj[b].append(a)
    root = piles[0].path[0] if root is None else root
    seen = [False] * n
    seen[root] = True
    queue = deque([root])
    hinges = []
    while queue:
        u = queue.popleft()
        for w in sorted(adj[u]):
            if seen[w]:
                continue
            seen[w] = True
            su, sw, angle = g.edge_between(u, w)
            role = BRIDGE if frozenset((u, w)) in bridge_set else INTRA
            hinges.append(Hinge(u, w, su, sw, angle, role))
            queue.append(w)
    if not all(seen):
        raise AssemblyError("hinges leave panels disconnected")
    panels = []
    for p in piles:
        for x, v in enumerate(p.path, start=1):
            if v not in orient:
                raise AssemblyError(f"panel {v} has no stacked orientation")
            panels.append(PanelRecord(v, p.pile, x, orient[v][1]))
    return make_sequence(n, k, placement.cells, panels, hinges, breaks)


def _root_orientation(g: DualGraph, path: Sequence[int], tree: PileParentTree, placement: PilePlacement,
                      parts: list[list[int]]) -> dict[int, Orientation]:
    """Orientation of the reference pile giving its children the most bridge options."""
    order = PileOrder(tree.reference, tuple(path))
    best = None
    for f in (0, 1):
        for r in range(4):
            orient = path_orientations(g, path, 0, (r, f))
            counts = []
            for q in tree.children(tree.reference):
                d = placement.direction(tree.reference, q)
                counts.append(sum(len(cs) for cs in bridge_targets(g, order, parts[q], orient, d).values()))
            key = (min(counts, default=0), sum(counts))
            if best is None or key > best[0]:
                best = (key, orient)
    return best[1]


def _supports_children(g: DualGraph, order: PileOrder, orient: Mapping[int, Orientation],
                       tree: PileParentTree, placement: PilePlacement, parts: list[list[int]]) -> bool:
    for q in tree.children(order.pile):
        d = placement.direction(order.pile, q)
        if not bridge_targets(g, order, parts[q], orient, d):
            return False
    return True


def _hdn_ok(cs: CodedSequence, reference: int) -> bool:
    deg = cs.hinge_degrees()
    best = [0] * cs.k
    for p in cs.panels:
        best[p.pile] = max(best[p.pile], deg[p.id])
    return all(best[i] >= 3 for i in range(cs.k) if i != reference)


def _attempt(g: DualGraph, k: int, seed: int, policy: str, moves: int) -> CodedSequence:
    part = balanced_partition(g, k, seed=seed)
    if part is None:
        raise StackingError("no balanced connected partition")
    parts = part.parts()
    h = build_hypergraph(g, part)
    placement = optimal_placement(h)
    tree = parent_tree(h, placement, reference=0)
    m = len(g.nodes) // k
    # room for the randomized tries plus a short exact search
    budget = (20 * HEURISTIC_TRIES + 40) * m + 10_000
    root_path = ham_path_constrained(g, parts[tree.reference], seed=seed, budget=budget)
    if root_path is None:
        raise PileUnbridgeable("reference pile has no Hamiltonian path")
    orders: dict[int, PileOrder] = {tree.reference: PileOrder(tree.reference, tuple(root_path))}
    orient = _root_orientation(g, root_path, tree, placement, parts)
    orders[tree.reference] = replace(orders[tree.reference], flip=bool(orient[root_path[0]][1]))
    bridges: list[tuple[int, int]] = []
    breaks: list[tuple[int, int]] = []
    for i, pile in enumerate(tree.order[1:], start=1):
        par = tree.parent[pile]
        d = placement.direction(par, pile)
        order = optimize_pile_path(g, pile, parts[pile], orders[par], seed=seed + i, orient=orient,
                                   direction=d, moves=moves, budget=budget)
        xvec = match_vector(order, orders[par], g, orient, d)
        if policy == "all":
            choices = [xvec]
        else:
            ranked = sorted(xvec.heights, key=lambda x: (not 1 < x < order.height, x))
            choices = [MatchVector((x,)) for x in ranked]
        chosen = None
        for mv in choices:
            res = resolve_bridges(order, mv, orders[par], d, g, orient, policy)
            trial = {**orient, **res.orient}
            if chosen is None:
                chosen = res
            if _supports_children(g, res.pile, trial, tree, placement, parts):
                chosen = res
                break
        orient.update(chosen.orient)
        orders[pile] = chosen.pile
        bridges.extend(chosen.bridges)
        breaks.extend(chosen.breaks)
    piles = [orders[i] for i in range(k)]
    cs = assemble_tree(g, piles, bridges, breaks, placement, orient, root=root_path[0])
    problems = cs.problems()
    if problems:
        raise AssemblyError(problems[0])
    if not _hdn_ok(cs, tree.reference):
        err = StackingError("a non-reference pile has no panel with three or more hinges")
        err.stage = "hdn"
        raise err
    return cs


def stack_pipeline(g: DualGraph, k: int, seed: int = 0, max_restarts: int = DEFAULT_MAX_RESTARTS,
                   policy: str = "single", moves: int = DEFAULT_MOVES,
                   verify: bool = True) -> CodedSequence | Failure:
    """Partition, place, order and bridge the piles; restart on failure.

    Each attempt runs with a seed derived from ``seed`` and the attempt index.
    The result is checked by forward simulation before it is returned.
    """
    from .foldsim import deploy_poses, stacked_layout, verify_deployed

    n = len(g.nodes)
    if k < 1:
        raise ValueError("pile count must be >= 1")
    if n % k:
        raise ValueError("panel count not divisible by pile count")
    if policy not in POLICIES:
        raise ValueError(f"unknown bridge policy {policy!r}")
    stages: Counter = Counter()
    message = ""
    for attempt in range(max_restarts + 1):
        sub = derive_seed(seed, attempt)
        try:
            cs = _attempt(g, k, sub, policy, moves)
        except LayoutError as exc:
            stages["placement"] += 1
            message = str(exc)
            if "limit" in message:
                break
            log.info("attempt %d: placement failed: %s", attempt, exc)
            continue
        except SearchBudgetExceeded as exc:
            stages["pile_path"] += 1
            message = str(exc)
            log.info("attempt %d: path search gave up: %s", attempt, exc)
            continue
        except StackingError as exc:
            stage = exc.stage if exc.stage != "stacking" else "partition"
            stages[stage] += 1
            message = str(exc)
            log.info("attempt %d: %s failed: %s", attempt, stage, exc)
            continue
        if verify:
            deployed = verify_deployed(deploy_poses(cs), g)
            stacked = stacked_layout(cs)
            if not deployed.ok or not stacked.ok:
                stages["verify"] += 1
                message = f"verification failed (deployed gap {deployed.worst_gap:.3g}, {stacked.summary()})"
                log.warning("attempt %d: %s", attempt, message)
                continue
        stages["success"] += 1
        log.info("stacked %d panels into %d piles on attempt %d (%s)", n, k, attempt,
                 ", ".join(f"{s}={c}" for s, c in sorted(stages.items())))
        return cs
    return Failure(attempts=sum(stages.values()), stages=stages, message=message)

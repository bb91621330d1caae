"""The coded sequence: a spanning tree of hinges plus the stacked assignment.

Text form (UTF-8, one record per line)::

    ZYGOTE v1
    N <panels> K <piles>
    FOOT <row> <col>                                    one per pile, pile order
    PANEL <id> <pile> <height> <flip>                   one per panel, id order
    HINGE <parent> <child> <pside> <cside> <angle> <P|B>   sorted by (parent, child)
    BREAK <a> <b>                                       a < b, sorted
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

HEADER = "ZYGOTE v1"
ANGLES = (90, 180, 270)
INTRA, BRIDGE = "P", "B"


class SequenceFormatError(ValueError):
    """Malformed coded-sequence text."""


@dataclass(frozen=True, order=True)
class PanelRecord:
    id: int
    pile: int
    height: int  # 1 = bottom
    flip: int  # 1 when the panel's outward normal points down in the stack


@dataclass(frozen=True, order=True)
class Hinge:
    parent: int
    child: int
    pside: int
    cside: int
    angle: int  # deployed dihedral
    role: str  # INTRA or BRIDGE


@dataclass(frozen=True)
class CodedSequence:
    n: int
    k: int
    footprint: tuple[tuple[int, int], ...]
    panels: tuple[PanelRecord, ...]
    hinges: tuple[Hinge, ...]
    breaks: tuple[tuple[int, int], ...] = ()

    @property
    def root(self) -> int:
        children = {h.child for h in self.hinges}
        roots = [p.id for p in self.panels if p.id not in children]
        if len(roots) != 1:
            raise ValueError(f"expected one root panel, found {len(roots)}")
        return roots[0]

    @property
    def bridges(self) -> list[Hinge]:
        return [h for h in self.hinges if h.role == BRIDGE]

    def pile_heights(self) -> list[int]:
        heights = [0] * self.k
        for p in self.panels:
            heights[p.pile] += 1
        return heights

    def hinge_degrees(self) -> list[int]:
        deg = [0] * self.n
        for h in self.hinges:
            deg[h.parent] += 1
            deg[h.child] += 1
        return deg

    def children(self) -> dict[int, list[Hinge]]:
        out: dict[int, list[Hinge]] = {p.id: [] for p in self.panels}
        for h in self.hinges:
            out[h.parent].append(h)
        return out

    def problems(self) -> list[str]:
        """Violated structural invariants; empty when the sequence is sound."""
        out = []
        if len(self.panels) != self.n or [p.id for p in self.panels] != list(range(self.n)):
            out.append("panel records do not cover ids 0..N-1 exactly once")
            return out
        if len(self.footprint) != self.k or len(set(self.footprint)) != self.k:
            out.append("footprint needs one distinct cell per pile")
        if len(self.hinges) != self.n - 1:
            out.append(f"{len(self.hinges)} hinges for {self.n} panels")
        slots: set[tuple[int, int]] = set()
        for h in self.hinges:
            for slot in ((h.parent, h.pside), (h.child, h.cside)):
                if slot in slots:
                    out.append(f"side {slot[1]} of panel {slot[0]} hosts two hinges")
                slots.add(slot)
            if h.angle not in ANGLES:
                out.append(f"hinge {h.parent}-{h.child} has angle {h.angle}")
            if h.role not in (INTRA, BRIDGE):
                out.append(f"hinge {h.parent}-{h.child} has role {h.role!r}")
        if not out and not _is_tree(self.n, [(h.parent, h.child) for h in self.hinges]):
            out.append("hinges do not form a spanning tree")
        if self.n and self.k and self.n % self.k == 0:
            if any(hgt != self.n // self.k for hgt in self.pile_heights()):
                out.append("pile heights are unequal")
        else:
            out.append("panel count not divisible by pile count")
        net = len(self.bridges) - len(self.breaks)
        if net != self.k - 1:
            out.append(f"net bridges {net}, expected {self.k - 1}")
        return out


def _is_tree(n: int, pairs: list[tuple[int, int]]) -> bool:
    if len(pairs) != n - 1:
        return False
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in pairs:
        adj[a].append(b)
        adj[b].append(a)
    if n == 0:
        return True
    seen = [False] * n
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
    return count == n


def format_sequence(cs: CodedSequence) -> str:
    lines = [HEADER, f"N {cs.n} K {cs.k}"]
    lines += [f"FOOT {r} {c}" for r, c in cs.footprint]
    lines += [f"PANEL {p.id} {p.pile} {p.height} {p.flip}" for p in sorted(cs.panels)]
    lines += [f"HINGE {h.parent} {h.child} {h.pside} {h.cside} {h.angle} {h.role}"
              for h in sorted(cs.hinges)]
    lines += [f"BREAK {a} {b}" for a, b in sorted(cs.breaks)]
    return "\n".join(lines) + "\n"


def _ints(parts: list[str], count: int, lineno: int) -> list[int]:
    if len(parts) != count:
        raise SequenceFormatError(f"line {lineno}: expected {count} fields, got {len(parts)}")
    try:
        return [int(x) for x in parts]
    except ValueError:
        raise SequenceFormatError(f"line {lineno}: non-integer field") from None


def parse_sequence(text: str) -> CodedSequence:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise SequenceFormatError(f"missing {HEADER!r} header")
    if len(lines) < 2:
        raise SequenceFormatError("missing N/K line")
    head = lines[1].split()
    if len(head) != 4 or head[0] != "N" or head[2] != "K":
        raise SequenceFormatError("line 2: expected 'N <int> K <int>'")
    n, k = _ints([head[1], head[3]], 2, 2)
    foot: list[tuple[int, int]] = []
    panels: list[PanelRecord] = []
    hinges: list[Hinge] = []
    breaks: list[tuple[int, int]] = []
    for lineno, line in enumerate(lines[2:], start=3):
        parts = line.split()
        if not parts:
            continue
        tag, rest = parts[0], parts[1:]
        if tag == "FOOT":
            r, c = _ints(rest, 2, lineno)
            foot.append((r, c))
        elif tag == "PANEL":
            pid, pile, height, flip = _ints(rest, 4, lineno)
            if flip not in (0, 1) or not 0 <= pile < k or height < 1:
                raise SequenceFormatError(f"line {lineno}: bad panel record")
            panels.append(PanelRecord(pid, pile, height, flip))
        elif tag == "HINGE":
            if len(rest) != 6 or rest[5] not in (INTRA, BRIDGE):
                raise SequenceFormatError(f"line {lineno}: bad hinge record")
            parent, child, pside, cside, angle = _ints(rest[:5], 5, lineno)
            if not (0 <= pside < 4 and 0 <= cside < 4):
                raise SequenceFormatError(f"line {lineno}: side outside 0..3")
            hinges.append(Hinge(parent, child, pside, cside, angle, rest[5]))
        elif tag == "BREAK":
            a, b = _ints(rest, 2, lineno)
            breaks.append((min(a, b), max(a, b)))
        else:
            raise SequenceFormatError(f"line {lineno}: unknown record {tag!r}")
    ids = [p.id for p in panels]
    if len(set(ids)) != len(ids):
        raise SequenceFormatError("duplicate panel record")
    for h in hinges:
        if not (0 <= h.parent < n and 0 <= h.child < n):
            raise SequenceFormatError(f"hinge {h.parent}-{h.child} references unknown panel")
    return CodedSequence(n, k, tuple(foot), tuple(sorted(panels)), tuple(sorted(hinges)),
                         tuple(sorted(breaks)))


def make_sequence(n: int, k: int, footprint: Iterable[tuple[int, int]], panels: Iterable[PanelRecord],
                  hinges: Iterable[Hinge], breaks: Iterable[tuple[int, int]] = ()) -> CodedSequence:
    """Build a sequence in canonical record order."""
    return CodedSequence(n, k, tuple(footprint), tuple(sorted(panels)), tuple(sorted(hinges)),
                         tuple(sorted((min(a, b), max(a, b)) for a, b in breaks)))

"""Forward simulation of a coded sequence: deployed, stacked and flattened states.

Each panel is a unit square in its own frame: center at the origin, outward
normal +z, side ``k`` facing angle ``k * 90`` degrees in the xy plane. A hinge
``parent(pside) - child(cside)`` with dihedral ``theta`` (measured behind the
outward faces) places the child at::

    Rz(pside) . T(1/2, 0, 0) . Ry(180 - theta) . T(1/2, 0, 0) . Rz(180) . Rz(-cside)

relative to the parent. All angles are multiples of 90 degrees, so rotations
are built from exact integer cosines and compositions stay orthonormal.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .geometry import DualGraph, build_sheet, extract_dual_graph
from .sequence import BRIDGE, INTRA, CodedSequence

MODES = ("deployed", "flattened", "stacked")
GAP_TOLERANCE = 1e-6
_COS = {0: 1, 90: 0, 180: -1, 270: 0}
_SIN = {0: 0, 90: 1, 180: 0, 270: -1}


def _cs(deg: int) -> tuple[int, int]:
    d = deg % 360
    if d not in _COS:
        raise ValueError(f"angle {deg} is not a multiple of 90 degrees")
    return _COS[d], _SIN[d]


def rot_z(deg: int) -> np.ndarray:
    c, s = _cs(deg)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=float)


def rot_y(deg: int) -> np.ndarray:
    c, s = _cs(deg)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=float)


def rot_x(deg: int) -> np.ndarray:
    c, s = _cs(deg)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=float)


@dataclass(frozen=True)
class RigidPose:
    rotation: np.ndarray
    translation: np.ndarray

    @staticmethod
    def identity() -> RigidPose:
        return RigidPose(np.eye(3), np.zeros(3))

    @staticmethod
    def rotate(r: np.ndarray) -> RigidPose:
        return RigidPose(np.asarray(r, dtype=float), np.zeros(3))

    @staticmethod
    def shift(t: Iterable[float]) -> RigidPose:
        return RigidPose(np.eye(3), np.asarray(list(t), dtype=float))

    def __matmul__(self, other: RigidPose) -> RigidPose:
        return RigidPose(self.rotation @ other.rotation,
                         self.rotation @ other.translation + self.translation)

    def inverse(self) -> RigidPose:
        rt = self.rotation.T
        return RigidPose(rt, -rt @ self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    @property
    def normal(self) -> np.ndarray:
        return self.rotation[:, 2]

    def orthonormality_error(self) -> float:
        r = self.rotation
        return float(max(np.abs(r.T @ r - np.eye(3)).max(), abs(np.linalg.det(r) - 1.0)))


def hinge_transform(pside: int, cside: int, theta: int) -> RigidPose:
    half = RigidPose.shift((0.5, 0.0, 0.0))
    return (RigidPose.rotate(rot_z(90 * pside)) @ half @ RigidPose.rotate(rot_y(180 - theta)) @ half
            @ RigidPose.rotate(rot_z(180 - 90 * cside)))


@dataclass
class FoldState:
    mode: str
    poses: dict[int, RigidPose]
    root: int
    stacked: dict[int, tuple[int, int, int]] = field(default_factory=dict)  # id -> (pile, height, flip)


def stacked_angle(cs: CodedSequence, parent: int, child: int, role: str) -> int:
    """Stacked dihedral: bridges lie flat, folds close face to face or back to back."""
    if role == BRIDGE:
        return 180
    rec = {p.id: p for p in cs.panels}
    lower = min(rec[parent], rec[child], key=lambda p: p.height)
    return 360 if lower.flip == 0 else 0


def deploy_poses(cs: CodedSequence, mode: str = "deployed") -> FoldState:
    """Rigid pose of every panel with the root panel at the identity."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    root = cs.root
    kids = cs.children()
    poses = {root: RigidPose.identity()}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for h in kids[u]:
            if h.child in poses:
                raise ValueError(f"panel {h.child} reached twice; hinges are not a tree")
            if mode == "deployed":
                theta = h.angle
            elif mode == "flattened":
                theta = 180
            else:
                theta = stacked_angle(cs, h.parent, h.child, h.role)
            poses[h.child] = poses[u] @ hinge_transform(h.pside, h.cside, theta)
            queue.append(h.child)
    if len(poses) != cs.n:
        raise ValueError("hinges do not reach every panel")
    stacked = {p.id: (p.pile, p.height, p.flip) for p in cs.panels}
    return FoldState(mode, poses, root, stacked)


def model_graph(model) -> DualGraph:
    """Dual graph of a model given as a graph, a voxel set or sheet dimensions."""
    if isinstance(model, DualGraph):
        return model
    if isinstance(model, tuple) and len(model) == 2 and all(isinstance(v, int) for v in model):
        return build_sheet(*model)
    return extract_dual_graph(model)


def _face_frame(g: DualGraph, n: int) -> RigidPose:
    node = g.nodes[n]
    r = np.column_stack([node.side_vector(0), node.side_vector(1), node.normal]).astype(float)
    return RigidPose(r, node.center.astype(float))


@dataclass(frozen=True)
class DeployReport:
    ok: bool
    worst_gap: float
    mismatched: tuple[int, ...]

    def records(self) -> dict[str, object]:
        return {"OK": int(self.ok), "WORST_GAP": f"{self.worst_gap:.6g}", "MISMATCHED": len(self.mismatched)}


def verify_deployed(fs: FoldState, model) -> DeployReport:
    """Deployed panels against the model's faces, anchored at the root panel.

    The root panel's frame is mapped onto its own face; every panel's center,
    normal and side-0 direction must then coincide with its face. The gap is
    the largest center distance (in panel lengths).
    """
    if fs.mode != "deployed":
        raise ValueError("verification needs a deployed fold state")
    g = model_graph(model)
    if len(fs.poses) != len(g.nodes):
        return DeployReport(False, float("inf"), tuple(sorted(fs.poses)))
    root = fs.root
    anchor = _face_frame(g, root) @ fs.poses[root].inverse()
    worst = 0.0
    bad = []
    placed = []
    for n in sorted(fs.poses):
        world = anchor @ fs.poses[n]
        face = _face_frame(g, n)
        gap = float(np.linalg.norm(world.translation - face.translation))
        turn = float(np.abs(world.rotation - face.rotation).max())
        worst = max(worst, gap)
        if gap >= GAP_TOLERANCE or turn >= GAP_TOLERANCE:
            bad.append(n)
        placed.append((tuple(np.round(2 * world.translation).astype(int)), tuple(np.round(world.normal).astype(int))))
    expected = Counter((tuple(np.round(2 * node.center).astype(int)), tuple(np.round(node.normal).astype(int)))
                       for node in g.nodes)
    same_faces = Counter(placed) == expected
    return DeployReport(not bad and same_faces, worst, tuple(bad))


@dataclass(frozen=True)
class StackReport:
    heights: tuple[int, ...]
    side_conflicts: int
    bridge_violations: int
    fold_violations: int
    placement_violations: int

    @property
    def balanced(self) -> bool:
        return len(set(self.heights)) <= 1

    @property
    def ok(self) -> bool:
        return (self.balanced and not self.side_conflicts and not self.bridge_violations
                and not self.fold_violations and not self.placement_violations)

    def summary(self) -> str:
        return (f"heights {'/'.join(map(str, self.heights))}, side conflicts {self.side_conflicts}, "
                f"bridge violations {self.bridge_violations}, fold violations {self.fold_violations}, "
                f"placement violations {self.placement_violations}")

    def records(self) -> dict[str, object]:
        return {"OK": int(self.ok), "PILES": len(self.heights), "HEIGHTS": ",".join(map(str, self.heights)),
                "SIDE_CONFLICTS": self.side_conflicts, "BRIDGE_VIOLATIONS": self.bridge_violations,
                "FOLD_VIOLATIONS": self.fold_violations, "PLACEMENT_VIOLATIONS": self.placement_violations}


def stacked_layout(cs: CodedSequence) -> StackReport:
    """Recompute the stacked state from the hinges and check it against the records.

    Folds the tree with bridges flat and intra-pile hinges closed, then checks
    that every panel lands in its pile's cell with its recorded flip, that
    folds join consecutive heights of one pile, that bridges join equal heights
    of grid-neighboring piles, and that no panel side carries two hinges.
    """
    rec = {p.id: p for p in cs.panels}
    heights = [0] * cs.k
    per_pile: dict[int, list[int]] = {}
    for p in cs.panels:
        heights[p.pile] += 1
        per_pile.setdefault(p.pile, []).append(p.height)
    fold_bad = sum(1 for hs in per_pile.values() if sorted(hs) != list(range(1, len(hs) + 1)))

    slots = Counter()
    for h in cs.hinges:
        slots[(h.parent, h.pside)] += 1
        slots[(h.child, h.cside)] += 1
    conflicts = sum(c - 1 for c in slots.values() if c > 1)

    bridge_bad = 0
    for h in cs.hinges:
        a, b = rec[h.parent], rec[h.child]
        if h.role == INTRA:
            if a.pile != b.pile or abs(a.height - b.height) != 1 or a.flip == b.flip:
                fold_bad += 1
        else:
            (r0, c0), (r1, c1) = cs.footprint[a.pile], cs.footprint[b.pile]
            if a.height != b.height or abs(r0 - r1) + abs(c0 - c1) != 1 or a.flip != b.flip:
                bridge_bad += 1
    hinge_pairs = {frozenset((h.parent, h.child)) for h in cs.hinges}
    for a, b in cs.breaks:
        pa, pb = rec.get(a), rec.get(b)
        if (pa is None or pb is None or pa.pile != pb.pile or abs(pa.height - pb.height) != 1
                or frozenset((a, b)) in hinge_pairs):
            fold_bad += 1

    try:
        fs = deploy_poses(cs, "stacked")
    except ValueError:
        return StackReport(tuple(heights), conflicts, bridge_bad, fold_bad, cs.n)
    root = rec[cs.root]
    r, c = cs.footprint[root.pile]
    base = RigidPose.rotate(rot_x(180 * root.flip))
    best = None
    for q in range(4):
        world_from_root = RigidPose.shift((c + 0.5, r + 0.5, 0.0)) @ RigidPose.rotate(rot_z(90 * q)) @ base
        bad = 0
        for n, pose in fs.poses.items():
            w = world_from_root @ pose
            pr, pc = cs.footprint[rec[n].pile]
            if (not np.allclose(w.translation, (pc + 0.5, pr + 0.5, 0.0), atol=1e-9)
                    or not np.isclose(w.normal[2], 1 - 2 * rec[n].flip)):
                bad += 1
        if best is None or bad < best:
            best = bad
    return StackReport(tuple(heights), conflicts, bridge_bad, fold_bad, best)


@dataclass(frozen=True)
class FlattenReport:
    counts: dict[tuple[int, int], int]
    max_count: int
    overlap_cells: int
    total: int

    def records(self) -> dict[str, object]:
        return {"CELLS": len(self.counts), "MAX_COUNT": self.max_count,
                "OVERLAP_CELLS": self.overlap_cells, "TOTAL": self.total}

    def grid(self) -> list[list[int]]:
        rows = [r for r, _ in self.counts]
        cols = [c for _, c in self.counts]
        r0, c0 = min(rows), min(cols)
        out = [[0] * (max(cols) - c0 + 1) for _ in range(max(rows) - r0 + 1)]
        for (r, c), v in self.counts.items():
            out[r - r0][c - c0] = v
        return out


def flatten_map(cs: CodedSequence) -> FlattenReport:
    """Open every hinge to 180 degrees and count panels per grid cell."""
    fs = deploy_poses(cs, "flattened")
    counts: Counter = Counter()
    for n, pose in fs.poses.items():
        x, y, z = pose.translation
        cell = (round(y), round(x))
        if abs(z) > 1e-9 or abs(x - cell[1]) > 1e-9 or abs(y - cell[0]) > 1e-9:
            raise RuntimeError(f"flattened panel {n} is off the grid")
        counts[cell] += 1
    top = max(counts.values())
    return FlattenReport(dict(sorted(counts.items())), top, sum(1 for v in counts.values() if v > 1),
                         sum(counts.values()))


@dataclass(frozen=True)
class VerReport:
    zygote_box: tuple[float, float, float]
    deployed_box: tuple[float, float, float]
    ratio: float

    def records(self) -> dict[str, object]:
        return {"ZYGOTE_BOX": " ".join(f"{v:.6g}" for v in self.zygote_box),
                "DEPLOYED_BOX": " ".join(f"{v:.6g}" for v in self.deployed_box),
                "VER": f"{self.ratio:.6g}"}


_CORNERS = np.array([[0.5, -0.5, 0.0], [0.5, 0.5, 0.0], [-0.5, 0.5, 0.0], [-0.5, -0.5, 0.0]])


def deployed_box(fs: FoldState, lratio: float) -> tuple[float, float, float]:
    """Bounding box, in units of thickness, of the panels as slabs of thickness 1.

    Each slab lies behind its outward face. The box is taken in the root
    panel's frame, so a rigid motion of the whole state leaves it unchanged.
    """
    to_root = fs.poses[fs.root].inverse()
    pts = []
    for pose in fs.poses.values():
        p = to_root @ pose
        front = lratio * p.apply(_CORNERS)
        back = front - p.normal
        pts.append(front)
        pts.append(back)
    allp = np.vstack(pts)
    ext = allp.max(axis=0) - allp.min(axis=0)
    return tuple(float(v) for v in ext)


def compute_ver(cs: CodedSequence, fs: FoldState | None = None, lratio: float = 100.0) -> VerReport:
    """Deployed bounding-box volume over zygote bounding-box volume."""
    if lratio <= 0:
        raise ValueError("lratio must be positive")
    fs = deploy_poses(cs) if fs is None else fs
    rows = max(r for r, _ in cs.footprint) - min(r for r, _ in cs.footprint) + 1
    cols = max(c for _, c in cs.footprint) - min(c for _, c in cs.footprint) + 1
    zygote = (cols * lratio, rows * lratio, float(cs.n // cs.k))
    box = deployed_box(fs, lratio)
    ratio = float(np.prod(box) / np.prod(zygote))
    return VerReport(zygote, box, ratio)


def _fmt(v: float) -> str:
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def export_obj(fs: FoldState, scale: float = 1.0) -> str:
    """One quad per panel, grouped by panel id, side-0 edge first, counterclockwise."""
    lines = []
    vi = 1
    for n in sorted(fs.poses):
        pts = fs.poses[n].apply(_CORNERS) * scale
        lines.append(f"g panel_{n}")
        lines += [f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in pts]
        lines.append(f"f {vi} {vi + 1} {vi + 2} {vi + 3}")
        vi += 4
    return "\n".join(lines) + "\n"


def format_records(records: Mapping[str, object]) -> str:
    return "".join(f"{k} {v}\n" for k, v in records.items())

"""Panelization: voxel solids, open sheets and their dual graphs.

Every panel is a unit square. Its four sides are numbered 0..3 counterclockwise
around the outward normal. For a face of a voxel with normal ``+e_i`` side 0
points along ``+e_(i+1)`` and side 1 along ``+e_(i+2)``; for ``-e_i`` the two
in-plane axes swap so that ``side0 x side1`` is still the outward normal.
Sheet cells lie in the plane z=0 with normal +z, side 0 toward +col and
side 1 toward +row.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class GeometryError(ValueError):
    """Input geometry that cannot be panelized."""


# +X, -X, +Y, -Y, +Z, -Z
DIRECTIONS: tuple[tuple[int, int], ...] = ((0, 1), (0, -1), (1, 1), (1, -1), (2, 1), (2, -1))
DIRECTION_NAMES = ("+X", "-X", "+Y", "-Y", "+Z", "-Z")

Voxel = tuple[int, int, int]


def _unit(axis: int, sign: int = 1) -> np.ndarray:
    v = np.zeros(3, dtype=int)
    v[axis] = sign
    return v


@dataclass(frozen=True)
class ClosedFace:
    voxel: Voxel
    direction: int  # index into DIRECTIONS

    def frame(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        axis, sign = DIRECTIONS[self.direction]
        a, b = _unit((axis + 1) % 3), _unit((axis + 2) % 3)
        if sign < 0:
            a, b = b, a
        return a, b, _unit(axis, sign)

    def center2(self) -> np.ndarray:
        """Face center in doubled integer coordinates."""
        _, _, n = self.frame()
        return 2 * np.asarray(self.voxel) + 1 + n


@dataclass(frozen=True)
class SheetCell:
    row: int
    col: int

    def frame(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return _unit(0), _unit(1), _unit(2)

    def center2(self) -> np.ndarray:
        return np.array([2 * self.col + 1, 2 * self.row + 1, 0])


@dataclass(frozen=True)
class PanelNode:
    id: int
    source: ClosedFace | SheetCell

    @property
    def center(self) -> np.ndarray:
        return self.source.center2() / 2.0

    @property
    def normal(self) -> np.ndarray:
        return self.source.frame()[2].astype(float)

    def side_vector(self, side: int) -> np.ndarray:
        a, b, _ = self.source.frame()
        return (a, b, -a, -b)[side % 4]

    def edge_key(self, side: int) -> tuple[int, int, int]:
        """Doubled midpoint of the lattice edge under ``side``."""
        return tuple(int(c) for c in self.source.center2() + self.side_vector(side))


@dataclass(frozen=True)
class Edge:
    a: int
    side_a: int
    b: int
    side_b: int
    angle: int


@dataclass
class DualGraph:
    nodes: list[PanelNode]
    edges: list[Edge]
    sheet: tuple[int, int] | None = None
    voxels: frozenset[Voxel] | None = None
    _slots: dict[tuple[int, int], tuple[int, int, int]] = field(init=False, repr=False)
    _pairs: dict[tuple[int, int], tuple[int, int, int]] = field(init=False, repr=False)
    _adj: list[list[int]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._slots = {}
        self._pairs = {}
        self._adj = [[] for _ in self.nodes]
        for e in self.edges:
            for slot in ((e.a, e.side_a), (e.b, e.side_b)):
                if slot in self._slots:
                    raise GeometryError(f"side {slot[1]} of panel {slot[0]} hosts two edges")
            self._slots[(e.a, e.side_a)] = (e.b, e.side_b, e.angle)
            self._slots[(e.b, e.side_b)] = (e.a, e.side_a, e.angle)
            self._pairs[(e.a, e.b)] = (e.side_a, e.side_b, e.angle)
            self._pairs[(e.b, e.a)] = (e.side_b, e.side_a, e.angle)
            self._adj[e.a].append(e.b)
            self._adj[e.b].append(e.a)
        for lst in self._adj:
            lst.sort()

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def adjacency(self) -> list[list[int]]:
        return self._adj

    def neighbors(self, n: int) -> list[int]:
        return self._adj[n]

    def degree(self, n: int) -> int:
        return len(self._adj[n])

    def has_edge(self, a: int, b: int) -> bool:
        return (a, b) in self._pairs

    def edge_between(self, a: int, b: int) -> tuple[int, int, int] | None:
        """``(side on a, side on b, deployed angle)`` or None."""
        return self._pairs.get((a, b))

    def across(self, n: int, side: int) -> tuple[int, int, int] | None:
        return self._slots.get((n, side))

    def degree_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = defaultdict(int)
        for lst in self._adj:
            hist[len(lst)] += 1
        return dict(sorted(hist.items()))

    def is_connected(self, subset: Iterable[int] | None = None) -> bool:
        nodes = set(range(len(self.nodes))) if subset is None else set(subset)
        if not nodes:
            return True
        start = next(iter(nodes))
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in self._adj[u]:
                if w in nodes and w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == len(nodes)


def classify_edge(face_a: PanelNode, face_b: PanelNode) -> int:
    """Deployed dihedral (through the solid side) of two edge-adjacent panels."""
    sa, sb = face_a.source, face_b.source
    keys_a = {face_a.edge_key(s) for s in range(4)}
    keys_b = {face_b.edge_key(s) for s in range(4)}
    if face_a.id == face_b.id or sa == sb or not keys_a & keys_b:
        raise ValueError(f"panels {face_a.id} and {face_b.id} are not edge-adjacent")
    if isinstance(sa, SheetCell) and isinstance(sb, SheetCell):
        return 180
    if isinstance(sa, ClosedFace) and isinstance(sb, ClosedFace):
        if sa.voxel == sb.voxel:
            return 90
        if sa.direction == sb.direction:
            return 180
        return 270
    raise ValueError("cannot mix sheet cells and voxel faces")


def build_sheet(rows: int, cols: int) -> DualGraph:
    if rows < 1 or cols < 1:
        raise ValueError("sheet needs rows >= 1 and cols >= 1")
    nodes = [PanelNode(r * cols + c, SheetCell(r, c)) for r in range(rows) for c in range(cols)]
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append(Edge(i, 0, i + 1, 2, 180))
            if r + 1 < rows:
                edges.append(Edge(i, 1, i + cols, 3, 180))
    return DualGraph(nodes, edges, sheet=(rows, cols))


def boundary_faces(model: Iterable[Voxel]) -> list[ClosedFace]:
    occupied = set(model)
    faces = []
    for v in sorted(occupied):
        for d, (axis, sign) in enumerate(DIRECTIONS):
            n = list(v)
            n[axis] += sign
            if tuple(n) not in occupied:
                faces.append(ClosedFace(v, d))
    return faces


def _check_vertex_manifold(occupied: set[Voxel]) -> None:
    # Around each lattice vertex the occupied octants must form a single
    # face-connected group and the empty octants likewise.
    corners: set[Voxel] = set()
    for x, y, z in occupied:
        for dx in (0, 1):
            for dy in (0, 1):
                for dz in (0, 1):
                    corners.add((x + dx, y + dy, z + dz))
    octants = [(dx, dy, dz) for dx in (-1, 0) for dy in (-1, 0) for dz in (-1, 0)]
    for p in sorted(corners):
        full = [o for o in octants if (p[0] + o[0], p[1] + o[1], p[2] + o[2]) in occupied]
        if len(full) in (0, 8):
            continue
        empty = [o for o in octants if o not in full]
        for group in (full, empty):
            gs = set(group)
            seen = {group[0]}
            stack = [group[0]]
            while stack:
                o = stack.pop()
                for axis in range(3):
                    q = list(o)
                    q[axis] = -1 - q[axis]
                    q = tuple(q)
                    if q in gs and q not in seen:
                        seen.add(q)
                        stack.append(q)
            if len(seen) != len(group):
                raise GeometryError(f"non-manifold vertex at {p}")


def extract_dual_graph(model: Iterable[Voxel]) -> DualGraph:
    occupied = set(model)
    if not occupied:
        raise GeometryError("degenerate input: empty voxel model")
    faces = boundary_faces(occupied)
    nodes = [PanelNode(i, f) for i, f in enumerate(faces)]
    by_edge: dict[tuple[int, int, int], list[tuple[int, int]]] = defaultdict(list)
    for node in nodes:
        for side in range(4):
            by_edge[node.edge_key(side)].append((node.id, side))
    edges = []
    for key in sorted(by_edge):
        slots = by_edge[key]
        if len(slots) != 2:
            x, y, z = (k // 2 for k in key)
            raise GeometryError(f"non-manifold edge at ({x},{y},{z})")
        (a, sa), (b, sb) = sorted(slots)
        edges.append(Edge(a, sa, b, sb, classify_edge(nodes[a], nodes[b])))
    _check_vertex_manifold(occupied)
    g = DualGraph(nodes, edges, voxels=frozenset(occupied))
    if not g.is_connected():
        raise GeometryError("boundary surface is not a single connected component")
    return g


# --- triangle meshes ---------------------------------------------------------

def _weld(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    scale = max(float(np.abs(vertices).max()), 1.0)
    keys = np.round(vertices / (scale * 1e-9)).astype(np.int64)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    return inverse.reshape(-1)[faces]


def _check_closed(faces: np.ndarray) -> None:
    directed: dict[tuple[int, int], int] = defaultdict(int)
    for tri in faces:
        for i in range(3):
            a, b = int(tri[i]), int(tri[(i + 1) % 3])
            if a == b:
                continue
            directed[(a, b)] += 1
    for (a, b), count in directed.items():
        if count != 1 or directed.get((b, a), 0) != 1:
            raise GeometryError("non-watertight mesh")


def voxelize(vertices: Sequence[Sequence[float]], faces: Sequence[Sequence[int]], resolution: int) -> set[Voxel]:
    """Solid voxelization: keep the cells whose centers lie inside the mesh.

    ``resolution`` is the number of cells along the longest bounding-box axis.
    Inside/outside is decided by ray parity along a generic direction.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    verts = np.asarray(vertices, dtype=float)
    tris = np.asarray(faces, dtype=int)
    if verts.ndim != 2 or verts.shape[1] != 3 or tris.ndim != 2 or tris.shape[1] != 3 or len(tris) == 0:
        raise GeometryError("degenerate input: empty mesh")
    _check_closed(_weld(verts, tris))
    p0, p1, p2 = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    volume = np.einsum("ij,ij->i", p0, np.cross(p1, p2)).sum() / 6.0
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    extent = hi - lo
    longest = float(extent.max())
    if longest <= 0 or abs(volume) <= 1e-12 * longest**3:
        raise GeometryError("degenerate input: zero-volume mesh")
    h = longest / resolution
    dims = np.maximum(1, np.ceil(extent / h - 1e-9).astype(int))
    grid = np.stack(np.meshgrid(*(np.arange(d) for d in dims), indexing="ij"), axis=-1).reshape(-1, 3)
    centers = lo + (grid + 0.5) * h
    inside = _ray_parity(centers, p0, p1, p2)
    cells = {tuple(int(c) for c in cell) for cell in grid[inside]}
    if not cells:
        raise GeometryError("degenerate input: no voxel center inside the mesh")
    return cells


_RAY = np.array([0.1270, 0.2311, 0.9646])
_RAY = _RAY / np.linalg.norm(_RAY)


def _ray_parity(points: np.ndarray, p0: np.ndarray, p1: np.ndarray, p2: np.ndarray) -> np.ndarray:
    e1, e2 = p1 - p0, p2 - p0
    pvec = np.cross(_RAY, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) > 1e-14
    e1, e2, p0, pvec, det = e1[ok], e2[ok], p0[ok], pvec[ok], det[ok]
    inv = 1.0 / det
    counts = np.zeros(len(points), dtype=int)
    for start in range(0, len(points), 256):
        pts = points[start:start + 256, None, :]
        tvec = pts - p0[None]
        u = np.einsum("pij,ij->pi", tvec, pvec) * inv
        qvec = np.cross(tvec, e1[None])
        v = (qvec @ _RAY) * inv
        t = np.einsum("pij,ij->pi", qvec, e2) * inv
        hit = (u >= 0) & (v >= 0) & (u + v <= 1) & (t > 0)
        counts[start:start + 256] = hit.sum(axis=1)
    return counts % 2 == 1


def read_obj(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    verts: list[list[float]] = []
    tris: list[list[int]] = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        parts = raw.split("#", 1)[0].split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            idx = []
            for token in parts[1:]:
                i = int(token.split("/")[0])
                idx.append(i - 1 if i > 0 else len(verts) + i)
            for k in range(1, len(idx) - 1):
                tris.append([idx[0], idx[k], idx[k + 1]])
    if not verts or not tris:
        raise GeometryError("degenerate input: mesh has no faces")
    return np.asarray(verts, dtype=float), np.asarray(tris, dtype=int)


def read_voxels(path: str | Path) -> set[Voxel]:
    return parse_voxels(Path(path).read_text(encoding="utf-8"))


def parse_voxels(text: str) -> set[Voxel]:
    cells: set[Voxel] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise GeometryError(f"line {lineno}: expected 'x y z'")
        try:
            cell = (int(parts[0]), int(parts[1]), int(parts[2]))
        except ValueError as exc:
            raise GeometryError(f"line {lineno}: non-integer coordinate") from exc
        if cell in cells:
            raise GeometryError(f"line {lineno}: duplicate voxel {cell}")
        cells.add(cell)
    return cells


def format_voxels(cells: Iterable[Voxel]) -> str:
    return "".join(f"{x} {y} {z}\n" for x, y, z in sorted(cells))

import random

import pytest

from zygote.geometry import GeometryError, boundary_faces, extract_dual_graph

NEIGHBORS = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))


def box(a, b, c):
    return {(x, y, z) for x in range(a) for y in range(b) for z in range(c)}


def random_polycube(rng: random.Random, max_faces: int, tries: int = 200):
    """Grow a polycube cell by cell, keeping only manifold intermediate shapes."""
    cells = {(0, 0, 0)}
    target = rng.randint(1, max_faces // 4)
    for _ in range(tries):
        if len(cells) >= target:
            break
        x, y, z = rng.choice(sorted(cells))
        dx, dy, dz = rng.choice(NEIGHBORS)
        cand = cells | {(x + dx, y + dy, z + dz)}
        if len(cand) == len(cells) or len(boundary_faces(cand)) > max_faces:
            continue
        try:
            extract_dual_graph(cand)
        except GeometryError:
            continue
        cells = cand
    return cells


def random_polycubes(seed: int, count: int, max_faces: int):
    rng = random.Random(seed)
    return [random_polycube(rng, max_faces) for _ in range(count)]


@pytest.fixture(scope="session")
def polycube_144():
    cells = box(3, 6, 6)
    assert len(boundary_faces(cells)) == 144
    return extract_dual_graph(cells)


@pytest.fixture(scope="session")
def cube_graph():
    return extract_dual_graph({(0, 0, 0)})


def tree_sequence(g, pairs, root=0, k=1):
    """Coded sequence for an arbitrary spanning tree of ``g`` (one pile, BFS heights)."""
    from collections import deque

    from zygote.sequence import INTRA, Hinge, PanelRecord, make_sequence

    adj = {n: [] for n in range(len(g.nodes))}
    for a, b in pairs:
        adj[a].append(b)
        adj[b].append(a)
    order, hinges, seen = [root], [], {root}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in sorted(adj[u]):
            if w not in seen:
                seen.add(w)
                order.append(w)
                su, sw, angle = g.edge_between(u, w)
                hinges.append(Hinge(u, w, su, sw, angle, INTRA))
                queue.append(w)
    panels = [PanelRecord(n, 0, h, (h + 1) % 2) for h, n in enumerate(order, start=1)]
    return make_sequence(len(g.nodes), k, [(0, 0)], panels, hinges)


_CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    num = int(name.split("_")[2])
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[num] = (report.outcome, name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        outcome, name = _CRITERIA[num]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {verdict} ({name})")

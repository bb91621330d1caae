"""End-to-end acceptance checks, one test per criterion."""

import time

import pytest

from conftest import box, random_polycubes
from zygote.cli import EXIT_OK, EXIT_SEARCH, main
from zygote.foldsim import compute_ver, deploy_poses, flatten_map, stacked_layout, verify_deployed
from zygote.geometry import boundary_faces, build_sheet, extract_dual_graph, format_voxels
from zygote.hamilton import brute_force_ham, ham_cycle, is_hamiltonian_cycle
from zygote.partition import balanced_partition, cut_weight, part_sizes, parts_connected
from zygote.sequence import PanelRecord, format_sequence, make_sequence, parse_sequence
from zygote.treestack import Failure, stack_pipeline

SHEET_SEEDS = range(20)
BIG_BOX = (20, 20, 40)  # 2 * (400 + 800 + 800) = 4000 boundary faces


def _run_stack(tmp, tag, model_args, k, seed=0):
    out = tmp / f"{tag}_{k}_{seed}.txt"
    t0 = time.perf_counter()
    code = main(["stack", *model_args, "--piles", str(k), "--seed", str(seed), "--out", str(out)])
    elapsed = time.perf_counter() - t0
    text = out.read_text() if code == EXIT_OK else None
    return code, elapsed, text


@pytest.fixture(scope="session")
def sheet_runs(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("sheet")
    return {s: _run_stack(tmp, "sheet", ["--sheet", "12x12"], 4, s) for s in SHEET_SEEDS}


@pytest.fixture(scope="session")
def big_box(tmp_path_factory):
    cells = box(*BIG_BOX)
    path = tmp_path_factory.mktemp("big") / "box.txt"
    path.write_text(format_voxels(cells))
    return path, extract_dual_graph(cells)


@pytest.fixture(scope="session")
def scale_runs(tmp_path_factory, big_box):
    tmp = tmp_path_factory.mktemp("scale")
    path, _ = big_box
    return {k: _run_stack(tmp, "box4000", ["--voxels", str(path)], k) for k in (4, 8)}


def _small_models():
    models = [("sheet12", build_sheet(12, 12), 4), ("sheet12", build_sheet(12, 12), 2),
              ("sheet4x6", build_sheet(4, 6), 3), ("cube", extract_dual_graph({(0, 0, 0)}), 1),
              ("cube", extract_dual_graph({(0, 0, 0)}), 2), ("box144", extract_dual_graph(box(3, 6, 6)), 4),
              ("box221", extract_dual_graph(box(2, 2, 1)), 2)]
    for i, cells in enumerate(random_polycubes(2024, 8, 60)):
        g = extract_dual_graph(cells)
        for k in (1, 2):
            if len(g.nodes) % k == 0:
                models.append((f"poly{i}", g, k))
    return models


@pytest.fixture(scope="session")
def corpus(sheet_runs, scale_runs, big_box):
    """Every successful pipeline output: (label, model graph, sequence text, rerun callable)."""
    out = []
    sheet = build_sheet(12, 12)
    for s, (code, _, text) in sheet_runs.items():
        if code == EXIT_OK:
            out.append((f"sheet12/K4/seed{s}", sheet, text,
                        lambda s=s: format_sequence(stack_pipeline(sheet, 4, seed=s))))
    _, g4000 = big_box
    for k, (code, _, text) in scale_runs.items():
        if code == EXIT_OK:
            out.append((f"box4000/K{k}", g4000, text, None))  # rerun covered by the CLI run below
    for name, g, k in _small_models():
        for seed in (0, 1):
            cs = stack_pipeline(g, k, seed=seed)
            if not isinstance(cs, Failure):
                out.append((f"{name}/K{k}/seed{seed}", g, format_sequence(cs),
                            lambda g=g, k=k, seed=seed: format_sequence(stack_pipeline(g, k, seed=seed))))
    return out


def test_criterion_1_sheet_reproduction(sheet_runs):
    sheet = build_sheet(12, 12)
    wins = 0
    for seed, (code, elapsed, text) in sheet_runs.items():
        print(f"seed {seed}: exit {code} in {elapsed:.2f}s")
        if code != EXIT_OK or elapsed >= 60:
            continue
        cs = parse_sequence(text)
        assert cs.pile_heights() == [36] * 4
        assert len(cs.hinges) == 143
        assert len(cs.bridges) - len(cs.breaks) == 3
        assert stacked_layout(cs).side_conflicts == 0
        assert verify_deployed(deploy_poses(cs), sheet).ok
        wins += 1
    assert wins >= 18, f"{wins}/20 seeds succeeded"


def _signature(cs):
    cells = sorted(cs.footprint)
    r0 = min(r for r, _ in cells)
    c0 = min(c for _, c in cells)
    shape = tuple(sorted((r - r0, c - c0) for r, c in cells))
    rows = max(r for r, _ in shape) + 1
    cols = max(c for _, c in shape) + 1
    return cs.k, tuple(cs.pile_heights()), (min(rows, cols), max(rows, cols))


def test_criterion_2_pluripotency():
    closed_cells = box(3, 6, 6)
    assert len(boundary_faces(closed_cells)) == 144
    closed = stack_pipeline(extract_dual_graph(closed_cells), 4, seed=0)
    sheet = stack_pipeline(build_sheet(12, 12), 4, seed=0)
    assert not isinstance(closed, Failure) and not isinstance(sheet, Failure)
    sig = _signature(closed)
    print("closed", sig, "sheet", _signature(sheet))
    assert sig == _signature(sheet)
    assert sig[:2] == (4, (36, 36, 36, 36)) and sig[2] in {(2, 2), (1, 4)}


def test_criterion_3_hamiltonian_sweep():
    shapes = random_polycubes(7, 60, 150)
    checked = small = 0
    for cells in shapes:
        g = extract_dual_graph(cells)
        assert 6 <= len(g.nodes) <= 150
        cyc = ham_cycle(g, seed=0)
        assert cyc is not None and is_hamiltonian_cycle(g, cyc), f"no cycle on {len(g.nodes)} faces"
        if len(g.nodes) <= 12:
            assert bool(brute_force_ham(g, "cycle", limit=1)) == (cyc is not None)
            small += 1
        checked += 1
    print(f"{checked} models, {small} cross-checked exhaustively")
    assert checked >= 50 and small >= 1


def test_criterion_4_partition_balance():
    g = build_sheet(12, 12)
    cuts = []
    for k in (2, 4):
        for seed in range(100):
            p = balanced_partition(g, k, seed=seed)
            assert part_sizes(p.labels, k) == [144 // k] * k
            assert parts_connected(g, p.labels, k)
            if k == 4:
                cuts.append(cut_weight(g, p.labels))
    print(f"K=4 cut range {min(cuts)}..{max(cuts)}")
    assert 24 <= min(cuts) and max(cuts) <= 32


def test_criterion_5_ver():
    cube = extract_dual_graph({(0, 0, 0)})
    cs = stack_pipeline(cube, 1, seed=0)
    ver = compute_ver(cs, lratio=100).ratio
    print(f"cube VER {ver:.4f}")
    assert ver == pytest.approx(16.7, rel=0.02)
    single = make_sequence(1, 1, [(0, 0)], [PanelRecord(0, 0, 1, 0)], [])
    assert compute_ver(single, lratio=100).ratio == 1.0


def test_criterion_6_scale(scale_runs, big_box):
    _, g = big_box
    assert len(g.nodes) == 4000
    code, elapsed, text = scale_runs[4]
    print(f"K=4: exit {code} in {elapsed:.1f}s")
    assert code == EXIT_OK and elapsed < 600
    cs = parse_sequence(text)
    assert cs.pile_heights() == [1000] * 4
    assert stacked_layout(cs).ok
    assert verify_deployed(deploy_poses(cs), g).ok
    assert flatten_map(cs).total == 4000
    code8, elapsed8, text8 = scale_runs[8]
    print(f"K=8: exit {code8} in {elapsed8:.1f}s")
    assert code8 in (EXIT_OK, EXIT_SEARCH)
    if code8 == EXIT_OK:
        cs8 = parse_sequence(text8)
        assert stacked_layout(cs8).ok and verify_deployed(deploy_poses(cs8), g).ok


def test_criterion_7_round_trip(corpus, big_box, tmp_path):
    assert len(corpus) >= 40
    for label, g, text, rerun in corpus:
        cs = parse_sequence(text)
        assert verify_deployed(deploy_poses(cs), g).ok, label
        report = stacked_layout(cs)
        assert report.ok and report.side_conflicts == 0, (label, report.summary())
        assert flatten_map(cs).total == cs.n, label
        if rerun is not None:
            assert rerun() == text, label
    path, _ = big_box
    first = _run_stack(tmp_path, "again", ["--voxels", str(path)], 4)
    again = _run_stack(tmp_path, "again", ["--voxels", str(path)], 4)
    assert first[0] == EXIT_OK and first[2] == again[2]
    print(f"{len(corpus)} outputs checked")


def test_criterion_8_spanning_tree_identity(corpus):
    for label, _, text, _ in corpus:
        cs = parse_sequence(text)
        n, k = cs.n, cs.k
        assert (n - k) + len(cs.bridges) - len(cs.breaks) == n - 1, label
        assert len(cs.hinges) == n - 1, label
        deg = cs.hinge_degrees()
        assert max(deg) <= 4, label
        ref = next(p.pile for p in cs.panels if p.id == cs.root)
        for pile in range(k):
            if pile != ref:
                assert any(deg[p.id] >= 3 for p in cs.panels if p.pile == pile), (label, pile)

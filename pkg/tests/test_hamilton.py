import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import box, random_polycube
from zygote.geometry import build_sheet, extract_dual_graph
from zygote.hamilton import (SearchBudgetExceeded, brute_force_ham, ham_cycle, ham_path_constrained,
                             ham_path_from_cycle, is_hamiltonian_cycle, is_hamiltonian_path)


def _perm_oracle(adj, mode):
    """All Hamiltonian paths/cycles by trying every permutation (independent of the solver)."""
    m = len(adj)
    sets = [set(a) for a in adj]
    out = set()
    for perm in itertools.permutations(range(m)):
        if not all(b in sets[a] for a, b in zip(perm, perm[1:])):
            continue
        if mode == "path":
            if m == 1 or perm[0] < perm[-1]:
                out.add(perm)
        elif m >= 3 and perm[0] == 0 and perm[0] in sets[perm[-1]] and perm[1] < perm[-1]:
            out.add(perm)
    return sorted(out)


SMALL = {
    "sheet2x2": build_sheet(2, 2),
    "sheet1x4": build_sheet(1, 4),
    "sheet2x3": build_sheet(2, 3),
    "sheet2x4": build_sheet(2, 4),
    "sheet3x3": build_sheet(3, 3),
    "cube": extract_dual_graph({(0, 0, 0)}),
}


@pytest.mark.parametrize("name", sorted(SMALL))
@pytest.mark.parametrize("mode", ["path", "cycle"])
def test_brute_force_matches_permutation_oracle(name, mode):
    g = SMALL[name]
    assert brute_force_ham(g, mode) == _perm_oracle(g.adjacency, mode)


def test_known_small_answers():
    assert brute_force_ham(build_sheet(2, 2), "cycle") == [(0, 1, 3, 2)]
    assert brute_force_ham(build_sheet(1, 4), "cycle") == []
    assert brute_force_ham(build_sheet(1, 4), "path") == [(0, 1, 2, 3)]
    assert brute_force_ham(build_sheet(1, 1), "path") == [(0,)]


def test_brute_force_limit():
    with pytest.raises(ValueError):
        brute_force_ham(build_sheet(4, 4))


@pytest.mark.parametrize("name", sorted(SMALL))
def test_ham_cycle_feasibility_matches_oracle(name):
    g = SMALL[name]
    cyc = ham_cycle(g)
    assert (cyc is not None) == bool(_perm_oracle(g.adjacency, "cycle"))
    if cyc is not None:
        assert is_hamiltonian_cycle(g, cyc)


def test_ham_cycle_rejects_tiny_and_disconnected():
    with pytest.raises(ValueError):
        ham_cycle(build_sheet(1, 2))
    with pytest.raises(ValueError):
        ham_cycle([[1], [0], [3], [2]])


def test_odd_bipartite_grid_has_no_cycle():
    assert ham_cycle(build_sheet(5, 5)) is None


def test_large_grid_cycle_and_box_cycle():
    g = build_sheet(12, 12)
    assert is_hamiltonian_cycle(g, ham_cycle(g))
    b = extract_dual_graph(box(4, 5, 6))
    assert is_hamiltonian_cycle(b, ham_cycle(b, seed=3))


@given(st.integers(3, 40), st.integers(0, 10**6))
def test_path_from_cycle_every_break(n, seed):
    cycle = list(range(n))
    random.Random(seed).shuffle(cycle)
    adj = [[] for _ in range(n)]
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        adj[a].append(b)
        adj[b].append(a)
    for i in range(n):
        path = ham_path_from_cycle(cycle, i)
        assert is_hamiltonian_path(adj, path)
        assert path[-1] == cycle[i] and path[0] == cycle[(i + 1) % n]
    with pytest.raises(IndexError):
        ham_path_from_cycle(cycle, n)


def test_path_with_start_and_position():
    g = build_sheet(4, 5)
    path = ham_path_constrained(g, start=0)
    assert path[0] == 0 and is_hamiltonian_path(g, path)
    path = ham_path_constrained(g, positions={7: 10})
    assert path[10] == 7 and is_hamiltonian_path(g, path)


def test_position_parity_is_infeasible():
    # 3x3 grid: the 5 corner-colored cells must take the even positions
    g = build_sheet(3, 3)
    assert ham_path_constrained(g, positions={1: 0}) is None
    assert ham_path_constrained(g, positions={0: 0}) is not None


def test_induced_subgraph_path():
    g = build_sheet(6, 6)
    nodes = [r * 6 + c for r in range(3) for c in range(6)]
    path = ham_path_constrained(g, nodes, seed=4)
    assert is_hamiltonian_path(g, path, nodes)


def test_too_many_leaves():
    star = [[1, 2, 3], [0], [0], [0]]
    assert ham_path_constrained(star) is None


def test_budget_exhaustion_raises():
    g = build_sheet(7, 7)
    with pytest.raises(SearchBudgetExceeded):
        ham_path_constrained(g, positions={1: 1}, budget=5)


def test_large_sheet_path_uses_randomized_search():
    g = build_sheet(40, 25)
    assert is_hamiltonian_path(g, ham_path_constrained(g, seed=2))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_polycube_cycles_are_valid(seed):
    g = extract_dual_graph(random_polycube(random.Random(seed), 100))
    cyc = ham_cycle(g, seed=seed % 7)
    if cyc is not None:
        assert is_hamiltonian_cycle(g, cyc)
    if len(g.nodes) <= 12:
        assert (cyc is not None) == bool(brute_force_ham(g, "cycle", limit=1))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_seed_determinism(seed):
    g = build_sheet(6, 7)
    assert ham_path_constrained(g, seed=seed) == ham_path_constrained(g, seed=seed)

"""Topology enumeration vs a brute-force oracle; flow assignment exactness."""
import itertools
import random
from fractions import Fraction as F

import pytest

from gsteiner.currents import boundary, make_boundary
from gsteiner.placement import Placement, realize_chain
from gsteiner.topology import (InfeasibleTopologyError, SteinerTopology,
                               assign_flows, assign_flows_reversed,
                               enumerate_topologies)


def line_boundary(n):
    masses = [F(-(n - 1))] + [F(1)] * (n - 1)
    return make_boundary([((float(i), 0.0), m) for i, m in enumerate(masses)])


def brute_force_count(n):
    """Independent enumerator: all forests on n terminals + m branch vertices
    (m <= n - 2) with branch degree >= 3 and terminal degree >= 1, up to
    branch relabeling."""
    total = 0
    for m in range(0, max(0, n - 2) + 1):
        nv = n + m
        all_edges = list(itertools.combinations(range(nv), 2))
        shapes = set()
        for bits in range(2 ** len(all_edges)):
            edges = [e for i, e in enumerate(all_edges) if bits >> i & 1]
            deg = [0] * nv
            parent = list(range(nv))

            def find(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            acyclic = True
            for u, v in edges:
                deg[u] += 1
                deg[v] += 1
                ru, rv = find(u), find(v)
                if ru == rv:
                    acyclic = False
                    break
                parent[ru] = rv
            if not acyclic:
                continue
            if any(deg[v] < 1 for v in range(n)):
                continue
            if any(deg[v] < 3 for v in range(n, nv)):
                continue
            key = min(
                tuple(sorted(
                    tuple(sorted((u if u < n else n + perm[u - n],
                                  v if v < n else n + perm[v - n])))
                    for u, v in edges))
                for perm in itertools.permutations(range(m)))
            shapes.add(key)
        total += len(shapes)
    return total


@pytest.mark.parametrize("n,expected", [(2, 1), (3, 4)])
def test_small_counts(n, expected):
    assert len(list(enumerate_topologies(line_boundary(n)))) == expected


@pytest.mark.parametrize("n", [2, 3, 4])
def test_counts_match_brute_force(n):
    got = len(list(enumerate_topologies(line_boundary(n))))
    assert got == brute_force_count(n)


def test_three_atom_structure():
    tops = list(enumerate_topologies(line_boundary(3)))
    stars = [t for t in tops if t.n_branch == 1]
    paths = [t for t in tops if t.n_branch == 0]
    assert len(stars) == 1 and len(paths) == 3
    assert stars[0].degree(3) == 3


def test_four_atom_double_y_present():
    tops = list(enumerate_topologies(line_boundary(4), max_branch=2))
    double_y = [t for t in tops if t.n_branch == 2]
    assert len(double_y) == 3  # the three terminal pairings
    for t in double_y:
        assert t.degree(4) == 3 and t.degree(5) == 3
    matchings = [t for t in tops if t.n_branch == 0 and len(t.edges) == 2]
    assert len(matchings) == 3


def test_branch_budget_respected():
    for t in enumerate_topologies(line_boundary(4)):
        assert t.n_branch <= 2
    for t in enumerate_topologies(line_boundary(4), max_branch=1):
        assert t.n_branch <= 1


def test_stream_deterministic():
    a = [t.edges for t in enumerate_topologies(line_boundary(4))]
    b = [t.edges for t in enumerate_topologies(line_boundary(4))]
    assert a == b


# ---------------------------------------------------------------------------
# flow assignment
# ---------------------------------------------------------------------------

def test_star_flows():
    b = make_boundary([((0.0, 0.0), F(-2)), ((1.0, 1.0), F(1)),
                       ((1.0, -1.0), F(1))])
    star = SteinerTopology(3, 1, ((0, 3), (1, 3), (2, 3)),
                           tuple(m for _, m in b.atoms))
    ft = assign_flows(star, b)
    flows = dict(zip(ft.topology.edges, ft.edge_flows))
    # atoms sort as (0,0):-2, (1,-1):+1, (1,1):+1; positive flow runs from
    # the lower-indexed vertex to the higher one
    assert flows[(0, 3)] == F(2)       # source feeds the branch vertex
    assert flows[(1, 3)] == F(-1) and flows[(2, 3)] == F(-1)  # branch feeds sinks


def test_two_terminal_flow():
    b = make_boundary([((0.0, 0.0), F(-1)), ((1.0, 0.0), F(1))])
    t = SteinerTopology(2, 0, ((0, 1),), tuple(m for _, m in b.atoms))
    ft = assign_flows(t, b)
    assert ft.edge_flows == (F(1),)


def test_matching_forest_flows(square_boundary):
    # atoms sort: (0,0):-1, (0,1):+1, (1,0):+1, (1,1):-1
    t = SteinerTopology(4, 0, ((0, 1), (2, 3)),
                        tuple(m for _, m in square_boundary.atoms))
    ft = assign_flows(t, square_boundary)
    assert ft.edge_flows == (F(1), F(-1))


def test_unbalanced_component_infeasible(square_boundary):
    t = SteinerTopology(4, 0, ((0, 3), (1, 2)),
                        tuple(m for _, m in square_boundary.atoms))
    with pytest.raises(InfeasibleTopologyError):
        assign_flows(t, square_boundary)


def test_stripping_order_invariance():
    rng = random.Random(3)
    for _ in range(10):
        b = _random_balanced_boundary(rng, 4)
        for t in enumerate_topologies(b):
            try:
                f1 = assign_flows(t, b)
            except InfeasibleTopologyError:
                with pytest.raises(InfeasibleTopologyError):
                    assign_flows_reversed(t, b)
                continue
            f2 = assign_flows_reversed(t, b)
            assert f1.signature() == f2.signature()


def test_realized_boundary_exact():
    rng = random.Random(4)
    for _ in range(10):
        b = _random_balanced_boundary(rng, 4)
        terminals = tuple(p for p, _ in b.atoms)
        for t in enumerate_topologies(b):
            try:
                ft = assign_flows(t, b)
            except InfeasibleTopologyError:
                continue
            branch = tuple(
                (rng.uniform(-1, 1), rng.uniform(-1, 1))
                for _ in range(ft.topology.n_branch))
            chain = realize_chain(ft, Placement(terminals, branch))
            assert boundary(chain).as_dict() == b.as_dict()


def test_zero_flow_edge_degenerates():
    # path t0 - t1 - t2 where t1's mass forces zero flow beyond it
    b = make_boundary([((0.0, 0.0), F(-1)), ((1.0, 0.0), F(1)),
                       ((2.0, 0.0), F(-1)), ((3.0, 0.0), F(1))])
    t = SteinerTopology(4, 0, ((0, 1), (1, 2), (2, 3)),
                        tuple(m for _, m in b.atoms))
    ft = assign_flows(t, b)
    assert ft.degenerate
    assert len(ft.topology.edges) == 2  # middle edge carried zero


def _random_balanced_boundary(rng, n):
    atoms = []
    total = F(0)
    for i in range(n - 1):
        m = F(rng.randint(-4, 4), rng.randint(1, 3))
        if m == 0:
            m = F(1)
        total += m
        atoms.append(((rng.uniform(-2, 2), rng.uniform(-2, 2)), m))
    atoms.append(((rng.uniform(-2, 2), rng.uniform(-2, 2)), -total))
    if any(m == 0 for _, m in atoms):
        return _random_balanced_boundary(rng, n)
    return make_boundary(atoms)

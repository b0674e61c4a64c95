import json
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from _census import census
from periodforge.graph_core import (
    CompletedGraph,
    FeynGraph,
    GraphFormatError,
    brute_force_code,
    canonical_form,
    circulant,
    complete,
    complete_graph,
    decomplete,
    diagonal_witness,
    is_completed_primitive,
    nontrivial_four_edge_cuts,
    parse_graph,
    read_graph,
    separates,
    superficial_degree,
    wheel,
    zigzag,
)

FISH = "v 2\ne 1 2\ne 1 2\n"
WHEEL3 = "v 4\ne 1 2\ne 1 3\ne 1 4\ne 2 3\ne 3 4\ne 4 2\n"


def relabel(g, perm):
    edges = [(perm[a], perm[b]) for a, b in g.edges]
    if isinstance(g, CompletedGraph):
        return CompletedGraph(g.vertex_count, edges)
    legs = [0] * g.vertex_count
    for v, k in enumerate(g.external_legs):
        legs[perm[v]] = k
    return FeynGraph(g.vertex_count, edges, tuple(legs))


def shuffled(g, seed):
    perm = list(range(g.vertex_count))
    random.Random(seed).shuffle(perm)
    return relabel(g, perm)


def fish_series():
    # bubbles in series 1=2=3=4; completion is a doubled 5-cycle
    return parse_graph("e 1 2\ne 1 2\ne 2 3\ne 2 3\ne 3 4\ne 3 4\n")


# -- parsing ------------------------------------------------------------------


def test_parse_fish():
    g = parse_graph(FISH)
    assert g.vertex_count == 2 and g.edges == ((0, 1), (0, 1))
    assert g.external_legs == (2, 2) and g.is_phi4


def test_parse_wheel3_with_comments():
    g = parse_graph("# wheel\n" + WHEEL3.replace("e 1 2", "e 1 2   # spoke"))
    assert (g.vertex_count, g.edge_count) == (4, 6)
    assert g.external_legs == (1, 1, 1, 1)


@pytest.mark.parametrize(
    "text, line",
    [
        ("e 1 1\n", 1),
        ("v 2\ne 1 3\n", 2),
        ("v 2\nq 1 2\n", 2),
        ("v 2\ne 1\n", 2),
        ("v 2\ne 1 x\n", 2),
        ("v 2\ne 1 2\ne 1 2\ne 1 2\ne 1 2\ne 1 2\n", 6),
        ("", None),
    ],
)
def test_parse_errors(text, line):
    with pytest.raises(GraphFormatError) as exc:
        parse_graph(text)
    assert exc.value.line == line


def test_json_roundtrip(tmp_path):
    g = wheel(4)
    data = g.to_json()
    assert data["vertices"] == 5 and data["edges"] == sorted(data["edges"])
    assert min(min(e) for e in data["edges"]) == 1
    assert FeynGraph.from_json(json.dumps(data)) == g
    p = tmp_path / "w4.json"
    p.write_text(json.dumps(data))
    assert read_graph(p) == g
    t = tmp_path / "w4.txt"
    t.write_text(g.to_text())
    assert read_graph(t).edges == g.edges


# -- completion ------------------------------------------------------------------


def test_wheel3_completes_to_k5():
    c = complete(parse_graph(WHEEL3))
    assert c.vertex_count == 5
    adj = c.adjacency()
    assert np.array_equal(adj, 1 - np.eye(5, dtype=adj.dtype))
    assert canonical_form(c) == canonical_form(complete_graph(5))


def test_fish_completion():
    c = complete(parse_graph(FISH))
    assert c.vertex_count == 3
    assert sorted(c.edges) == [(0, 1), (0, 1), (0, 2), (0, 2), (1, 2), (1, 2)]


def test_vacuum_completion_is_identity():
    k5 = complete_graph(5)
    g = FeynGraph(5, k5.edges)
    assert g.total_legs == 0
    assert complete(g) == k5


def test_completion_errors():
    with pytest.raises(ValueError):
        complete(FeynGraph(3, [(0, 1), (1, 2)]))  # 2 + 3 + 2 legs... not 4
    with pytest.raises(ValueError):
        complete(FeynGraph(4, [(0, 1), (2, 3)]))
    with pytest.raises(ValueError):
        CompletedGraph(4, [(0, 1), (1, 2), (2, 3)])
    with pytest.raises(ValueError):
        complete(wheel(5))  # hub has degree 5


def test_decomplete():
    k5 = complete_graph(5)
    w3 = canonical_form(parse_graph(WHEEL3))
    for v in range(5):
        assert canonical_form(decomplete(k5, v)) == w3
    assert canonical_form(decomplete(complete(parse_graph(FISH)), 2)) == canonical_form(parse_graph(FISH))
    with pytest.raises(ValueError):
        decomplete(k5, 5)


@given(st.integers(5, 8).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 10**6))))
def test_complete_decomplete_roundtrip(args):
    n, seed = args
    graphs = list(census(n).values())
    c = graphs[seed % len(graphs)]
    for v in range(n):
        g = decomplete(c, v)
        if not g.is_connected():
            # cut vertex: completion is only defined for connected graphs
            assert _is_cut_vertex(c, v)
            continue
        back = complete(g)
        assert all(d == 4 for d in back.degrees())
        assert canonical_form(back) == canonical_form(c)


def _is_cut_vertex(c, v):
    rest = [(a, b) for a, b in c.edges if v not in (a, b)]
    seen, stack = {0 if v else 1}, [0 if v else 1]
    while stack:
        x = stack.pop()
        for a, b in rest:
            for p, q in ((a, b), (b, a)):
                if p == x and q not in seen:
                    seen.add(q)
                    stack.append(q)
    return len(seen) < c.vertex_count - 1


# -- primitivity ------------------------------------------------------------------


def test_k5_primitive():
    assert is_completed_primitive(complete_graph(5))
    assert nontrivial_four_edge_cuts(complete_graph(5)) == []


def test_fish_series_not_primitive():
    c = complete(fish_series())
    assert not is_completed_primitive(c)
    assert nontrivial_four_edge_cuts(c)


def test_doubled_six_cycle_not_primitive():
    c = CompletedGraph(6, [(i, (i + 1) % 6) for i in range(6) for _ in range(2)])
    assert not is_completed_primitive(c)
    assert nontrivial_four_edge_cuts(c)


def test_primitivity_preconditions():
    with pytest.raises(ValueError):
        is_completed_primitive(complete(parse_graph(FISH)))
    two_k5 = CompletedGraph(10, complete_graph(5).edges + tuple((a + 5, b + 5) for a, b in complete_graph(5).edges))
    with pytest.raises(ValueError):
        is_completed_primitive(two_k5)


def test_wheels_and_zigzags_primitive():
    assert is_completed_primitive(complete(wheel(3)))
    assert is_completed_primitive(complete(wheel(4)))
    assert is_completed_primitive(circulant(7, (1, 2)))


# -- canonical form ------------------------------------------------------------------


def test_canonical_relabel_invariance():
    k5 = complete_graph(5)
    assert canonical_form(shuffled(k5, 1)) == canonical_form(k5)
    assert canonical_form(k5) != canonical_form(complete(parse_graph(FISH)))


def test_wheel4_equals_zigzag4():
    w, z = complete(wheel(4)), complete(zigzag(4))
    assert canonical_form(w) == canonical_form(z)
    assert brute_force_code(w) == brute_force_code(z)
    assert canonical_form(zigzag(3)) == canonical_form(wheel(3))
    assert brute_force_code(zigzag(3)) == brute_force_code(wheel(3))
    with pytest.raises(ValueError):
        zigzag(5)


def test_canonical_matches_brute_force_on_census():
    # equal codes <=> equal brute-force codes, over every pair of graphs
    for n in (5, 6, 7):
        graphs = list(census(n).values())
        brute = {brute_force_code(g) for g in graphs}
        assert len(brute) == len(graphs)


def test_feyngraph_codes_respect_legs():
    a = FeynGraph(3, [(0, 1), (1, 2)], (3, 2, 3))
    b = FeynGraph(3, [(0, 1), (1, 2)], (3, 3, 2))
    assert canonical_form(a) != canonical_form(b)
    assert brute_force_code(a) != brute_force_code(b)


@given(st.integers(5, 8), st.integers(0, 10**6), st.integers(0, 10**6))
def test_canonical_form_invariance_random(n, pick, seed):
    graphs = list(census(n).values())
    g = graphs[pick % len(graphs)]
    assert canonical_form(shuffled(g, seed)) == canonical_form(g)
    v = pick % n
    f = decomplete(g, v)
    assert canonical_form(shuffled(f, seed)) == canonical_form(f)


# -- counting ------------------------------------------------------------------------


def test_superficial_degree():
    assert superficial_degree(parse_graph(FISH)) == 0
    assert superficial_degree(parse_graph(WHEEL3)) == 0
    assert superficial_degree(FeynGraph(2, [(0, 1)])) == -2
    for spokes in range(3, 9):
        assert superficial_degree(wheel(spokes)) == 0


def test_wheel_shapes():
    w3, w4 = wheel(3), wheel(4)
    assert (w3.vertex_count, w3.edge_count, w3.external_legs) == (4, 6, (1, 1, 1, 1))
    assert w4.external_legs == (0, 1, 1, 1, 1) and w4.is_phi4
    for spokes in range(5, 10):
        w = wheel(spokes)
        assert w.total_legs == 4 and w.external_legs[0] == 0
        assert not w.is_phi4
    with pytest.raises(ValueError):
        wheel(2)


# -- diagonal witness ------------------------------------------------------------------


def test_diagonal_witness_examples():
    a, b, c = [0, 0, 0, 0], [1, 0, 0, 0], [0, 2, 0, 0]
    assert diagonal_witness([a, a, b]) == (frozenset({2}), frozenset({0, 1}))
    i1, i2 = diagonal_witness([a, b, c])
    assert i1 == {1, 2} and i2 == {0}
    with pytest.raises(ValueError):
        diagonal_witness([a, a])


@given(st.integers(2, 7), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_diagonal_witness_separates(n, distinct, seed):
    rng = np.random.default_rng(seed)
    palette = rng.normal(size=(distinct + 1, 4))
    choice = rng.integers(0, distinct + 1, size=n)
    if len(set(choice)) == 1:
        choice[-1] = (choice[0] + 1) % (distinct + 1)
    pts = palette[choice]
    i1, i2 = diagonal_witness(pts)
    assert i1 and i2 and not (i1 & i2) and (i1 | i2) == set(range(n))
    assert separates(pts, i1, i2)

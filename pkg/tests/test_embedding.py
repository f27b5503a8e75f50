"""Tests for placement of interaction graphs onto coupler layouts."""

import pytest

from ecba.embedding import (
    EmbeddingMap,
    FeasibilityReport,
    Topology,
    builtin_topology,
    embed,
    embedding_from_text,
    embedding_to_text,
    feasibility_study,
    grid_topology,
    instance_edges,
    report_to_csv,
    topology_from_text,
    topology_to_text,
    validate,
)


def _ladder_edges(n: int) -> list[tuple[int, int]]:
    """Chain bonds plus mirror rungs (i, n-1-i): the 2 x n/2 ladder graph."""
    return [(i, i + 1) for i in range(n - 1)] + [(i, n - 1 - i) for i in range(n // 2)]


# ---------------------------------------------------------------- topologies


def test_grid_topology_counts_and_degrees():
    g = grid_topology(4, 5)
    assert g.name == "grid-4x5"
    assert len(g.nodes) == 20
    assert len(g.edges) == 31  # 3*5 horizontal + 4*4 vertical
    deg = g.degree()
    assert max(deg.values()) == 4
    assert min(deg.values()) == 2
    # 2x2 grid is the 4-cycle
    c4 = grid_topology(2, 2)
    assert c4.edges == ((0, 1), (0, 2), (1, 3), (2, 3))


def test_grid_topology_rejects_bad_dimensions():
    with pytest.raises(ValueError):
        grid_topology(0, 3)


def test_topology_validation():
    with pytest.raises(ValueError, match="duplicate"):
        Topology(name="t", nodes=(0, 0, 1), edges=())
    with pytest.raises(ValueError, match="unknown node"):
        Topology(name="t", nodes=(0, 1), edges=((0, 2),))
    with pytest.raises(ValueError, match="sorted"):
        Topology(name="t", nodes=(0, 1), edges=((1, 0),))
    with pytest.raises(ValueError, match="name"):
        Topology(name="two words", nodes=(0,), edges=())


def test_builtin_topologies_load():
    g20 = builtin_topology("garnet20")
    assert (g20.name, len(g20.nodes), len(g20.edges)) == ("garnet20", 20, 31)
    e54 = builtin_topology("emerald54")
    assert (e54.name, len(e54.nodes), len(e54.edges)) == ("emerald54", 54, 93)
    assert max(e54.degree().values()) == 4
    with pytest.raises(ValueError, match="no packaged topology"):
        builtin_topology("nonexistent")


def test_topology_text_round_trip():
    g = builtin_topology("garnet20")
    assert topology_from_text(topology_to_text(g)) == g
    with pytest.raises(ValueError, match="layout"):
        topology_from_text("node 0\nnode 1\nedge 0 1\n")
    with pytest.raises(ValueError, match="unrecognized"):
        topology_from_text("layout t\nnode 0\nblah\n")


# ----------------------------------------------------------------- embedding


def test_path_graph_embeds_on_grid():
    g20 = builtin_topology("garnet20")
    path = [(i, i + 1) for i in range(19)]
    result = embed(path, g20)
    assert result.status == "found"
    assert validate(result.map, path, g20) == []


def test_rainbow_ladder_embeds_on_garnet20():
    g20 = builtin_topology("garnet20")
    ladder = _ladder_edges(10)
    assert len(set(ladder)) == 13  # 9 chain bonds + 5 rungs, center rung shared
    result = embed(ladder, g20)
    assert result.status == "found"
    assert validate(result.map, ladder, g20) == []


def test_star_degree_five_proven_infeasible_not_timeout():
    g20 = builtin_topology("garnet20")
    star = [(0, k) for k in range(1, 6)]
    # Tiny budget: the degree bound must classify this without searching.
    result = embed(star, g20, time_budget=1e-9)
    assert result.status == "infeasible"


def test_triangle_and_k4_exhaust_to_infeasible():
    # Degree bounds pass, but grids are bipartite: complete search must
    # prove these infeasible rather than time out.
    g20 = builtin_topology("garnet20")
    triangle = [(0, 1), (1, 2), (0, 2)]
    assert embed(triangle, g20, time_budget=30.0).status == "infeasible"
    k4 = [(a, b) for a in range(4) for b in range(a + 1, 4)]
    assert embed(k4, g20, time_budget=30.0).status == "infeasible"


def test_empty_graph_and_capacity_bound():
    g20 = builtin_topology("garnet20")
    result = embed([], g20)
    assert result.status == "found" and result.map.pairs == ()
    too_big = [(i, i + 1) for i in range(20)]  # 21 sites on 20 nodes
    with pytest.raises(ValueError, match="cannot fit"):
        embed(too_big, g20)


def test_embed_rejects_self_loops():
    with pytest.raises(ValueError, match="self loop"):
        embed([(3, 3)], builtin_topology("garnet20"))


def test_embed_is_deterministic():
    g20 = builtin_topology("garnet20")
    edges = instance_edges(12, 8.0, seed=5, mode="strict")
    first = embed(edges, g20)
    second = embed(edges, g20)
    assert first.status == second.status == "found"
    assert first.map == second.map


# ---------------------------------------------------------------- validation


def test_validate_reports_every_problem():
    g20 = builtin_topology("garnet20")
    edges = [(0, 1), (1, 2)]
    good = EmbeddingMap(pairs=((0, 0), (1, 1), (2, 2)))
    assert validate(good, edges, g20) == []

    doubled = EmbeddingMap(pairs=((0, 4), (1, 4), (2, 5)))
    problems = validate(doubled, edges, g20)
    assert any("both assigned to node 4" in p for p in problems)

    far = EmbeddingMap(pairs=((0, 0), (1, 1), (2, 19)))
    problems = validate(far, edges, g20)
    assert problems == ["edge (1, 2) maps to non-adjacent nodes (1, 19)"]

    partial = EmbeddingMap(pairs=((0, 0), (1, 1)))
    problems = validate(partial, edges, g20)
    assert problems == ["edge (1, 2): site 2 is unassigned"]

    rogue = EmbeddingMap(pairs=((0, 0), (1, 1), (2, 99)))
    problems = validate(rogue, edges, g20)
    assert any("unknown node 99" in p for p in problems)


def test_embedding_map_text_round_trip():
    emap = EmbeddingMap(pairs=((0, 7), (1, 3), (4, 12)))
    assert embedding_from_text(embedding_to_text(emap)) == emap
    with pytest.raises(ValueError, match="more than once"):
        EmbeddingMap(pairs=((0, 1), (0, 2)))
    with pytest.raises(ValueError, match="unrecognized"):
        embedding_from_text("0 1 2\n")


# ----------------------------------------------------------- instance graphs


def test_instance_edges_modes_are_nested():
    for seed in range(8):
        ecba = set(instance_edges(16, 4.0, seed, mode="ecba"))
        strict = set(instance_edges(16, 4.0, seed, mode="strict"))
        assert ecba <= strict
        chain = {(i, i + 1) for i in range(15)}
        assert chain <= strict
        extras = strict - chain
        assert all(j - i > 1 for i, j in extras)
    with pytest.raises(ValueError, match="mode"):
        instance_edges(8, 2.0, 0, mode="loose")


# -------------------------------------------------------------------- study


def test_feasibility_study_two_site_chains_always_embed():
    g20 = builtin_topology("garnet20")
    report = feasibility_study(2, 2.0, 5, g20, seed=1)
    assert (report.found, report.timeout, report.infeasible) == (5, 0, 0)


def test_feasibility_study_sampling_is_deterministic():
    e54 = builtin_topology("emerald54")
    a = feasibility_study(20, 2.0, 40, e54, seed=9, mode="strict")
    b = feasibility_study(20, 2.0, 40, e54, seed=9, mode="strict")
    assert (a.found, a.timeout, a.infeasible) == (b.found, b.timeout, b.infeasible)
    # The sampled instances themselves are reproducible bit-for-bit.
    for k in range(5):
        assert instance_edges(20, 2.0, seed=k, mode="strict") == instance_edges(
            20, 2.0, seed=k, mode="strict"
        )


def test_feasibility_study_strict_mode_succeeds_at_scale_sample():
    e54 = builtin_topology("emerald54")
    report = feasibility_study(20, 2.0, 120, e54, seed=2026, mode="strict")
    assert report.samples == 120
    assert report.found == 120
    assert report.timeout == 0 and report.infeasible == 0
    assert report.p50_ms <= report.p90_ms <= report.max_ms


def test_feasibility_study_rejects_empty_run():
    with pytest.raises(ValueError, match="num_samples"):
        feasibility_study(4, 2.0, 0, builtin_topology("garnet20"), seed=0)


def test_report_validation_and_csv():
    with pytest.raises(ValueError, match="add up"):
        FeasibilityReport(
            n=4, delta=2.0, mode="ecba", samples=3, found=1, timeout=1,
            infeasible=0, p50_ms=1.0, p90_ms=2.0, max_ms=3.0,
        )
    report = FeasibilityReport(
        n=20, delta=2.0, mode="strict", samples=10, found=10, timeout=0,
        infeasible=0, p50_ms=1.25, p90_ms=3.5, max_ms=7.125,
    )
    text = report_to_csv(report)
    header, row, tail = text.split("\n")
    assert header == "n,delta,mode,samples,found,timeout,infeasible,p50_ms,p90_ms,max_ms"
    assert row == "20,2,strict,10,10,0,0,1.250,3.500,7.125"
    assert tail == ""

import itertools
import random

import pytest

from stslab import (
    DomainError,
    Matching,
    TripleSystem,
    assemble_absorbing_structure,
    build_template,
    complete_to_sts,
    complete_via_structure,
    contracted_absorber_check,
    find_absorber,
    find_sub_absorber,
    resilience_spotcheck,
    spawn,
)

import oracles


def complete_host(n):
    return TripleSystem(n, itertools.combinations(range(1, n + 1), 3), kind="general")


@pytest.fixture(scope="module")
def big_host():
    """Complete 3-graph large enough for a q=1 absorbing structure.

    A q=1 template has 12 edges; 12 externally disjoint absorbers need
    12*18 = 216 fresh vertices on top of the 10 template slots, and two
    spare vertices make the leftover coverable by a single base triple.
    """
    return complete_host(228)


@pytest.fixture(scope="module")
def structure(big_host):
    st = assemble_absorbing_structure(big_host, flexible=(1, 2), seed=0)
    assert st is not None
    return st


class TestSubAbsorber:
    def test_fano_has_none(self, fano):
        # 9 distinct vertices cannot fit in a 7-point host
        assert find_sub_absorber(fano, 1, 2, 4) is None
        assert oracles.sub_absorbers_brute(fano, 1, 2, 4) == set()

    def test_engine_agrees_with_oracle_on_random_hosts(self):
        """Found gadget is always in the oracle's set; None means the set is empty."""
        rng = random.Random(5)
        found = 0
        for i in range(15):
            n = rng.choice((13, 15, 19))
            host = complete_to_sts(n, spawn(41, i))
            roots = rng.sample(range(1, n + 1), 3)
            oracle = oracles.sub_absorbers_brute(host, *roots)
            got = find_sub_absorber(host, *roots)
            if got is None:
                assert oracle == set()
            else:
                assert got.roots == tuple(roots)
                assert (got.externals, frozenset(got.edges)) in oracle
                found += 1
        assert found == 15  # these dense hosts always contain one

    def test_shape(self):
        host = complete_host(9)
        sub = find_sub_absorber(host, 1, 2, 3)
        assert sub is not None
        assert len(sub.edges) == 5
        assert len(set(sub.roots) | set(sub.externals)) == 9
        for e in sub.edges:
            assert e in host

    def test_forbidden_vertices_avoided(self):
        host = complete_host(12)
        sub = find_sub_absorber(host, 1, 2, 3, forbidden=(4, 5, 6))
        assert sub is not None
        assert set(sub.externals).isdisjoint({4, 5, 6})

    def test_budget_gives_up(self):
        assert find_sub_absorber(complete_host(15), 1, 2, 3, budget=1) is None

    def test_root_validation(self, sts9):
        with pytest.raises(DomainError):
            find_sub_absorber(sts9, 1, 1, 2)
        with pytest.raises(DomainError):
            find_sub_absorber(sts9, 0, 1, 2)


class TestAbsorber:
    def test_shape_and_matchings_on_complete_host(self):
        host = complete_host(21)
        ab = find_absorber(host, 1, 2, 3)
        assert ab is not None
        assert len(ab.edges) == 13
        assert len(ab.vertex_set()) == 21
        assert len(ab.externals) == 18
        cov = ab.covering_matching()
        non = ab.noncovering_matching()
        assert len(cov) == 7 and len(non) == 6
        assert set(cov.edges) | set(non.edges) == set(ab.edges)
        assert cov.vertices() == ab.vertex_set()
        assert non.vertices() == frozenset(ab.externals)
        # linearity inside the gadget
        pairs = [p for e in ab.edges for p in itertools.combinations(e, 2)]
        assert len(pairs) == len(set(pairs))

    def test_too_few_edges_means_none(self, sts9):
        # 12 edges can never contain a 13-edge gadget
        assert find_absorber(sts9, 1, 2, 5) is None

    def test_found_edges_exist_in_sts_host(self):
        host = complete_to_sts(25, 3)
        for roots in [(1, 2, 3), (2, 5, 9), (1, 10, 20)]:
            ab = find_absorber(host, *roots, budget=200_000)
            assert ab is not None
            assert ab.roots == roots
            for e in ab.edges:
                assert e in host

    def test_deterministic_first_fit(self):
        host = complete_to_sts(21, 6)
        a = find_absorber(host, 1, 2, 3)
        b = find_absorber(host, 1, 2, 3)
        assert (a is None) == (b is None)
        if a is not None:
            assert a.edges == b.edges

    def test_budget_none_vs_tiny(self):
        host = complete_host(21)
        assert find_absorber(host, 1, 2, 3, budget=2) is None
        assert find_absorber(host, 1, 2, 3, budget=None) is not None

    def test_hit_count_fixture_on_sts21(self):
        host = complete_to_sts(21, 1)
        hits = [
            roots
            for roots in [(1, 2, 3), (4, 8, 15), (2, 9, 17), (5, 6, 7), (10, 11, 21)]
            if find_absorber(host, *roots) is not None
        ]
        assert hits == [(2, 9, 17)]  # frozen for this host and root list


class TestContractedCheck:
    def test_complete_host_absorber_passes(self):
        ab = find_absorber(complete_host(21), 1, 2, 3)
        chk = contracted_absorber_check(ab)
        assert chk["ok"]
        assert chk["max_degree"] == 2
        assert chk["m3"] == 0.75
        assert chk["min_pair_span"] >= 5
        assert chk["min_triple_span"] >= 7

    def test_sts_host_absorbers_pass(self):
        host = complete_to_sts(27, 2)
        for roots in [(1, 2, 3), (3, 9, 27), (4, 13, 22)]:
            ab = find_absorber(host, *roots)
            assert ab is not None
            assert contracted_absorber_check(ab)["ok"]


class TestResilienceSpotcheck:
    def test_vacuous_when_degrees_below_target(self, sts9):
        assert resilience_spotcheck(sts9, 100.0, 3, 2, seed=0) == 0

    def test_full_degree_target_keeps_whole_host(self):
        # target = every degree: the only qualifying subgraph is the host
        # itself, and a complete host on >= 21 vertices always absorbs
        assert resilience_spotcheck(complete_host(30), 406, 2, 2, seed=0) == 0

    def test_induced_sts21_subset_fixture(self):
        host = complete_to_sts(21, 1)
        sub, _ = host.induced(range(1, 16))
        eta = 15 / 21
        alpha = 20 / 21  # degree (n-1)/2 written as alpha * n/2
        target = 0.999 * eta * eta * alpha * (21 / 2.0)
        assert min(sub.degree(v) for v in range(1, 16)) < target
        assert resilience_spotcheck(sub, target, 3, 2, seed=1) == 0  # vacuous


class TestTemplate:
    @pytest.mark.parametrize("q,verified", [(1, 2), (2, 6), (3, 20)])
    def test_small_templates_exhaustive(self, q, verified):
        t = build_template(q, 0)
        assert t.exhaustive
        assert t.q == q
        assert t.flexible == tuple(range(1, 2 * q + 1))
        assert t.n_vertices == 10 * q
        assert t.max_degree() <= 40
        assert t.verified_removals == verified  # C(2q, q)

    def test_every_half_removal_has_pm_q2(self):
        t = build_template(2, 1)
        for half in itertools.combinations(t.flexible, 2):
            assert t.has_pm_after_removal(half)

    def test_removal_must_be_flexible(self):
        t = build_template(2, 0)
        with pytest.raises(DomainError):
            t.has_pm_after_removal((99, 1))
        # non-half removals are allowed but leave an uncoverable remainder
        assert not t.has_pm_after_removal((1, 2, 3))

    def test_q_range(self):
        with pytest.raises(DomainError):
            build_template(0, 0)
        with pytest.raises(DomainError, match="q <= 34"):
            build_template(35, 0)

    def test_medium_template_sampled(self):
        t = build_template(6, 3, removal_samples=40)
        assert not t.exhaustive
        assert t.verified_removals == 40
        assert t.max_degree() <= 40

    def test_deterministic(self):
        assert build_template(4, 9).edges == build_template(4, 9).edges


class TestAbsorbingStructure:
    def test_assembly(self, structure):
        st = structure
        assert st.template.q == 1
        assert len(st.absorbers) == len(st.template.edges) == 12
        assert len(st.all_vertices()) == 226
        assert st.edge_count() == 13 * 12
        # externally vertex-disjoint absorbers
        seen = set()
        for roots, ab in st.absorbers:
            assert set(ab.roots) == set(roots)
            ext = set(ab.externals)
            assert not (ext & seen)
            assert ext.isdisjoint(st.template_vertices())
            seen |= ext
        assert st.max_degree() <= 40

    def test_greedy_exhaustion_returns_none(self):
        # q=2 wants 48 absorbers * 18 fresh externals; 60 vertices cannot
        host = complete_host(60)
        assert assemble_absorbing_structure(host, flexible=(1, 2, 3, 4), seed=0) is None

    def test_validation(self, sts9):
        with pytest.raises(DomainError):
            assemble_absorbing_structure(sts9, flexible=(1, 2, 3))  # odd
        with pytest.raises(DomainError):
            assemble_absorbing_structure(sts9, flexible=(1, 2))  # 10q > n
        with pytest.raises(DomainError):
            assemble_absorbing_structure(sts9, flexible=(1, 99))  # not a vertex

    def test_complete_via_structure_round_trip(self, big_host, structure):
        st = structure
        outside = sorted(set(range(1, 229)) - st.all_vertices())
        assert len(outside) == 2
        half = st.flexible[0]
        base = Matching.of([tuple(sorted(outside + [half]))])
        full = complete_via_structure(st, base)
        assert full.is_perfect(228)
        assert set(base.edges) <= set(full.edges)
        # every absorber contributed exactly one of its two matchings
        chosen = set(full.edges)
        covering_used = 0
        for _, ab in st.absorbers:
            cov = set(ab.covering_matching().edges) <= chosen
            non = set(ab.noncovering_matching().edges) <= chosen
            assert cov != non
            covering_used += cov
        assert covering_used == 3  # a PM of the 9 remaining template slots

    def test_complete_via_structure_other_half(self, structure):
        st = structure
        outside = sorted(set(range(1, 229)) - st.all_vertices())
        base = Matching.of([tuple(sorted(outside + [st.flexible[1]]))])
        assert complete_via_structure(st, base).is_perfect(228)

    def test_rejects_uncovered_outside(self, structure):
        with pytest.raises(DomainError, match="outside"):
            complete_via_structure(structure, Matching.of([]))

    def test_rejects_touching_structure_interior(self, structure):
        st = structure
        outside = sorted(set(range(1, 229)) - st.all_vertices())
        external = min(set(st.all_vertices()) - st.template_vertices())
        bad = Matching.of([tuple(sorted(outside + [external]))])
        with pytest.raises(DomainError, match="non-flexible"):
            complete_via_structure(st, bad)

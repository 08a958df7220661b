import math

import pytest

from stslab import (
    DomainError,
    TripleSystem,
    almost_resolve,
    complete_to_sts,
    good_partition,
    resolve,
    rich_set_search,
    spawn,
)

import oracles


@pytest.fixture(scope="module")
def sts21():
    return complete_to_sts(21, 1)


@pytest.fixture(scope="module")
def report21(sts21):
    return almost_resolve(sts21, seed=3)


def check_output(system, report):
    """Every matching perfect, all edges from the system, no edge reused."""
    assert oracles.pm_partition_check(report.n, [pm.edges for pm in report.matchings])
    for pm in report.matchings:
        for t in pm.edges:
            assert t in system
    total = sum(len(pm) for pm in report.matchings)
    assert report.stats["used_edges"] == total
    assert report.coverage == pytest.approx(total / report.m)


class TestRichSetSearch:
    def test_complete_host_takes_everything(self, k9):
        rich = rich_set_search(k9, 9, 0.1, seed=0)
        assert rich is not None
        assert rich.vertices == frozenset(range(1, 10))
        assert rich.threshold == pytest.approx(3.6)  # 0.1 * C(9,2) * density 1
        assert rich.deficient == ()
        assert rich.checked_subsets >= 1

    def test_sts_host(self, sts21):
        rich = rich_set_search(sts21, 18, 0.1, seed=0)
        assert rich is not None
        assert rich.vertices == frozenset(range(1, 19))  # degree-ranked start survives
        assert rich.threshold == pytest.approx(1.1053, abs=1e-4)
        assert rich.deficient == ()

    def test_sparse_host_gives_up(self):
        one = TripleSystem(10, [(1, 2, 3)], kind="linear")
        # every 5-set has a 4-subset missing part of the only edge
        assert rich_set_search(one, 5, 0.1, seed=0) is None

    def test_exact_size_subset(self):
        one = TripleSystem(10, [(1, 2, 3)], kind="linear")
        rich = rich_set_search(one, 3, 0.1, seed=0)
        assert rich is not None
        assert rich.vertices == frozenset({1, 2, 3})
        assert rich.threshold == pytest.approx(0.0375)

    def test_degenerate_inputs(self):
        one = TripleSystem(10, [(1, 2, 3)], kind="linear")
        assert rich_set_search(TripleSystem(10, [], kind="linear"), 5, 0.1, 0) is None
        assert rich_set_search(one, 2, 0.1, seed=0) is None
        with pytest.raises(DomainError):
            rich_set_search(one, 11, 0.1, seed=0)

    def test_partitioned_host_fixture(self):
        """Searches on the F_i parts of a partitioned STS(315) succeed in
        every round, and exhaustive hitting-set checks expose exactly one
        round where the 50-sample verification overlooked a deletable set."""
        host = complete_to_sts(315, 2026)
        bundle = good_partition(host, 0.16, seed=spawn(315, 0))
        assert bundle.ell == 10
        xi_budget = math.ceil(0.02 * host.n)  # 7 removable vertices
        sampled_misses = []
        for i in range(bundle.ell):
            f = bundle.f_system(host, i)
            rich = rich_set_search(f, 30, 0.02, seed=spawn(808, i))
            assert rich is not None  # every round finds a candidate
            assert rich.vertices <= bundle.W[i]
            induced = [e for e in f.edges if set(e) <= rich.vertices]
            assert len(induced) >= 18
            if oracles.has_hitting_set(induced, xi_budget):
                # sampling accepted a set with a size-7 blocking deletion
                sampled_misses.append(i)
        assert sampled_misses == [5]


class TestAlmostResolve:
    def test_sts9_reaches_the_full_resolution(self):
        system = complete_to_sts(9, 0)
        report = almost_resolve(system, seed=3)
        check_output(system, report)
        assert report.disjoint_pm_count() == 4
        assert report.coverage == 1.0
        baseline = resolve(system).resolution
        assert baseline is not None and len(baseline.classes) == 4

    def test_sts21_output_and_counters(self, sts21, report21):
        check_output(sts21, report21)
        assert report21.disjoint_pm_count() == 6
        assert report21.coverage == pytest.approx(0.6)
        s = report21.stats
        # every class outcome is accounted for exactly once
        assert s["classes_considered"] == (
            s["classes_direct"]
            + s["absorb_completed"]
            + s["fallback_exact_success"]
            + s["fallback_drop"]
        )
        assert s["absorb_cap_binding"] == s["absorb_attempted"] == 3
        assert s["absorb_completed"] == 0  # embed bound honest at n=21
        assert s["residual_pms"] == 6
        assert s["rounds"] == 1

    def test_sts27_uses_the_bridge_stage(self):
        system = complete_to_sts(27, 2)
        report = almost_resolve(system, seed=3)
        check_output(system, report)
        assert report.disjoint_pm_count() == 9  # = (n-1)//2 - 4
        assert report.coverage == pytest.approx(0.6923, abs=1e-4)
        assert report.stats["bridge_edges_used"] == 2

    def test_deterministic(self, sts21, report21):
        again = almost_resolve(sts21, seed=3)
        assert len(again.matchings) == len(report21.matchings)
        assert all(
            a.edges == b.edges for a, b in zip(again.matchings, report21.matchings)
        )
        assert again.stats == report21.stats

    def test_force_absorb_reports_failures_not_caps(self, sts21, report21):
        forced = almost_resolve(sts21, seed=3, force_absorb=True)
        check_output(sts21, forced)
        s = forced.stats
        assert s["absorb_cap_binding"] == 0
        assert s["absorb_failed"] == 3  # structures cannot embed in 21 vertices
        # forcing the stage changes bookkeeping, not the packing outcome
        assert forced.disjoint_pm_count() == report21.disjoint_pm_count()

    def test_aggressive_trim_leaves_residual_packer_only(self, sts21):
        report = almost_resolve(sts21, seed=3, trim_frac=3.0)
        check_output(sts21, report)
        assert report.stats["classes_considered"] == 0
        assert report.disjoint_pm_count() == report.stats["residual_pms"] == 6

    def test_input_validation(self, fano, k9):
        with pytest.raises(DomainError):
            almost_resolve(fano)  # 7 = 1 mod 6
        with pytest.raises(DomainError):
            almost_resolve(complete_to_sts(13, 0))  # 13 = 1 mod 6
        with pytest.raises(DomainError):
            almost_resolve(k9)  # general systems rejected

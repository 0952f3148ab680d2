import itertools
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irregular_lab.measures import (
    bernoulli_measure,
    empirical_distribution,
    markov_measure,
    parry_measure,
    periodic_measure,
    word_weakstar_deviation,
)
from irregular_lab.observables import (
    LocallyConstant,
    birkhoff_averages,
    indicator_equal_pair,
    indicator_symbol,
    irregularity_certificate,
)
from irregular_lab.pressure import cylinder_pressure_estimate
from irregular_lab.symbolic import BridgeError, full_shift, golden_sft, is_admissible, materialize_prefix
from irregular_lab.synthesis import (
    BlockSchedule,
    SegmentError,
    build_irregular_point,
    build_jointly_irregular_point,
    build_maximal_oscillation_point,
    build_saturated_point,
    generic_segment,
    separated_irregular_family,
)

X2, G = full_shift(2), golden_sft()
LN2 = math.log(2)
GOLDEN = (1 + math.sqrt(5)) / 2


def delta(space, cycle):
    return periodic_measure(space, cycle)


class TestSchedule:
    def test_default_lengths(self):
        assert BlockSchedule(initial_length=10).lengths(4) == [10, 20, 40, 140]
        assert BlockSchedule(initial_length=1, growth=10).lengths(3) == [1, 10, 110]

    def test_tolerances(self):
        s = BlockSchedule(tol0=0.05, tol_decay=0.5, tol_floor=0.01)
        assert [s.tol(j) for j in range(4)] == [0.05, 0.025, 0.0125, 0.01]

    def test_invalid(self):
        with pytest.raises(ValueError):
            BlockSchedule(growth=0.5)
        with pytest.raises(ValueError):
            BlockSchedule.from_dict({"speed": 3})
        s = BlockSchedule(initial_length=7)
        assert BlockSchedule.from_dict(s.to_dict()) == s


class TestGenericSegment:
    def test_periodic_exact(self):
        w = generic_segment(X2, delta(X2, "01"), 10, 2, 0.05, 0)
        assert "".join(map(str, w)) in ("0101010101", "1010101010")

    def test_bernoulli(self):
        mu = bernoulli_measure(X2, [0.5, 0.5])
        w = generic_segment(X2, mu, 2000, 3, 0.02, 42)
        assert w.size == 2000
        d = empirical_distribution(w, 3, 2)
        assert np.abs(d.probs - 1 / 8).sum() / 2 <= 0.02 + 1e-12

    def test_golden_parry(self):
        w = generic_segment(G, parry_measure(G), 2000, 2, 0.02, 1)
        assert "11" not in "".join(map(str, w))

    def test_too_short(self):
        with pytest.raises(ValueError):
            generic_segment(X2, delta(X2, "0"), 3, 8, 0.1, 0)

    def test_unreachable_tolerance(self):
        with pytest.raises(SegmentError):
            generic_segment(X2, bernoulli_measure(X2, [0.5, 0.5]), 20, 4, 1e-6, 0)


class TestIrregularPoint:
    def test_fast_growth_extremes(self):
        sched = BlockSchedule(initial_length=10, growth=10, tol0=0.0, tol_floor=0.0)
        x, plan = build_irregular_point(X2, delta(X2, "0"), delta(X2, "1"), sched)
        phi = indicator_symbol(2, 1)
        ends = plan.block_ends(10**6)
        tr = birkhoff_averages(x, phi, ends)
        avgs = tr.averages[phi.name]
        assert min(avgs[1::2]) >= 10 / 11 - 1e-2
        assert max(avgs[2::2]) <= 1 / 11 + 1e-2

    def test_equal_measures_rejected(self):
        with pytest.raises(ValueError):
            build_irregular_point(X2, delta(X2, "01"), delta(X2, "10"))

    def test_not_mixing(self):
        from irregular_lab.symbolic import sft

        S = sft([[1, 1], [0, 1]])
        with pytest.raises(BridgeError):
            build_irregular_point(S, delta(S, "0"), delta(S, "1"))

    def test_bernoulli_vs_fixed(self):
        x, plan = build_irregular_point(X2, bernoulli_measure(X2, [0.5, 0.5]), delta(X2, "0"), seed=42)
        cert = irregularity_certificate(x, indicator_symbol(2, 1), "blocks", tol=0.02, horizon=10**6)
        assert cert is not None
        assert abs(cert.gap - 0.5) <= 0.03

    def test_golden_admissible_scan(self):
        x, plan = build_irregular_point(G, parry_measure(G), delta(G, "01"), seed=3)
        w = materialize_prefix(x, 10**6)
        assert not np.any((w[:-1] == 1) & (w[1:] == 1))

    def test_block_end_bound(self):
        mu1, mu2 = bernoulli_measure(X2, [0.5, 0.5]), markov_measure(X2, [[0.9, 0.1], [0.5, 0.5]])
        x, plan = build_irregular_point(X2, mu1, mu2, seed=5)
        plan.block_ends(2 * 10**5)
        word = plan.extend_to(plan.records[-1].end)
        for rec in plan.records:
            d = word_weakstar_deviation(word[: rec.end], rec.target, 8)
            assert d == pytest.approx(rec.prefix_distance, abs=1e-12)
            assert d <= rec.tol + rec.overhead + 1e-12
            seg = word[rec.segment_start : rec.end]
            assert word_weakstar_deviation(seg, rec.target, 8) <= rec.tol + 1e-12

    def test_deterministic(self):
        args = (X2, bernoulli_measure(X2, [0.5, 0.5]), delta(X2, "0"))
        a = build_irregular_point(*args, seed=9)[1].extend_to(50_000)
        b = build_irregular_point(*args, seed=9)[1].extend_to(50_000)
        c = build_irregular_point(*args, seed=10)[1].extend_to(50_000)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    @pytest.mark.parametrize("space", [X2, G], ids=["full", "golden"])
    def test_periodic_closing(self, space):
        x, plan = build_irregular_point(space, delta(space, "0"), delta(space, "01"), close_periodic=True, horizon=5000)
        p = x.period
        assert p is not None and p >= 5000
        w = materialize_prefix(x, 3 * p)
        assert np.array_equal(w[p : 2 * p], w[:p])
        assert is_admissible(space, w)

    def test_closing_needs_horizon(self):
        with pytest.raises(ValueError):
            build_irregular_point(X2, delta(X2, "0"), delta(X2, "1"), close_periodic=True)


class TestJointly:
    def test_two_observables(self):
        phis = [indicator_symbol(2, 1, "ones"), indicator_equal_pair(2, "eq")]
        pairs = [
            (delta(X2, "0"), delta(X2, "1")),
            (delta(X2, "01"), delta(X2, "0")),
        ]
        x, plan, certs = build_jointly_irregular_point(X2, phis, pairs, seed=1, horizon=10**6, tol=0.01)
        assert len(plan.theta) == 2 and math.isclose(sum(plan.theta), 1.0)
        assert all(c is not None and c.gap >= 0.02 for c in certs.values())

    def test_single(self):
        phi = indicator_symbol(2, 1)
        x, plan, certs = build_jointly_irregular_point(X2, [phi], [(delta(X2, "0"), delta(X2, "1"))], horizon=10**6)
        assert plan.theta == (1.0,)
        assert certs[phi.name] is not None

    def test_non_separating_pair(self):
        phi = indicator_symbol(2, 1)
        with pytest.raises(ValueError):
            build_jointly_irregular_point(X2, [phi], [(delta(X2, "01"), delta(X2, "10"))])

    def test_count_mismatch(self):
        with pytest.raises(ValueError):
            build_jointly_irregular_point(X2, [indicator_symbol(2, 1)], [])


class TestSaturatedAndGmax:
    def test_saturated_dense(self):
        K = [delta(X2, "0"), delta(X2, "1")]
        x, plan = build_saturated_point(X2, K, seed=0)
        phi = indicator_symbol(2, 1)
        plan.block_ends(2 * 10**6)
        ends = [r.end for r in plan.records if r.end <= 2 * 10**6]
        avgs = birkhoff_averages(x, phi, ends).averages[phi.name]
        # block-end averages visit every 0.05-neighbourhood of the segment [0, 1]
        grid = np.linspace(0, 1, 21)
        assert all(min(abs(a - g) for a in avgs) <= 0.05 for g in grid)

    def test_single_vertex(self):
        x, plan = build_saturated_point(X2, [bernoulli_measure(X2, [0.5, 0.5])], seed=2)
        phi = indicator_symbol(2, 1)
        a = birkhoff_averages(x, phi, [10**6]).averages[phi.name][0]
        assert abs(a - 0.5) <= 0.02

    def test_empty(self):
        with pytest.raises(ValueError):
            build_saturated_point(X2, [])
        with pytest.raises(ValueError):
            build_maximal_oscillation_point(X2, [])

    def test_gmax_visits_every_net_member(self):
        net = [delta(X2, "0"), delta(X2, "1"), delta(X2, "01")]
        x, plan = build_maximal_oscillation_point(X2, net, BlockSchedule(initial_length=100), seed=0)
        plan.block_ends(10**5)
        for rec in plan.records:
            assert rec.deviation <= rec.tol + 1e-12
            assert rec.prefix_distance <= rec.tol + rec.overhead + 1e-12
        assert {r.label for r in plan.records} == {0, 1, 2}


class TestFamily:
    def test_full_shift_rate(self):
        fam = separated_irregular_family(
            X2, bernoulli_measure(X2, [0.5, 0.5]), delta(X2, "0"), 10_000, 0.9, block_len=100
        )
        assert fam.rate >= 0.9 * LN2 - 0.01

    def test_golden_rate(self):
        fam = separated_irregular_family(G, parry_measure(G), delta(G, "01"), 10_000, 0.8, block_len=100)
        assert fam.rate >= 0.8 * math.log(GOLDEN) - 0.03

    def test_no_free_blocks(self):
        fam = separated_irregular_family(X2, bernoulli_measure(X2, [0.5, 0.5]), delta(X2, "0"), 500, 0.0)
        assert fam.rate == 0.0 and fam.cardinality == 1

    def test_argument_checks(self):
        mu = bernoulli_measure(X2, [0.5, 0.5])
        with pytest.raises(ValueError):
            separated_irregular_family(X2, mu, delta(X2, "0"), 1000, 1.0)
        with pytest.raises(ValueError):
            separated_irregular_family(X2, mu, delta(X2, "0"), 1000, 0.5, block_len=5)

    @pytest.mark.parametrize("space", [X2, G], ids=["full", "golden"])
    def test_random_members_separated(self, space):
        mu = parry_measure(space) if space is G else bernoulli_measure(X2, [0.5, 0.5])
        fam = separated_irregular_family(space, mu, delta(space, "01"), 2000, 0.5, block_len=50, seed=4)
        rng = random.Random(0)
        seen = set()
        for _ in range(100):
            ch = fam.random_choices(rng)
            w = fam.member(ch)
            assert w.size == fam.n and is_admissible(space, w)
            seen.add((tuple(ch), w.tobytes()))
        words = {b for _, b in seen}
        assert len(words) == len({c for c, _ in seen})

    def test_partition_sum_bruteforce(self):
        # one free block of 20 golden symbols: every member can be listed
        fam = separated_irregular_family(G, parry_measure(G), delta(G, "01"), 100, 0.2, block_len=20, seed=1)
        assert len(fam.block_counts) == 1
        phi = LocallyConstant(2, 2, np.array([0.3, -0.2, 0.7, np.nan]))
        members = [fam.member([i]) for i in range(fam.block_counts[0])]
        assert len({m.tobytes() for m in members}) == len(members)
        sums = [math.fsum(phi(m[i : i + 2]) for i in range(fam.n - 1)) for m in members]
        brute = float(np.logaddexp.reduce(sums))
        assert fam.log_partition_sum(phi) == pytest.approx(brute, abs=1e-9)
        assert cylinder_pressure_estimate(G, fam, phi, 100).value == pytest.approx(brute / 100, abs=1e-11)

    def test_block_count_bruteforce(self):
        fam = separated_irregular_family(G, parry_measure(G), delta(G, "01"), 100, 0.2, block_len=20, seed=1)
        piece = fam.free_blocks[0]
        _, b, left, right = piece
        count = 0
        for w in itertools.product((0, 1), repeat=b):
            full = ((left,) if left is not None else ()) + w + (right,)
            count += is_admissible(G, full)
        assert fam.block_counts[0] == count


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**16))
def test_any_seed_gives_admissible_golden_prefix(seed):
    x, _ = build_irregular_point(G, parry_measure(G), delta(G, "0"), BlockSchedule(initial_length=200), seed=seed)
    assert is_admissible(G, materialize_prefix(x, 20_000))

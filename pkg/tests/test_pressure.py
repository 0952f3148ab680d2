import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irregular_lab.measures import cylinder_distribution, entropy_rate, integrate, markov_measure, parry_measure
from irregular_lab.observables import LocallyConstant, constant, indicator_symbol
from irregular_lab.pressure import (
    beta_entropy_estimate,
    bs_dimension,
    cylinder_pressure_estimate,
    equilibrium_markov,
    separated_entropy_estimate,
    transfer_matrix,
    transfer_pressure,
)
from irregular_lab.symbolic import beta_shift, count_words, enumerate_words, full_shift, golden_sft, sft

X2, X3, G = full_shift(2), full_shift(3), golden_sft()
LN2 = math.log(2)
LNG = math.log((1 + math.sqrt(5)) / 2)


def eig_pressure(space, phi):
    """Oracle: log spectral radius by dense eigendecomposition of the unscaled matrix."""
    r = phi.range
    mem = max(r - 1, 1)
    states = [w for w in itertools.product(range(space.k), repeat=mem) if all(space.matrix[a, b] for a, b in zip(w, w[1:]))]
    idx = {s: i for i, s in enumerate(states)}
    M = np.zeros((len(states), len(states)))
    for u in states:
        for s in range(space.k):
            if space.matrix[u[-1], s]:
                M[idx[u], idx[(u + (s,))[1:]]] = math.exp(phi((u + (s,))[:r]))
    return math.log(max(abs(np.linalg.eigvals(M))))


potentials = st.lists(st.floats(-3, 3), min_size=4, max_size=4).map(lambda v: LocallyConstant(2, 2, np.array(v)))


class TestTransfer:
    def test_examples(self):
        assert transfer_pressure(X2, constant(2, 0.0)).value == pytest.approx(LN2, abs=1e-12)
        assert transfer_pressure(X2, indicator_symbol(2, 1)).value == pytest.approx(math.log(1 + math.e), abs=1e-12)
        assert transfer_pressure(G, constant(2, 0.0)).value == pytest.approx(LNG, abs=1e-12)
        assert transfer_pressure(X3, constant(3, 0.5)).value == pytest.approx(math.log(3) + 0.5, abs=1e-12)

    def test_range_three(self):
        phi = LocallyConstant(2, 3, np.linspace(-1, 1, 8))
        assert transfer_pressure(X2, phi).value == pytest.approx(eig_pressure(X2, phi), abs=1e-10)

    def test_rejects(self):
        with pytest.raises(TypeError):
            transfer_pressure(beta_shift("1.8"), constant(2, 0.0))
        with pytest.raises(ValueError):
            transfer_pressure(X3, constant(2, 0.0))
        with pytest.raises(ValueError):
            transfer_pressure(sft([[1, 1], [0, 1]]), constant(2, 0.0))

    def test_matrix_shape(self):
        states, B, shift = transfer_matrix(G, LocallyConstant(2, 3, np.zeros(8)))
        assert states == [(0, 0), (0, 1), (1, 0)]
        assert B.shape == (3, 3) and shift == 0.0

    @given(potentials, st.floats(-5, 5))
    def test_translation(self, phi, c):
        shifted = phi.affine(1.0, c)
        assert transfer_pressure(X2, shifted).value == pytest.approx(transfer_pressure(X2, phi).value + c, abs=1e-9)

    @given(potentials)
    def test_matches_eig(self, phi):
        assert transfer_pressure(X2, phi).value == pytest.approx(eig_pressure(X2, phi), abs=1e-9)


class TestEquilibrium:
    def test_bernoulli(self):
        mu, p = equilibrium_markov(X2, indicator_symbol(2, 1))
        probs = cylinder_distribution(mu, 1).probs
        assert probs == pytest.approx([1 / (1 + math.e), math.e / (1 + math.e)], abs=1e-12)

    def test_parry(self):
        mu, p = equilibrium_markov(G, constant(2, 0.0))
        assert entropy_rate(mu) == pytest.approx(LNG, abs=1e-10)
        assert cylinder_distribution(mu, 2).probs == pytest.approx(cylinder_distribution(parry_measure(G), 2).probs, abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(potentials)
    def test_variational_equality(self, phi):
        mu, p = equilibrium_markov(X2, phi)
        assert entropy_rate(mu) + integrate(mu, phi) == pytest.approx(p.value, abs=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(potentials, st.lists(st.floats(0.05, 1), min_size=4, max_size=4))
    def test_variational_dominance(self, phi, w):
        P = np.array(w).reshape(2, 2)
        P = P / P.sum(axis=1, keepdims=True)
        mu = markov_measure(X2, P)
        assert entropy_rate(mu) + integrate(mu, phi) <= eig_pressure(X2, phi) + 1e-9


class TestCylinder:
    def test_matches_transfer(self):
        phi = indicator_symbol(2, 1)
        assert cylinder_pressure_estimate(X2, None, phi, 12).value == pytest.approx(math.log(1 + math.e), abs=1e-12)

    def test_golden_counts(self):
        vals = [cylinder_pressure_estimate(G, None, constant(2, 0.0), n).value for n in (5, 10, 20)]
        assert abs(vals[-1] - LNG) <= 0.03
        assert vals[0] > vals[1] > vals[2] >= LNG
        assert vals[1] * 10 == pytest.approx(math.log(count_words(G, 10)), abs=1e-12)

    def test_explicit_words(self):
        phi = indicator_symbol(2, 1)
        v = cylinder_pressure_estimate(X2, ["000", "111"], phi, 3).value
        assert v == pytest.approx(math.log(1 + math.exp(3)) / 3, abs=1e-15)
        with pytest.raises(ValueError):
            cylinder_pressure_estimate(X2, ["00"], phi, 3)
        with pytest.raises(ValueError):
            cylinder_pressure_estimate(X2, [], phi, 3)

    def test_beta_bruteforce(self):
        B = beta_shift("1.8")
        phi = LocallyConstant(2, 2, np.array([0.1, 0.5, -0.3, 0.2]))
        n = 12
        terms = [math.fsum(phi(w[i : i + 2]) for i in range(n - 1)) for w in enumerate_words(B, n)]
        expect = float(np.logaddexp.reduce(terms)) / n
        assert cylinder_pressure_estimate(B, None, phi, n).value == pytest.approx(expect, abs=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(potentials)
    def test_subadditive_above_transfer(self, phi):
        # shifting phi by a constant does not change the gap, so work with phi >= 0
        phi = phi.affine(1.0, -float(phi.values.min()))
        exact = transfer_pressure(X2, phi).value
        ests = [cylinder_pressure_estimate(X2, None, phi, n).value for n in (4, 8, 16, 32)]
        assert all(e >= exact - 1e-9 for e in ests)
        assert all(a >= b - 1e-9 for a, b in zip(ests, ests[1:]))


class TestSeparated:
    def test_examples(self):
        assert separated_entropy_estimate(X2, 4, 0.25) == pytest.approx(math.log(16) / 4)
        assert separated_entropy_estimate(X2, 8, 0.5) >= math.log(16) / 8 - 1e-12
        assert abs(separated_entropy_estimate(G, 10, 0.1) - LNG) <= 0.1

    def test_brute_force_max_small(self):
        # greedy is a lower bound for the largest 2-separated set of 4-words (which is 8)
        best = 0
        words = list(itertools.product((0, 1), repeat=4))
        for r in range(8, 10):
            for sub in itertools.combinations(range(16), r):
                if all(sum(a != b for a, b in zip(words[i], words[j])) >= 2 for i, j in itertools.combinations(sub, 2)):
                    best = r
                    break
            else:
                break
        assert best == 8
        greedy = round(math.exp(4 * separated_entropy_estimate(X2, 4, 0.5)))
        assert greedy <= best and greedy == 8

    @pytest.mark.parametrize("space", [X2, G, X3], ids=["full2", "golden", "full3"])
    @pytest.mark.parametrize("delta", [0.1, 0.3, 0.6])
    def test_below_count(self, space, delta):
        n = 8
        assert separated_entropy_estimate(space, n, delta) <= math.log(count_words(space, n)) / n + 1e-12

    def test_guards(self):
        with pytest.raises(ValueError):
            separated_entropy_estimate(X2, 30, 0.5)
        with pytest.raises(ValueError):
            separated_entropy_estimate(X2, 8, 1.0)


class TestBowen:
    def test_constant_two(self):
        assert bs_dimension(X2, constant(2, 2.0)) == pytest.approx(LN2 / 2, abs=1e-8)

    def test_golden(self):
        assert bs_dimension(G, constant(2, 1.0), tol=1e-10) == pytest.approx(LNG, abs=1e-6)
        assert bs_dimension(G, constant(2, LNG), tol=1e-10) == pytest.approx(1.0, abs=1e-6)

    def test_nonpositive(self):
        with pytest.raises(ValueError):
            bs_dimension(X2, constant(2, 0.0))

    @settings(max_examples=15, deadline=None)
    @given(st.lists(st.floats(0.2, 3), min_size=4, max_size=4))
    def test_root_and_monotone(self, vals):
        phi = LocallyConstant(2, 2, np.array(vals))
        tol = 1e-8
        s = bs_dimension(X2, phi, tol=tol)
        lipschitz = float(phi.values.max())
        assert abs(transfer_pressure(X2, phi.scaled(-s)).value) <= 10 * tol * lipschitz
        grid = np.linspace(0, 2 * s, 7)[1:-1]
        ps = [transfer_pressure(X2, phi.scaled(-t)).value for t in grid]
        assert all(a > b for a, b in zip(ps, ps[1:]))

    def test_family_dimension(self):
        from irregular_lab.measures import bernoulli_measure, periodic_measure
        from irregular_lab.synthesis import separated_irregular_family

        fam = separated_irregular_family(X2, bernoulli_measure(X2, [0.5, 0.5]), periodic_measure(X2, "0"), 2000, 0.5, 100)
        s = bs_dimension(X2, constant(2, 1.0), E=fam)
        assert s == pytest.approx(fam.rate, abs=1e-7)


class TestBetaEntropy:
    def test_examples(self):
        rows = beta_entropy_estimate("golden", [10, 20, 40])
        assert [r["n"] for r in rows] == [10, 20, 40]
        assert rows[-1]["error"] <= rows[0]["error"]
        assert rows[-1]["log_beta"] == pytest.approx(LNG, abs=1e-15)
        assert rows[-1]["dim_H"] == pytest.approx(1.0, abs=0.05)

    @pytest.mark.parametrize("beta", ["1.5", "2.5", "3.7"])
    def test_counting_bound(self, beta):
        b = float(beta)
        for row in beta_entropy_estimate(beta, [16, 32]):
            assert row["error"] <= math.log(b * b / (b - 1)) / row["n"] + 1e-12

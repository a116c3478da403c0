import math
from collections import Counter

import numpy as np
import pytest

from misspec.families import (BERNOULLI, MARKOV, ParamGrid, build_bernoulli_grid, build_markov_grid,
                              build_multinomial_grid, conditional_predictive_weight, log_prob_table,
                              parse_family, sequence_law, type_classes)

from oracles import bern_prob, cat_prob, markov_prob, sequences


def test_parse_family():
    assert parse_family("bernoulli") == (BERNOULLI, 1)
    assert parse_family("multinomial(3)") == ("multinomial", 3)
    assert parse_family("markov1-binary") == (MARKOV, 2)
    for bad in ("multinomial(0)", "multinomial(5)", "gauss"):
        with pytest.raises(ValueError):
            parse_family(bad)


def test_bernoulli_grid_default_size_and_theta():
    g = build_bernoulli_grid(0, 1, 1001, 0.25, 0.75)
    assert len(g) == 1001
    assert g.n_theta == 501
    th = g.values[g.theta_flags]
    assert th[0] == pytest.approx(0.25) and th[-1] == pytest.approx(0.75)


def test_grid_rejects_unsorted_and_out_of_range():
    with pytest.raises(ValueError):
        ParamGrid(BERNOULLI, [0.5, 0.2], [True, True])
    with pytest.raises(ValueError):
        ParamGrid(BERNOULLI, [0.5, 1.2], [True, True])
    with pytest.raises(ValueError):
        ParamGrid(BERNOULLI, [0.2, 0.5], [True])


def test_bernoulli_classes_binomial():
    cl = type_classes(BERNOULLI, 5)
    assert len(cl) == 6
    assert math.exp(cl.log_mult[2]) == pytest.approx(10)
    assert np.exp(cl.log_mult).sum() == pytest.approx(32)


@pytest.mark.parametrize("d,n", [(2, 4), (3, 3)])
def test_multinomial_classes_count_all_sequences(d, n):
    cl = type_classes(f"multinomial({d})", n)
    assert np.exp(cl.log_mult).sum() == pytest.approx((d + 1) ** n)
    brute = Counter(tuple(np.bincount(s, minlength=d + 1)) for s in sequences(d + 1, n))
    for stat, lm in cl:
        assert math.exp(lm) == pytest.approx(brute[stat])


@pytest.mark.parametrize("n", [1, 3, 7])
def test_markov_classes_match_enumeration(n):
    cl = type_classes(MARKOV, n)
    brute = Counter()
    for s in sequences(2, n):
        n01 = sum(1 for a, b in zip(s[:-1], s[1:]) if (a, b) == (0, 1))
        n10 = sum(1 for a, b in zip(s[:-1], s[1:]) if (a, b) == (1, 0))
        n11 = sum(1 for a, b in zip(s[:-1], s[1:]) if (a, b) == (1, 1))
        brute[(s[0], n01, n10, n11)] += 1
    assert sum(brute.values()) == 2 ** n
    assert {stat: round(math.exp(lm)) for stat, lm in cl} == dict(brute)


def test_bernoulli_log_probs_against_enumeration():
    g = build_bernoulli_grid(0, 1, 11, 0, 1)
    n = 6
    L = log_prob_table(g, type_classes(BERNOULLI, n))
    for j, th in enumerate(g.values):
        for s in sequences(2, n):
            p = bern_prob(th, s)
            got = math.exp(L[j, sum(s)])
            assert got == pytest.approx(p, abs=1e-15, rel=1e-10)


def test_multinomial_log_probs_against_enumeration():
    g = build_multinomial_grid(2, 4)
    cl = type_classes(g.family, 3)
    L = log_prob_table(g, cl)
    for j, pt in enumerate(g.points):
        for s in sequences(3, 3):
            c = cl.index(np.bincount(s, minlength=3))
            assert math.exp(L[j, c]) == pytest.approx(cat_prob(pt, s), abs=1e-15, rel=1e-10)


def test_markov_log_probs_against_enumeration():
    g = build_markov_grid(5, 0.25, 0.75)
    cl = type_classes(MARKOV, 5)
    L = log_prob_table(g, cl)
    for j, (a, b) in enumerate(g.points):
        for s in sequences(2, 5):
            n01 = sum(1 for x, y in zip(s[:-1], s[1:]) if (x, y) == (0, 1))
            n10 = sum(1 for x, y in zip(s[:-1], s[1:]) if (x, y) == (1, 0))
            n11 = sum(1 for x, y in zip(s[:-1], s[1:]) if (x, y) == (1, 1))
            c = cl.index((s[0], n01, n10, n11))
            assert math.exp(L[j, c]) == pytest.approx(markov_prob(a, b, s), abs=1e-15, rel=1e-10)


def test_markov_grid_theta_is_memoryless():
    g = build_markov_grid(11, 0.2, 0.8)
    th = g.points[g.theta_flags]
    assert np.allclose(th.sum(axis=1), 1)
    assert th[:, 0].min() == pytest.approx(0.2) and th[:, 0].max() == pytest.approx(0.8)
    assert not np.any((g.points[:, 0] == 0) & (g.points[:, 1] == 0))


def test_sequence_law_total_and_degenerate():
    cl = type_classes(BERNOULLI, 8)
    assert sequence_law(0.3, cl).total() == pytest.approx(1, abs=1e-12)
    law = sequence_law(0.0, cl)
    assert law.class_log_prob[0] == 0.0 and np.all(np.isneginf(law.class_log_prob[1:]))
    assert sequence_law((0.3, 0.6), type_classes(MARKOV, 3)).total() == pytest.approx(1, abs=1e-12)


def test_multinomial_face():
    g = build_multinomial_grid(2, 4, theta_support=[0, 1])
    assert np.all(g.points[g.theta_flags][:, 2] == 0)
    assert g.n_theta == 5


def test_conditional_predictive_weight_uniform_pair():
    g = ParamGrid(BERNOULLI, [0.2, 0.6], [True, True])
    # two ones then a one: (0.5 0.2^3 + 0.5 0.6^3) / (0.5 0.2^2 + 0.5 0.6^2)
    want = (0.2 ** 3 + 0.6 ** 3) / (0.2 ** 2 + 0.6 ** 2)
    assert conditional_predictive_weight([0.5, 0.5], g, 2, 3) == pytest.approx(want, rel=1e-14)

import math

import numpy as np
import pytest

from misspec.families import BERNOULLI, MARKOV, ParamGrid, build_bernoulli_grid, build_markov_grid, \
    build_multinomial_grid, sequence_law, type_classes
from misspec.measures import (Prior, analytic_shell, conditional_kl_batch, delta_epsilon,
                              kl_bernoulli_symbol, kl_sequence, mutual_information, project_onto_theta,
                              sequence_penalty, sequence_profile, symbol_penalty, theta_epsilon_shell)

from oracles import batch_divergence, bern_kl, online_divergence, simplex_scan, markov_prob, sequences


def test_kl_symbol_hand_values():
    assert kl_bernoulli_symbol(0.3, 0.3) == 0
    assert kl_bernoulli_symbol(0, 0.25) == pytest.approx(math.log2(4 / 3), abs=1e-12)
    assert kl_bernoulli_symbol(0.5, 0.25) == pytest.approx(0.5 + 0.5 * math.log2(0.5 / 0.75), abs=1e-12)
    assert kl_bernoulli_symbol(0.5, 0.0) == math.inf


def test_kl_sequence_matches_symbol_and_additivity():
    c1 = type_classes(BERNOULLI, 1)
    assert kl_sequence(sequence_law(0.5, c1), sequence_law(0.25, c1)) == pytest.approx(0.20752, abs=1e-5)
    c7 = type_classes(BERNOULLI, 7)
    assert kl_sequence(sequence_law(0.5, c7), sequence_law(0.25, c7)) == pytest.approx(
        7 * kl_bernoulli_symbol(0.5, 0.25), rel=1e-12)
    law = sequence_law(0.4, c7)
    assert kl_sequence(law, law) == 0


def test_kl_sequence_infinite_and_mismatch():
    c = type_classes(BERNOULLI, 3)
    assert kl_sequence(sequence_law(0.5, c), sequence_law(0.0, c)) == math.inf
    with pytest.raises(ValueError):
        kl_sequence(sequence_law(0.5, c), sequence_law(0.5, type_classes(BERNOULLI, 4)))


def test_markov_kl_against_enumeration():
    c = type_classes(MARKOV, 6)
    p, q = (0.3, 0.6), (0.5, 0.5)
    want = sum(markov_prob(*p, s) * math.log2(markov_prob(*p, s) / markov_prob(*q, s))
               for s in sequences(2, 6))
    assert kl_sequence(sequence_law(p, c), sequence_law(q, c)) == pytest.approx(want, rel=1e-10)


@pytest.mark.parametrize("phi,want", [(0.5, 0.5), (0.1, 0.25), (0.9, 0.75), (0.25, 0.25)])
def test_projection_is_clamp(phi, want):
    g = build_bernoulli_grid(0, 1, 1001, 0.25, 0.75)
    th, d = project_onto_theta(phi, g)
    assert th == pytest.approx(want)
    assert d == pytest.approx(kl_bernoulli_symbol(phi, want), abs=1e-12)


def test_projection_clamp_identity_whole_grid():
    g = build_bernoulli_grid(0, 1, 201, 0.3, 0.6)
    for phi in g.values:
        th, _ = project_onto_theta(phi, g)
        assert th == pytest.approx(min(max(phi, 0.3), 0.6), abs=1e-12)


def test_markov_projection_stationary():
    g = build_markov_grid(5)
    th, d = project_onto_theta((0.25, 0.25), g)
    assert th == pytest.approx(0.5) and d > 0
    # stationary law 0.3 / 0.4 sits on a 21-point lattice
    g = build_markov_grid(21)
    th, d = project_onto_theta((0.3, 0.1), g)
    assert th == pytest.approx(0.75)
    # oracle: KL rate against every i.i.d. success probability on a dense scan
    mu = 0.75
    rate = lambda t: (1 - mu) * bern_kl(0.3, t) + mu * bern_kl(0.9, t)
    scan = np.linspace(0.001, 0.999, 9981)
    assert scan[np.argmin([rate(t) for t in scan])] == pytest.approx(0.75, abs=1e-3)
    assert d == pytest.approx(rate(0.75) / math.log(2), rel=1e-12)


def test_multinomial_projection_dense_scan():
    g = build_multinomial_grid(2, 10, theta_support=[0, 1])
    phi = np.array([0.2, 0.3, 0.5])
    th, d = project_onto_theta(phi, g)
    # oracle: scan the face at the same lattice
    def kl(p, q):
        return sum(a * math.log2(a / b) if a > 0 else 0 for a, b in zip(p, q)) if all(
            b > 0 or a == 0 for a, b in zip(p, q)) else math.inf
    best = min((kl(phi, q), q) for q in simplex_scan(2, 10) if q[2] == 0)
    assert d == pytest.approx(best[0], abs=1e-12)
    assert np.allclose(th, best[1])


def test_projection_empty_theta():
    g = ParamGrid(BERNOULLI, [0.1, 0.2], [False, False])
    with pytest.raises(ValueError):
        project_onto_theta(0.1, g)


def test_delta_values():
    assert delta_epsilon(0.25, 1000 ** (0.1 - 1)) == pytest.approx(0.0274, abs=1e-4)
    assert delta_epsilon(0.25, 100 ** (0.1 - 1)) == pytest.approx(0.0771, abs=1e-4)


def test_shell_infinite_eps_is_everything():
    g = build_bernoulli_grid(0.01, 0.99, 101, 0.25, 0.75)
    assert theta_epsilon_shell(g, 1e9).all()
    with pytest.raises(ValueError):
        theta_epsilon_shell(g, 0)


@pytest.mark.parametrize("eps_bits", [1e-4, 1e-3, 5e-3, 1e-2, 2e-2])
def test_shell_matches_analytic_interval(eps_bits):
    g = build_bernoulli_grid(0, 1, 1001, 0.25, 0.75)
    mask = theta_epsilon_shell(g, eps_bits)
    lo, hi = analytic_shell(0.25, 0.75, eps_bits)
    ana = (g.values > lo) & (g.values < hi)
    below = g.values < 0.5
    assert (mask != ana)[below].sum() <= 1
    assert (mask != ana)[~below].sum() <= 1


def test_conditional_kl_batch_hand_value():
    # n = 2, uniform prior on {0.25, 0.75}, phi = 0.25
    g = ParamGrid(BERNOULLI, [0.25, 0.75], [True, True])
    pr = Prior.uniform(g)
    q_after_0 = (0.5 * 0.25 * 0.75 + 0.5 * 0.75 * 0.25) / (0.5 * 0.75 + 0.5 * 0.25)
    q_after_1 = (0.5 * 0.25 ** 2 + 0.5 * 0.75 ** 2) / (0.5 * 0.25 + 0.5 * 0.75)
    want = 0.75 * kl_bernoulli_symbol(0.25, q_after_0) + 0.25 * kl_bernoulli_symbol(0.25, q_after_1)
    assert conditional_kl_batch(0.25, pr, 2) == pytest.approx(want, rel=1e-12)
    assert conditional_kl_batch(0.25, pr, 2) == pytest.approx(
        batch_divergence(0.25, [0.25, 0.75], [0.5, 0.5], 2) / math.log(2), rel=1e-12)


def test_conditional_kl_batch_point_mass_and_degenerate():
    g = build_bernoulli_grid(0, 1, 11, 0, 1)
    assert conditional_kl_batch(0.3, Prior.point(g, 3), 5) == pytest.approx(0, abs=1e-14)
    pr = Prior.uniform(g)
    # phi = 0: only the all-zero history matters
    q = sum(w * (1 - t) ** 4 * t for w, t in zip(pr.weights, g.values)) / sum(
        w * (1 - t) ** 4 for w, t in zip(pr.weights, g.values))
    assert conditional_kl_batch(0.0, pr, 5) == pytest.approx(kl_bernoulli_symbol(0, q), rel=1e-12)


@pytest.mark.parametrize("n", [1, 4, 9])
def test_conditional_kl_batch_enumeration(n):
    g = build_bernoulli_grid(0, 1, 7, 0, 1)
    w = np.arange(1, 8, dtype=float)
    pr = Prior.from_weights(w, g)
    for phi in (0.0, 0.2, 0.5):
        want = batch_divergence(phi, g.values, pr.weights, n) / math.log(2)
        assert conditional_kl_batch(phi, pr, n) == pytest.approx(want, rel=1e-10, abs=1e-13)


def test_mutual_information_examples():
    g = ParamGrid(BERNOULLI, [0.0, 1.0], [True, True])
    pr = Prior.uniform(g)
    assert mutual_information(pr, sequence_profile(pr, 1)) == pytest.approx(1.0, abs=1e-12)
    assert mutual_information(Prior.point(g, 0), sequence_profile(Prior.point(g, 0), 3)) == 0
    g3 = ParamGrid(BERNOULLI, [0.25, 0.5, 0.75], [True] * 3)
    pr3 = Prior.uniform(g3)
    h = lambda p: -p * math.log2(p) - (1 - p) * math.log2(1 - p)
    want = h(0.5) - (h(0.25) + h(0.5) + h(0.75)) / 3
    assert mutual_information(pr3, sequence_profile(pr3, 1)) == pytest.approx(want, abs=1e-12)


def test_sequence_profile_enumeration():
    g = build_bernoulli_grid(0, 1, 6, 0.2, 0.8)
    pr = Prior.from_weights(np.array([3, 1, 2, 2, 1, 3.0]), g)
    prof = sequence_profile(pr, 8)
    for j, phi in enumerate(g.values):
        assert prof.d_q[j] == pytest.approx(
            online_divergence(phi, g.values, pr.weights, 8) / math.log(2), rel=1e-10, abs=1e-13)


def test_penalty_conventions_agree_for_iid():
    g = build_bernoulli_grid(0, 1, 21, 0.25, 0.75)
    sym, _ = symbol_penalty(g)
    assert np.allclose(sequence_penalty(g, 9), 9 * sym)
    assert np.all(sym[g.theta_flags] == 0)
    for j, phi in enumerate(g.values):
        assert sym[j] == pytest.approx(min(bern_kl(phi, t) for t in g.values[g.theta_flags]), abs=1e-14)


def test_prior_validation():
    g = build_bernoulli_grid(0, 1, 3, 0, 1)
    with pytest.raises(ValueError):
        Prior(np.array([0.5, 0.5, 0.5]), g)
    with pytest.raises(ValueError):
        Prior(np.array([1.5, -0.5, 0.0]), g)
    with pytest.raises(ValueError):
        Prior(np.array([1.0, 0.0]), g)

"""Divergences and information quantities used by the regret expressions.

Everything is computed in nats internally; public functions return bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binom

from .families import (BERNOULLI, MARKOV, ParamGrid, SequenceLaw, conditional_predictive_weight,
                       log_prob_table, parse_family, type_classes)

LN2 = float(np.log(2.0))
LOG2E = 1.0 / LN2
INF = float("inf")


@dataclass(frozen=True)
class Prior:
    """Probability weights over the points of a grid."""

    weights: np.ndarray
    grid: ParamGrid

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (len(self.grid),):
            raise ValueError("prior needs one weight per grid point")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("prior weights must be finite and nonnegative")
        s = w.sum()
        if abs(s - 1) > 1e-12:
            raise ValueError(f"prior weights sum to {s!r}, not 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_weights(cls, weights, grid: ParamGrid) -> "Prior":
        """Normalize arbitrary nonnegative weights."""
        w = np.asarray(weights, dtype=float)
        return cls(w / w.sum(), grid)

    @classmethod
    def uniform(cls, grid: ParamGrid, mask=None) -> "Prior":
        w = np.ones(len(grid)) if mask is None else np.asarray(mask, dtype=float)
        return cls.from_weights(w, grid)

    @classmethod
    def point(cls, grid: ParamGrid, index: int) -> "Prior":
        w = np.zeros(len(grid))
        w[index] = 1.0
        return cls(w, grid)

    def log_weights(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(self.weights)

    def support(self) -> np.ndarray:
        return self.weights > 0


@dataclass(frozen=True)
class DivergenceProfile:
    """Per-point D(P_phi || Q) and D(P_phi || Theta) in bits."""

    d_q: np.ndarray
    d_theta: np.ndarray

    def regret_terms(self) -> np.ndarray:
        """D(P_phi || Q) - D(P_phi || Theta), -inf where the penalty is infinite."""
        with np.errstate(invalid="ignore"):
            out = self.d_q - self.d_theta
        return np.where(np.isinf(self.d_theta), -np.inf, out)


def kl_sequence(p: SequenceLaw, q: SequenceLaw) -> float:
    """KL divergence between two sequence laws on the same class list, bits."""
    if p.n != q.n or len(p.class_log_prob) != len(q.class_log_prob):
        raise ValueError("laws have different lengths or class lists")
    lm = p.classes.log_mult
    mass = np.exp(lm + p.class_log_prob)
    live = mass > 0
    if np.any(np.isneginf(q.class_log_prob[live])):
        return INF
    diff = p.class_log_prob[live] - q.class_log_prob[live]
    return max(0.0, float(mass[live] @ diff) * LOG2E)


def _kl_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Pairwise KL in nats between rows of p (a, m) and rows of q (b, m)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        lp = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)), 0.0)
        lq = np.where(q > 0, np.log(np.where(q > 0, q, 1.0)), 0.0)
    neg_h = (p * lp).sum(axis=1)
    cross = p @ lq.T
    out = neg_h[:, None] - cross
    blocked = ((p > 0).astype(float) @ (q == 0).T.astype(float)) > 0
    return np.where(blocked, INF, np.maximum(out, 0.0))


def kl_bernoulli_symbol(p: float, q: float) -> float:
    """Binary KL divergence in bits with 0 log 0 = 0."""
    if not (0 <= p <= 1 and 0 <= q <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    return float(_kl_rows(np.array([[1 - p, p]]), np.array([[1 - q, q]]))[0, 0]) * LOG2E


def _symbol_probs(param, family: str) -> np.ndarray:
    kind, _ = parse_family(family)
    p = np.atleast_1d(np.asarray(param, dtype=float))
    if kind == BERNOULLI:
        return np.array([[1 - p[0], p[0]]])
    return p[None, :]


def _markov_rate_to_iid(points: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """KL rate (nats/symbol) from stationary chains to i.i.d. Bernoulli laws."""
    p01, p10 = points[:, 0], points[:, 1]
    mu1 = p01 / (p01 + p10)
    from_zero = _kl_rows(np.stack([1 - p01, p01], 1), np.stack([1 - thetas, thetas], 1))
    from_one = _kl_rows(np.stack([p10, 1 - p10], 1), np.stack([1 - thetas, thetas], 1))
    # a state that is never visited contributes nothing, even against an infinite KL
    with np.errstate(invalid="ignore"):
        fz = np.where((1 - mu1)[:, None] == 0, 0.0, (1 - mu1)[:, None] * from_zero)
        fo = np.where(mu1[:, None] == 0, 0.0, mu1[:, None] * from_one)
    return fz + fo


def theta_divergence_matrix(grid: ParamGrid) -> np.ndarray:
    """(points, flagged points) per-symbol KL (or KL rate for Markov), nats."""
    if grid.n_theta == 0:
        raise ValueError("Theta is empty")
    kind, _ = parse_family(grid.family)
    th = grid.points[grid.theta_flags]
    if kind == MARKOV:
        dm = _markov_rate_to_iid(grid.points, th[:, 0])
    else:
        probs = grid.category_probs()
        dm = _kl_rows(probs, probs[grid.theta_flags])
    # a flagged point is at divergence exactly zero from itself
    dm[np.flatnonzero(grid.theta_flags), np.arange(grid.n_theta)] = 0.0
    return dm


def symbol_penalty(grid: ParamGrid) -> tuple[np.ndarray, np.ndarray]:
    """Per-point min over Theta of the per-symbol divergence (nats) and argmin.

    The argmin indexes the flagged points; ties go to the smallest index.
    """
    dm = theta_divergence_matrix(grid)
    idx = np.argmin(dm, axis=1)
    return dm[np.arange(len(grid)), idx], idx


def sequence_penalty(grid: ParamGrid, n: int) -> np.ndarray:
    """Per-point min over Theta of D(P_phi^n || P_theta^n) in nats.

    For i.i.d. families this is n times the per-symbol divergence; for the
    Markov family it is evaluated exactly on the type classes.
    """
    if parse_family(grid.family)[0] != MARKOV:
        return n * symbol_penalty(grid)[0]
    classes = type_classes(grid.family, n)
    L = log_prob_table(grid, classes)
    W = np.exp(classes.log_mult + L)
    neg_h = (W * np.where(W > 0, L, 0.0)).sum(axis=1)
    Lt = L[grid.theta_flags]
    out = np.empty(len(grid))
    for j in range(len(grid)):
        live = W[j] > 0
        lt = Lt[:, live]
        d = neg_h[j] - np.where(np.isneginf(lt), 0.0, lt) @ W[j, live]
        d[np.any(np.isneginf(lt), axis=1)] = INF
        out[j] = max(0.0, d.min())
    return out


def project_onto_theta(phi, grid: ParamGrid) -> tuple[np.ndarray, float]:
    """KL projection of one parameter onto the flagged points of grid.

    Returns the projected parameter and the divergence in bits (per symbol for
    i.i.d. families, per-symbol rate for the Markov family).
    """
    if grid.n_theta == 0:
        raise ValueError("Theta is empty")
    kind, _ = parse_family(grid.family)
    th = grid.points[grid.theta_flags]
    if kind == MARKOV:
        p = np.asarray(phi, dtype=float).reshape(1, 2)
        d = _markov_rate_to_iid(p, th[:, 0])[0]
    else:
        q = grid.category_probs()[grid.theta_flags]
        d = _kl_rows(_symbol_probs(phi, grid.family), q)[0]
    i = int(np.argmin(d))
    # Markov Theta points are memoryless chains; report their success probability
    star = th[i, 0] if kind in (MARKOV, BERNOULLI) else th[i]
    return star, float(d[i]) * LOG2E


def delta_epsilon(c: float, eps_nats: float) -> float:
    """Second-order width of the epsilon shell around an interval endpoint c."""
    return float(np.sqrt(2 * c * (1 - c) * eps_nats))


def theta_epsilon_shell(grid: ParamGrid, eps_bits: float, n_for_rate: int | None = None) -> np.ndarray:
    """Mask of grid points with D(P_phi || Theta) < eps_bits.

    The divergence is per symbol (rate for Markov); when n_for_rate is given
    the sequence-level divergence at that length is divided by it instead.
    """
    if eps_bits <= 0:
        raise ValueError("eps must be positive")
    if n_for_rate is None or parse_family(grid.family)[0] != MARKOV:
        d = symbol_penalty(grid)[0]
    else:
        d = sequence_penalty(grid, n_for_rate) / n_for_rate
    return d * LOG2E < eps_bits


def analytic_shell(a: float, b: float, eps_bits: float) -> tuple[float, float]:
    """[a - delta(a), b + delta(b)] with the nat-based width and eps in bits."""
    e = eps_bits * LN2
    return a - delta_epsilon(a, e), b + delta_epsilon(b, e)


def conditional_kl_batch(phi: float, prior: Prior, n: int) -> float:
    """D(P_phi(Y_n | Y^{n-1}) || Q_pi(Y_n | Y^{n-1})) for a Bernoulli source, bits.

    Direct sum over the ones-count of the history; independent of the
    vectorized solver kernels.
    """
    if parse_family(prior.grid.family)[0] != BERNOULLI:
        raise ValueError("conditional_kl_batch expects a Bernoulli grid")
    if n < 1:
        raise ValueError("n must be at least 1")
    total = 0.0
    for k in range(n):
        pk = binom.pmf(k, n - 1, phi) if 0 < phi < 1 else float(k == (n - 1) * phi)
        if pk == 0:
            continue
        q = conditional_predictive_weight(prior, prior.grid, k, n)
        total += pk * kl_bernoulli_symbol(phi, q)
    return total


def mutual_information(prior: Prior, profile: DivergenceProfile) -> float:
    """Sum_j pi_j D(P_phi_j || Q_pi) in bits, skipping zero-weight points."""
    w = prior.weights
    live = w > 0
    d = profile.d_q[live]
    if np.any(np.isinf(d)):
        return INF
    return float(w[live] @ d)


def sequence_profile(prior: Prior, n: int) -> DivergenceProfile:
    """Sequence-level divergence profile of the mixture Q_pi, by class sums."""
    grid = prior.grid
    classes = type_classes(grid.family, n)
    L = log_prob_table(grid, classes)
    lw = prior.log_weights()
    lm = logsumexp(L + lw[:, None], axis=0)
    d_q = np.empty(len(grid))
    for j in range(len(grid)):
        mass = np.exp(classes.log_mult + L[j])
        live = mass > 0
        if np.any(np.isneginf(lm[live])):
            d_q[j] = INF
        else:
            d_q[j] = max(0.0, float(mass[live] @ (L[j, live] - lm[live])))
    pen = sequence_penalty(grid, n)
    return DivergenceProfile(d_q * LOG2E, pen * LOG2E)

"""Concrete universal predictors for Bernoulli sources.

Bayesian mixtures, the NML and pNML distributions for an interval of
success probabilities, the add-beta reading of a predictive table, and a
Monte-Carlo regret estimator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy

from ._kernels import MixtureKernel
from .families import BERNOULLI, ParamGrid, log_prob_table, parse_family, type_classes
from .measures import LOG2E, Prior, conditional_kl_batch, project_onto_theta

RNG_ALGORITHM = "numpy.PCG64/SeedSequence(seed, trial)"


@dataclass(frozen=True)
class PredictiveTable:
    """q_one[k] = Q(next symbol = 1 | k ones among the first n - 1 symbols)."""

    n: int
    q_one: np.ndarray

    def __post_init__(self):
        q = np.array(self.q_one, dtype=float)
        if q.shape != (self.n,):
            raise ValueError("q_one needs one entry per history count 0..n-1")
        if np.any(q < 0) or np.any(q > 1):
            raise ValueError("predictive probabilities must lie in [0, 1]")
        q.setflags(write=False)
        object.__setattr__(self, "q_one", q)


def mixture_table(prior: Prior, grid: ParamGrid | None = None, n: int = 2) -> PredictiveTable:
    """Next-symbol probabilities of the Bayesian mixture with the given prior."""
    grid = grid if grid is not None else prior.grid
    if parse_family(grid.family)[0] != BERNOULLI:
        raise ValueError("mixture tables need a Bernoulli grid")
    if n < 1:
        raise ValueError("n must be at least 1")
    L = log_prob_table(grid, type_classes(BERNOULLI, n))
    lm = MixtureKernel(L).log_mix(prior.log_weights())
    ones, zeros = lm[1:], lm[:-1]
    with np.errstate(invalid="ignore"):
        q = np.exp(ones - np.logaddexp(ones, zeros))
    if np.any(np.isnan(q)):
        raise ValueError("prior puts no mass on some reachable history")
    return PredictiveTable(n, np.clip(q, 0.0, 1.0))


@dataclass(frozen=True)
class NmlModel:
    n: int
    a: float
    b: float
    log_normalizer_bits: float
    class_log_prob: np.ndarray  # natural log NML probability of one sequence per class

    def class_mass(self) -> np.ndarray:
        k = np.arange(self.n + 1)
        lm = gammaln(self.n + 1) - gammaln(k + 1) - gammaln(self.n - k + 1)
        return np.exp(lm + self.class_log_prob)


def _clamped_log_ml(k, n, a, b):
    th = np.clip(np.asarray(k, dtype=float) / n, a, b)
    return xlogy(k, th) + xlogy(n - np.asarray(k), 1 - th)


def nml_bernoulli(n: int, a: float, b: float) -> NmlModel:
    """Shtarkov normalizer and NML law for Bernoulli with theta in [a, b]."""
    if not 0 <= a <= b <= 1:
        raise ValueError("need 0 <= a <= b <= 1")
    if n < 1:
        raise ValueError("n must be at least 1")
    k = np.arange(n + 1)
    lm = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    lp = _clamped_log_ml(k, n, a, b)
    log_z = float(logsumexp(lm + lp))
    return NmlModel(n, a, b, log_z * LOG2E, lp - log_z)


def pnml_batch(n: int, a: float, b: float, k: int) -> tuple[float, float]:
    """pNML next-symbol probability of a one after n symbols with k ones.

    Each candidate y is scored by the probability that the clamped maximum
    likelihood fit of the extended sequence assigns to y.  Returns
    (q_one, log2 of the normalizer).
    """
    if not 0 <= a <= b <= 1:
        raise ValueError("need 0 <= a <= b <= 1")
    if not 0 <= k <= n:
        raise ValueError("need 0 <= k <= n")
    th1 = min(max((k + 1) / (n + 1), a), b)
    th0 = min(max(k / (n + 1), a), b)
    p1, p0 = th1, 1 - th0
    z = p0 + p1
    return p1 / z, float(np.log2(z))


class BetaValue(NamedTuple):
    value: float
    defined: bool


def add_beta(table: PredictiveTable, k: int) -> BetaValue:
    """Equivalent add-beta constant: Q = (k + beta) / (n - 1 + 2 beta)."""
    n = table.n
    if n < 2:
        raise ValueError("add-beta needs at least one history symbol")
    if not 0 <= k <= n - 1:
        raise ValueError("need 0 <= k <= n - 1")
    q = float(table.q_one[k])
    p_hat = k / (n - 1)
    if abs(1 - 2 * q) < 1e-9:
        return BetaValue(float("nan"), False)
    return BetaValue((n - 1) * (q - p_hat) / (1 - 2 * q), True)


def add_beta_curve(table: PredictiveTable) -> tuple[np.ndarray, np.ndarray]:
    """(beta over k, defined mask) for every history count."""
    vals = [add_beta(table, k) for k in range(table.n)]
    return np.array([v.value for v in vals]), np.array([v.defined for v in vals])


def q_from_beta(beta: float, k: int, n: int) -> float:
    return (k + beta) / (n - 1 + 2 * beta)


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, trial])))


def simulate_regret(phi: float, table: PredictiveTable | None, grid: ParamGrid, n: int,
                    trials: int, seed: int, mode: str = "batch",
                    prior: Prior | None = None) -> tuple[float, float]:
    """Monte-Carlo regret of a predictor against the projection of phi onto Theta.

    Batch: log2 P_theta*(y_n) / Q(y_n | y^{n-1}) with Q from table.  Online:
    log2 P_theta*(y^n) / Q_pi(y^n) with the mixture of prior.  Trial t draws
    from its own generator seeded by (seed, t), so results do not depend on
    how trials are scheduled.  Returns (mean, standard error) in bits.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if mode not in ("batch", "online"):
        raise ValueError("mode must be 'batch' or 'online'")
    theta_star, _ = project_onto_theta(phi, grid)
    ls1 = np.log(theta_star) if theta_star > 0 else -np.inf
    ls0 = np.log(1 - theta_star) if theta_star < 1 else -np.inf
    if mode == "batch":
        if table is None or table.n != n:
            raise ValueError("batch simulation needs a table with horizon n")
        with np.errstate(divide="ignore"):
            lq1, lq0 = np.log(table.q_one), np.log1p(-table.q_one)
    else:
        if prior is None:
            raise ValueError("online simulation needs a prior")
        lm = MixtureKernel(log_prob_table(prior.grid, type_classes(BERNOULLI, n))).log_mix(prior.log_weights())
    out = np.empty(trials)
    for t in range(trials):
        ys = _trial_rng(seed, t).random(n) < phi
        if mode == "batch":
            k = int(ys[:-1].sum())
            if ys[-1]:
                out[t] = ls1 - lq1[k]
            else:
                out[t] = ls0 - lq0[k]
        else:
            k = int(ys.sum())
            lp = (k * ls1 if k else 0.0) + ((n - k) * ls0 if n - k else 0.0)
            out[t] = lp - lm[k]
    out *= LOG2E
    se = float(out.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return float(out.mean()), se


def analytic_batch_regret(phi: float, prior: Prior, n: int) -> float:
    """Expected batch regret of the mixture of prior at phi, bits."""
    _, pen = project_onto_theta(phi, prior.grid)
    return conditional_kl_batch(phi, prior, n) - pen


__all__ = ["PredictiveTable", "NmlModel", "BetaValue", "mixture_table", "nml_bernoulli",
           "pnml_batch", "add_beta", "add_beta_curve", "q_from_beta", "simulate_regret",
           "analytic_batch_regret", "RNG_ALGORITHM"]

"""Vectorized mixture and divergence kernels shared by the solvers.

A mixture log-probability log sum_j w_j P_j(c) is evaluated as one
matrix-vector product on column-rescaled likelihoods exp(L - max_j L),
with an exact log-sum-exp fallback for columns whose scaled sum is too
small to trust.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .families import BERNOULLI, ClassList, ParamGrid, log_prob_table, parse_family, type_classes

_REPAIR_BELOW = 1e-200


def _finite_or_zero(x: np.ndarray) -> np.ndarray:
    return np.where(np.isfinite(x), x, 0.0)


class MixtureKernel:
    """log Q_w(c) for every class c, given per-point class log-probabilities L."""

    def __init__(self, L: np.ndarray):
        self.L = L
        cmax = L.max(axis=0)
        self.colmax = np.where(np.isfinite(cmax), cmax, 0.0)
        with np.errstate(invalid="ignore"):
            self.E = np.exp(L - self.colmax)

    def log_mix(self, logw: np.ndarray) -> np.ndarray:
        live = np.isfinite(logw)
        if not live.any():
            raise ValueError("mixture weights are all zero")
        m = logw[live].max()
        v = np.exp(logw - m)
        s = v @ self.E
        with np.errstate(divide="ignore"):
            out = np.log(s) + self.colmax + m
        bad = s < _REPAIR_BELOW
        if bad.any():
            with np.errstate(divide="ignore", invalid="ignore"):
                out[bad] = logsumexp(self.L[live][:, bad] + logw[live][:, None], axis=0)
        return out

    def log_em_sum(self, log_coef: np.ndarray) -> np.ndarray:
        """log sum_c P_j(c) exp(log_coef_c) for every point j."""
        live = np.isfinite(log_coef)
        if not live.any():
            return np.full(self.L.shape[0], -np.inf)
        lc = log_coef + self.colmax
        s = lc[live].max()
        v = np.where(live, np.exp(lc - s), 0.0)
        with np.errstate(divide="ignore"):
            return np.log(self.E @ v) + s


class SequenceDivergence:
    """D(P_j^n || Q) in nats for every point j, from per-sequence log Q."""

    def __init__(self, L: np.ndarray, log_mult: np.ndarray):
        self.W = np.exp(log_mult + L)
        self.neg_h = (self.W * np.where(self.W > 0, L, 0.0)).sum(axis=1)

    def __call__(self, log_q: np.ndarray) -> np.ndarray:
        bad = ~np.isfinite(log_q)
        d = self.neg_h - self.W @ _finite_or_zero(log_q)
        if bad.any():
            d[(self.W[:, bad] > 0).any(axis=1)] = np.inf
        return np.maximum(d, 0.0)


def _history_classes(family: str, n: int) -> ClassList:
    if n >= 2:
        return type_classes(family, n - 1)
    kind, d = parse_family(family)
    width = 1 if kind == BERNOULLI else d + 1
    return ClassList(family, 0, np.zeros((1, width), dtype=np.int64), np.zeros(1))


def _extension_index(hist: ClassList, classes: ClassList) -> np.ndarray:
    """(symbols, history classes) index of the class reached by appending a symbol."""
    kind, d = parse_family(classes.family)
    if kind == BERNOULLI:
        k = hist.stats[:, 0]
        return np.stack([k, k + 1])
    counts = np.asarray(hist.stats)
    out = np.empty((d + 1, len(hist)), dtype=np.int64)
    for y in range(d + 1):
        ext = counts.copy()
        ext[:, y] += 1
        out[y] = [classes.index(row) for row in ext]
    return out


class ConditionalDivergence:
    """D(P_j(Y_n | Y^{n-1}) || Q(Y_n | Y^{n-1})) in nats for i.i.d. families.

    Q is given through the per-sequence mixture log-probabilities at length n;
    the history marginal follows by summing over the appended symbol.
    """

    def __init__(self, grid: ParamGrid, classes: ClassList):
        if parse_family(grid.family)[0] not in (BERNOULLI, "multinomial"):
            raise ValueError("conditional divergences need an i.i.d. family")
        hist = _history_classes(grid.family, classes.n)
        self.idx = _extension_index(hist, classes)
        Lh = log_prob_table(grid, hist) if classes.n >= 2 else np.zeros((len(grid), 1))
        self.Wh = np.exp(hist.log_mult + Lh)
        self.probs = grid.category_probs()
        with np.errstate(divide="ignore"):
            lp = np.where(self.probs > 0, np.log(np.where(self.probs > 0, self.probs, 1.0)), 0.0)
        self.neg_h = (self.probs * lp).sum(axis=1)

    def log_conditionals(self, log_q: np.ndarray) -> np.ndarray:
        """(symbols, history classes) log Q(y | history)."""
        ext = log_q[self.idx]
        with np.errstate(invalid="ignore"):
            lh = logsumexp(ext, axis=0)
            out = ext - lh
        return np.where(np.isneginf(lh), -np.inf, out)

    def __call__(self, log_q: np.ndarray) -> np.ndarray:
        lq = self.log_conditionals(log_q)
        d = self.neg_h.copy()
        blocked = np.zeros(len(d), bool)
        for y in range(lq.shape[0]):
            bad = ~np.isfinite(lq[y])
            d -= self.probs[:, y] * (self.Wh @ _finite_or_zero(lq[y]))
            if bad.any():
                blocked |= (self.probs[:, y] > 0) & (self.Wh[:, bad] > 0).any(axis=1)
        d[blocked] = np.inf
        return np.maximum(d, 0.0)

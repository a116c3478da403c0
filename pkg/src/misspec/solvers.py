"""Arimoto-Blahut style solvers for misspecified minimax regret.

The iteration multiplies the prior by exp(lam * (D(P_phi || Q_pi) - D(P_phi || Theta)))
and renormalizes.  R_L = E_pi[...] and R_U = max_phi[...] bracket the minimax
regret at every iterate.  Internally all divergences are in nats; reports
carry bits.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from ._kernels import ConditionalDivergence, MixtureKernel, SequenceDivergence
from .families import ParamGrid, enumerate_sequences, log_prob_table, parse_family, type_classes, MARKOV
from .measures import (LN2, LOG2E, DivergenceProfile, Prior, sequence_penalty, symbol_penalty,
                       theta_epsilon_shell)

BATCH = "batch-conditional"
ONLINE = "online-sequence"
_MODE_ALIASES = {"batch": BATCH, BATCH: BATCH, "online": ONLINE, ONLINE: ONLINE}


def normalize_mode(mode: str) -> str:
    try:
        return _MODE_ALIASES[mode]
    except KeyError:
        raise ValueError(f"unknown mode {mode!r}; use 'batch' or 'online'") from None


@dataclass(frozen=True)
class ABConfig:
    """Solver settings.

    lam=None picks 1 in online mode and n in batch mode; eps_bits=None picks
    1e-4 bits online and 1e-3 / n bits in batch mode.
    """

    n: int
    lam: float | None = None
    eps_bits: float | None = None
    max_iter: int = 100_000
    mode: str = BATCH

    def __post_init__(self):
        object.__setattr__(self, "mode", normalize_mode(self.mode))
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.lam is not None and not self.lam > 0:
            raise ValueError("lambda must be positive")
        if self.eps_bits is not None and not self.eps_bits > 0:
            raise ValueError("eps must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")

    @property
    def online(self) -> bool:
        return self.mode == ONLINE

    @property
    def step(self) -> float:
        if self.lam is not None:
            return float(self.lam)
        return 1.0 if self.online else float(self.n)

    @property
    def tolerance(self) -> float:
        if self.eps_bits is not None:
            return float(self.eps_bits)
        return 1e-4 if self.online else 1e-3 / self.n


@dataclass(frozen=True)
class SolverReport:
    prior: Prior
    lower_bits: float
    upper_bits: float
    history: np.ndarray
    converged: bool
    iterations: int
    n: int
    mode: str
    lam: float
    eps_bits: float
    profile: DivergenceProfile | None = field(default=None, repr=False)

    @property
    def gap_bits(self) -> float:
        return self.upper_bits - self.lower_bits

    @property
    def regret_bits(self) -> float:
        return 0.5 * (self.lower_bits + self.upper_bits)

    @property
    def coeff_2n(self) -> float:
        """2n times the regret in nats, the scaling used for batch tables."""
        return 2 * self.n * self.regret_bits * LN2


class _Problem:
    """Likelihood tables, penalty and divergence evaluator for one (grid, n, mode)."""

    def __init__(self, grid: ParamGrid, n: int, online: bool):
        if grid.n_theta == 0:
            raise ValueError("Theta is empty")
        if not online and parse_family(grid.family)[0] == MARKOV:
            raise ValueError("batch mode needs an i.i.d. family")
        self.grid = grid
        self.n = n
        self.classes = type_classes(grid.family, n)
        L = log_prob_table(grid, self.classes)
        self.mix = MixtureKernel(L)
        if online:
            self.div = SequenceDivergence(L, self.classes.log_mult)
            self.penalty = sequence_penalty(grid, n)
        else:
            self.div = ConditionalDivergence(grid, self.classes)
            self.penalty = symbol_penalty(grid)[0]
        if np.all(np.isinf(self.penalty)):
            raise ValueError("every point has infinite penalty")

    def divergence(self, logw: np.ndarray) -> np.ndarray:
        return self.div(self.mix.log_mix(logw))

    def gain(self, d: np.ndarray) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            g = d - self.penalty
        return np.where(np.isinf(self.penalty), -np.inf, g)


def _normalize(logw: np.ndarray) -> np.ndarray:
    return logw - logsumexp(logw)


def _bounds(logw: np.ndarray, g: np.ndarray) -> tuple[float, float]:
    w = np.exp(logw)
    live = w > 0
    gl = g[live]
    lower = -np.inf if np.any(np.isneginf(gl)) else float(w[live] @ gl)
    return lower, float(g.max())


def _run(problem: _Problem, cfg: ABConfig, logw: np.ndarray):
    lam, eps = cfg.step, cfg.tolerance * LN2
    hist = []
    converged = False
    it = 0
    while True:
        d = problem.divergence(logw)
        g = problem.gain(d)
        if np.any(np.isposinf(g)):
            raise FloatingPointError("mixture assigns zero probability to reachable data")
        lo, up = _bounds(logw, g)
        hist.append((lo, up))
        if up - lo <= eps:
            converged = True
            break
        if it >= cfg.max_iter:
            break
        # hard zero: exp(-inf) pins infinite-penalty points at exactly 0
        logw = _normalize(logw + lam * g)
        it += 1
    return logw, d, np.array(hist) * LOG2E, converged, it


def ab_misspecified(grid: ParamGrid, cfg: ABConfig, init: Prior | None = None) -> SolverReport:
    """Misspecified minimax regret and its least-favourable prior over Phi."""
    problem = _Problem(grid, cfg.n, cfg.online)
    logw = np.full(len(grid), -np.log(len(grid))) if init is None else init.log_weights()
    logw, d, hist, converged, it = _run(problem, cfg, logw)
    w = np.exp(logw)
    prior = Prior(w / w.sum(), grid)
    return SolverReport(prior, float(hist[-1, 0]), float(hist[-1, 1]), hist, converged, it,
                        cfg.n, cfg.mode, cfg.step, cfg.tolerance,
                        DivergenceProfile(d * LOG2E, problem.penalty * LOG2E))


def _well_specified(grid: ParamGrid) -> ParamGrid:
    return grid.with_flags(np.ones(len(grid), bool))


def capacity_online(theta_grid: ParamGrid, n: int, cfg: ABConfig | None = None) -> SolverReport:
    """C_n(Theta) = max_pi I(Y^n; Theta)."""
    cfg = replace(cfg, n=n, mode=ONLINE) if cfg is not None else ABConfig(n, mode=ONLINE)
    return ab_misspecified(_well_specified(theta_grid), cfg)


def capacity_batch(theta_grid: ParamGrid, n: int, cfg: ABConfig | None = None) -> SolverReport:
    """Batch capacity max_pi I(Y_n; Theta | Y^{n-1})."""
    cfg = replace(cfg, n=n, mode=BATCH) if cfg is not None else ABConfig(n, mode=BATCH)
    return ab_misspecified(_well_specified(theta_grid), cfg)


@dataclass(frozen=True)
class SandwichResult:
    values_bits: tuple[float, float, float]
    reports: tuple[SolverReport, SolverReport, SolverReport]
    eps_nats: float
    shell_mask: np.ndarray
    ordered: bool

    @property
    def coeffs_2n(self) -> tuple[float, float, float]:
        return tuple(r.coeff_2n for r in self.reports)


def verify_sandwich(grid: ParamGrid, n: int, alpha: float, cfg: ABConfig | None = None) -> SandwichResult:
    """Batch C(Theta) <= F(Theta, Phi) <= C(Theta_eps) with eps_n = n^(alpha - 1) nats.

    The shell is computed on the grid from exact per-symbol divergences.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    cfg = replace(cfg, n=n, mode=BATCH) if cfg is not None else ABConfig(n, mode=BATCH)
    eps_nats = float(n) ** (alpha - 1)
    mask = theta_epsilon_shell(grid, eps_nats * LOG2E)
    low = capacity_batch(grid.theta_grid(), n, cfg)
    mid = ab_misspecified(grid, cfg)
    high = capacity_batch(grid.subgrid(mask), n, cfg)
    vals = (low.regret_bits, mid.regret_bits, high.regret_bits)
    slack = max(low.gap_bits, mid.gap_bits, high.gap_bits)
    ordered = vals[0] <= vals[1] + slack and vals[1] <= vals[2] + slack
    return SandwichResult(vals, (low, mid, high), eps_nats, mask, bool(ordered))


@dataclass(frozen=True)
class CombinedBounds:
    lower_bits: float
    upper_bits: float
    upper_terms_bits: tuple[float, ...]
    lower_prior: Prior
    lower_converged: bool
    upper_converged: bool


def combined_bounds(grid: ParamGrid, n: int, l: int, cfg: ABConfig | None = None) -> CombinedBounds:
    """Per-step bounds on the combined batch-online regret.

    upper: average of batch misspecified regrets at horizons n+1 .. n+l.
    lower: (1/l) [I(Y^{n+l}; Theta) - I(Y^n; Theta)] maximized over priors on Theta.
    """
    if n < 0 or l < 1:
        raise ValueError("need n >= 0 and l >= 1")
    base = cfg if cfg is not None else ABConfig(max(n, 1))
    terms, up_ok = [], True
    for t in range(1, l + 1):
        r = ab_misspecified(grid, replace(base, n=n + t, mode=BATCH, lam=None if cfg is None else cfg.lam))
        terms.append(r.upper_bits)
        up_ok &= r.converged
    upper = float(np.mean(terms))

    tg = grid.theta_grid()
    far = type_classes(tg.family, n + l)
    Lf = log_prob_table(tg, far)
    mix_f, div_f = MixtureKernel(Lf), SequenceDivergence(Lf, far.log_mult)
    if n > 0:
        near = type_classes(tg.family, n)
        Ln = log_prob_table(tg, near)
        mix_n, div_n = MixtureKernel(Ln), SequenceDivergence(Ln, near.log_mult)

    def gain(logw):
        g = div_f(mix_f.log_mix(logw))
        if n > 0:
            g = g - div_n(mix_n.log_mix(logw))
        return g / l

    lam = cfg.lam if (cfg is not None and cfg.lam is not None) else float(max(n, l, 1))
    eps = (cfg.tolerance if cfg is not None else 1e-3 / max(n + l, 1)) * LN2
    max_iter = cfg.max_iter if cfg is not None else 100_000
    logw = np.full(len(tg), -np.log(len(tg)))
    lo_ok = False
    for _ in range(max_iter):
        g = gain(logw)
        lo, up = _bounds(logw, g)
        if up - lo <= eps:
            lo_ok = True
            break
        logw = _normalize(logw + lam * g)
    g = gain(logw)
    lower = float(np.exp(logw) @ g) * LOG2E
    w = np.exp(logw)
    return CombinedBounds(lower, upper, tuple(terms), Prior(w / w.sum(), tg), lo_ok, bool(up_ok))


def _sequence_log_prob(point: np.ndarray, seq: tuple[int, ...], family: str) -> float:
    kind, _ = parse_family(family)
    with np.errstate(divide="ignore"):
        if kind == MARKOV:
            p01, p10 = point
            trans = np.array([[1 - p01, p01], [p10, 1 - p10]])
            mu1 = p01 / (p01 + p10)
            out = np.log([1 - mu1, mu1][seq[0]])
            for a, b in zip(seq[:-1], seq[1:]):
                out += np.log(trans[a, b])
            return float(out)
        probs = np.array([1 - point[0], point[0]]) if kind == "bernoulli" else np.asarray(point)
        return float(np.sum(np.log(probs[list(seq)])))


def iterative_projection_step(prior: Prior, n: int) -> Prior:
    """One psi/pi projection sweep over all sequences of length n (small n only).

    psi(phi, y) is the posterior; the new prior is proportional to
    prod_y psi~(phi, y)^P_phi(y) with psi~ = psi * P_theta*(y) / P_phi(y), where
    theta* minimizes the sequence divergence over the flagged points.
    """
    grid = prior.grid
    kind, d = parse_family(grid.family)
    alphabet = 2 if kind in ("bernoulli", MARKOV) else d + 1
    seqs = list(enumerate_sequences(alphabet, n))
    if len(seqs) > 1 << 14:
        raise ValueError("sequence enumeration is limited to small n")
    logp = np.array([[_sequence_log_prob(pt, s, grid.family) for s in seqs] for pt in grid.points])
    p = np.exp(logp)
    with np.errstate(invalid="ignore"):
        # sequence-level KL from every point to every flagged point
        lt = logp[grid.theta_flags]
        kl = np.array([[np.sum(np.where(p[j] > 0, p[j] * (logp[j] - lt[t]), 0.0))
                        for t in range(len(lt))] for j in range(len(grid))])
    kl = np.where(np.isnan(kl), np.inf, kl)
    star = np.argmin(kl, axis=1)
    log_pi = prior.log_weights()
    with np.errstate(invalid="ignore"):
        log_m = logsumexp(logp + log_pi[:, None], axis=0)
    new = np.empty(len(grid))
    for j in range(len(grid)):
        live = p[j] > 0
        log_psi = log_pi[j] + logp[j, live] - log_m[live]
        log_tilde = log_psi + lt[star[j], live] - logp[j, live]
        new[j] = np.sum(p[j, live] * log_tilde) if np.all(np.isfinite(log_tilde)) else -np.inf
    with np.errstate(invalid="ignore"):
        new = np.where(np.isneginf(log_pi), -np.inf, new)
    return Prior(np.exp(_normalize(new)), grid)

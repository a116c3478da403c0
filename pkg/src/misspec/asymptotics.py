"""Closed-form large-n regret formulas, all returned in bits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

LOG2E = float(np.log2(np.e))


def _chol(m: np.ndarray, name: str) -> np.ndarray:
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square")
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} is singular or not positive definite") from None


def _logdet2(m: np.ndarray, name: str) -> float:
    c = _chol(m, name)
    return 2.0 * float(np.sum(np.log2(np.diag(c))))


def _inv(m: np.ndarray, name: str) -> np.ndarray:
    c = _chol(m, name)
    ci = np.linalg.inv(c)
    return ci.T @ ci


def gamma_bernoulli(n: float, a: float, b: float) -> float:
    """1/2 log2(n / 2 pi) + log2(arcsin(2b - 1) - arcsin(2a - 1))."""
    if not 0 <= a < b <= 1:
        raise ValueError("need 0 <= a < b <= 1")
    return 0.5 * np.log2(n / (2 * np.pi)) + np.log2(np.arcsin(2 * b - 1) - np.arcsin(2 * a - 1))


def bernoulli_jeffreys_integral(a: float, b: float) -> float:
    """Integral of theta^(-1/2) (1 - theta)^(-1/2) over [a, b]."""
    return float(np.arcsin(2 * b - 1) - np.arcsin(2 * a - 1))


def bernoulli_jeffreys_quadrature(a: float, b: float) -> float:
    val, _ = quad(lambda t: 1.0 / np.sqrt(t * (1 - t)), a, b, epsabs=1e-12, epsrel=1e-12, limit=200)
    return float(val)


@dataclass(frozen=True)
class Candidate:
    """Matrices describing one data law at its projection onto Theta."""

    I: np.ndarray
    J: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        for name in ("I", "J", "K"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))


@dataclass(frozen=True)
class SmoothModelSpec:
    d: int
    jeffreys_integral: float
    candidates: Sequence[Candidate] = field(default_factory=tuple)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be at least 1")
        if not self.jeffreys_integral > 0:
            raise ValueError("jeffreys_integral must be positive")
        if not self.candidates:
            raise ValueError("at least one candidate is required")
        for c in self.candidates:
            if c.I.shape != (self.d, self.d) or c.J.shape != (self.d, self.d) or c.K.shape != (self.d, self.d):
                raise ValueError("candidate matrices must be d x d")
            if np.any(np.linalg.eigvalsh((c.K + c.K.T) / 2) < -1e-12):
                raise ValueError("K must be positive semidefinite")


def _online_lead(d: int, n: float, log2_integral: float) -> float:
    return 0.5 * d * np.log2(n / (2 * np.pi)) + log2_integral


def smooth_parametric_online(spec: SmoothModelSpec, n: float) -> float:
    """(d/2) log2(n/2pi) + log2 integral + 1/2 max [log2(|J|/|I|) - tr(K J^-1) log2 e]."""
    terms = []
    for c in spec.candidates:
        ji = _inv(c.J, "J")
        terms.append(_logdet2(c.J, "J") - _logdet2(c.I, "I") - np.trace(c.K @ ji) * LOG2E)
    return float(_online_lead(spec.d, n, np.log2(spec.jeffreys_integral)) + 0.5 * max(terms))


@dataclass(frozen=True)
class ExpFamilySpec:
    """Exponential family with psi Hessian and per-candidate Cov(T) at theta*."""

    d: int
    hessian_integral: float
    hessian: Callable[[np.ndarray], np.ndarray]
    candidates: Sequence[tuple[np.ndarray, np.ndarray]]  # (theta*, Cov_phi(T))


def exponential_family_online(spec: ExpFamilySpec, n: float) -> float:
    """(d/2) log2(n/2pi) + log2 int |psi''|^1/2 - (log2 e / 2) min tr(Cov(T) psi''(theta*)^-1)."""
    if not spec.candidates:
        raise ValueError("at least one candidate is required")
    traces = []
    for theta_star, cov in spec.candidates:
        h = _inv(spec.hessian(np.asarray(theta_star, dtype=float)), "psi Hessian")
        traces.append(float(np.trace(np.atleast_2d(cov) @ h)))
    return float(_online_lead(spec.d, n, np.log2(spec.hessian_integral)) - 0.5 * LOG2E * min(traces))


def bernoulli_exp_family(a: float, b: float, phis: Sequence[float]) -> ExpFamilySpec:
    """Bernoulli in natural parameters with Theta = [a, b] and sources phis.

    psi(eta) = ln(1 + e^eta) so psi'' = theta (1 - theta); Cov_phi(T) = phi (1 - phi);
    each source projects to clamp(phi, a, b).
    """
    def hess(th):
        t = float(np.atleast_1d(th)[0])
        return np.array([[t * (1 - t)]])

    cands = []
    for p in phis:
        ts = min(max(p, a), b)
        cands.append((np.array([ts]), np.array([[p * (1 - p)]])))
    return ExpFamilySpec(1, bernoulli_jeffreys_integral(a, b), hess, cands)


def bernoulli_smooth_spec(a: float, b: float, phis: Sequence[float]) -> SmoothModelSpec:
    """Same model through the generic route: I = J = psi'', K = Cov_phi(T)."""
    cands = []
    for p in phis:
        ts = min(max(p, a), b)
        h = np.array([[ts * (1 - ts)]])
        cands.append(Candidate(h, h, np.array([[p * (1 - p)]])))
    return SmoothModelSpec(1, bernoulli_jeffreys_integral(a, b), cands)


@dataclass(frozen=True)
class BatchCandidate:
    """Godambe matrix (or J, K factors) and the Hessian of log(|I| / |J_phi|) at theta*."""

    hessian_log_ratio: np.ndarray
    G: np.ndarray | None = None
    J: np.ndarray | None = None
    K: np.ndarray | None = None

    def godambe(self) -> np.ndarray:
        if self.G is not None:
            return np.atleast_2d(np.asarray(self.G, dtype=float))
        if self.J is None or self.K is None:
            raise ValueError("candidate needs G or both J and K")
        J = np.atleast_2d(np.asarray(self.J, dtype=float))
        return J.T @ _inv(self.K, "K") @ J


def constrained_batch_smooth(d: int, n: float, candidates: Sequence[BatchCandidate]) -> float:
    """(d/2) log2(1 + 1/n) + max tr(G^-1 H) log2 e / (4 n^2)."""
    if not candidates:
        raise ValueError("at least one candidate is required")
    traces = []
    for c in candidates:
        gi = _inv(c.godambe(), "Godambe matrix")
        traces.append(float(np.trace(gi @ np.atleast_2d(c.hessian_log_ratio))))
    return float(0.5 * d * np.log2(1 + 1 / n) + max(traces) * LOG2E / (4 * n * n))


@dataclass(frozen=True)
class GlmSpec:
    d: int
    volume: float
    sigma: np.ndarray
    sigma_phi: Sequence[np.ndarray]

    def __post_init__(self):
        if not self.volume > 0:
            raise ValueError("volume must be positive")
        object.__setattr__(self, "sigma", np.atleast_2d(np.asarray(self.sigma, dtype=float)))
        if self.sigma.shape != (self.d, self.d):
            raise ValueError("sigma must be d x d")


@dataclass(frozen=True)
class GlmResult:
    regret_bits: float
    individual_bits: float  # sigma_phi = 0
    capacity_bits: float  # sigma_phi = sigma


def glm_online(spec: GlmSpec, n: float) -> GlmResult:
    """(d/2) log2(n/2pi) + log2(Vol / |Sigma|^1/2) - (log2 e / 2) min tr(Sigma_phi Sigma^-1)."""
    if not spec.sigma_phi:
        raise ValueError("at least one data covariance is required")
    si = _inv(spec.sigma, "Sigma")
    base = _online_lead(spec.d, n, np.log2(spec.volume) - 0.5 * _logdet2(spec.sigma, "Sigma"))
    traces = [float(np.trace(np.atleast_2d(s) @ si)) for s in spec.sigma_phi]
    val = base - 0.5 * LOG2E * min(traces)
    return GlmResult(float(val), float(base), float(base - 0.5 * LOG2E * spec.d))


def glm_poisson_penalty(d: int, sigma2: float, lambda0: float) -> float:
    """Penalty (d/2) min(1, lambda0 / sigma^2) log2 e for independent Poisson data."""
    if sigma2 <= 0 or lambda0 <= 0:
        raise ValueError("sigma^2 and lambda0 must be positive")
    return 0.5 * d * min(1.0, lambda0 / sigma2) * LOG2E


def markov_constrained_series(phi01: float, phi10: float, t_max: int = 1_000_000,
                              tol: float = 1e-12) -> tuple[list[float], bool]:
    """Partial sums of a_t = 1/2 (1 - P11(t) - P00(t)) log2 e, t = 1, 2, ...

    P_uu(t) = Pr(Y_{t+1} = u | Y_1 = u) is the diagonal of the t-th power of
    the transition matrix.  Stops when |a_t| < tol (converged) or at t_max.
    """
    if not (0 <= phi01 <= 1 and 0 <= phi10 <= 1):
        raise ValueError("transition probabilities must lie in [0, 1]")
    T = np.array([[1 - phi01, phi01], [phi10, 1 - phi10]])
    P = np.eye(2)
    sums = []
    total = 0.0
    for _ in range(t_max):
        P = P @ T
        a = 0.5 * (1 - P[1, 1] - P[0, 0]) * LOG2E
        total += a
        sums.append(total)
        if abs(a) < tol:
            return sums, True
    return sums, False


def markov_order0_capacity(n: float) -> float:
    """1/2 log2(n / 2 pi e) + log2 pi."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return float(0.5 * np.log2(n / (2 * np.pi * np.e)) + np.log2(np.pi))


@dataclass(frozen=True)
class CombinedAsymptotic:
    per_step_bits: float
    online_limit_bits: float  # l >> n
    batch_limit_bits: float  # n >> l


def combined_asymptotic(d_prime: int, n: float, l: float) -> CombinedAsymptotic:
    """(d'/2l) log2(1 + l/n) with its two regime limits."""
    if n < 1 or l < 1:
        raise ValueError("need n >= 1 and l >= 1")
    val = d_prime / (2 * l) * np.log2(1 + l / n)
    return CombinedAsymptotic(float(val), float(d_prime / (2 * l) * np.log2(l / n)),
                              float(d_prime / (2 * n) * LOG2E))

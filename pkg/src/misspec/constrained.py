"""Constrained misspecified regret: the predictor must be a mixture over Theta.

The two-stage iteration updates pi over Phi against the current constrained
mixture Q_{pi0}, then resets pi0 from pi.  Stage two either restricts pi to
Theta (the classical rule) or replaces pi0 by the exact mixture projection of
Q_pi onto Theta-mixtures, which turns the scheme into a saddle-point
iteration for the constrained regret.

Bounds: R_U(pi0) = max_phi [D(P_phi || Q_pi0) - D(P_phi || Theta)] and
R_L(pi) = min_pi0 E_pi D(P_phi || Q_pi0) - E_pi D(P_phi || Theta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import MixtureKernel, SequenceDivergence
from .families import ParamGrid, log_prob_table, type_classes
from .measures import LN2, LOG2E, Prior
from .solvers import ABConfig, _normalize, _Problem

RESTRICT = "restrict"
PROJECT = "project"


@dataclass(frozen=True)
class ConstrainedReport:
    """Two-stage result.

    pi0_theta is the constrained prior attaining upper_bits; pi_phi is the
    prior over Phi attaining lower_bits.  lower_bits is certified: the
    residual of the inner projection has already been subtracted (online).
    """

    pi_phi: Prior
    pi0_theta: Prior
    lower_bits: float
    upper_bits: float
    history: np.ndarray
    converged: bool
    stationary: bool
    iterations: int
    inner_projection_gap: float
    n: int
    mode: str
    stage2: str

    @property
    def gap_bits(self) -> float:
        return self.upper_bits - self.lower_bits

    @property
    def regret_bits(self) -> float:
        """Bracket midpoint when converged, else the regret achieved by pi0_theta."""
        if self.converged:
            return 0.5 * (self.lower_bits + self.upper_bits)
        return self.upper_bits

    @property
    def coeff_2n(self) -> float:
        return 2 * self.n * self.regret_bits * LN2


class _Projector:
    """min over pi0 on Theta of the divergence between Q_pi and Q_pi0.

    Online: D(Q_pi || Q_pi0) on sequences, minimized by the EM update
    pi0 <- pi0 * sum_c Q_pi(c) P_theta(c) / Q_pi0(c), which never increases it.
    The certificate log max_theta r_theta bounds the distance to the minimum.

    Batch: E_pi D(P_phi(Y_n|Y^{n-1}) || Q_pi0(Y_n|Y^{n-1})) minus its value at
    Q_pi, minimized by exponentiated gradient with backtracking.  The reported
    residual is a first-order stationarity measure, not a certificate.
    """

    def __init__(self, problem: _Problem):
        self.p = problem
        self.theta = problem.grid.theta_flags
        self.lmult = problem.classes.log_mult
        self.batch = not isinstance(problem.div, SequenceDivergence)
        if self.batch:
            if problem.n >= 2:
                hist = type_classes(problem.grid.family, problem.n - 1)
                self.hmix = MixtureKernel(log_prob_table(problem.grid, hist))
                self.hmult = hist.log_mult

    def restrict(self, logw: np.ndarray) -> np.ndarray:
        return _normalize(np.where(self.theta, logw, -np.inf))

    def objective(self, log_q_pi, log_q0, log_h_pi=None, log_h0=None) -> float:
        a = np.exp(self.lmult + log_q_pi)
        live = a > 0
        if np.any(np.isneginf(log_q0[live])):
            return np.inf
        f = float(a[live] @ (log_q_pi[live] - log_q0[live]))
        if log_h_pi is not None:
            b = np.exp(self.hmult + log_h_pi)
            hl = b > 0
            f -= float(b[hl] @ (log_h_pi[hl] - log_h0[hl]))
        return f

    def _em(self, log_q_pi, lw0, tol, max_iter):
        """EM with squared extrapolation (SQUAREM).

        Each cycle takes two EM maps and tries the extrapolated point; the
        plain second EM iterate is kept whenever extrapolation does not lower
        the objective, so the trace is nonincreasing.  Extrapolated weights are
        floored at a fraction of the EM iterate to keep every support point.
        """
        mix, theta = self.p.mix, self.theta

        def em(lw):
            lq = mix.log_mix(lw)
            lr = mix.log_em_sum(self.lmult + log_q_pi - lq)
            return lq, lr

        def advance(lw, lr):
            return _normalize(np.where(theta, lw + lr, -np.inf))

        lq0, lr = em(lw0)
        f = self.objective(log_q_pi, lq0)
        trace = [f]
        cert = float(lr[theta].max())
        used = 0
        while cert > tol and used < max_iter:
            lw1 = advance(lw0, lr)
            used += 1
            if used >= max_iter:
                lw0 = lw1
            else:
                _, lr1 = em(lw1)
                lw2 = advance(lw1, lr1)
                used += 1
                w0, w1, w2 = np.exp(lw0), np.exp(lw1), np.exp(lw2)
                r, v = w1 - w0, w2 - 2 * w1 + w0
                nv = float(np.sqrt(v @ v))
                best, fbest = lw2, self.objective(log_q_pi, mix.log_mix(lw2))
                if nv > 0:
                    alpha = min(-float(np.sqrt(r @ r)) / nv, -1.0)
                    w = np.where(theta, np.maximum(w0 - 2 * alpha * r + alpha * alpha * v, 1e-3 * w2), 0.0)
                    with np.errstate(divide="ignore"):
                        cand = np.log(w / w.sum())
                    fc = self.objective(log_q_pi, mix.log_mix(cand))
                    if fc < fbest:
                        best, fbest = cand, fc
                lw0 = best
            lq0, lr = em(lw0)
            f = self.objective(log_q_pi, lq0)
            trace.append(f)
            cert = float(lr[theta].max())
        return lw0, f, max(cert, 0.0), trace

    def _batch_grad(self, log_q_pi, log_h_pi, lq0, lh0):
        # d/dpi0(theta) of the objective
        g = -np.exp(self.p.mix.log_em_sum(self.lmult + log_q_pi - lq0))
        if log_h_pi is not None:
            g += np.exp(self.hmix.log_em_sum(self.hmult + log_h_pi - lh0))
        return g

    def _eg(self, log_q_pi, log_h_pi, lw0, tol, max_iter):
        mix = self.p.mix
        hmix = getattr(self, "hmix", None)

        def evaluate(lw):
            lq0 = mix.log_mix(lw)
            lh0 = hmix.log_mix(lw) if hmix is not None else None
            return lq0, lh0, self.objective(log_q_pi, lq0, log_h_pi, lh0)

        lq0, lh0, f = evaluate(lw0)
        trace = [f]
        step = 1.0
        resid = np.inf
        for _ in range(max_iter):
            grad = self._batch_grad(log_q_pi, log_h_pi, lq0, lh0)
            w0 = np.exp(lw0)
            resid = float(np.max(-grad[self.theta]) - w0[self.theta] @ -grad[self.theta])
            if resid <= tol:
                break
            while step > 1e-12:
                cand = _normalize(np.where(self.theta, lw0 - step * grad, -np.inf))
                clq, clh, cf = evaluate(cand)
                if cf <= f:
                    break
                step *= 0.5
            else:
                break
            decrease = f - cf
            lw0, lq0, lh0, f = cand, clq, clh, cf
            trace.append(f)
            step *= 2.0
            if decrease <= tol * 1e-3:
                break
        return lw0, f, max(resid, 0.0), trace

    def polish(self, logw_pi, lw0, max_iter=30, rel_floor=1e-4):
        """Active-set Newton on the simplex face, started from an EM point (online).

        Weights below rel_floor of the largest are dropped; a variable that
        hits zero leaves the face and the largest KKT violator re-enters once
        the face is solved.  Returns (log pi0, objective, certificate) in nats.
        """
        theta = np.flatnonzero(self.theta)
        a = np.exp(self.lmult + self.p.mix.log_mix(logw_pi))
        live = a > 0
        a = a[live]
        E = np.exp(self.lmult[live][:, None] + self.p.mix.L[theta][:, live].T)

        def f_of(w):
            q = E @ w
            if np.any(q <= 0):
                return np.inf
            return float(a @ (np.log(a) - np.log(q)))

        w = np.exp(lw0[theta])
        w = np.where(w >= rel_floor * w.max(), w, 0.0)
        w /= w.sum()
        fw = f_of(w)
        S = w > 0
        for _ in range(max_iter):
            q = E @ w
            r = E.T @ (a / q)
            idx = np.flatnonzero(S)
            B = E[:, idx] * (np.sqrt(a) / q)[:, None]
            m = len(idx)
            K = np.zeros((m + 1, m + 1))
            K[:m, :m] = B.T @ B
            K[:m, m] = K[m, :m] = 1.0
            d = np.linalg.lstsq(K, np.append(r[idx], 0.0), rcond=1e-13)[0][:m]
            neg = d < 0
            ratios = -w[idx][neg] / d[neg]
            tmax = min(1.0, float(ratios.min())) if neg.any() else 1.0
            t, fn, wn = tmax, np.inf, w
            while t > 1e-10:
                wn = w.copy()
                wn[idx] = w[idx] + t * d
                if t == tmax < 1.0:
                    wn[idx[neg][ratios <= tmax]] = 0.0
                wn = np.maximum(wn, 0.0)
                wn /= wn.sum()
                fn = f_of(wn)
                if fn <= fw:
                    break
                t *= 0.5
            if fn > fw:
                fn, wn = fw, w
            face_done = fn == fw or (t == 1.0 and fw - fn <= 1e-15)
            w, fw = wn, fn
            S = w > 0
            if face_done:
                r = E.T @ (a / (E @ w))
                viol = (~S) & (r > 1 + 1e-12)
                if not viol.any():
                    break
                S[np.argmax(np.where(viol, r, -np.inf))] = True
        cert = float(np.log(max((E.T @ (a / (E @ w))).max(), 1.0)))
        out = np.full(len(self.theta), -np.inf)
        with np.errstate(divide="ignore"):
            out[theta] = np.log(w)
        return out, fw, cert

    def project(self, logw_pi, lw0, tol_nats, max_iter):
        """Returns (log pi0, objective in nats, residual in nats, objective trace)."""
        log_q_pi = self.p.mix.log_mix(logw_pi)
        if not self.batch:
            return self._em(log_q_pi, lw0, tol_nats, max_iter)
        log_h_pi = self.hmix.log_mix(logw_pi) if self.p.n >= 2 else None
        return self._eg(log_q_pi, log_h_pi, lw0, tol_nats, max_iter)


def mixture_projection(target_prior: Prior, grid: ParamGrid | None = None, n: int = 1,
                       tol: float = 1e-7, mode: str = "online", max_iter: int = 20_000,
                       init: Prior | None = None):
    """Project the mixture of target_prior onto mixtures over the flagged points.

    Returns (pi0, kl_bits, residual_bits, trace_bits); pi0 lives on the same grid
    with zero weight off Theta.  kl_bits is +inf when no Theta mixture covers
    the support of the target.
    """
    grid = grid if grid is not None else target_prior.grid
    if len(grid) != len(target_prior.weights):
        raise ValueError("target prior does not match the grid")
    problem = _Problem(grid, n, mode == "online")
    proj = _Projector(problem)
    lw0 = proj.restrict(np.zeros(len(grid))) if init is None else proj.restrict(init.log_weights())
    lw0, f, resid, trace = proj.project(target_prior.log_weights(), lw0, tol * LN2, max_iter)
    if not proj.batch and np.isfinite(f) and resid > tol * LN2:
        # EM crawls along flat faces; keep the Newton finish when it certifies better
        lw1, f1, cert1 = proj.polish(target_prior.log_weights(), lw0)
        if cert1 < resid and f1 <= f:
            lw0, f, resid = lw1, f1, cert1
            trace.append(f)
    pi0 = Prior(np.exp(lw0) / np.exp(lw0).sum(), grid)
    return pi0, f * LOG2E, resid * LOG2E, np.array(trace) * LOG2E


def _audit_due(i: int, audit) -> bool:
    if audit == "every":
        return True
    if audit == "geometric":
        return i == 0 or (i & (i - 1)) == 0
    return i % int(audit) == 0


def ab_two_stage(grid: ParamGrid, cfg: ABConfig, stage2: str = RESTRICT, audit="geometric",
                 inner_tol_bits: float = 1e-7, inner_max_iter: int = 5000,
                 stage2_inner_iter: int = 20, init: Prior | None = None) -> ConstrainedReport:
    """Two-stage Arimoto-Blahut iteration for the constrained regret.

    Bounds are tracked as best-so-far values (largest audited R_L, smallest
    R_U).  In restrict mode pi0 follows the well-specified capacity iteration on
    Theta, so the loop also stops once pi0 is stationary within eps.
    """
    if stage2 not in (RESTRICT, PROJECT):
        raise ValueError("stage2 must be 'restrict' or 'project'")
    problem = _Problem(grid, cfg.n, cfg.online)
    proj = _Projector(problem)
    theta = grid.theta_flags
    lam, eps = cfg.step, cfg.tolerance * LN2
    tol = inner_tol_bits * LN2
    lp = np.full(len(grid), -np.log(len(grid))) if init is None else init.log_weights()
    lw0 = proj.restrict(np.zeros(len(grid)))
    warm = lw0
    best_lo, best_up = -np.inf, np.inf
    best_pi, best_pi0, best_resid = lp, lw0, np.inf
    hist = []
    converged = stationary = False
    it = 0
    while True:
        d0 = problem.divergence(lw0)
        g0 = problem.gain(d0)
        up = float(g0.max())
        if up < best_up:
            best_up, best_pi0 = up, lw0
        lo = np.nan
        if _audit_due(it, audit) or it == cfg.max_iter:
            warm, f, resid, _ = proj.project(lp, warm, tol, inner_max_iter)
            w = np.exp(lp)
            live = w > 0
            g = problem.gain(problem.divergence(lp))[live]
            if not np.any(np.isneginf(g)):
                # valid lower bound: subtract the certified projection residual
                lo = float(w[live] @ g) + f - (0.0 if proj.batch else resid)
                if lo > best_lo:
                    best_lo, best_pi, best_resid = lo, lp, resid
        hist.append((it, lo, up))
        if best_up - best_lo <= eps:
            converged = True
            break
        w0 = np.exp(lw0)
        if stage2 == RESTRICT and float(g0[theta].max() - w0[theta] @ g0[theta]) <= eps:
            # pi0 is a fixed point of the restricted update
            stationary = True
        if stationary or it >= cfg.max_iter:
            break
        lp = _normalize(lp + lam * g0)
        if stage2 == RESTRICT:
            lw0 = proj.restrict(lp)
        else:
            lw0, _, _, _ = proj.project(lp, lw0, tol, stage2_inner_iter)
        it += 1
    h = np.array(hist, dtype=float)
    h[:, 1:] *= LOG2E
    pi = np.exp(best_pi)
    pi0 = np.exp(best_pi0)
    return ConstrainedReport(Prior(pi / pi.sum(), grid), Prior(pi0 / pi0.sum(), grid),
                             best_lo * LOG2E, best_up * LOG2E, h, converged, stationary, it,
                             best_resid * LOG2E, cfg.n, cfg.mode, stage2)


def compare_priors(pi0: Prior, reference: Prior) -> float:
    """Sup-norm distance between two priors supported on Theta of the same grid."""
    if pi0.grid.family != reference.grid.family or not np.array_equal(pi0.grid.points, reference.grid.points):
        raise ValueError("priors live on different grids")
    theta = pi0.grid.theta_flags
    if np.any(pi0.weights[~theta] > 0) or np.any(reference.weights[~theta] > 0):
        raise ValueError("priors must be supported on Theta")
    return float(np.max(np.abs(pi0.weights - reference.weights)))


def lift_prior(prior: Prior, grid: ParamGrid) -> Prior:
    """Embed a prior defined on a sub-grid into a larger grid with the same points."""
    pts = [tuple(p) for p in grid.points]
    where = {p: i for i, p in enumerate(pts)}
    w = np.zeros(len(grid))
    for p, v in zip(prior.grid.points, prior.weights):
        key = tuple(p)
        if key not in where:
            raise ValueError(f"point {key} is not on the target grid")
        w[where[key]] = v
    return Prior(w, grid)

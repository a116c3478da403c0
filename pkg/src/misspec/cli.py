"""Command-line front end.

    misspec <command> [--config path] [--key value ...] [--out dir]

Each run writes results.csv, manifest.json and command-specific CSV and .dat
files into the output directory (``--out``, then the config ``out`` key, then
$MISSPEC_OUT, then ./misspec-out).  Files are staged under temporary names and
renamed only after every computation has finished.

Exit codes: 0 success, 2 configuration error, 3 solver did not converge
(artifacts are still written), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .asymptotics import (bernoulli_exp_family, combined_asymptotic, exponential_family_online,
                          gamma_bernoulli, markov_order0_capacity)
from .config import _KEYS, ConfigError, RunConfig, RunManifest, build_config, parse_assignments
from .constrained import ab_two_stage
from .families import (BERNOULLI, MARKOV, ParamGrid, build_bernoulli_grid, build_markov_grid,
                       build_multinomial_grid, parse_family)
from .measures import LN2, delta_epsilon
from .plotdata import PlotSeries, render
from .predictors import (RNG_ALGORITHM, PredictiveTable, add_beta_curve, analytic_batch_regret,
                         mixture_table, nml_bernoulli, pnml_batch, q_from_beta, simulate_regret)
from .solvers import (ABConfig, ab_misspecified, capacity_batch, capacity_online, combined_bounds,
                      verify_sandwich)

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_IO = 0, 2, 3, 4
ENV_OUT = "MISSPEC_OUT"
RESULT_COLUMNS = ("regret_bits", "coeff_2n", "lower_bits", "upper_bits", "iterations", "converged")

# 2n-scaled reference coefficients, keyed by (row, n); a = 0.25, b = 0.75 and
# the first row uses Phi = Theta = [a - delta_n, b + delta_n].
TABLE1_ROWS = ("shell", (0.0, 1.0, 0.25, 0.75), (0.25, 0.75, 0.25, 0.75), (0.0, 1.0, 0.0, 1.0),
               (0.0, 1.0, 0.01, 0.99), (0.01, 0.99, 0.01, 0.99))
TABLE1_REFERENCE = {
    100: (0.9171, 0.8728, 0.8710, 0.9908, 0.9766, 0.9763),
    1000: (0.9837, 0.9816, 0.9798, 1.0027, 0.9970, 0.9970),
}
TABLE1_ALPHA = 0.1
ADD_BETA_SCENARIOS = (("a", (0.0, 1.0, 0.01, 0.99)), ("b", (0.01, 0.99, 0.01, 0.99)),
                      ("c", (0.0, 1.0, 0.0, 1.0)))


@dataclass
class Table:
    name: str
    columns: tuple[str, ...]
    rows: list[list[Any]]


@dataclass
class Outcome:
    params: tuple[str, ...]
    results: list[dict[str, Any]] = field(default_factory=list)
    tables: list[Table] = field(default_factory=list)
    plots: list[PlotSeries] = field(default_factory=list)
    diagnostics: dict[str, Any] = field(default_factory=dict)
    converged: bool = True

    def add(self, params: dict[str, Any], regret_bits: float, n: int | None, lower=None, upper=None,
            iterations=None, converged=None):
        row = dict(params)
        row["regret_bits"] = regret_bits
        row["coeff_2n"] = 2 * n * regret_bits * LN2 if n else None
        row.update(lower_bits=lower, upper_bits=upper, iterations=iterations, converged=converged)
        self.results.append(row)
        if converged is False:
            self.converged = False

    def add_report(self, params, rep):
        self.add(params, rep.regret_bits, rep.n, rep.lower_bits, rep.upper_bits, rep.iterations,
                 rep.converged)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "" if np.isnan(v) else repr(float(v))
    return str(v)


def csv_text(columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _json_safe(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if np.isnan(v) else (str(v) if np.isinf(v) else v)
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def _solver_cfg(cfg: RunConfig, mode: str, n: int | None = None) -> ABConfig:
    return ABConfig(n or cfg.n, lam=cfg.lam, eps_bits=cfg.eps, max_iter=cfg.max_iter, mode=mode)


def _grid(cfg: RunConfig, lo=None, hi=None, tlo=None, thi=None) -> ParamGrid:
    kind, d = parse_family(cfg.family)
    tlo = cfg.theta_lo if tlo is None else tlo
    thi = cfg.theta_hi if thi is None else thi
    if kind == BERNOULLI:
        lo = cfg.phi_lo if lo is None else lo
        hi = cfg.phi_hi if hi is None else hi
        return build_bernoulli_grid(lo, hi, cfg.grid_size(), tlo, thi)
    if kind == MARKOV:
        return build_markov_grid(cfg.grid_size(), tlo, thi)
    return build_multinomial_grid(d, cfg.grid_size(), cfg.theta_support or None)


def _point_label(p: np.ndarray) -> str:
    return ";".join(repr(float(x)) for x in np.atleast_1d(p))


def _prior_table(name: str, prior) -> Table:
    rows = [[_point_label(p), w] for p, w in zip(prior.grid.points, prior.weights)]
    return Table(name, ("parameter", "weight"), rows)


def _prior_series(name: str, title: str, prior) -> PlotSeries | None:
    if prior.grid.points.shape[1] != 1:
        return None
    return PlotSeries(name, title, ("parameter", "weight"),
                      np.column_stack([prior.grid.points[:, 0], prior.weights]))


def _bernoulli_only(cfg: RunConfig):
    if parse_family(cfg.family)[0] != BERNOULLI:
        raise ConfigError(f"command {cfg.command!r} needs family = bernoulli")


def _base_params(cfg: RunConfig, n: int | None = None) -> dict[str, Any]:
    return {"family": cfg.family, "phi_lo": cfg.phi_lo, "phi_hi": cfg.phi_hi,
            "theta_lo": cfg.theta_lo, "theta_hi": cfg.theta_hi, "n": n or cfg.n}


def run_capacity(cfg: RunConfig) -> Outcome:
    out = Outcome(("family", "theta_lo", "theta_hi", "n", "mode"))
    tg = _grid(cfg, cfg.theta_lo, cfg.theta_hi).theta_grid()
    solve = capacity_online if cfg.mode == "online" else capacity_batch
    rep = solve(tg, cfg.n, _solver_cfg(cfg, cfg.mode))
    out.add_report({"family": cfg.family, "theta_lo": cfg.theta_lo, "theta_hi": cfg.theta_hi,
                    "n": cfg.n, "mode": cfg.mode}, rep)
    out.tables.append(_prior_table("prior", rep.prior))
    s = _prior_series("capacity_prior", "capacity-achieving prior over Theta", rep.prior)
    out.plots += [s] if s else []
    return out


def run_misspecified(cfg: RunConfig, mode: str) -> Outcome:
    out = Outcome(("family", "phi_lo", "phi_hi", "theta_lo", "theta_hi", "n", "mode"))
    rep = ab_misspecified(_grid(cfg), _solver_cfg(cfg, mode))
    out.add_report({**_base_params(cfg), "mode": mode}, rep)
    out.tables.append(_prior_table("prior", rep.prior))
    s = _prior_series("misspecified_prior", f"least favourable prior over Phi ({mode})", rep.prior)
    out.plots += [s] if s else []
    out.diagnostics["history_len"] = int(len(rep.history))
    return out


def run_constrained(cfg: RunConfig) -> Outcome:
    out = Outcome(("quantity", "family", "phi_lo", "phi_hi", "theta_lo", "theta_hi", "n", "mode",
                   "stage2"))
    grid = _grid(cfg)
    tg = grid.theta_grid()
    bern = parse_family(cfg.family)[0] == BERNOULLI
    series = []
    for n in cfg.n_list or (cfg.n,):
        scfg = _solver_cfg(cfg, cfg.mode, n)
        p = {**_base_params(cfg, n), "mode": cfg.mode, "stage2": cfg.stage2}
        cap = (capacity_online if cfg.mode == "online" else capacity_batch)(tg, n, scfg)
        mis = ab_misspecified(grid, scfg)
        con = ab_two_stage(grid, scfg, stage2=cfg.stage2)
        out.add_report({"quantity": "capacity", **p}, cap)
        out.add_report({"quantity": "misspecified", **p}, mis)
        out.add({"quantity": "constrained", **p}, con.regret_bits, n, con.lower_bits, con.upper_bits,
                con.iterations, con.converged or con.stationary)
        out.add({"quantity": "penalty", **p}, con.regret_bits - cap.regret_bits, n)
        gamma = np.nan
        if bern and cfg.mode == "online":
            gamma = nml_bernoulli(n, cfg.theta_lo, cfg.theta_hi).log_normalizer_bits
            out.add({"quantity": "individual", **p}, gamma, n, gamma, gamma, 0, True)
        series.append([n, cap.regret_bits, mis.regret_bits, con.regret_bits, gamma])
        out.diagnostics[f"n={n}"] = {"constrained_stationary": con.stationary,
                                     "constrained_converged": con.converged,
                                     "inner_projection_gap_bits": con.inner_projection_gap}
        if len(cfg.n_list) <= 1:
            out.tables += [_prior_table("prior_phi", con.pi_phi), _prior_table("prior_theta", con.pi0_theta)]
            if bern:
                x = grid.points[:, 0]
                wcap = np.zeros(len(grid))
                wcap[grid.theta_flags] = cap.prior.weights
                out.plots.append(PlotSeries(
                    "constrained_priors", "priors: constrained pi(phi), constrained pi0(theta), "
                    "misspecified pi(phi), well-specified pi(theta)",
                    ("parameter", "pi_phi", "pi0_theta", "pi_misspecified", "pi_wellspecified"),
                    np.column_stack([x, con.pi_phi.weights, con.pi0_theta.weights, mis.prior.weights, wcap])))
    out.plots.append(PlotSeries("regret_vs_n", "minimax regret versus n: capacity, misspecified, "
                                "constrained, individual", ("n", "capacity", "misspecified",
                                                            "constrained", "individual"),
                                np.array(series, dtype=float)))
    return out


def run_sandwich(cfg: RunConfig) -> Outcome:
    out = Outcome(("quantity", "family", "phi_lo", "phi_hi", "theta_lo", "theta_hi", "n", "alpha"))
    res = verify_sandwich(_grid(cfg), cfg.n, cfg.alpha, _solver_cfg(cfg, "batch"))
    for name, rep in zip(("capacity_theta", "misspecified", "capacity_shell"), res.reports):
        out.add_report({"quantity": name, **_base_params(cfg), "alpha": cfg.alpha}, rep)
    out.diagnostics.update(ordered=res.ordered, eps_nats=res.eps_nats, shell_points=int(res.shell_mask.sum()))
    return out


def run_combined(cfg: RunConfig) -> Outcome:
    out = Outcome(("quantity", "family", "phi_lo", "phi_hi", "theta_lo", "theta_hi", "n", "l"))
    tuned = cfg.lam is not None or cfg.eps is not None
    res = combined_bounds(_grid(cfg), cfg.n, cfg.l, _solver_cfg(cfg, "batch") if tuned else None)
    p = {**_base_params(cfg), "l": cfg.l}
    out.add({"quantity": "lower", **p}, res.lower_bits, None, res.lower_bits, res.lower_bits, None,
            res.lower_converged)
    out.add({"quantity": "upper", **p}, res.upper_bits, None, res.upper_bits, res.upper_bits, None,
            res.upper_converged)
    kind, d = parse_family(cfg.family)
    d = 2 if kind == MARKOV else d
    out.add({"quantity": "asymptotic", **p}, combined_asymptotic(d, cfg.n, cfg.l).per_step_bits, None)
    return out


def run_nml(cfg: RunConfig) -> Outcome:
    _bernoulli_only(cfg)
    out = Outcome(("quantity", "theta_lo", "theta_hi", "n"))
    m = nml_bernoulli(cfg.n, cfg.theta_lo, cfg.theta_hi)
    p = {"theta_lo": cfg.theta_lo, "theta_hi": cfg.theta_hi, "n": cfg.n}
    out.add({"quantity": "exact", **p}, m.log_normalizer_bits, None, m.log_normalizer_bits,
            m.log_normalizer_bits, 0, True)
    out.add({"quantity": "asymptotic", **p}, gamma_bernoulli(cfg.n, cfg.theta_lo, cfg.theta_hi), None)
    k = np.arange(cfg.n + 1)
    out.tables.append(Table("nml", ("k", "log2_sequence_prob", "class_mass"),
                            [[int(i), float(lp) / LN2, float(cm)]
                             for i, lp, cm in zip(k, m.class_log_prob, m.class_mass())]))
    return out


def run_pnml(cfg: RunConfig) -> Outcome:
    _bernoulli_only(cfg)
    out = Outcome(("theta_lo", "theta_hi", "n", "k", "q_one"))
    ks = [cfg.k] if cfg.k is not None else range(cfg.n + 1)
    for k in ks:
        q1, lz = pnml_batch(cfg.n, cfg.theta_lo, cfg.theta_hi, k)
        out.add({"theta_lo": cfg.theta_lo, "theta_hi": cfg.theta_hi, "n": cfg.n, "k": k, "q_one": q1},
                lz, None, lz, lz, 0, True)
    return out


def run_add_beta(cfg: RunConfig) -> Outcome:
    _bernoulli_only(cfg)
    out = Outcome(("scenario", "phi_lo", "phi_hi", "theta_lo", "theta_hi", "n", "beta_k0",
                   "beta_interior_mean"))
    n = cfg.n
    if n < 3:
        raise ConfigError("add-beta needs n >= 3")
    curves = []
    for name, (lo, hi, tlo, thi) in ADD_BETA_SCENARIOS:
        grid = _grid(cfg, lo, hi, tlo, thi)
        rep = ab_misspecified(grid, _solver_cfg(cfg, "batch"))
        beta, ok = add_beta_curve(mixture_table(rep.prior, n=n))
        inner = beta[1:-1][ok[1:-1]]
        curves.append(np.where(ok, beta, np.nan))
        out.add_report({"scenario": name, "phi_lo": lo, "phi_hi": hi, "theta_lo": tlo, "theta_hi": thi,
                        "n": n, "beta_k0": beta[0] if ok[0] else None,
                        "beta_interior_mean": float(inner.mean()) if inner.size else None}, rep)
        s = _prior_series(f"prior_{name}", f"least favourable prior, scenario {name}, n = {n}", rep.prior)
        out.plots += [s] if s else []
    k = np.arange(n)
    p_hat = k / (n - 1)
    out.tables.append(Table("beta", ("k", "p_hat", "beta_a", "beta_b", "beta_c"),
                            [[int(i), ph, *(c[i] for c in curves)] for i, ph in zip(k, p_hat)]))
    out.plots.append(PlotSeries("add_beta", f"add-beta factor versus empirical frequency, n = {n}",
                                ("p_hat", "beta_a", "beta_b", "beta_c"),
                                np.column_stack([p_hat, *curves])))
    return out


def run_asymptotic(cfg: RunConfig) -> Outcome:
    _bernoulli_only(cfg)
    out = Outcome(("quantity", "phi_lo", "phi_hi", "theta_lo", "theta_hi", "n", "l"))
    p = {**{k: v for k, v in _base_params(cfg).items() if k != "family"}, "l": cfg.l}
    phis = np.linspace(cfg.phi_lo, cfg.phi_hi, cfg.grid_size())
    n = cfg.n
    out.add({"quantity": "individual", **p}, gamma_bernoulli(n, cfg.theta_lo, cfg.theta_hi), None)
    out.add({"quantity": "misspecified_online", **p},
            exponential_family_online(bernoulli_exp_family(cfg.theta_lo, cfg.theta_hi, phis), n), None)
    inside = phis[(phis >= cfg.theta_lo) & (phis <= cfg.theta_hi)]
    if inside.size:
        out.add({"quantity": "capacity_online", **p},
                exponential_family_online(bernoulli_exp_family(cfg.theta_lo, cfg.theta_hi, inside), n), None)
    if n >= 2:
        out.add({"quantity": "markov_order0_capacity", **p}, markov_order0_capacity(n), None)
    ca = combined_asymptotic(1, n, cfg.l)
    out.add({"quantity": "combined_per_step", **p}, ca.per_step_bits, None)
    return out


def run_simulate(cfg: RunConfig) -> Outcome:
    _bernoulli_only(cfg)
    out = Outcome(("quantity", "phi", "predictor", "mode", "n", "trials", "seed", "stderr_bits"))
    grid = _grid(cfg)
    n = cfg.n
    mode = cfg.mode
    table = prior = None
    if cfg.predictor == "ab":
        rep = ab_misspecified(grid, _solver_cfg(cfg, mode))
        prior = rep.prior
        if mode == "batch":
            table = mixture_table(prior, n=n)
        out.diagnostics["solver"] = {"iterations": rep.iterations, "converged": rep.converged}
        if not rep.converged:
            out.converged = False
    else:
        if mode != "batch":
            raise ConfigError("kt and laplace predictors are only available in batch mode")
        beta = 0.5 if cfg.predictor == "kt" else 1.0
        table = PredictiveTable(n, np.array([q_from_beta(beta, k, n) for k in range(n)]))
    mean, se = simulate_regret(cfg.phi, table, grid, n, cfg.trials, cfg.seed, mode=mode, prior=prior)
    p = {"phi": cfg.phi, "predictor": cfg.predictor, "mode": mode, "n": n, "trials": cfg.trials,
         "seed": cfg.seed}
    out.add({"quantity": "monte_carlo", **p, "stderr_bits": se}, mean, n)
    if cfg.predictor == "ab" and mode == "batch":
        out.add({"quantity": "analytic", **p, "stderr_bits": 0.0}, analytic_batch_regret(cfg.phi, prior, n), n)
    out.diagnostics["rng"] = RNG_ALGORITHM
    return out


def run_table1(cfg: RunConfig) -> Outcome:
    out = Outcome(("row", "phi_lo", "phi_hi", "theta_lo", "theta_hi", "n", "paper_coeff", "abs_diff"))
    rows = []
    a, b = 0.25, 0.75
    for n in cfg.n_list or (100, 1000):
        if n not in TABLE1_REFERENCE:
            raise ConfigError(f"reference coefficients exist only for n in {sorted(TABLE1_REFERENCE)}")
        d = delta_epsilon(a, float(n) ** (TABLE1_ALPHA - 1))
        for i, spec in enumerate(TABLE1_ROWS):
            lo, hi, tlo, thi = (a - d, b + d, a - d, b + d) if spec == "shell" else spec
            grid = build_bernoulli_grid(lo, hi, cfg.grid_size(), tlo, thi)
            rep = ab_misspecified(grid, _solver_cfg(cfg, "batch", n))
            ref = TABLE1_REFERENCE[n][i]
            diff = abs(rep.coeff_2n - ref)
            out.add_report({"row": i + 1, "phi_lo": lo, "phi_hi": hi, "theta_lo": tlo, "theta_hi": thi,
                            "n": n, "paper_coeff": ref, "abs_diff": diff}, rep)
            rows.append([lo, hi, tlo, thi, n, rep.coeff_2n, ref, diff])
    out.tables.append(Table("table1", ("phi_lo", "phi_hi", "theta_lo", "theta_hi", "n", "coeff_2n",
                                       "paper_coeff", "abs_diff"), rows))
    return out


DISPATCH = {
    "capacity": run_capacity,
    "misspecified-batch": lambda c: run_misspecified(c, "batch"),
    "misspecified-online": lambda c: run_misspecified(c, "online"),
    "constrained": run_constrained,
    "sandwich": run_sandwich,
    "combined": run_combined,
    "nml": run_nml,
    "pnml": run_pnml,
    "add-beta": run_add_beta,
    "asymptotic": run_asymptotic,
    "simulate": run_simulate,
    "reproduce-table1": run_table1,
}


def run(cfg: RunConfig) -> Outcome:
    try:
        return DISPATCH[cfg.command](cfg)
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from None


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return t.isoformat(timespec="seconds")


def build_artifacts(cfg: RunConfig, outcome: Outcome) -> dict[str, str]:
    """File name -> text for every artifact of a run."""
    cols = outcome.params + RESULT_COLUMNS
    files = {"results.csv": csv_text(cols, [[r.get(c) for c in cols] for r in outcome.results])}
    for t in outcome.tables:
        files[f"{t.name}.csv"] = csv_text(t.columns, t.rows)
    for s in outcome.plots:
        files[f"{s.name}.dat"] = render(s)
    manifest = RunManifest(
        config=cfg.to_dict(), version=__version__, timestamp=_timestamp(),
        rng={"algorithm": RNG_ALGORITHM, "seed": cfg.seed},
        results=_json_safe(outcome.results), diagnostics=_json_safe(outcome.diagnostics),
        artifacts=sorted(files) + ["manifest.json"])
    files["manifest.json"] = manifest.serialize()
    return files


def write_artifacts(files: dict[str, str], out_dir) -> list[Path]:
    """Stage every file under a temporary name, then rename them into place."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            tmp = out / f".{name}.tmp"
            with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, out / name))
    except OSError:
        for tmp, _ in staged:
            tmp.unlink(missing_ok=True)
        raise
    for tmp, dest in staged:
        os.replace(tmp, dest)
    return [d for _, d in staged]


def execute(cfg: RunConfig, out_dir) -> int:
    outcome = run(cfg)
    write_artifacts(build_artifacts(cfg, outcome), out_dir)
    return EXIT_OK if outcome.converged else EXIT_NONCONVERGED


def replay(manifest_path, out_dir) -> int:
    """Rerun the configuration echoed in a manifest."""
    m = RunManifest.parse(Path(manifest_path).read_text(encoding="utf-8"))
    return execute(RunConfig.from_dict(m.config), out_dir)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="misspec", description="Misspecified minimax regret experiments.")
    p.add_argument("command", help="one of: " + ", ".join(DISPATCH))
    p.add_argument("--config", help="configuration file")
    for key in _KEYS:
        if key != "command":
            p.add_argument(f"--{key}", dest=f"opt_{key}", metavar="VALUE")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    try:
        values = {}
        if args.config:
            try:
                text = Path(args.config).read_text(encoding="utf-8")
            except OSError as e:
                print(f"error: cannot read config: {e}", file=sys.stderr)
                return EXIT_IO
            values = parse_assignments(text)
        values["command"] = args.command
        overrides = {k: getattr(args, f"opt_{k}") for k in _KEYS
                     if k != "command" and getattr(args, f"opt_{k}") is not None}
        if overrides:
            values.update(parse_assignments("\n".join(f"{k} = {v}" for k, v in overrides.items())))
        cfg = build_config(values)
        outcome = run(cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = cfg.out or os.environ.get(ENV_OUT) or "misspec-out"
    try:
        paths = write_artifacts(build_artifacts(cfg, outcome), out_dir)
    except OSError as e:
        print(f"error: cannot write artifacts: {e}", file=sys.stderr)
        return EXIT_IO
    for r in outcome.results:
        label = " ".join(f"{k}={_cell(r[k])}" for k in outcome.params[:2])
        print(f"{label} regret_bits={_cell(r['regret_bits'])} coeff_2n={_cell(r['coeff_2n'])}")
    print(f"wrote {len(paths)} files to {out_dir}")
    if not outcome.converged:
        print("warning: at least one solver stopped before reaching its tolerance", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

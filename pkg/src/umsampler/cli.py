"""Command-line front end.

Subcommands:

  simulate   draw a synthetic dataset from the configured model
  fit        run the mixture sampler (or the slice baseline) on a dataset
  compare    run both samplers with fixed alpha and compare latent-path
             inefficiency factors and per-iteration cost
  check      internal validation suites (oracles and the joint check)

All randomness descends from the single --seed via stream splitting, so
any command is exactly reproducible from its config and seed.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from pathlib import Path

import numpy as np

from . import baseline, diagnostics, mixture, models, sampler, ssm
from .config import ConfigError, ExperimentConfig, default_config

__all__ = ["main", "cmd_simulate", "cmd_fit", "cmd_compare", "cmd_check"]


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else default_config()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.override(seed=args.seed)
    if getattr(args, "sampler", None):
        cfg = cfg.override(sampler=args.sampler)
    if getattr(args, "fix_alpha", False):
        cfg = cfg.override(fix_alpha=True)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out if args.out else ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _streams(seed: int, n: int):
    return np.random.default_rng(seed).spawn(n)


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    (rng,) = _streams(cfg.seed, 1)
    ds, h = models.simulate_durations(cfg.model_spec(), cfg.true_alpha(), cfg.n_obs, rng)
    path = out / "data.csv"
    models.save_dataset(path, ds, h_true=h)
    cfg.save(out / "config.ini")
    print("wrote %d observations to %s (family=%s, seed=%d)"
          % (ds.n, path, cfg.family, cfg.seed))
    return 0


def _truth_dict(cfg: ExperimentConfig, h_true) -> dict:
    truth = {"mu": cfg.true_mu, "phi": cfg.true_phi, "sigma": cfg.true_sigma}
    if cfg.shape is not None:
        truth["shape"] = cfg.shape
    if h_true is not None:
        for t in cfg.monitor:
            if 1 <= t <= len(h_true):
                truth["h_%d" % t] = float(h_true[t - 1])
    return truth


def _write_summary(out: Path, rows, label: str):
    (out / ("summary_%s.txt" % label)).write_text(
        diagnostics.format_summary_table(rows) + "\n")
    with (out / ("summary_%s.csv" % label)).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["param", "true", "mean", "sd", "q025", "q975", "if"])
        for r in rows:
            w.writerow([r.name,
                        "" if r.true is None else repr(r.true),
                        repr(r.mean), repr(r.sd), repr(r.q025), repr(r.q975),
                        "" if r.if_value is None else repr(r.if_value)])


def _run_one(cfg: ExperimentConfig, data: models.Dataset, rng, *, kind: str,
             store_h_full: bool = False):
    spec = cfg.model_spec()
    mcfg = cfg.mcmc()
    if kind == "ss" or cfg.fix_alpha:
        fix = cfg.true_alpha()
    else:
        fix = None
    if kind == "ums":
        return sampler.run_chain(data, spec, cfg.priors, mcfg, rng, fix_alpha=fix,
                                 sample_shape_flag=cfg.sample_shape,
                                 monitor=cfg.monitor, store_h_full=store_h_full)
    return baseline.run_ss_chain(data, spec, cfg.priors, mcfg, rng, fix_alpha=fix,
                                 sample_shape_flag=cfg.sample_shape,
                                 monitor=cfg.monitor, store_h_full=store_h_full)


def cmd_fit(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    data, h_true = models.load_dataset(args.data)
    data.require_support(cfg.model_spec())
    (rng,) = _streams(cfg.seed, 1)
    store = _run_one(cfg, data, rng, kind=cfg.sampler)
    store.to_csv(out / "draws.csv")
    rows = diagnostics.posterior_summary(store, truth=_truth_dict(cfg, h_true))
    _write_summary(out, rows, cfg.sampler)
    acc_lines = ["%s_accept_rate=%s" % (k, ("%.4f" % v if v == v else "nan"))
                 for k, v in sorted(store.rates.items())]
    acc_lines += ["seconds_total=%.3f" % store.seconds_total,
                  "seconds_per_iteration=%.6f" % store.seconds_per_iteration,
                  "iterations=%d" % store.n_iterations,
                  "kept=%d" % store.n_kept]
    if "slice_failures" in store.counts:
        acc_lines.append("slice_failures=%d" % store.counts["slice_failures"])
    (out / "acceptance.txt").write_text("\n".join(acc_lines) + "\n")
    print(diagnostics.format_summary_table(rows))
    for ln in acc_lines:
        print(ln)
    return 0


def _h_if_stats(store) -> tuple[float, float, np.ndarray]:
    ifs = np.array([diagnostics.inefficiency_factor(store.h_full[:, t])
                    for t in range(store.h_full.shape[1])])
    return float(ifs.mean()), float(np.median(ifs)), ifs


def cmd_compare(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    data, _ = models.load_dataset(args.data)
    data.require_support(cfg.model_spec())
    cfg = cfg.override(fix_alpha=True)
    rng_ums, rng_ss = _streams(cfg.seed, 2)
    t0 = time.perf_counter()
    st_ums = _run_one(cfg, data, rng_ums, kind="ums", store_h_full=True)
    t1 = time.perf_counter()
    st_ss = _run_one(cfg, data, rng_ss, kind="ss", store_h_full=True)
    t2 = time.perf_counter()

    mean_u, med_u, ifs_u = _h_if_stats(st_ums)
    mean_s, med_s, ifs_s = _h_if_stats(st_ss)
    per_u = st_ums.seconds_per_iteration
    per_s = st_ss.seconds_per_iteration
    cost_ratio = per_u / per_s if per_s > 0 else float("inf")

    lines = [
        "latent-path inefficiency factors (alpha fixed at configured truth)",
        "%-28s %12s %12s" % ("", "mixture", "slice"),
        "%-28s %12.2f %12.2f" % ("mean IF over t", mean_u, mean_s),
        "%-28s %12.2f %12.2f" % ("median IF over t", med_u, med_s),
    ]
    for j, t in enumerate(cfg.monitor):
        if st_ums.h_monitored.shape[1] > j:
            lines.append("%-28s %12.2f %12.2f" % (
                "IF at t=%d" % t, ifs_u[t - 1], ifs_s[t - 1]))
    lines += [
        "%-28s %12.6f %12.6f" % ("seconds per iteration", per_u, per_s),
        "%-28s %12.3f %12.3f" % ("seconds total", t1 - t0, t2 - t1),
        "per-iteration cost ratio (mixture/slice) = %.3f" % cost_ratio,
    ]
    ok = cost_ratio <= 5.0
    lines.append("cost check (ratio <= 5): %s" % ("PASS" if ok else "FAIL"))
    text = "\n".join(lines)
    print(text)
    (out / "compare.txt").write_text(text + "\n")
    with (out / "compare.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "ums", "ss"])
        w.writerow(["mean_if", repr(mean_u), repr(mean_s)])
        w.writerow(["median_if", repr(med_u), repr(med_s)])
        w.writerow(["seconds_per_iteration", repr(per_u), repr(per_s)])
    return 0 if ok else 1


def cmd_check(args) -> int:
    cfg = _load_config(args)
    tol = args.tol_scale
    results: list[tuple[str, bool, str]] = []

    def record(name, ok, detail):
        results.append((name, ok, detail))
        print("%s %-34s %s" % ("PASS" if ok else "FAIL", name, detail))

    rng = np.random.default_rng(cfg.seed)

    # 1. mixture approximation on the reference kernel
    grid = np.arange(-15.0, 5.0 + 1e-12, 0.01)
    max_abs, l1 = mixture.approximation_error(mixture.KernelParams(1.0, 1.0, 1.0), grid)
    record("mixture approximation", max_abs < 1e-2 * tol,
           "max_abs=%.2e l1=%.2e" % (max_abs, l1))

    # 2. Kalman filter against the dense oracle
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 11))
        alpha = ssm.ARParams(mu=float(rng.normal(0, 1)),
                             phi=float(rng.uniform(-0.95, 0.98)),
                             sig2=float(rng.uniform(0.05, 1.0)))
        pseudo = ssm.PseudoObservations(
            values=rng.normal(0, 2, n), variances=rng.uniform(0.1, 5.0, n))
        worst = max(worst, abs(ssm.kalman_loglik(pseudo, alpha)
                               - ssm.marginal_loglik_oracle(pseudo, alpha)))
    record("kalman vs dense oracle", worst < 1e-8 * tol, "max_abs_diff=%.2e" % worst)

    # 3. simulation smoother moments against the dense oracle
    n = 5
    alpha = ssm.ARParams(mu=0.2, phi=0.9, sig2=0.2)
    pseudo = ssm.PseudoObservations(values=np.array([0.5, -0.3, 0.8, 0.1, -0.6]),
                                    variances=np.array([0.4, 0.7, 0.3, 1.2, 0.5]))
    mean, cov = ssm.smoother_moments_oracle(pseudo, alpha)
    ndraw = 100_000 if args.thorough else 20_000
    draws = np.empty((ndraw, n))
    srng = np.random.default_rng(cfg.seed + 1)
    for i in range(ndraw):
        draws[i] = ssm.simulation_smoother(pseudo, alpha, srng)
    se = np.sqrt(np.diag(cov) / ndraw)
    mean_ok = bool(np.all(np.abs(draws.mean(0) - mean) < 4.0 * se * max(tol, 1e-12)))
    emp = np.cov(draws.T)
    frob = float(np.linalg.norm(emp - cov) / np.linalg.norm(cov))
    frob_lim = (0.03 if args.thorough else 0.08) * tol
    record("smoother moments", mean_ok and frob < frob_lim,
           "max_mean_dev=%.2e frob_rel=%.3f" % (float(np.abs(draws.mean(0) - mean).max()), frob))

    # 4. joint-distribution validation; detecting the deliberate mutation
    # needs the full sample count, so --broken-kernel implies it
    nsamp = 10_000 if (args.thorough or args.broken_kernel) else 3_000
    gcfg = diagnostics.GirConfig(n_samples=nsamp, seed=cfg.seed + 2,
                                 mh_power=2.0 if args.broken_kernel else 1.0)
    rep = diagnostics.getting_it_right(gcfg)
    for ln in rep.lines():
        print("    " + ln)
    if args.broken_kernel:
        record("joint check detects mutation", not rep.passed,
               "min_p=%.4f" % rep.p_values.min())
    else:
        record("joint check", rep.passed, "min_p=%.4f" % rep.p_values.min())

    failed = [r for r in results if not r[1]]
    print("%d/%d checks passed" % (len(results) - len(failed), len(results)))
    return 0 if not failed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ums", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, data=False, samp=False):
        p.add_argument("--config", help="INI config file (defaults built in)")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--out", help="output directory (default: cwd)")
        if data:
            p.add_argument("--data", required=True, help="dataset CSV (header y)")
        if samp:
            p.add_argument("--sampler", choices=["ums", "ss"],
                           help="mixture sampler or slice baseline")
            p.add_argument("--fix-alpha", action="store_true", dest="fix_alpha",
                           help="hold (mu, phi, sigma) at the configured truth")

    p = sub.add_parser("simulate", help="draw a synthetic dataset")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="run a sampler on a dataset")
    common(p, data=True, samp=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="latent-path efficiency comparison")
    common(p, data=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("check", help="internal validation suites")
    common(p)
    p.add_argument("--broken-kernel", action="store_true", dest="broken_kernel",
                   help="square every MH ratio; the joint check must catch it")
    p.add_argument("--thorough", action="store_true",
                   help="full-size validation runs")
    p.add_argument("--tol-scale", type=float, default=1.0, dest="tol_scale",
                   help="scale all tolerances (0 forces every check to fail)")
    p.set_defaults(func=cmd_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except (models.DomainError, ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

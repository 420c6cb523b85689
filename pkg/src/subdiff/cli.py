"""Command line front end: ``subdiff <subcommand> --config <path>``.

Exit codes: 0 all configured checks pass, 1 check failure, 2 configuration
error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
import time

import numpy as np

from subdiff.age_solver import solve_age_homogeneous, solve_age_space
from subdiff.config import ConfigError, load_config
from subdiff.ctrw import empirical_density, msd, simulate_particles
from subdiff.errors import NumericalFailure
from subdiff.fracpde import energy_balance, solve_diffusion, solve_subdiffusion
from subdiff.harness import (
    battery_rows_to_csv,
    run_convergence,
    run_identity_battery,
    run_micro_macro,
    write_csv,
    write_run_metadata,
)
from subdiff.initial_data import DOMAIN_LENGTH

_EPILOG = """\
output files (all CSV, fixed schemas):
  simulate-age       trace.csv (t, U, mass) for the dirac kernel, else
                     rho_eps<k>.csv (t, x, rho) per epsilon
  simulate-ctrw      msd.csv (t, msd); density.csv (t, x, rho_hat);
                     quantiles.csv (t, q05, q25, q50, q75, q95)
  solve-subdiffusion solution.csv (t, x, rho)
  solve-diffusion    solution.csv (t, x, rho)
  verify-laplace     laplace_report.csv (identity, alpha, parameters,
                     residual, tolerance, pass)
  identity-battery   identity_report.csv (same columns)
  converge           convergence.csv (eps, t, l1_distance, runtime_s)
  micro-macro        micro_macro.csv (eps, t, mc_vs_age, age_vs_pde,
                     mc_vs_pde, noise_floor)
  energy-check       energy.csv (t, memory_term, gradient_term,
                     history_term, endpoint_term, rhs, residual)
every run also writes report.csv (check, value, threshold, pass) and
run-metadata.txt (config echo, versions, seed, wall time)
"""


def _parser():
    parser = argparse.ArgumentParser(
        prog="subdiff",
        description="numerical laboratory for sub-diffusion limits of "
        "age-structured jump models",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (
        "simulate-age",
        "simulate-ctrw",
        "solve-subdiffusion",
        "solve-diffusion",
        "verify-laplace",
        "identity-battery",
        "converge",
        "micro-macro",
        "energy-check",
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key=value config file")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
        p.add_argument(
            "--tolerance", type=float, default=1e-5, help="identity residual tolerance"
        )
    return parser


def _snapshot_rows(times, x, fields):
    rows = []
    for j, t in enumerate(times):
        for i, xi in enumerate(x):
            rows.append((t, xi, fields[j][i]))
    return rows


def _report(out, checks):
    write_csv(out / "report.csv", ["check", "value", "threshold", "pass"], checks)
    return 0 if all(c[3] for c in checks) else 1


def _cmd_simulate_age(cfg, out):
    model = cfg.make_model()
    initial = cfg.make_initial()
    checks = []
    if cfg.kernel == "dirac":
        trace = solve_age_homogeneous(model, initial.age, cfg.t_end, cfg.da)
        write_csv(
            out / "trace.csv",
            ["t", "U", "mass"],
            zip(trace.t, trace.renewal, trace.mass),
        )
        checks.append(("mass_drift", trace.mass_drift(), 1e-8, trace.mass_drift() < 1e-8))
    else:
        for k, eps in enumerate(cfg.epsilons):
            res = solve_age_space(
                model, initial, cfg.make_kernel(eps), eps, cfg.beta_eff,
                cfg.t_end, cfg.da, cfg.nx_for(eps), cfg.snapshot_times,
                method=cfg.solver_method,
            )
            write_csv(
                out / f"rho_eps{k}.csv",
                ["t", "x", "rho"],
                _snapshot_rows(res.times, res.x, res.rho),
            )
            drift_tol = 1e-8 if res.method == "grid" else 1e-4
            checks.append(
                (f"mass_drift_eps{k}", res.mass_drift, drift_tol, res.mass_drift < drift_tol)
            )
            if res.method == "grid":
                bound = res.bound_constant * (1 + 1e-12)
                checks.append(
                    (f"comparison_bound_eps{k}", res.sup_ratio, bound, res.sup_ratio <= bound)
                )
    return _report(out, checks)


def _cmd_simulate_ctrw(cfg, out):
    eps = cfg.epsilons[0]
    initial = cfg.make_initial()
    snaps = simulate_particles(
        cfg.make_model(), cfg.make_kernel(eps), eps, cfg.beta_eff,
        cfg.n_particles, cfg.snapshot_times, initial.spatial, initial.age, cfg.seed,
    )
    result = None
    try:
        result = msd(snaps, fit_window=(min(cfg.snapshot_times), max(cfg.snapshot_times)))
        write_csv(out / "msd.csv", ["t", "msd"], zip(result.t, result.msd))
    except ValueError:
        write_csv(out / "msd.csv", ["t", "msd"], zip(snaps.times, [0.0] * snaps.times.size))

    nx = cfg.nx_for(eps)
    edges = np.linspace(0.0, DOMAIN_LENGTH, nx + 1)
    rows = []
    for j, t in enumerate(snaps.times):
        est = empirical_density(
            np.mod(snaps.positions[j], DOMAIN_LENGTH), edges, initial.total_mass
        )
        rows.extend((t, xc, d) for xc, d in zip(est.centers, est.density))
    write_csv(out / "density.csv", ["t", "x", "rho_hat"], rows)

    qs = np.percentile(snaps.positions, [5, 25, 50, 75, 95], axis=1).T
    write_csv(
        out / "quantiles.csv",
        ["t", "q05", "q25", "q50", "q75", "q95"],
        [(t, *row) for t, row in zip(snaps.times, qs)],
    )
    checks = [("msd_fit_available", 1.0 if result else 0.0, 0.5, result is not None)]
    return _report(out, checks)


def _cmd_solve_subdiffusion(cfg, out):
    moment2 = cfg.make_kernel(1.0).second_moment
    res = solve_subdiffusion(
        cfg.alpha, moment2, cfg.make_initial().spatial, cfg.nx_for(min(cfg.epsilons)),
        cfg.dt, cfg.t_end, moment_factor=cfg.moment_factor,
    )
    hist = res.history
    idx = [int(round(t / cfg.dt)) for t in cfg.snapshot_times]
    write_csv(
        out / "solution.csv",
        ["t", "x", "rho"],
        _snapshot_rows([hist.t[k] for k in idx], hist.x, [hist.values[k] for k in idx]),
    )
    drift = float(np.max(np.abs(hist.mass() - hist.mass()[0])) / hist.mass()[0])
    return _report(out, [("mass_drift", drift, 1e-10, drift < 1e-10)])


def _cmd_solve_diffusion(cfg, out):
    moment2 = cfg.make_kernel(1.0).second_moment
    hist = solve_diffusion(
        cfg.d0, moment2, cfg.make_initial().spatial, cfg.nx_for(min(cfg.epsilons)),
        cfg.dt, cfg.t_end, moment_factor=cfg.moment_factor,
    )
    idx = [int(round(t / cfg.dt)) for t in cfg.snapshot_times]
    write_csv(
        out / "solution.csv",
        ["t", "x", "rho"],
        _snapshot_rows([hist.t[k] for k in idx], hist.x, [hist.values[k] for k in idx]),
    )
    drift = float(np.max(np.abs(hist.mass() - hist.mass()[0])) / hist.mass()[0])
    return _report(out, [("mass_drift", drift, 1e-10, drift < 1e-10)])


def _cmd_verify_laplace(cfg, out, tolerance):
    alphas = [cfg.alpha] if cfg.case == "subdiffusion" else [0.25, 0.5, 0.75]
    rows = run_identity_battery(alphas, tolerance=tolerance, include_renewal=False)
    rows = [r for r in rows if r.identity != "chain_rule"]
    battery_rows_to_csv(rows, out / "laplace_report.csv")
    checks = [
        (f"{r.identity}[alpha={r.alpha:g},{r.parameters}]", r.residual, r.tolerance, r.passed)
        for r in rows
    ]
    return _report(out, checks)


def _cmd_identity_battery(cfg, out, tolerance):
    alphas = (0.25, 0.5, 0.75)
    rows = run_identity_battery(alphas, tolerance=tolerance, include_renewal=True)
    battery_rows_to_csv(rows, out / "identity_report.csv")
    checks = [
        (f"{r.identity}[alpha={r.alpha:g},{r.parameters}]", r.residual, r.tolerance, r.passed)
        for r in rows
    ]
    return _report(out, checks)


def _cmd_converge(cfg, out, threads):
    report = run_convergence(cfg, threads=threads)
    write_csv(
        out / "convergence.csv",
        ["eps", "t", "l1_distance", "runtime_s"],
        report.rows(),
    )
    checks = [
        ("l1_monotone_decrease", 1.0 if report.monotone else 0.0, 0.5, report.monotone),
        (
            "reference_mode_oracle_error",
            report.reference_info["mode_oracle_error"],
            1e-2,
            report.reference_info["mode_oracle_error"] < 1e-2,
        ),
    ]
    return _report(out, checks)


def _cmd_micro_macro(cfg, out):
    report = run_micro_macro(cfg)
    write_csv(
        out / "micro_macro.csv",
        ["eps", "t", "mc_vs_age", "age_vs_pde", "mc_vs_pde", "noise_floor"],
        [
            (report.eps, t, report.mc_vs_age[j], report.age_vs_pde[j],
             report.mc_vs_pde[j], report.noise_floor[j])
            for j, t in enumerate(report.times)
        ],
    )
    checks = [
        (
            f"mc_vs_age[t={t:g}]",
            report.mc_vs_age[j],
            2.0 * report.noise_floor[j],
            report.mc_vs_age[j] < 2.0 * report.noise_floor[j],
        )
        for j, t in enumerate(report.times)
    ]
    return _report(out, checks)


def _cmd_energy_check(cfg, out):
    moment2 = cfg.make_kernel(1.0).second_moment
    res = solve_subdiffusion(
        cfg.alpha, moment2, cfg.make_initial().spatial, cfg.nx_for(min(cfg.epsilons)),
        cfg.dt, cfg.t_end, moment_factor=cfg.moment_factor,
    )
    rows = []
    checks = []
    for t in cfg.snapshot_times:
        if t <= 0:
            continue
        rep = energy_balance(res, t)
        rows.append(
            (rep.t, rep.memory_term, rep.gradient_term, rep.history_term,
             rep.endpoint_term, rep.rhs, rep.residual)
        )
        checks.append((f"energy_residual[t={t:g}]", rep.residual, 0.05, rep.residual < 0.05))
    write_csv(
        out / "energy.csv",
        ["t", "memory_term", "gradient_term", "history_term", "endpoint_term",
         "rhs", "residual"],
        rows,
    )
    return _report(out, checks)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = dataclasses.replace(cfg, seed=args.seed)
        if args.out is not None:
            cfg = dataclasses.replace(cfg, out_dir=args.out)
        from pathlib import Path

        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)

        if args.command == "simulate-age":
            code = _cmd_simulate_age(cfg, out)
        elif args.command == "simulate-ctrw":
            code = _cmd_simulate_ctrw(cfg, out)
        elif args.command == "solve-subdiffusion":
            code = _cmd_solve_subdiffusion(cfg, out)
        elif args.command == "solve-diffusion":
            code = _cmd_solve_diffusion(cfg, out)
        elif args.command == "verify-laplace":
            code = _cmd_verify_laplace(cfg, out, args.tolerance)
        elif args.command == "identity-battery":
            code = _cmd_identity_battery(cfg, out, args.tolerance)
        elif args.command == "converge":
            code = _cmd_converge(cfg, out, args.threads)
        elif args.command == "micro-macro":
            code = _cmd_micro_macro(cfg, out)
        elif args.command == "energy-check":
            code = _cmd_energy_check(cfg, out)
        else:  # pragma: no cover
            raise ConfigError(f"unknown command {args.command}")
        write_run_metadata(out, cfg, time.perf_counter() - start)
        return code
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
